/*
   Copyright 2026 The edf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "edf/errors.hpp"
#include "edf/linalg.hpp"
#include "edf/subset_search.hpp"

namespace edf {

enum class FitterKind { Ols, Ridge, BestSubset, ForwardStepwise, AxisSubset, PointSet };

inline const char* to_string(FitterKind kind) noexcept
{
    switch (kind) {
    case FitterKind::Ols: return "ols";
    case FitterKind::Ridge: return "ridge";
    case FitterKind::BestSubset: return "bsr";
    case FitterKind::ForwardStepwise: return "fsr";
    case FitterKind::AxisSubset: return "axis";
    case FitterKind::PointSet: return "points";
    }
    return "unknown";
}

struct FitResult {
    Vector fitted;
    /// Selected columns (ascending for best subset, in order of entry for
    /// stepwise), all columns for OLS/ridge, kept coordinates for the axis
    /// fitter, or the single chosen index for a point set.
    std::vector<std::size_t> support;
    double rss = 0.0;
};

namespace detail {

inline void check_length(const char* what, std::size_t expected, const Vector& y)
{
    if (static_cast<std::size_t>(y.size()) != expected) {
        throw DimensionMismatch(what, expected, static_cast<std::size_t>(y.size()));
    }
}

inline FitResult make_result(const Vector& y, Vector fitted, std::vector<std::size_t> support)
{
    FitResult out;
    out.rss = (y - fitted).squaredNorm();
    out.fitted = std::move(fitted);
    out.support = std::move(support);
    return out;
}

inline std::vector<std::size_t> iota_indices(std::size_t count)
{
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

struct OlsState {
    DesignMatrix design;
    Matrix q; // orthonormal basis of col(X)
};

struct RidgeState {
    DesignMatrix design;
    double lambda = 0.0;
    Eigen::HouseholderQR<Matrix> augmented; // QR of [X; sqrt(lambda) I]
};

struct BestSubsetState {
    DesignMatrix design;
    std::size_t k = 0;
    std::shared_ptr<const SubsetSearch> search;
};

struct ForwardStepwiseState {
    DesignMatrix design;
    std::size_t k = 0;
    std::shared_ptr<const ThinQR> qr;
};

struct AxisSubsetState {
    std::size_t n = 0;
    std::size_t k = 0;
};

struct PointSetState {
    std::vector<Vector> points;
};

} // namespace detail

/// A deterministic fitting procedure y -> y_hat behind one value type.
///
/// Construction validates parameters and precomputes everything that does not
/// depend on y, so fit() is a pure const call that may run on many threads.
class Fitter {
public:
    static Fitter ols(DesignMatrix design)
    {
        if (!design.full_column_rank()) {
            throw RankDeficient(design.rank(), design.cols());
        }
        ThinQR qr(design.values());
        return Fitter(detail::OlsState{std::move(design), std::move(qr.q)});
    }

    static Fitter ridge(DesignMatrix design, double lambda)
    {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw InvalidArgument("ridge penalty must be finite and >= 0");
        }
        if (lambda == 0.0 && !design.full_column_rank()) {
            throw RankDeficient(design.rank(), design.cols());
        }
        const auto n = static_cast<Eigen::Index>(design.rows());
        const auto p = static_cast<Eigen::Index>(design.cols());
        Matrix aug = Matrix::Zero(n + p, p);
        aug.topRows(n) = design.values();
        aug.bottomRows(p) = std::sqrt(lambda) * Matrix::Identity(p, p);
        Eigen::HouseholderQR<Matrix> qr(aug);
        return Fitter(detail::RidgeState{std::move(design), lambda, std::move(qr)});
    }

    static Fitter best_subset(DesignMatrix design, std::size_t k)
    {
        if (k > design.cols()) {
            throw InvalidArgument("best subset size k exceeds column count p");
        }
        auto search = std::make_shared<const SubsetSearch>(design, k);
        return Fitter(detail::BestSubsetState{std::move(design), k, std::move(search)});
    }

    static Fitter forward_stepwise(DesignMatrix design, std::size_t k)
    {
        if (k > design.cols()) {
            throw InvalidArgument("stepwise size k exceeds column count p");
        }
        auto qr = std::make_shared<const ThinQR>(design.values());
        return Fitter(detail::ForwardStepwiseState{std::move(design), k, std::move(qr)});
    }

    static Fitter axis_subset(std::size_t n, std::size_t k)
    {
        if (n < 1 || k > n) {
            throw InvalidArgument("axis subset needs 0 <= k <= n and n >= 1");
        }
        return Fitter(detail::AxisSubsetState{n, k});
    }

    static Fitter point_set(std::vector<Vector> points)
    {
        if (points.empty()) {
            throw InvalidArgument("point set must be nonempty");
        }
        const Eigen::Index n = points.front().size();
        if (n < 1) {
            throw InvalidArgument("points must have dimension >= 1");
        }
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].size() != n) {
                throw DimensionMismatch("point set", static_cast<std::size_t>(n),
                                        static_cast<std::size_t>(points[i].size()));
            }
            if (!points[i].allFinite()) {
                throw InvalidArgument("point set has non-finite coordinates");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (points[i] == points[j]) {
                    throw InvalidArgument("point set has duplicate points");
                }
            }
        }
        return Fitter(detail::PointSetState{std::move(points)});
    }

    FitterKind kind() const noexcept { return static_cast<FitterKind>(state_.index()); }

    bool is_linear() const noexcept { return kind() == FitterKind::Ols || kind() == FitterKind::Ridge; }

    /// Length of the response vectors this fitter accepts.
    std::size_t dimension() const noexcept
    {
        return std::visit(
            [](const auto& s) -> std::size_t {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, detail::AxisSubsetState>) {
                    return s.n;
                } else if constexpr (std::is_same_v<S, detail::PointSetState>) {
                    return static_cast<std::size_t>(s.points.front().size());
                } else {
                    return s.design.rows();
                }
            },
            state_);
    }

    const DesignMatrix* design() const noexcept
    {
        return std::visit(
            [](const auto& s) -> const DesignMatrix* {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, detail::AxisSubsetState> || std::is_same_v<S, detail::PointSetState>) {
                    return nullptr;
                } else {
                    return &s.design;
                }
            },
            state_);
    }

    /// Ridge penalty; 0 for every other kind.
    double lambda() const noexcept
    {
        const auto* s = std::get_if<detail::RidgeState>(&state_);
        return s ? s->lambda : 0.0;
    }

    /// Model size for subset fitters; 0 otherwise.
    std::size_t k() const noexcept
    {
        if (const auto* s = std::get_if<detail::BestSubsetState>(&state_)) return s->k;
        if (const auto* s = std::get_if<detail::ForwardStepwiseState>(&state_)) return s->k;
        if (const auto* s = std::get_if<detail::AxisSubsetState>(&state_)) return s->k;
        return 0;
    }

    const std::vector<Vector>& points() const
    {
        return std::get<detail::PointSetState>(state_).points;
    }

    std::string describe() const
    {
        std::ostringstream os;
        os.precision(17);
        os << to_string(kind());
        switch (kind()) {
        case FitterKind::Ridge: os << ":lambda=" << lambda(); break;
        case FitterKind::BestSubset:
        case FitterKind::ForwardStepwise:
        case FitterKind::AxisSubset: os << ":k=" << k(); break;
        case FitterKind::PointSet: os << ":count=" << points().size(); break;
        case FitterKind::Ols: break;
        }
        if (const auto* d = design()) {
            os << " on " << d->rows() << "x" << d->cols() << " design";
        } else {
            os << " in R^" << dimension();
        }
        return os.str();
    }

    FitResult fit(const Vector& y) const
    {
        detail::check_length("fit", dimension(), y);
        return std::visit([&](const auto& s) { return apply(s, y); }, state_);
    }

    Vector fitted(const Vector& y) const { return fit(y).fitted; }

private:
    using State = std::variant<detail::OlsState, detail::RidgeState, detail::BestSubsetState,
                               detail::ForwardStepwiseState, detail::AxisSubsetState, detail::PointSetState>;

    explicit Fitter(State state) : state_(std::move(state)) {}

    static FitResult apply(const detail::OlsState& s, const Vector& y)
    {
        Vector fitted = s.q * (s.q.transpose() * y);
        return detail::make_result(y, std::move(fitted), detail::iota_indices(s.design.cols()));
    }

    static FitResult apply(const detail::RidgeState& s, const Vector& y)
    {
        const auto n = y.size();
        const auto p = static_cast<Eigen::Index>(s.design.cols());
        Vector rhs = Vector::Zero(n + p);
        rhs.head(n) = y;
        const Vector beta = s.augmented.solve(rhs);
        Vector fitted = s.design.values() * beta;
        return detail::make_result(y, std::move(fitted), detail::iota_indices(s.design.cols()));
    }

    static FitResult apply(const detail::BestSubsetState& s, const Vector& y)
    {
        const ThinQR& qr = s.search->qr();
        const Vector w = qr.q.transpose() * y;
        auto best = s.search->best_by_size(w);
        if (!best[s.k]) {
            throw InfeasibleSubset(s.k);
        }
        std::vector<std::size_t> columns = std::move(*best[s.k]);
        Vector fitted = qr.q * s.search->reduced_fit(columns, w);
        return detail::make_result(y, std::move(fitted), std::move(columns));
    }

    static FitResult apply(const detail::ForwardStepwiseState& s, const Vector& y)
    {
        const Vector w = s.qr->q.transpose() * y;
        StepwisePath path = forward_stepwise_path(s.qr->r, w, s.k);
        Vector reduced = Vector::Zero(w.size());
        for (const Vector& u : path.directions) {
            reduced += u.dot(w) * u;
        }
        Vector fitted = s.qr->q * reduced;
        return detail::make_result(y, std::move(fitted), std::move(path.columns));
    }

    static FitResult apply(const detail::AxisSubsetState& s, const Vector& y)
    {
        std::vector<std::size_t> order = detail::iota_indices(s.n);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(y(static_cast<Eigen::Index>(a))) > std::abs(y(static_cast<Eigen::Index>(b)));
        });
        order.resize(s.k);
        std::sort(order.begin(), order.end());
        Vector fitted = Vector::Zero(y.size());
        for (std::size_t i : order) {
            fitted(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(i));
        }
        return detail::make_result(y, std::move(fitted), std::move(order));
    }

    static FitResult apply(const detail::PointSetState& s, const Vector& y)
    {
        std::size_t best = 0;
        double best_dist = (s.points[0] - y).squaredNorm();
        for (std::size_t i = 1; i < s.points.size(); ++i) {
            const double d = (s.points[i] - y).squaredNorm();
            if (d < best_dist) {
                best_dist = d;
                best = i;
            }
        }
        return detail::make_result(y, s.points[best], {best});
    }

    State state_;
};

inline FitResult fit_ols(const DesignMatrix& design, const Vector& y)
{
    return Fitter::ols(design).fit(y);
}

inline FitResult fit_ridge(const DesignMatrix& design, double lambda, const Vector& y)
{
    return Fitter::ridge(design, lambda).fit(y);
}

inline FitResult fit_best_subset(const DesignMatrix& design, std::size_t k, const Vector& y)
{
    return Fitter::best_subset(design, k).fit(y);
}

inline FitResult fit_forward_stepwise(const DesignMatrix& design, std::size_t k, const Vector& y)
{
    return Fitter::forward_stepwise(design, k).fit(y);
}

inline FitResult fit_axis_subset(std::size_t k, const Vector& y)
{
    return Fitter::axis_subset(static_cast<std::size_t>(y.size()), k).fit(y);
}

inline FitResult fit_point_set(const std::vector<Vector>& points, const Vector& y)
{
    return Fitter::point_set(points).fit(y);
}

/// Fits every model size 0..max_size of a nested-size family on one response.
///
/// Column k of fitted_path(y) equals Fitter::best_subset(design, k) (or
/// forward_stepwise) applied to y. Used to sweep subset size with common noise.
class SubsetPathFitter {
public:
    enum class Method { BestSubset, ForwardStepwise };

    SubsetPathFitter(DesignMatrix design, Method method, std::optional<std::size_t> max_size = std::nullopt)
        : design_(std::move(design)), method_(method), max_size_(max_size.value_or(design_.cols()))
    {
        if (max_size_ > design_.cols()) {
            throw InvalidArgument("path size exceeds column count");
        }
        if (method_ == Method::BestSubset) {
            search_ = std::make_shared<const SubsetSearch>(design_, max_size_);
            qr_ = std::shared_ptr<const ThinQR>(search_, &search_->qr());
        } else {
            qr_ = std::make_shared<const ThinQR>(design_.values());
        }
    }

    Method method() const noexcept { return method_; }
    std::size_t dimension() const noexcept { return design_.rows(); }
    std::size_t max_size() const noexcept { return max_size_; }
    std::size_t path_length() const noexcept { return max_size_ + 1; }
    const DesignMatrix& design() const noexcept { return design_; }

    /// n x (max_size + 1) matrix of fitted vectors, one column per size.
    Matrix fitted_path(const Vector& y) const
    {
        detail::check_length("fitted_path", dimension(), y);
        const Vector w = qr_->q.transpose() * y;
        Matrix reduced = Matrix::Zero(w.size(), static_cast<Eigen::Index>(path_length()));
        if (method_ == Method::BestSubset) {
            const auto best = search_->best_by_size(w);
            for (std::size_t k = 1; k <= max_size_; ++k) {
                if (!best[k]) {
                    throw InfeasibleSubset(k);
                }
                reduced.col(static_cast<Eigen::Index>(k)) = search_->reduced_fit(*best[k], w);
            }
        } else {
            const StepwisePath path = forward_stepwise_path(qr_->r, w, max_size_);
            Vector acc = Vector::Zero(w.size());
            for (std::size_t k = 1; k <= max_size_; ++k) {
                const Vector& u = path.directions[k - 1];
                acc += u.dot(w) * u;
                reduced.col(static_cast<Eigen::Index>(k)) = acc;
            }
        }
        return qr_->q * reduced;
    }

private:
    DesignMatrix design_;
    Method method_;
    std::size_t max_size_;
    std::shared_ptr<const SubsetSearch> search_;
    std::shared_ptr<const ThinQR> qr_;
};

} // namespace edf
