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

// Column-subset least squares in the reduced coordinates of a thin QR.
//
// With X = Q R, the RSS of y on columns S is ||y||^2 - ||P_S w||^2 where
// w = Q^T y and P_S projects onto span{R_j : j in S}. Subsets are enumerated
// depth first in lexicographic order; each node appends one column and stores
// the unit vector that column adds to its parent's orthonormal basis, so the
// projected norm of a node is its parent's plus one squared dot product.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "edf/errors.hpp"
#include "edf/linalg.hpp"

namespace edf {

/// Largest column count accepted by exhaustive best-subset search.
inline constexpr std::size_t kMaxExhaustiveColumns = 25;

/// Scores within this fraction of ||w||^2 count as tied, so duplicated or
/// equivalent columns resolve to the lexicographically smaller choice despite
/// rounding in the QR transform.
inline constexpr double kTieTolerance = 1e-12;

namespace detail {

inline double dot_n(const double* a, const double* b, Eigen::Index m) noexcept
{
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
    Eigen::Index i = 0;
    for (; i + 4 <= m; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < m; ++i) {
        s0 += a[i] * b[i];
    }
    return (s0 + s1) + (s2 + s3);
}

/// R is upper triangular and columns are added in increasing order, so a unit
/// vector whose last column is `column` vanishes below that row.
inline Eigen::Index support_rows(std::size_t column, Eigen::Index m) noexcept
{
    return std::min<Eigen::Index>(static_cast<Eigen::Index>(column) + 1, m);
}

/// Writes to `out` the unit component of r.col(column) orthogonal to the first
/// `depth` rows of `basis` (each of length m). Returns false when the residual
/// is below the rank tolerance, i.e. the column is dependent on the basis.
inline bool orthonormalize_column(const Matrix& r, Eigen::Index column, const double* basis,
                                  std::size_t depth, double* out) noexcept
{
    const Eigen::Index m = r.rows();
    const double* src = r.col(column).data();
    double original = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        out[i] = src[i];
        original += src[i] * src[i];
    }
    original = std::sqrt(original);
    if (!(original > 0.0)) {
        return false;
    }
    // two passes of modified Gram-Schmidt keep the basis orthonormal to rounding
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t b = 0; b < depth; ++b) {
            const double* q = basis + b * static_cast<std::size_t>(m);
            const double c = dot_n(q, out, m);
            for (Eigen::Index i = 0; i < m; ++i) {
                out[i] -= c * q[i];
            }
        }
    }
    const double norm = std::sqrt(dot_n(out, out, m));
    if (!(norm > kRankTolerance * original)) {
        return false;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        out[i] /= norm;
    }
    return true;
}

/// Depth-first lexicographic enumeration of full-rank column subsets of size
/// 1..max_size. visit(id, parent_id, depth, column, unit_vector) is called in
/// preorder; ids are consecutive from 0 and the root (empty set) has id -1.
/// Rank-deficient subsets and all their extensions are skipped.
template <class Visit>
void enumerate_subsets(const Matrix& r, std::size_t max_size, Visit&& visit)
{
    const auto m = static_cast<std::size_t>(r.rows());
    const auto p = static_cast<std::size_t>(r.cols());
    std::vector<double> stack(std::max<std::size_t>(max_size, 1) * m);
    std::int64_t next_id = 0;
    auto recurse = [&](auto& self, std::int64_t parent, std::size_t depth, std::size_t first) -> void {
        if (depth == max_size) {
            return;
        }
        double* u = stack.data() + depth * m;
        for (std::size_t j = first; j < p; ++j) {
            if (!orthonormalize_column(r, static_cast<Eigen::Index>(j), stack.data(), depth, u)) {
                continue;
            }
            const std::int64_t id = next_id++;
            visit(id, parent, depth + 1, j, static_cast<const double*>(u));
            self(self, id, depth + 1, j + 1);
        }
    };
    recurse(recurse, -1, 0, 0);
}

inline double binomial(std::size_t n, std::size_t k) noexcept
{
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return c;
}

} // namespace detail

/// Exhaustive best-subset search over the columns of a fixed design.
///
/// The y-independent part (the orthonormal vector of every subset-tree node)
/// is cached when it fits in memory; otherwise it is recomputed per search.
/// Both paths perform identical arithmetic and return identical results.
class SubsetSearch {
public:
    /// Node-vector cache budget, in doubles.
    static constexpr double kCacheBudget = double(1 << 23);

    SubsetSearch(const DesignMatrix& design, std::size_t max_size)
        : qr_(design.values()), n_(design.rows()), max_size_(max_size)
    {
        const std::size_t p = design.cols();
        if (p > kMaxExhaustiveColumns) {
            throw SubsetTooLarge(p, kMaxExhaustiveColumns);
        }
        if (max_size > p) {
            throw InvalidArgument("subset size exceeds column count");
        }
        double nodes = 0.0;
        for (std::size_t d = 1; d <= max_size; ++d) {
            nodes += detail::binomial(p, d);
        }
        if (nodes * static_cast<double>(qr_.r.rows()) <= kCacheBudget) {
            build_cache();
        }
    }

    std::size_t max_size() const noexcept { return max_size_; }
    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(qr_.r.cols()); }
    bool cached() const noexcept { return cached_; }
    std::size_t node_count() const noexcept { return parent_.size(); }
    const ThinQR& qr() const noexcept { return qr_; }

    /// Best column set of every size 0..max_size for reduced response w = Q^T y;
    /// nullopt where every subset of that size is rank deficient. Among equal
    /// projected norms the lexicographically smallest set wins.
    std::vector<std::optional<std::vector<std::size_t>>> best_by_size(const Vector& w) const
    {
        std::vector<std::optional<std::vector<std::size_t>>> best(max_size_ + 1);
        best[0] = std::vector<std::size_t>{};
        if (max_size_ == 0) {
            return best;
        }
        if (cached_) {
            best_cached(w, best);
        } else {
            best_streaming(w, best);
        }
        return best;
    }

    /// Reduced-coordinate fit of w on `columns` (in the order given).
    Vector reduced_fit(const std::vector<std::size_t>& columns, const Vector& w) const
    {
        const Eigen::Index m = qr_.r.rows();
        std::vector<double> basis(std::max<std::size_t>(columns.size(), 1) * static_cast<std::size_t>(m));
        Vector fit = Vector::Zero(m);
        for (std::size_t d = 0; d < columns.size(); ++d) {
            double* u = basis.data() + d * static_cast<std::size_t>(m);
            if (!detail::orthonormalize_column(qr_.r, static_cast<Eigen::Index>(columns[d]), basis.data(), d, u)) {
                throw RankDeficient(d, columns.size());
            }
            const double c = detail::dot_n(u, w.data(), m);
            for (Eigen::Index i = 0; i < m; ++i) {
                fit(i) += c * u[i];
            }
        }
        return fit;
    }

private:
    void build_cache()
    {
        const auto m = static_cast<std::size_t>(qr_.r.rows());
        detail::enumerate_subsets(qr_.r, max_size_,
                                  [&](std::int64_t, std::int64_t parent, std::size_t depth, std::size_t column,
                                      const double* u) {
                                      parent_.push_back(static_cast<std::int32_t>(parent));
                                      depth_.push_back(static_cast<std::uint8_t>(depth));
                                      column_.push_back(static_cast<std::uint8_t>(column));
                                      units_.insert(units_.end(), u, u + m);
                                  });
        cached_ = true;
    }

    void best_cached(const Vector& w, std::vector<std::optional<std::vector<std::size_t>>>& best) const
    {
        const Eigen::Index m = qr_.r.rows();
        const std::size_t count = parent_.size();
        thread_local std::vector<double> projected;
        projected.resize(count);
        std::vector<double> best_value(max_size_ + 1, -std::numeric_limits<double>::infinity());
        std::vector<std::int64_t> best_node(max_size_ + 1, -1);
        const double tie = kTieTolerance * w.squaredNorm();
        for (std::size_t i = 0; i < count; ++i) {
            const double c = detail::dot_n(units_.data() + i * static_cast<std::size_t>(m), w.data(),
                                           detail::support_rows(column_[i], m));
            const double base = parent_[i] < 0 ? 0.0 : projected[static_cast<std::size_t>(parent_[i])];
            const double value = base + c * c;
            projected[i] = value;
            const std::size_t d = depth_[i];
            if (value > best_value[d] + tie) {
                best_value[d] = value;
                best_node[d] = static_cast<std::int64_t>(i);
            }
        }
        for (std::size_t d = 1; d <= max_size_; ++d) {
            if (best_node[d] < 0) {
                continue;
            }
            std::vector<std::size_t> columns(d);
            auto node = best_node[d];
            for (std::size_t level = d; level-- > 0;) {
                columns[level] = column_[static_cast<std::size_t>(node)];
                node = parent_[static_cast<std::size_t>(node)];
            }
            best[d] = std::move(columns);
        }
    }

    void best_streaming(const Vector& w, std::vector<std::optional<std::vector<std::size_t>>>& best) const
    {
        const Eigen::Index m = qr_.r.rows();
        std::vector<double> projected(max_size_ + 1, 0.0);
        std::vector<double> best_value(max_size_ + 1, -std::numeric_limits<double>::infinity());
        std::vector<std::size_t> path(max_size_);
        const double tie = kTieTolerance * w.squaredNorm();
        detail::enumerate_subsets(qr_.r, max_size_,
                                  [&](std::int64_t, std::int64_t, std::size_t depth, std::size_t column,
                                      const double* u) {
                                      const double c = detail::dot_n(u, w.data(), detail::support_rows(column, m));
                                      const double value = projected[depth - 1] + c * c;
                                      projected[depth] = value;
                                      path[depth - 1] = column;
                                      if (value > best_value[depth] + tie) {
                                          best_value[depth] = value;
                                          best[depth] = std::vector<std::size_t>(path.begin(),
                                                                                 path.begin() + static_cast<std::ptrdiff_t>(depth));
                                      }
                                  });
    }

    ThinQR qr_;
    std::size_t n_;
    std::size_t max_size_;
    bool cached_ = false;
    std::vector<std::int32_t> parent_;
    std::vector<std::uint8_t> depth_;
    std::vector<std::uint8_t> column_;
    std::vector<double> units_;
};

/// Order in which forward stepwise adds columns, plus the orthonormal
/// direction (reduced coordinates) each addition contributes.
struct StepwisePath {
    std::vector<std::size_t> columns;
    std::vector<Vector> directions;
};

/// Greedy forward selection from the empty model on reduced response w.
/// Each step adds the column whose residualized direction captures the most
/// of w (lowest RSS after the full refit); ties go to the smaller index.
inline StepwisePath forward_stepwise_path(const Matrix& r, const Vector& w, std::size_t steps)
{
    const Eigen::Index p = r.cols();
    if (steps > static_cast<std::size_t>(p)) {
        throw InvalidArgument("stepwise size exceeds column count");
    }
    Matrix residual = r;
    const Vector original = r.colwise().norm().transpose();
    std::vector<bool> active(static_cast<std::size_t>(p), false);
    const double tie = kTieTolerance * w.squaredNorm();
    StepwisePath path;
    for (std::size_t step = 0; step < steps; ++step) {
        Eigen::Index chosen = -1;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < p; ++j) {
            if (active[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double norm2 = residual.col(j).squaredNorm();
            if (!(std::sqrt(norm2) > kRankTolerance * original(j))) {
                continue;
            }
            const double c = residual.col(j).dot(w);
            const double gain = c * c / norm2;
            if (gain > best_gain + tie) {
                best_gain = gain;
                chosen = j;
            }
        }
        if (chosen < 0) {
            throw RankDeficient(step, steps);
        }
        Vector u = residual.col(chosen);
        for (const Vector& q : path.directions) {
            u -= q.dot(u) * q;
        }
        u.normalize();
        active[static_cast<std::size_t>(chosen)] = true;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!active[static_cast<std::size_t>(j)]) {
                residual.col(j) -= u.dot(residual.col(j)) * u;
            }
        }
        path.columns.push_back(static_cast<std::size_t>(chosen));
        path.directions.push_back(std::move(u));
    }
    return path;
}

} // namespace edf
