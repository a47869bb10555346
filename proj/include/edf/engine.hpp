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

// Monte Carlo estimation of effective degrees of freedom
//
//     DF = (1 / sigma^2) * sum_i Cov(y_i, yhat_i),   y = mu + sigma * eps.
//
// Covariance estimator: per replicate eps^T yhat, averaged and divided by
// sigma^2 (unbiased because E[eps] = 0). Optimism estimator: per replicate
// ||y* - yhat||^2 - ||y - yhat||^2 with y* an independent copy of y, averaged
// and divided by 2 sigma^2. Standard errors are the sample standard deviation
// of the per-replicate statistic over sqrt(R).
//
// Replicate i draws its noise from replicate_stream(seed, i) and writes its
// statistic into slot i; the reduction runs in index order, so results are
// bit-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edf/errors.hpp"
#include "edf/linalg.hpp"
#include "edf/parallel.hpp"
#include "edf/random.hpp"
#include "edf/summation.hpp"

namespace edf {

/// i.i.d. noise laws, each with mean 0 and variance 1.
enum class NoiseLaw { StandardGaussian, Uniform, Rademacher };

inline const char* to_string(NoiseLaw law) noexcept
{
    switch (law) {
    case NoiseLaw::StandardGaussian: return "gaussian";
    case NoiseLaw::Uniform: return "uniform";
    case NoiseLaw::Rademacher: return "rademacher";
    }
    return "unknown";
}

inline void draw_noise(NoiseLaw law, PhiloxStream& stream, Vector& out)
{
    switch (law) {
    case NoiseLaw::StandardGaussian: {
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            out(i) = normal(stream);
        }
        break;
    }
    case NoiseLaw::Uniform: {
        const double half_width = std::sqrt(3.0);
        std::uniform_real_distribution<double> uniform(-half_width, half_width);
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            out(i) = uniform(stream);
        }
        break;
    }
    case NoiseLaw::Rademacher:
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            out(i) = (stream() >> 63) ? 1.0 : -1.0;
        }
        break;
    }
}

/// y = mu + sigma * eps with eps i.i.d. from `noise`; sigma is known.
class DataModel {
public:
    DataModel(Vector mu, double sigma, NoiseLaw noise = NoiseLaw::StandardGaussian)
        : mu_(std::move(mu)), sigma_(sigma), noise_(noise)
    {
        if (mu_.size() < 1 || !mu_.allFinite()) {
            throw InvalidArgument("mean vector must be nonempty and finite");
        }
        if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
            throw InvalidArgument("noise scale sigma must be finite and > 0");
        }
    }

    const Vector& mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    NoiseLaw noise() const noexcept { return noise_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(mu_.size()); }

private:
    Vector mu_;
    double sigma_;
    NoiseLaw noise_;
};

/// Anything mapping a response to a fitted vector of the same length.
template <class F>
concept ResponseFitter = requires(const F& f, const Vector& y) {
    { f.fitted(y) } -> std::convertible_to<Vector>;
    { f.dimension() } -> std::convertible_to<std::size_t>;
};

/// Maps a response to a family of fitted vectors (one column per model size).
template <class F>
concept PathResponseFitter = requires(const F& f, const Vector& y) {
    { f.fitted_path(y) } -> std::convertible_to<Matrix>;
    { f.path_length() } -> std::convertible_to<std::size_t>;
    { f.dimension() } -> std::convertible_to<std::size_t>;
};

struct ReplicateDraw {
    Vector epsilon;
    Vector y;
    Vector fitted;
    std::optional<Vector> epsilon_star;
    double stat_cov = 0.0;
    std::optional<double> stat_opt;
};

enum class Estimator { Covariance, Optimism };

inline const char* to_string(Estimator e) noexcept
{
    return e == Estimator::Covariance ? "cov" : "opt";
}

struct DfEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t replicates = 0;
    Estimator estimator = Estimator::Covariance;
};

struct McOptions {
    std::size_t replicates = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1; // 0 = hardware concurrency
};

namespace detail {

inline void check_fitter_dimension(const DataModel& model, std::size_t fitter_dim)
{
    if (model.dimension() != fitter_dim) {
        throw DimensionMismatch("fitter dimension vs mean vector", fitter_dim, model.dimension());
    }
}

inline void check_replicates(std::size_t r)
{
    if (r < 2) {
        throw InvalidArgument("at least two replicates are required");
    }
}

/// Runs body(i) for all replicates. The lowest failing index wins, whatever
/// the worker count: a NonFiniteStatistic keeps its type, anything else is
/// wrapped in ReplicateFailure with the index.
template <class Body>
void run_replicates(std::size_t count, unsigned workers, Body&& body)
{
    std::atomic<std::size_t> first_failure{std::numeric_limits<std::size_t>::max()};
    std::mutex mutex;
    std::string message;
    bool non_finite = false;
    parallel_for(count, workers, [&](std::size_t i) {
        if (i > first_failure.load(std::memory_order_relaxed)) {
            return;
        }
        try {
            body(i);
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex);
            if (i < first_failure.load()) {
                first_failure.store(i);
                message = e.what();
                non_finite = dynamic_cast<const NonFiniteStatistic*>(&e) != nullptr;
            }
        }
    });
    const std::size_t failed = first_failure.load();
    if (failed != std::numeric_limits<std::size_t>::max()) {
        if (non_finite) {
            throw NonFiniteStatistic("replicate " + std::to_string(failed) + ": " + message);
        }
        throw ReplicateFailure(failed, message);
    }
}

inline void require_finite(double value, const char* what)
{
    if (!std::isfinite(value)) {
        throw NonFiniteStatistic(std::string(what) + " is not finite");
    }
}

inline DfEstimate summarize(std::span<const double> stats, double scale, Estimator estimator)
{
    const SampleMoments m = sample_moments(stats);
    DfEstimate out;
    out.value = m.mean / scale;
    out.std_error = m.stddev / std::sqrt(static_cast<double>(m.count)) / scale;
    out.replicates = m.count;
    out.estimator = estimator;
    return out;
}

} // namespace detail

/// One replicate: eps (and eps* when need_star) drawn from `stream` only.
template <ResponseFitter F>
ReplicateDraw draw_replicate(const DataModel& model, const F& fitter, PhiloxStream& stream, bool need_star)
{
    detail::check_fitter_dimension(model, fitter.dimension());
    const auto n = static_cast<Eigen::Index>(model.dimension());
    ReplicateDraw d;
    d.epsilon.resize(n);
    draw_noise(model.noise(), stream, d.epsilon);
    d.y = model.mu() + model.sigma() * d.epsilon;
    d.fitted = fitter.fitted(d.y);
    if (d.fitted.size() != n) {
        throw DimensionMismatch("fitted vector", model.dimension(), static_cast<std::size_t>(d.fitted.size()));
    }
    d.stat_cov = d.epsilon.dot(d.fitted);
    if (need_star) {
        Vector star(n);
        draw_noise(model.noise(), stream, star);
        const Vector y_star = model.mu() + model.sigma() * star;
        d.stat_opt = (y_star - d.fitted).squaredNorm() - (d.y - d.fitted).squaredNorm();
        d.epsilon_star = std::move(star);
    }
    return d;
}

template <ResponseFitter F>
DfEstimate estimate_df(const DataModel& model, const F& fitter, const McOptions& options,
                       Estimator estimator = Estimator::Covariance)
{
    detail::check_replicates(options.replicates);
    detail::check_fitter_dimension(model, fitter.dimension());
    const bool optimism = estimator == Estimator::Optimism;
    std::vector<double> stats(options.replicates);
    detail::run_replicates(options.replicates, options.workers, [&](std::size_t i) {
        PhiloxStream stream = replicate_stream(options.seed, i);
        const ReplicateDraw d = draw_replicate(model, fitter, stream, optimism);
        const double s = optimism ? *d.stat_opt : d.stat_cov;
        detail::require_finite(s, optimism ? "optimism statistic" : "covariance statistic");
        stats[i] = s;
    });
    const double s = model.sigma();
    return detail::summarize(stats, optimism ? 2.0 * s * s : s, estimator);
}

/// Both estimators on common noise draws (eps* drawn after eps on the same
/// stream, so the covariance half equals estimate_df(..., Covariance)).
template <ResponseFitter F>
std::pair<DfEstimate, DfEstimate> estimate_df_both(const DataModel& model, const F& fitter,
                                                   const McOptions& options)
{
    detail::check_replicates(options.replicates);
    detail::check_fitter_dimension(model, fitter.dimension());
    std::vector<double> cov(options.replicates);
    std::vector<double> opt(options.replicates);
    detail::run_replicates(options.replicates, options.workers, [&](std::size_t i) {
        PhiloxStream stream = replicate_stream(options.seed, i);
        const ReplicateDraw d = draw_replicate(model, fitter, stream, true);
        detail::require_finite(d.stat_cov, "covariance statistic");
        detail::require_finite(*d.stat_opt, "optimism statistic");
        cov[i] = d.stat_cov;
        opt[i] = *d.stat_opt;
    });
    const double s = model.sigma();
    return {detail::summarize(cov, s, Estimator::Covariance),
            detail::summarize(opt, 2.0 * s * s, Estimator::Optimism)};
}

/// Covariance-estimator DF of every member of a path family, all sizes
/// sharing each replicate's noise draw.
template <PathResponseFitter F>
std::vector<DfEstimate> estimate_df_path(const DataModel& model, const F& fitter, const McOptions& options)
{
    detail::check_replicates(options.replicates);
    detail::check_fitter_dimension(model, fitter.dimension());
    const std::size_t r = options.replicates;
    const std::size_t length = fitter.path_length();
    const auto n = static_cast<Eigen::Index>(model.dimension());
    std::vector<double> stats(length * r);
    detail::run_replicates(r, options.workers, [&](std::size_t i) {
        PhiloxStream stream = replicate_stream(options.seed, i);
        Vector eps(n);
        draw_noise(model.noise(), stream, eps);
        const Vector y = model.mu() + model.sigma() * eps;
        const Matrix path = fitter.fitted_path(y);
        for (std::size_t k = 0; k < length; ++k) {
            const double s = eps.dot(path.col(static_cast<Eigen::Index>(k)));
            detail::require_finite(s, "covariance statistic");
            stats[k * r + i] = s;
        }
    });
    const double s = model.sigma();
    std::vector<DfEstimate> out;
    out.reserve(length);
    for (std::size_t k = 0; k < length; ++k) {
        out.push_back(detail::summarize(std::span<const double>(stats).subspan(k * r, r), s,
                                        Estimator::Covariance));
    }
    return out;
}

/// Wraps a callable y -> y_hat as a ResponseFitter (tests, ad-hoc procedures).
template <class Fn>
class FunctionFitter {
public:
    FunctionFitter(std::size_t n, Fn fn) : n_(n), fn_(std::move(fn)) {}

    std::size_t dimension() const noexcept { return n_; }
    Vector fitted(const Vector& y) const { return fn_(y); }

private:
    std::size_t n_;
    Fn fn_;
};

} // namespace edf
