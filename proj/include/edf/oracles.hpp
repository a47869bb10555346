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

// Exact or deterministic DF values used to check the Monte Carlo engine.
//
// Three routes, from most to least specialized:
//   * closed forms (trace of the hat matrix, two-point sets, limits);
//   * iterated adaptive Gauss-Kronrod over the Gaussian measure, n <= 3,
//     which resolves the jumps subset and point-set fitters put in the
//     integrand;
//   * tensor Gauss-Hermite, exact for smooth (polynomial-like) integrands but
//     only first-order accurate across a jump, so reserved for linear fitters.

#include <cmath>
#include <cstddef>
#include <numbers>

#include "edf/engine.hpp"
#include "edf/errors.hpp"
#include "edf/fitters.hpp"
#include "edf/quadrature.hpp"

namespace edf {

inline constexpr std::size_t kMaxQuadratureDimension = 3;

/// tr(H) for a linear fitter: rank(X) for OLS, sum d^2 / (d^2 + lambda) over
/// the singular values d of X for ridge.
inline double df_trace_linear(const Fitter& fitter)
{
    if (!fitter.is_linear()) {
        throw NotLinear(std::string("trace formula needs a linear fitter, got ") + to_string(fitter.kind()));
    }
    const DesignMatrix& design = *fitter.design();
    if (fitter.kind() == FitterKind::Ols) {
        return static_cast<double>(design.rank());
    }
    const Vector d = Eigen::JacobiSVD<Matrix>(design.values()).singularValues();
    const double lambda = fitter.lambda();
    double trace = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double d2 = d(i) * d(i);
        if (d2 > 0.0) {
            trace += d2 / (d2 + lambda);
        }
    }
    return trace;
}

struct QuadratureOptions {
    AdaptiveOptions adaptive{};
    /// The coarse companion run uses tolerances this many times looser.
    double coarse_factor = 100.0;
    /// Relative agreement between coarse and fine runs required for `converged`.
    double convergence_tol = 1e-6;
};

/// `value` is the fine run; `coarse` the same integral at looser tolerance.
/// Non-convergence is reported, never thrown.
struct QuadratureEstimate {
    double value = 0.0;
    double coarse = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;

    double discrepancy() const noexcept { return std::abs(value - coarse); }
};

namespace detail {

inline void check_quadrature_model(const DataModel& model, std::size_t fitter_dim)
{
    check_fitter_dimension(model, fitter_dim);
    if (model.dimension() > kMaxQuadratureDimension) {
        throw DimensionTooLarge(model.dimension(), kMaxQuadratureDimension);
    }
    if (model.noise() != NoiseLaw::StandardGaussian) {
        throw InvalidArgument("quadrature oracle assumes Gaussian noise");
    }
}

} // namespace detail

/// (1 / sigma) E[eps^T yhat(mu + sigma eps)] by deterministic integration.
/// `breaks` lists known discontinuities of the fitter in standardized noise
/// coordinates (see gaussian_expectation_adaptive).
template <ResponseFitter F, class B = NoBreakpoints>
QuadratureEstimate df_quadrature(const DataModel& model, const F& fitter, const QuadratureOptions& options = {},
                                 B&& breaks = {})
{
    detail::check_quadrature_model(model, fitter.dimension());
    auto integrand = [&](const Vector& eps) {
        const Vector y = model.mu() + model.sigma() * eps;
        return eps.dot(fitter.fitted(y)) / model.sigma();
    };
    AdaptiveOptions loose = options.adaptive;
    loose.abs_tol *= options.coarse_factor;
    loose.rel_tol *= options.coarse_factor;
    const IntegrationResult coarse = gaussian_expectation_adaptive(integrand, model.dimension(), loose, breaks);
    const IntegrationResult fine = gaussian_expectation_adaptive(integrand, model.dimension(), options.adaptive, breaks);
    QuadratureEstimate out;
    out.value = fine.value;
    out.coarse = coarse.value;
    out.error_estimate = fine.error;
    out.evaluations = coarse.evaluations + fine.evaluations;
    out.converged = fine.converged
        && out.discrepancy() <= options.convergence_tol * std::max(1.0, std::abs(out.value));
    return out;
}

/// Same quantity by a tensor Gauss-Hermite rule with `nodes_per_dim` nodes.
template <ResponseFitter F>
double df_gauss_hermite(const DataModel& model, const F& fitter, std::size_t nodes_per_dim)
{
    detail::check_quadrature_model(model, fitter.dimension());
    const QuadratureRule rule = gauss_hermite(nodes_per_dim);
    return tensor_expectation(rule, model.dimension(), [&](const Vector& eps) {
        const Vector y = model.mu() + model.sigma() * eps;
        return eps.dot(fitter.fitted(y)) / model.sigma();
    });
}

/// DF of the one-of-two-coordinates fitter on R^2 with unit noise at mean mu.
inline QuadratureEstimate df_heatmap_reference(double mu1, double mu2, const QuadratureOptions& options = {})
{
    Vector mu(2);
    mu << mu1, mu2;
    // the kept coordinate switches where |y1| = |y2|; |y1| kinks at y1 = 0
    auto breaks = [mu1, mu2](const Vector& z, std::size_t d) -> std::vector<double> {
        if (d == 0) {
            return {-mu1};
        }
        const double a = std::abs(mu1 + z(0));
        return {a - mu2, -a - mu2};
    };
    return df_quadrature(DataModel(mu, 1.0), Fitter::axis_subset(2, 1), options, breaks);
}

/// Limit of DF / A for the one-of-two-coordinates fitter at mean (A, A) as
/// A grows: E[max(e1, e2)] for independent standard normals, 1 / sqrt(pi).
constexpr double df_scaling_limit() noexcept
{
    return std::numbers::inv_sqrtpi;
}

/// E[max(e1, e2)] by adaptive quadrature; agrees with df_scaling_limit().
inline IntegrationResult scaling_limit_quadrature(const AdaptiveOptions& options = {1e-13, 1e-13, 4000})
{
    return gaussian_expectation_adaptive(
        [](const Vector& z) { return std::max(z(0), z(1)); }, 2, options,
        [](const Vector& z, std::size_t d) { return d == 0 ? std::vector<double>{} : std::vector<double>{z(0)}; });
}

/// Closed-form DF of nearest-point fitting onto {a, b} in R^1 (a < b, ties to
/// a): yhat jumps from a to b at the midpoint m, so
/// Cov(y, yhat) / sigma^2 = (b - a) phi((m - mu) / sigma) / sigma.
inline double two_point_df(double a, double b, double mu, double sigma)
{
    if (!(a < b)) {
        throw InvalidArgument("two_point_df needs a < b");
    }
    const double mid = 0.5 * (a + b);
    return (b - a) * standard_normal_pdf((mid - mu) / sigma) / sigma;
}

/// Closed-form DF of the one-of-two-coordinates fitter at the origin with
/// unit noise: E[max(e1^2, e2^2)] = 1 + 2 / pi.
constexpr double axis_subset_origin_df() noexcept
{
    return 1.0 + 2.0 * std::numbers::inv_pi;
}

} // namespace edf
