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

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include "edf/errors.hpp"
#include "edf/linalg.hpp"
#include "edf/summation.hpp"

namespace edf {

inline double standard_normal_pdf(double x) noexcept
{
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

/// Gauss-Hermite rule for the standard normal density: sum_i w_i f(x_i)
/// approximates E[f(Z)], exact for polynomials of degree <= 2 * size - 1.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
/// probabilists' Hermite recurrence, weights the squared first components of
/// its normalized eigenvectors.
inline QuadratureRule gauss_hermite(std::size_t count)
{
    if (count < 1) {
        throw InvalidArgument("Gauss-Hermite rule needs at least one node");
    }
    const auto n = static_cast<Eigen::Index>(count);
    Vector diag = Vector::Zero(n);
    Vector sub(std::max<Eigen::Index>(n - 1, 0));
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        sub(i) = std::sqrt(static_cast<double>(i + 1));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    QuadratureRule rule;
    rule.nodes.resize(count);
    rule.weights.resize(count);
    for (Eigen::Index i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
        const double v = solver.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = v * v;
    }
    // the exact rule is symmetric about 0; enforce it so odd moments vanish
    for (std::size_t i = 0; i < count / 2; ++i) {
        const std::size_t j = count - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (count % 2 == 1) {
        rule.nodes[count / 2] = 0.0;
    }
    return rule;
}

/// E[g(Z)] for Z ~ N(0, I_dim) by the tensor product of `rule`.
template <class G>
double tensor_expectation(const QuadratureRule& rule, std::size_t dim, G&& g)
{
    Vector z(static_cast<Eigen::Index>(dim));
    std::vector<std::size_t> idx(dim, 0);
    CompensatedSum total;
    const std::size_t m = rule.size();
    for (;;) {
        double w = 1.0;
        for (std::size_t d = 0; d < dim; ++d) {
            z(static_cast<Eigen::Index>(d)) = rule.nodes[idx[d]];
            w *= rule.weights[idx[d]];
        }
        total.add(w * g(static_cast<const Vector&>(z)));
        std::size_t d = 0;
        while (d < dim && ++idx[d] == m) {
            idx[d] = 0;
            ++d;
        }
        if (d == dim) {
            break;
        }
    }
    return total.value();
}

struct IntegrationResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct AdaptiveOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::size_t max_intervals = 4000;
    // Uniform starting partition. Both rules are blind to a kink or jump that
    // sits closer to a panel end than the outermost node, so panels start narrow.
    std::size_t initial_panels = 64;
};

/// Globally adaptive Gauss-Kronrod (21 point) on [a, b]: the panel with the
/// largest error estimate is bisected until the total estimate drops below
/// max(abs_tol, rel_tol * |value|). Handles jumps and kinks at unknown
/// locations by refining around them.
template <class F>
IntegrationResult integrate_adaptive(F&& f, double a, double b, const AdaptiveOptions& options = {},
                                     std::span<const double> breakpoints = {})
{
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
    using Gauss = boost::math::quadrature::gauss<double, 10>;
    struct Panel {
        double lo;
        double hi;
        double value;
        double error;
        bool operator<(const Panel& o) const noexcept { return error < o.error; }
    };
    IntegrationResult out;
    // absolute |K21 - G10| per panel; the Gauss nodes are the odd Kronrod nodes
    const auto& nodes = Kronrod::abscissa();
    const auto& kw = Kronrod::weights();
    const auto& gw = Gauss::weights();
    auto panel = [&](double lo, double hi) {
        const double centre = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        const double f0 = f(centre);
        double kronrod = kw[0] * f0;
        double gauss = 0.0;
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            const double pair = f(centre - half * nodes[i]) + f(centre + half * nodes[i]);
            kronrod += kw[i] * pair;
            if (i % 2 == 1) {
                gauss += gw[i / 2] * pair;
            }
        }
        out.evaluations += 21;
        return Panel{lo, hi, half * kronrod, half * std::abs(kronrod - gauss)};
    };

    std::priority_queue<Panel> heap;
    const std::size_t uniform = std::max<std::size_t>(options.initial_panels, 1);
    std::vector<double> edges;
    for (std::size_t i = 0; i < uniform; ++i) {
        edges.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(uniform));
    }
    edges.push_back(b);
    for (double x : breakpoints) {
        if (x > a && x < b) {
            edges.push_back(x);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const std::size_t start = edges.size() - 1;
    double total_value = 0.0;
    double total_error = 0.0;
    for (std::size_t i = 0; i < start; ++i) {
        const Panel p = panel(edges[i], edges[i + 1]);
        total_value += p.value;
        total_error += p.error;
        heap.push(p);
    }
    std::vector<Panel> finished;
    const double min_width = (b - a) * 1e-14;
    while (total_error > std::max(options.abs_tol, options.rel_tol * std::abs(total_value))
           && heap.size() < std::max(options.max_intervals, start)) {
        Panel worst = heap.top();
        if (worst.hi - worst.lo < min_width) {
            break;
        }
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        const Panel left = panel(worst.lo, mid);
        const Panel right = panel(mid, worst.hi);
        total_value += left.value + right.value - worst.value;
        total_error = std::max(0.0, total_error + left.error + right.error - worst.error);
        heap.push(left);
        heap.push(right);
    }
    out.converged = total_error <= std::max(options.abs_tol, options.rel_tol * std::abs(total_value));
    while (!heap.empty()) {
        finished.push_back(heap.top());
        heap.pop();
    }
    std::sort(finished.begin(), finished.end(), [](const Panel& x, const Panel& y) { return x.lo < y.lo; });
    CompensatedSum value;
    CompensatedSum error;
    for (const Panel& p : finished) {
        value.add(p.value);
        error.add(p.error);
    }
    out.value = value.value();
    out.error = error.value();
    return out;
}

/// Gaussian tail beyond this many standard deviations is dropped (mass < 1e-22).
inline constexpr double kGaussianHalfWidth = 10.0;

/// No known discontinuities.
struct NoBreakpoints {
    std::vector<double> operator()(const Vector&, std::size_t) const { return {}; }
};

/// E[g(Z)] for Z ~ N(0, I_dim), dim <= 3, by iterated adaptive quadrature.
/// Inner integrals run at a tenth of the outer tolerance. `breaks(z, d)`
/// may list points where the integrand in coordinate d jumps or kinks,
/// given the outer coordinates z(0..d-1).
template <class G, class B = NoBreakpoints>
IntegrationResult gaussian_expectation_adaptive(G&& g, std::size_t dim, const AdaptiveOptions& options = {},
                                                B&& breaks = {})
{
    if (dim < 1 || dim > 3) {
        throw DimensionTooLarge(dim, 3);
    }
    Vector z(static_cast<Eigen::Index>(dim));
    std::size_t evaluations = 0;
    bool all_converged = true;
    auto level = [&](auto& self, std::size_t d, const AdaptiveOptions& opt) -> IntegrationResult {
        auto integrand = [&](double x) -> double {
            z(static_cast<Eigen::Index>(d)) = x;
            const double density = standard_normal_pdf(x);
            if (d + 1 == dim) {
                ++evaluations;
                return density * g(static_cast<const Vector&>(z));
            }
            AdaptiveOptions inner = opt;
            inner.abs_tol *= 0.1;
            inner.rel_tol *= 0.1;
            const IntegrationResult r = self(self, d + 1, inner);
            all_converged = all_converged && r.converged;
            return density * r.value;
        };
        const std::vector<double> cuts = breaks(static_cast<const Vector&>(z), d);
        return integrate_adaptive(integrand, -kGaussianHalfWidth, kGaussianHalfWidth, opt, cuts);
    };
    IntegrationResult r = level(level, 0, options);
    r.evaluations = evaluations;
    r.converged = r.converged && all_converged;
    return r;
}

} // namespace edf
