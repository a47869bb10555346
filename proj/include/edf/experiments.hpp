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

// Parameter sweeps: heatmap over the mean, DF versus subset size, growth
// along the diagonal, and the small-noise two-point sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edf/engine.hpp"
#include "edf/errors.hpp"
#include "edf/fitters.hpp"
#include "edf/oracles.hpp"
#include "edf/random.hpp"

namespace edf {

enum class ExperimentKind { Heatmap, SubsetCurve, Scaling, Divergence, Custom };

inline const char* to_string(ExperimentKind kind) noexcept
{
    switch (kind) {
    case ExperimentKind::Heatmap: return "heatmap";
    case ExperimentKind::SubsetCurve: return "subset-curve";
    case ExperimentKind::Scaling: return "scaling";
    case ExperimentKind::Divergence: return "divergence";
    case ExperimentKind::Custom: return "custom";
    }
    return "unknown";
}

enum class EstimatorChoice { Covariance, Optimism, Both };

using NamedValues = std::vector<std::pair<std::string, double>>;

struct ExperimentRow {
    NamedValues point;
    DfEstimate df;
    // optimism estimate when both estimators ran
    std::optional<DfEstimate> df_opt;
    std::optional<double> oracle;
    // derived per-row quantities (df / A, df * sigma, ...); NaN means absent
    NamedValues extras;
    double wallclock = 0.0;

    std::optional<double> z_vs_oracle() const
    {
        if (!oracle) {
            return std::nullopt;
        }
        const double diff = std::abs(df.value - *oracle);
        if (df.std_error > 0.0) {
            return diff / df.std_error;
        }
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }

    double value(const std::string& name) const
    {
        for (const auto* list : {&point, &extras}) {
            for (const auto& [key, v] : *list) {
                if (key == name) {
                    return v;
                }
            }
        }
        throw InvalidArgument("row has no column '" + name + "'");
    }
};

/// Everything needed to evaluate one sweep point.
struct PointSetup {
    DataModel model;
    Fitter fitter;
    std::optional<double> oracle;
};

struct ExperimentGrid {
    ExperimentKind kind = ExperimentKind::Custom;
    std::vector<NamedValues> sweep;
    std::size_t replicates_per_point = 100000;
    std::uint64_t base_seed = 1;
    EstimatorChoice estimator = EstimatorChoice::Covariance;
    // reuse base_seed at every point instead of deriving (base_seed, index)
    bool common_random_numbers = false;
    unsigned workers = 1;

    std::uint64_t seed_for(std::size_t index) const
    {
        return common_random_numbers ? base_seed : derive_seed(base_seed, index);
    }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline void check_grid(const ExperimentGrid& grid)
{
    if (grid.sweep.empty()) {
        throw InvalidArgument("experiment sweep is empty");
    }
    if (grid.replicates_per_point < 2) {
        throw InvalidArgument("need at least 2 replicates per point");
    }
}

} // namespace detail

/// Evaluates the sweep point by point, in order. Parallelism lives inside
/// each point, so the rows do not depend on the worker count.
inline std::vector<ExperimentRow> run_grid(const ExperimentGrid& grid,
                                           const std::function<PointSetup(std::size_t)>& build)
{
    detail::check_grid(grid);
    std::vector<ExperimentRow> rows;
    rows.reserve(grid.sweep.size());
    for (std::size_t i = 0; i < grid.sweep.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        const PointSetup setup = build(i);
        const McOptions options{grid.replicates_per_point, grid.seed_for(i), grid.workers};
        ExperimentRow row;
        row.point = grid.sweep[i];
        switch (grid.estimator) {
        case EstimatorChoice::Covariance:
            row.df = estimate_df(setup.model, setup.fitter, options);
            break;
        case EstimatorChoice::Optimism:
            row.df = estimate_df(setup.model, setup.fitter, options, Estimator::Optimism);
            break;
        case EstimatorChoice::Both: {
            auto [cov, opt] = estimate_df_both(setup.model, setup.fitter, options);
            row.df = cov;
            row.df_opt = opt;
            break;
        }
        }
        row.oracle = setup.oracle;
        row.wallclock = detail::seconds_since(start);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------- heatmap

struct HeatmapOptions {
    double lo = -5.0;
    double hi = 5.0;
    double step = 0.25;
    std::size_t replicates = 20000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    EstimatorChoice estimator = EstimatorChoice::Covariance;
    // explicit pixel list instead of the full grid
    std::vector<std::pair<double, double>> pixels;
    bool quadrature_oracle = false;
    // fraction of mirrored pixels recomputed directly
    double spot_check_fraction = 0.05;
};

/// Grid coordinates lo, lo + step, ..., up to hi (inclusive within half a step).
inline std::vector<double> grid_axis(double lo, double hi, double step)
{
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw InvalidArgument("grid step must be positive");
    }
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw InvalidArgument("grid range needs finite lo <= hi");
    }
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    if (count > 100000) {
        throw InvalidArgument("grid has too many points per axis");
    }
    std::vector<double> axis(count);
    for (std::size_t i = 0; i < count; ++i) {
        axis[i] = lo + step * static_cast<double>(i);
    }
    return axis;
}

/// DF of the one-of-two-coordinates fitter (sigma = 1) over a grid of means.
/// DF is invariant under coordinate swaps and sign flips, so each pixel takes
/// the value computed at its canonical representative 0 <= a <= b. Rows of
/// pixels that are not their own representative carry mirrored = 1; a sample
/// of them is recomputed at the pixel itself (same noise draws) and the
/// difference stored as symmetry_residual with its tolerance
/// symmetry_bound = 4 sqrt(2) SE.
inline std::vector<ExperimentRow> run_heatmap(const HeatmapOptions& options)
{
    std::vector<std::pair<double, double>> pixels = options.pixels;
    if (pixels.empty()) {
        const std::vector<double> axis = grid_axis(options.lo, options.hi, options.step);
        for (double a : axis) {
            for (double b : axis) {
                pixels.emplace_back(a, b);
            }
        }
    }
    if (options.spot_check_fraction < 0.0 || options.spot_check_fraction > 1.0) {
        throw InvalidArgument("spot-check fraction must lie in [0, 1]");
    }
    const Fitter axis_fitter = Fitter::axis_subset(2, 1);
    const McOptions mc{options.replicates, options.seed, options.workers};
    auto evaluate = [&](double a, double b, ExperimentRow& row) {
        const DataModel model((Vector(2) << a, b).finished(), 1.0);
        switch (options.estimator) {
        case EstimatorChoice::Covariance: row.df = estimate_df(model, axis_fitter, mc); break;
        case EstimatorChoice::Optimism: row.df = estimate_df(model, axis_fitter, mc, Estimator::Optimism); break;
        case EstimatorChoice::Both: {
            auto [cov, opt] = estimate_df_both(model, axis_fitter, mc);
            row.df = cov;
            row.df_opt = opt;
            break;
        }
        }
    };

    std::map<std::pair<double, double>, ExperimentRow> canonical;
    std::vector<ExperimentRow> rows;
    rows.reserve(pixels.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::size_t mirrored_seen = 0;
    const std::size_t stride =
        options.spot_check_fraction > 0.0
            ? static_cast<std::size_t>(std::max(1.0, std::round(1.0 / options.spot_check_fraction)))
            : 0;
    for (const auto& [a, b] : pixels) {
        const auto start = std::chrono::steady_clock::now();
        const double lo = std::min(std::abs(a), std::abs(b));
        const double hi = std::max(std::abs(a), std::abs(b));
        const std::pair<double, double> key{lo, hi};
        auto it = canonical.find(key);
        if (it == canonical.end()) {
            ExperimentRow rep;
            evaluate(lo, hi, rep);
            if (options.quadrature_oracle) {
                rep.oracle = df_heatmap_reference(lo, hi).value;
            }
            it = canonical.emplace(key, std::move(rep)).first;
        }
        ExperimentRow row = it->second;
        row.point = {{"mu1", a}, {"mu2", b}};
        const bool mirrored = !(a == lo && b == hi);
        double residual = nan;
        double bound = nan;
        if (mirrored) {
            if (stride > 0 && mirrored_seen % stride == 0) {
                ExperimentRow direct;
                evaluate(a, b, direct);
                residual = direct.df.value - row.df.value;
                bound = 4.0 * std::sqrt(2.0) * std::max(direct.df.std_error, row.df.std_error);
            }
            ++mirrored_seen;
        }
        row.extras = {{"mirrored", mirrored ? 1.0 : 0.0}, {"symmetry_residual", residual}, {"symmetry_bound", bound}};
        row.wallclock = detail::seconds_since(start);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ----------------------------------------------------------- subset curve

/// X with i.i.d. standard normal entries from the seed's stream, filled
/// column by column.
inline DesignMatrix gaussian_design(std::size_t n, std::size_t p, std::uint64_t seed)
{
    if (n < 1 || p < 1) {
        throw InvalidArgument("gaussian design needs n >= 1 and p >= 1");
    }
    PhiloxStream stream = replicate_stream(seed, 0);
    Vector values(static_cast<Eigen::Index>(n * p));
    draw_noise(NoiseLaw::StandardGaussian, stream, values);
    return DesignMatrix(Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(p)));
}

/// X beta (beta = 1) shifted to mean zero and scaled to sample standard
/// deviation `sd` (n - 1 denominator).
inline Vector standardized_mean(const DesignMatrix& design, double sd)
{
    const Vector raw = design.values() * Vector::Ones(design.cols());
    if (raw.size() < 2) {
        return raw;
    }
    const Vector centred = raw.array() - raw.mean();
    const double current = std::sqrt(centred.squaredNorm() / static_cast<double>(raw.size() - 1));
    if (!(current > 0.0)) {
        throw InvalidArgument("X beta is constant; cannot standardize");
    }
    return centred * (sd / current);
}

struct SubsetCurveOptions {
    std::size_t n = 50;
    std::size_t p = 15;
    std::uint64_t design_seed = 1;
    // loaded design; overrides the generated one (search is then unavailable)
    std::optional<DesignMatrix> design;
    std::optional<Vector> mu;
    double mean_sd = 7.0;
    double sigma = 1.0;
    SubsetPathFitter::Method method = SubsetPathFitter::Method::BestSubset;
    std::optional<std::size_t> max_size;
    std::size_t replicates = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    bool search = false;
    std::size_t search_replicates = 5000;
    std::size_t max_seeds = 20;
};

struct SubsetCurveResult {
    std::vector<ExperimentRow> rows;
    std::uint64_t design_seed = 0;
    std::size_t seeds_tried = 0;
    // some k < p has DF - p > 2 SE in the reported rows
    bool exceeds_full_model = false;
};

/// True when some k below the full size has DF - p > 2 SE.
inline bool curve_exceeds_full_model(const std::vector<DfEstimate>& curve, std::size_t p)
{
    for (std::size_t k = 0; k + 1 < curve.size() && k < p; ++k) {
        if (curve[k].value - static_cast<double>(p) > 2.0 * curve[k].std_error) {
            return true;
        }
    }
    return false;
}

/// DF versus subset size k = 0..p with common noise across k. In search mode
/// design seeds design_seed, design_seed + 1, ... are screened with
/// search_replicates until one shows DF_k - p > 2 SE for some k < p; that
/// design is then re-measured with `replicates` (and must pass again).
inline SubsetCurveResult run_subset_curve(const SubsetCurveOptions& options)
{
    if (options.search && options.design) {
        throw InvalidArgument("search mode needs a generated design");
    }
    if (options.search && options.max_seeds < 1) {
        throw InvalidArgument("search needs at least one design seed");
    }
    auto measure = [&](const DesignMatrix& x, const Vector& mu, std::size_t r, std::uint64_t design_seed) {
        const auto start = std::chrono::steady_clock::now();
        const SubsetPathFitter path(x, options.method, options.max_size);
        const DataModel model(mu, options.sigma);
        const std::vector<DfEstimate> curve = estimate_df_path(model, path, {r, options.seed, options.workers});
        const double elapsed = detail::seconds_since(start) / static_cast<double>(curve.size());
        std::vector<ExperimentRow> rows;
        const auto p = static_cast<double>(x.cols());
        for (std::size_t k = 0; k < curve.size(); ++k) {
            ExperimentRow row;
            row.point = {{"k", static_cast<double>(k)}, {"design_seed", static_cast<double>(design_seed)}};
            row.df = curve[k];
            if (k == 0) {
                row.oracle = 0.0;
            } else if (k == x.cols() && x.full_column_rank()) {
                row.oracle = p;
            }
            row.extras = {{"lower_2se", curve[k].value - 2.0 * curve[k].std_error},
                          {"upper_2se", curve[k].value + 2.0 * curve[k].std_error}};
            row.wallclock = elapsed;
            rows.push_back(std::move(row));
        }
        return std::make_pair(curve, rows);
    };
    auto mean_for = [&](const DesignMatrix& x) {
        if (options.mu) {
            return *options.mu;
        }
        return standardized_mean(x, options.mean_sd);
    };

    SubsetCurveResult result;
    if (!options.search) {
        const DesignMatrix x =
            options.design ? *options.design : gaussian_design(options.n, options.p, options.design_seed);
        auto [curve, rows] = measure(x, mean_for(x), options.replicates, options.design ? 0 : options.design_seed);
        result.rows = std::move(rows);
        result.design_seed = options.design ? 0 : options.design_seed;
        result.seeds_tried = 1;
        result.exceeds_full_model = curve_exceeds_full_model(curve, static_cast<std::size_t>(x.cols()));
        return result;
    }
    for (std::size_t t = 0; t < options.max_seeds; ++t) {
        const std::uint64_t seed = options.design_seed + t;
        const DesignMatrix x = gaussian_design(options.n, options.p, seed);
        const Vector mu = mean_for(x);
        result.seeds_tried = t + 1;
        const auto screen = measure(x, mu, options.search_replicates, seed);
        if (!curve_exceeds_full_model(screen.first, options.p)) {
            continue;
        }
        auto [curve, rows] = measure(x, mu, options.replicates, seed);
        if (curve_exceeds_full_model(curve, options.p)) {
            result.rows = std::move(rows);
            result.design_seed = seed;
            result.exceeds_full_model = true;
            return result;
        }
    }
    throw Error("no design seed in [" + std::to_string(options.design_seed) + ", "
                + std::to_string(options.design_seed + options.max_seeds - 1)
                + "] shows DF above the full model at 2 SE");
}

// ---------------------------------------------------------------- scaling

struct ScalingOptions {
    std::vector<double> a_values{100.0, 1000.0, 10000.0};
    std::size_t replicates = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    EstimatorChoice estimator = EstimatorChoice::Covariance;
    bool quadrature_oracle = true;
};

/// One-of-two-coordinates fitter at mean (A, A), sigma = 1. Rows carry
/// df / A, its standard error and the limit 1 / sqrt(pi).
inline std::vector<ExperimentRow> run_scaling(const ScalingOptions& options)
{
    ExperimentGrid grid;
    grid.kind = ExperimentKind::Scaling;
    grid.replicates_per_point = options.replicates;
    grid.base_seed = options.seed;
    grid.workers = options.workers;
    grid.estimator = options.estimator;
    for (double a : options.a_values) {
        if (!std::isfinite(a) || a < 0.0) {
            throw InvalidArgument("A values must be finite and nonnegative");
        }
        grid.sweep.push_back({{"A", a}});
    }
    std::vector<ExperimentRow> rows = run_grid(grid, [&](std::size_t i) {
        const double a = options.a_values[i];
        std::optional<double> oracle;
        if (options.quadrature_oracle) {
            oracle = df_heatmap_reference(a, a).value;
        }
        return PointSetup{DataModel(Vector::Constant(2, a), 1.0), Fitter::axis_subset(2, 1), oracle};
    });
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (ExperimentRow& row : rows) {
        const double a = row.value("A");
        row.extras = {{"df_over_A", a > 0.0 ? row.df.value / a : nan},
                      {"se_over_A", a > 0.0 ? row.df.std_error / a : nan},
                      {"limit", df_scaling_limit()}};
    }
    return rows;
}

// ------------------------------------------------------------- divergence

struct DivergenceOptions {
    std::vector<double> sigma_values{1.0, 0.1, 0.01};
    std::vector<Vector> points{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
    std::optional<Vector> mu;
    std::size_t replicates = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    EstimatorChoice estimator = EstimatorChoice::Covariance;
    bool quadrature_oracle = false;
};

/// Nearest-point fitting onto a finite set as sigma shrinks. Rows carry
/// df * sigma. The oracle is the closed form for two points on a line, or
/// adaptive quadrature when requested and the dimension allows it.
inline std::vector<ExperimentRow> run_divergence(const DivergenceOptions& options)
{
    const Fitter fitter = Fitter::point_set(options.points);
    const Vector mu = options.mu ? *options.mu : Vector::Zero(static_cast<Eigen::Index>(fitter.dimension()));
    ExperimentGrid grid;
    grid.kind = ExperimentKind::Divergence;
    grid.replicates_per_point = options.replicates;
    grid.base_seed = options.seed;
    grid.workers = options.workers;
    grid.estimator = options.estimator;
    for (double s : options.sigma_values) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw InvalidArgument("sigma values must be positive");
        }
        grid.sweep.push_back({{"sigma", s}});
    }
    const bool two_on_line = options.points.size() == 2 && fitter.dimension() == 1;
    std::vector<ExperimentRow> rows = run_grid(grid, [&](std::size_t i) {
        const double s = options.sigma_values[i];
        const DataModel model(mu, s);
        std::optional<double> oracle;
        if (two_on_line) {
            const double a = std::min(options.points[0](0), options.points[1](0));
            const double b = std::max(options.points[0](0), options.points[1](0));
            oracle = two_point_df(a, b, mu(0), s);
        } else if (options.quadrature_oracle && fitter.dimension() <= kMaxQuadratureDimension) {
            oracle = df_quadrature(model, fitter).value;
        }
        return PointSetup{model, fitter, oracle};
    });
    for (ExperimentRow& row : rows) {
        const double s = row.value("sigma");
        row.extras = {{"df_times_sigma", row.df.value * s}, {"se_times_sigma", row.df.std_error * s}};
    }
    return rows;
}

} // namespace edf
