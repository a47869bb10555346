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

// Command-line front end: flag parsing into a RunConfig, validation, and the
// five commands. Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "edf/engine.hpp"
#include "edf/errors.hpp"
#include "edf/experiments.hpp"
#include "edf/fitters.hpp"
#include "edf/io.hpp"
#include "edf/oracles.hpp"
#include "edf/version.hpp"

namespace edf::cli {

enum class Command { Estimate, Heatmap, SubsetCurve, Scaling, Divergence };

inline const char* to_string(Command c) noexcept
{
    switch (c) {
    case Command::Estimate: return "estimate";
    case Command::Heatmap: return "heatmap";
    case Command::SubsetCurve: return "subset-curve";
    case Command::Scaling: return "scaling";
    case Command::Divergence: return "divergence";
    }
    return "unknown";
}

enum class Format { Csv, Json };

struct RunConfig {
    Command command = Command::Estimate;
    std::uint64_t seed = 1;
    std::size_t replicates = 100000;
    unsigned workers = 0;
    std::string out_path;
    Format format = Format::Csv;
    bool no_timestamp = false;
    EstimatorChoice estimator = EstimatorChoice::Covariance;
    NoiseLaw noise = NoiseLaw::StandardGaussian;

    // estimate / divergence
    std::optional<std::vector<double>> mu;
    double sigma = 1.0;
    std::string fitter = "ols";
    std::optional<std::size_t> k;
    std::optional<std::string> design;
    std::string oracle = "auto";

    // heatmap
    double grid_lo = -5.0;
    double grid_hi = 5.0;
    double grid_step = 0.25;
    std::vector<std::pair<double, double>> pixels;
    std::optional<std::string> svg_path;

    // subset-curve
    SubsetPathFitter::Method method = SubsetPathFitter::Method::BestSubset;
    std::optional<std::uint64_t> design_seed;
    bool search = false;
    std::size_t search_replicates = 5000;
    std::size_t max_seeds = 20;
    double mean_sd = 7.0;

    // scaling / divergence
    std::vector<double> a_values{100.0, 1000.0, 10000.0};
    std::vector<double> sigma_values{1.0, 0.1, 0.01};
    std::string points = "-1;1";
};

/// Parse or validation failure; `status` is the process exit code (0 for --help).
class UsageError : public Error {
public:
    UsageError(const std::string& message, int status) : Error(message), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

namespace detail {

inline std::vector<std::pair<double, double>> parse_pixels(const std::string& text)
{
    std::vector<std::pair<double, double>> pixels;
    for (const auto& item : edf::detail::split(text, ';')) {
        const std::vector<double> xy = parse_number_list(item);
        if (xy.size() != 2) {
            throw InvalidArgument("--pixels entries are 'mu1,mu2' separated by ';'");
        }
        pixels.emplace_back(xy[0], xy[1]);
    }
    return pixels;
}

inline std::size_t replicate_default(Command c)
{
    return c == Command::Heatmap ? 20000 : 100000;
}

} // namespace detail

/// Parses argv (argv[0] is the program name). Throws UsageError.
inline RunConfig parse_cli(const std::vector<std::string>& args)
{
    RunConfig cfg;
    CLI::App app{"Monte Carlo effective degrees of freedom", "edf"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    std::optional<std::size_t> replicates;
    std::string format = "csv";
    std::string estimator = "cov";
    std::string noise = "gaussian";
    std::string mu_text;
    std::string grid_range;
    std::string pixels_text;
    std::string a_text;
    std::string sigma_values_text;
    std::string method = "bsr";

    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "base seed")->capture_default_str();
        sub->add_option("--replicates", replicates, "Monte Carlo replicates per point");
        sub->add_option("--workers", cfg.workers, "worker threads (0 = all cores)")->capture_default_str();
        sub->add_option("--out", cfg.out_path, "output file (default: standard output)");
        sub->add_option("--format", format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}))
            ->capture_default_str();
        sub->add_flag("--no-timestamp", cfg.no_timestamp, "omit timestamp and zero wallclock for byte-stable output");
        sub->add_option("--estimator", estimator, "cov, opt or both")
            ->check(CLI::IsMember({"cov", "opt", "both"}))
            ->capture_default_str();
    };

    CLI::App* estimate = app.add_subcommand("estimate", "DF of one fitter at one mean");
    common(estimate);
    estimate->add_option("--fitter", cfg.fitter, "ols | ridge:lambda=L | bsr:k=K | fsr:k=K | axis:k=K | points:at=..")
        ->capture_default_str();
    estimate->add_option("--mu", mu_text, "mean vector, comma separated");
    estimate->add_option("--sigma", cfg.sigma, "noise scale")->capture_default_str();
    estimate->add_option("--k", cfg.k, "subset size when the fitter spec has none");
    estimate->add_option("--design", cfg.design, "gaussian:n=N,p=P,seed=S or a CSV path");
    estimate->add_option("--noise", noise, "gaussian, uniform or rademacher")
        ->check(CLI::IsMember({"gaussian", "uniform", "rademacher"}));
    estimate->add_option("--oracle", cfg.oracle, "auto, quadrature or none")
        ->check(CLI::IsMember({"auto", "quadrature", "none"}))
        ->capture_default_str();

    CLI::App* heatmap = app.add_subcommand("heatmap", "DF of the one-of-two-coordinates fitter over a grid of means");
    common(heatmap);
    heatmap->add_option("--grid-range", grid_range, "lo,hi (both axes)");
    heatmap->add_option("--grid-step", cfg.grid_step, "grid spacing")->capture_default_str();
    heatmap->add_option("--pixels", pixels_text, "explicit pixels 'mu1,mu2;mu1,mu2;...'");
    heatmap->add_option("--svg", cfg.svg_path, "also render the grid as SVG");
    heatmap->add_option("--oracle", cfg.oracle, "quadrature or none")->check(CLI::IsMember({"auto", "quadrature", "none"}));

    CLI::App* curve = app.add_subcommand("subset-curve", "DF versus subset size");
    common(curve);
    curve->add_option("--design", cfg.design, "gaussian:n=N,p=P,seed=S or a CSV path");
    curve->add_option("--design-seed", cfg.design_seed, "seed of the generated design");
    curve->add_option("--method", method, "bsr or fsr")->check(CLI::IsMember({"bsr", "fsr"}))->capture_default_str();
    curve->add_option("--k", cfg.k, "largest subset size");
    curve->add_option("--sigma", cfg.sigma, "noise scale")->capture_default_str();
    curve->add_option("--mean-sd", cfg.mean_sd, "standard deviation of the standardized mean")->capture_default_str();
    curve->add_flag("--search", cfg.search, "scan design seeds until DF exceeds the full model");
    curve->add_option("--search-replicates", cfg.search_replicates, "replicates per screened seed")
        ->capture_default_str();
    curve->add_option("--max-seeds", cfg.max_seeds, "design seeds to scan")->capture_default_str();

    CLI::App* scaling = app.add_subcommand("scaling", "DF at mean (A, A) for growing A");
    common(scaling);
    scaling->add_option("--A-values", a_text, "comma separated A values");
    scaling->add_option("--oracle", cfg.oracle, "quadrature or none")->check(CLI::IsMember({"auto", "quadrature", "none"}));

    CLI::App* divergence = app.add_subcommand("divergence", "nearest-point fitting as sigma shrinks");
    common(divergence);
    divergence->add_option("--sigma-values", sigma_values_text, "comma separated, descending");
    divergence->add_option("--points", cfg.points, "points separated by ';', coordinates by '/'")
        ->capture_default_str();
    divergence->add_option("--mu", mu_text, "mean vector, comma separated");
    divergence->add_option("--oracle", cfg.oracle, "auto, quadrature or none")
        ->check(CLI::IsMember({"auto", "quadrature", "none"}));

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        throw UsageError(app.help(), 0);
    } catch (const CLI::CallForAllHelp&) {
        throw UsageError(app.help("", CLI::AppFormatMode::All), 0);
    } catch (const CLI::CallForVersion&) {
        throw UsageError(std::string(kVersion) + "\n", 0);
    } catch (const CLI::ParseError& e) {
        std::string help;
        for (CLI::App* sub : app.get_subcommands()) {
            help = "\nRun 'edf " + sub->get_name() + " --help' for usage.";
        }
        throw UsageError(std::string("error: ") + e.what() + help + "\n", 2);
    }

    const CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    cfg.command = name == "estimate"     ? Command::Estimate
                  : name == "heatmap"    ? Command::Heatmap
                  : name == "subset-curve" ? Command::SubsetCurve
                  : name == "scaling"    ? Command::Scaling
                                         : Command::Divergence;
    if (cfg.command == Command::Scaling && chosen->count("--oracle") == 0) {
        cfg.oracle = "quadrature";
    }
    if (cfg.command == Command::Heatmap && chosen->count("--oracle") == 0) {
        cfg.oracle = "none";
    }

    try {
        cfg.replicates = replicates.value_or(detail::replicate_default(cfg.command));
        if (cfg.replicates < 2) {
            throw InvalidArgument("--replicates must be at least 2");
        }
        cfg.format = format == "json" ? Format::Json : Format::Csv;
        cfg.estimator = estimator == "opt"    ? EstimatorChoice::Optimism
                        : estimator == "both" ? EstimatorChoice::Both
                                              : EstimatorChoice::Covariance;
        cfg.noise = noise == "uniform"      ? NoiseLaw::Uniform
                    : noise == "rademacher" ? NoiseLaw::Rademacher
                                            : NoiseLaw::StandardGaussian;
        cfg.method = method == "fsr" ? SubsetPathFitter::Method::ForwardStepwise : SubsetPathFitter::Method::BestSubset;
        if (!mu_text.empty()) {
            cfg.mu = parse_number_list(mu_text);
        }
        if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) {
            throw InvalidArgument("--sigma must be positive");
        }
        if (!grid_range.empty()) {
            const std::vector<double> range = parse_number_list(grid_range);
            if (range.size() != 2) {
                throw InvalidArgument("--grid-range takes lo,hi");
            }
            cfg.grid_lo = range[0];
            cfg.grid_hi = range[1];
        }
        if (cfg.command == Command::Heatmap) {
            grid_axis(cfg.grid_lo, cfg.grid_hi, cfg.grid_step);
            if (cfg.oracle == "auto") {
                cfg.oracle = "none";
            }
        }
        if (!pixels_text.empty()) {
            cfg.pixels = detail::parse_pixels(pixels_text);
        }
        if (!a_text.empty()) {
            cfg.a_values = parse_number_list(a_text);
        }
        for (double a : cfg.a_values) {
            if (!std::isfinite(a) || a < 0.0) {
                throw InvalidArgument("--A-values must be finite and nonnegative");
            }
        }
        if (!sigma_values_text.empty()) {
            cfg.sigma_values = parse_number_list(sigma_values_text);
        }
        for (double s : cfg.sigma_values) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw InvalidArgument("--sigma-values must be positive");
            }
        }
        if (cfg.command == Command::Estimate) {
            parse_fitter_spec(cfg.fitter);
        }
        if (cfg.search && cfg.max_seeds < 1) {
            throw InvalidArgument("--max-seeds must be at least 1");
        }
        if (cfg.search_replicates < 2) {
            throw InvalidArgument("--search-replicates must be at least 2");
        }
    } catch (const InvalidArgument& e) {
        throw UsageError(std::string("error: ") + e.what() + "\n", 2);
    }
    return cfg;
}

namespace detail {

struct Prepared {
    DataModel model;
    Fitter fitter;
};

/// Design and mean for estimate: explicit --mu, or the standardized X beta
/// (sd 7) when a design is given without one.
inline Prepared prepare_estimate(const RunConfig& cfg)
{
    const FitterSpec spec = parse_fitter_spec(cfg.fitter);
    std::optional<DesignMatrix> design;
    if (cfg.design) {
        design = load_design(*cfg.design);
    }
    std::optional<std::vector<Vector>> points;
    if (spec.kind == "points") {
        points = load_points(spec);
    }
    Vector mu;
    if (cfg.mu) {
        mu = Eigen::Map<const Vector>(cfg.mu->data(), static_cast<Eigen::Index>(cfg.mu->size()));
    } else if (design) {
        mu = standardized_mean(*design, 7.0);
    } else if (points) {
        mu = Vector::Zero(points->front().size());
    } else {
        throw InvalidArgument("--mu is required without --design");
    }
    const auto n = static_cast<std::size_t>(mu.size());
    if (design && design->rows() != n) {
        throw InvalidArgument("--mu has " + std::to_string(n) + " entries but the design has "
                              + std::to_string(design->rows()) + " rows");
    }
    const std::size_t k = spec.has("k") ? spec.count("k") : cfg.k.value_or(1);
    const DesignMatrix x = design ? *design : DesignMatrix::identity(n);
    std::optional<Fitter> fitter;
    if (spec.kind == "ols") {
        fitter = Fitter::ols(x);
    } else if (spec.kind == "ridge") {
        fitter = Fitter::ridge(x, spec.has("lambda") ? spec.number("lambda") : 1.0);
    } else if (spec.kind == "bsr") {
        fitter = design ? Fitter::best_subset(x, k) : Fitter::axis_subset(n, k);
    } else if (spec.kind == "fsr") {
        fitter = Fitter::forward_stepwise(x, k);
    } else if (spec.kind == "axis") {
        fitter = Fitter::axis_subset(n, k);
    } else {
        fitter = Fitter::point_set(*points);
    }
    return {DataModel(mu, cfg.sigma, cfg.noise), std::move(*fitter)};
}

inline std::optional<double> estimate_oracle(const RunConfig& cfg, const Prepared& p)
{
    if (cfg.oracle == "none") {
        return std::nullopt;
    }
    if (cfg.oracle == "quadrature") {
        return df_quadrature(p.model, p.fitter).value;
    }
    if (p.fitter.is_linear()) {
        return df_trace_linear(p.fitter);
    }
    if (p.fitter.kind() == FitterKind::PointSet && p.fitter.points().size() == 2 && p.fitter.dimension() == 1
        && p.model.noise() == NoiseLaw::StandardGaussian) {
        const double a = p.fitter.points()[0](0);
        const double b = p.fitter.points()[1](0);
        return two_point_df(std::min(a, b), std::max(a, b), p.model.mu()(0), p.model.sigma());
    }
    return std::nullopt;
}

inline std::string join(const std::vector<double>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? "," : "") + format_number(values[i]);
    }
    return out;
}

struct GaussianSource {
    std::size_t n = 50;
    std::size_t p = 15;
    std::uint64_t seed = 1;
};

/// n, p and seed of a `gaussian:` design source; nullopt for a file.
inline std::optional<GaussianSource> gaussian_source(const std::optional<std::string>& design)
{
    GaussianSource source;
    if (!design) {
        return source;
    }
    constexpr std::string_view prefix = "gaussian:";
    if (design->rfind(prefix, 0) != 0) {
        return std::nullopt;
    }
    for (const auto& item : edf::detail::split(std::string_view(*design).substr(prefix.size()), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("design parameter '" + item + "' is not key=value");
        }
        const std::string key = edf::detail::trim(std::string_view(item).substr(0, eq));
        const double v = edf::detail::parse_double(item.substr(eq + 1), key);
        if (v < 0 || v != std::floor(v)) {
            throw InvalidArgument("design parameter " + key + " must be a nonnegative integer");
        }
        if (key == "n") {
            source.n = static_cast<std::size_t>(v);
        } else if (key == "p") {
            source.p = static_cast<std::size_t>(v);
        } else if (key == "seed") {
            source.seed = static_cast<std::uint64_t>(v);
        } else {
            throw InvalidArgument("gaussian design has no parameter '" + key + "'");
        }
    }
    return source;
}

} // namespace detail

/// Runs the configured command and returns its rows plus metadata.
inline std::pair<std::vector<ExperimentRow>, RunMetadata> execute(const RunConfig& cfg)
{
    RunMetadata meta;
    meta.command = to_string(cfg.command);
    meta.seed = cfg.seed;
    meta.replicates = cfg.replicates;
    meta.version = kVersion;
    if (!cfg.no_timestamp) {
        meta.timestamp = iso8601_now();
    }
    const char* estimator = cfg.estimator == EstimatorChoice::Both       ? "both"
                            : cfg.estimator == EstimatorChoice::Optimism ? "opt"
                                                                         : "cov";
    meta.parameters.emplace_back("estimator", estimator);
    std::vector<ExperimentRow> rows;

    switch (cfg.command) {
    case Command::Estimate: {
        const auto start = std::chrono::steady_clock::now();
        const detail::Prepared p = detail::prepare_estimate(cfg);
        const McOptions options{cfg.replicates, cfg.seed, cfg.workers};
        ExperimentRow row;
        row.point = {{"n", static_cast<double>(p.model.dimension())}, {"sigma", p.model.sigma()}};
        if (cfg.estimator == EstimatorChoice::Both) {
            auto [cov, opt] = estimate_df_both(p.model, p.fitter, options);
            row.df = cov;
            row.df_opt = opt;
        } else {
            row.df = estimate_df(p.model, p.fitter, options,
                                 cfg.estimator == EstimatorChoice::Optimism ? Estimator::Optimism
                                                                            : Estimator::Covariance);
        }
        row.oracle = detail::estimate_oracle(cfg, p);
        row.wallclock = edf::detail::seconds_since(start);
        rows.push_back(std::move(row));
        meta.parameters.emplace_back("fitter", p.fitter.describe());
        meta.parameters.emplace_back("noise", to_string(cfg.noise));
        if (cfg.design) meta.parameters.emplace_back("design", *cfg.design);
        if (cfg.mu) meta.parameters.emplace_back("mu", detail::join(*cfg.mu));
        meta.parameters.emplace_back("oracle", cfg.oracle);
        break;
    }
    case Command::Heatmap: {
        HeatmapOptions h;
        h.lo = cfg.grid_lo;
        h.hi = cfg.grid_hi;
        h.step = cfg.grid_step;
        h.replicates = cfg.replicates;
        h.seed = cfg.seed;
        h.workers = cfg.workers;
        h.estimator = cfg.estimator;
        h.pixels = cfg.pixels;
        h.quadrature_oracle = cfg.oracle == "quadrature";
        rows = run_heatmap(h);
        meta.parameters.emplace_back("grid_range", format_number(cfg.grid_lo) + "," + format_number(cfg.grid_hi));
        meta.parameters.emplace_back("grid_step", format_number(cfg.grid_step));
        meta.parameters.emplace_back("pixels", cfg.pixels.empty() ? "grid" : "list");
        meta.parameters.emplace_back("oracle", cfg.oracle);
        break;
    }
    case Command::SubsetCurve: {
        SubsetCurveOptions s;
        const auto source = detail::gaussian_source(cfg.design);
        if (source) {
            s.n = source->n;
            s.p = source->p;
            s.design_seed = cfg.design_seed.value_or(source->seed);
        } else {
            s.design = load_design(*cfg.design);
        }
        s.mean_sd = cfg.mean_sd;
        s.sigma = cfg.sigma;
        s.method = cfg.method;
        s.max_size = cfg.k;
        s.replicates = cfg.replicates;
        s.seed = cfg.seed;
        s.workers = cfg.workers;
        s.search = cfg.search;
        s.search_replicates = cfg.search_replicates;
        s.max_seeds = cfg.max_seeds;
        SubsetCurveResult result = run_subset_curve(s);
        rows = std::move(result.rows);
        meta.parameters.emplace_back("method", cfg.method == SubsetPathFitter::Method::BestSubset ? "bsr" : "fsr");
        meta.parameters.emplace_back("design", cfg.design.value_or("gaussian:n=50,p=15"));
        meta.parameters.emplace_back("design_seed", std::to_string(result.design_seed));
        meta.parameters.emplace_back("seeds_tried", std::to_string(result.seeds_tried));
        meta.parameters.emplace_back("exceeds_full_model", result.exceeds_full_model ? "true" : "false");
        break;
    }
    case Command::Scaling: {
        ScalingOptions s;
        s.a_values = cfg.a_values;
        s.replicates = cfg.replicates;
        s.seed = cfg.seed;
        s.workers = cfg.workers;
        s.estimator = cfg.estimator;
        s.quadrature_oracle = cfg.oracle != "none";
        rows = run_scaling(s);
        meta.parameters.emplace_back("A_values", detail::join(cfg.a_values));
        meta.parameters.emplace_back("oracle", s.quadrature_oracle ? "quadrature" : "none");
        break;
    }
    case Command::Divergence: {
        DivergenceOptions d;
        d.sigma_values = cfg.sigma_values;
        FitterSpec spec;
        spec.kind = "points";
        spec.params["at"] = cfg.points;
        d.points = load_points(spec);
        if (cfg.mu) {
            d.mu = Eigen::Map<const Vector>(cfg.mu->data(), static_cast<Eigen::Index>(cfg.mu->size()));
        }
        d.replicates = cfg.replicates;
        d.seed = cfg.seed;
        d.workers = cfg.workers;
        d.estimator = cfg.estimator;
        d.quadrature_oracle = cfg.oracle == "quadrature";
        rows = run_divergence(d);
        meta.parameters.emplace_back("sigma_values", detail::join(cfg.sigma_values));
        meta.parameters.emplace_back("points", cfg.points);
        if (cfg.oracle == "none") {
            for (ExperimentRow& row : rows) row.oracle.reset();
        }
        break;
    }
    }
    return {std::move(rows), std::move(meta)};
}

/// Full CLI: parse, validate, run, write. Messages go to `err`; table output
/// goes to `out` when no --out path is given.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    RunConfig cfg;
    try {
        cfg = parse_cli(args);
    } catch (const UsageError& e) {
        (e.status() == 0 ? out : err) << e.what();
        return e.status();
    }
    try {
        auto [rows, meta] = execute(cfg);
        const Table table = to_table(rows, cfg.no_timestamp);
        const std::string text = cfg.format == Format::Json ? to_json(table, meta) : to_csv(table);
        std::optional<std::string> svg;
        if (cfg.svg_path) {
            svg = render_heatmap_svg(rows);
        }
        if (cfg.out_path.empty()) {
            out << text;
        } else {
            write_file_atomic(cfg.out_path, text);
        }
        if (svg) {
            write_file_atomic(*cfg.svg_path, *svg);
        }
        return 0;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace edf::cli
