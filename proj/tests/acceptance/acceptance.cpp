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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Every command goes through the CLI entry point with --no-timestamp and is
// repeated with --workers 1, 4 and 8; the workers=1 output is the one checked.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../fitter_properties.hpp"
#include "edf/cli.hpp"

namespace {

namespace fs = std::filesystem;
using edf::Table;

const fs::path kOutDir = fs::current_path() / "acceptance_out";
const double kInvSqrtPi = 1.0 / std::sqrt(std::numbers::pi);

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
        }
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "NOT ") + what;
    }
};

std::string fmt(double v, int digits = 4)
{
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*g", digits, v);
    return buffer;
}

std::vector<std::string> determinism_failures;
std::size_t determinism_runs = 0;

// Runs `args` for workers 1, 4, 8 and returns the workers=1 table.
Table run(const std::string& tag, std::vector<std::string> args, bool svg = false)
{
    std::vector<std::string> texts;
    for (const char* workers : {"1", "4", "8"}) {
        const fs::path out = kOutDir / (tag + "_w" + workers + ".csv");
        const fs::path picture = kOutDir / (tag + "_w" + workers + ".svg");
        std::vector<std::string> argv{"edf"};
        argv.insert(argv.end(), args.begin(), args.end());
        argv.insert(argv.end(), {"--no-timestamp", "--workers", workers, "--out", out.string()});
        if (svg) {
            argv.insert(argv.end(), {"--svg", picture.string()});
        }
        std::ostringstream sink;
        std::ostringstream err;
        const int status = edf::cli::run(argv, sink, err);
        if (status != 0) {
            throw edf::Error(tag + ": edf exited with " + std::to_string(status) + ": " + err.str());
        }
        texts.push_back(edf::detail::read_file(out));
        if (svg) {
            texts.back() += edf::detail::read_file(picture);
        }
    }
    ++determinism_runs;
    if (texts[1] != texts[0] || texts[2] != texts[0]) {
        determinism_failures.push_back(tag);
    }
    return edf::parse_csv(texts[0].substr(0, texts[0].find("<?xml")));
}

double cell(const Table& t, std::size_t row, const std::string& column)
{
    const auto v = t.at(row, column);
    if (!v) {
        throw edf::Error("missing " + column + " in row " + std::to_string(row));
    }
    return *v;
}

std::size_t find_row(const Table& t, const std::vector<std::pair<std::string, double>>& key)
{
    for (std::size_t r = 0; r < t.cells.size(); ++r) {
        bool match = true;
        for (const auto& [column, value] : key) {
            match = match && t.at(r, column) == value;
        }
        if (match) return r;
    }
    throw edf::Error("row not found");
}

Verdict ols_anchor()
{
    Verdict v;
    const Table t = run("c1_ols", {"estimate", "--fitter", "ols", "--design", "gaussian:n=50,p=15,seed=1",
                                   "--replicates", "100000", "--seed", "1"});
    const double df = cell(t, 0, "df");
    const double se = cell(t, 0, "se");
    v.require(std::abs(df - 15.0) <= 4.0 * se, "DF " + fmt(df, 6) + " within 4 SE (" + fmt(se, 3) + ") of 15");
    return v;
}

Table scaling_table()
{
    static const Table t = run("c2_scaling", {"scaling", "--A-values", "100,1000,10000", "--replicates", "100000",
                                              "--seed", "2013"});
    return t;
}

Verdict unbounded_example()
{
    Verdict v;
    const Table t = scaling_table();
    const std::size_t r = find_row(t, {{"A", 10000.0}});
    const double df = cell(t, r, "df");
    const double se = cell(t, r, "se");
    v.require(std::abs(df / 1e4 - kInvSqrtPi) <= 4.0 * se / 1e4,
              "DF/A " + fmt(df / 1e4, 5) + " within 4 SE/A (" + fmt(se / 1e4, 2) + ") of 1/sqrt(pi)");
    v.require(df >= 5500.0 && df <= 5760.0, "DF " + fmt(df, 5) + " in [5500, 5760]");
    return v;
}

Verdict scaling_convergence()
{
    Verdict v;
    const Table t = scaling_table();
    std::vector<double> err;
    std::vector<double> tol;
    for (double a : {100.0, 1000.0, 10000.0}) {
        const std::size_t r = find_row(t, {{"A", a}});
        err.push_back(std::abs(cell(t, r, "df") / a - kInvSqrtPi));
        tol.push_back(2.0 * cell(t, r, "se") / a);
    }
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        v.require(err[i + 1] < err[i] + tol[i + 1],
                  "|e" + std::to_string(i + 1) + "| " + fmt(err[i + 1], 3) + " < |e" + std::to_string(i) + "| "
                      + fmt(err[i], 3) + " + 2 SE/A " + fmt(tol[i + 1], 3));
    }
    return v;
}

Verdict heatmap_claims()
{
    Verdict v;
    const Table grid = run("c4_heatmap", {"heatmap", "--seed", "4"}, true);
    std::size_t below = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < grid.cells.size(); ++r) {
        const double margin = (cell(grid, r, "df") - 1.0) / std::max(cell(grid, r, "se"), 1e-300);
        worst = std::min(worst, margin);
        if (cell(grid, r, "df") < 1.0 - 4.0 * cell(grid, r, "se")) ++below;
    }
    v.require(grid.cells.size() == 41 * 41 && below == 0,
              std::to_string(grid.cells.size()) + " pixels, " + std::to_string(below)
                  + " below 1 - 4 SE (min z " + fmt(worst, 3) + ")");

    const Table px = run("c4_pixels", {"heatmap", "--seed", "4", "--pixels", "0,0;0,5;5,5", "--oracle", "quadrature"});
    const std::size_t edge = find_row(px, {{"mu1", 0.0}, {"mu2", 5.0}});
    const double df05 = cell(px, edge, "df");
    const double se05 = cell(px, edge, "se");
    const double or05 = cell(px, edge, "oracle");
    v.require(std::abs(df05 - or05) <= 4.0 * se05 && df05 <= 1.3,
              "(0,5) DF " + fmt(df05) + " vs oracle " + fmt(or05) + " (SE " + fmt(se05, 2) + "), <= 1.3");
    const std::size_t corner = find_row(px, {{"mu1", 5.0}, {"mu2", 5.0}});
    const double df55 = cell(px, corner, "df");
    const double se55 = cell(px, corner, "se");
    const double or55 = cell(px, corner, "oracle");
    v.require(df55 - 2.0 >= 4.0 * se55 && std::abs(df55 - or55) <= 4.0 * se55,
              "(5,5) DF " + fmt(df55) + " vs oracle " + fmt(or55) + " (SE " + fmt(se55, 2) + "), > 2 by 4 SE");
    return v;
}

Verdict divergence()
{
    Verdict v;
    const Table t = run("c5_divergence", {"divergence", "--sigma-values", "1,0.1,0.01", "--points", "-1;1", "--mu", "0",
                                          "--replicates", "100000", "--seed", "5"});
    std::vector<double> scaled;
    std::vector<double> scaled_se;
    for (double sigma : {1.0, 0.1, 0.01}) {
        const std::size_t r = find_row(t, {{"sigma", sigma}});
        const double df = cell(t, r, "df");
        const double se = cell(t, r, "se");
        const double target = std::sqrt(2.0 / std::numbers::pi) / sigma;
        v.require(std::abs(df - target) <= 4.0 * se,
                  "sigma " + fmt(sigma) + ": DF " + fmt(df, 6) + " vs " + fmt(target, 6) + " (SE " + fmt(se, 2) + ")");
        scaled.push_back(df * sigma);
        scaled_se.push_back(se * sigma);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        for (std::size_t j = i + 1; j < scaled.size(); ++j) {
            const double combined = std::hypot(scaled_se[i], scaled_se[j]);
            worst = std::max(worst, std::abs(scaled[i] - scaled[j]) / combined);
        }
    }
    v.require(worst <= 4.0, "DF*sigma flat (max pairwise z " + fmt(worst, 3) + ")");
    return v;
}

Verdict estimator_agreement()
{
    Verdict v;
    const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
        {"OLS", {"--fitter", "ols", "--design", "gaussian:n=10,p=4,seed=6"}},
        {"Ridge(1)", {"--fitter", "ridge:lambda=1", "--design", "gaussian:n=10,p=4,seed=6"}},
        {"BSR1-identity", {"--fitter", "bsr:k=1", "--mu", "1,0.5"}},
        {"FSR2", {"--fitter", "fsr:k=2", "--design", "gaussian:n=10,p=4,seed=6"}},
        {"PointSet", {"--fitter", "points:at=-1;1", "--mu", "0.3"}},
    };
    for (const auto& [name, extra] : cases) {
        std::vector<std::string> args{"estimate", "--estimator", "both", "--replicates", "100000", "--seed", "6"};
        args.insert(args.end(), extra.begin(), extra.end());
        const Table t = run("c6_" + name.substr(0, name.find('(')), args);
        const double cov = cell(t, 0, "df");
        const double opt = cell(t, 0, "df_opt");
        const double combined = std::hypot(cell(t, 0, "se"), cell(t, 0, "se_opt"));
        v.require(std::abs(cov - opt) <= 4.0 * combined,
                  name + " " + fmt(cov) + " vs " + fmt(opt) + " (z " + fmt(std::abs(cov - opt) / combined, 2) + ")");
    }
    return v;
}

// tr(X (X'X + lambda I)^-1 X'), computed directly
double hat_trace(const edf::Matrix& x, double lambda)
{
    const edf::Matrix gram = x.transpose() * x + lambda * edf::Matrix::Identity(x.cols(), x.cols());
    return (x * gram.inverse() * x.transpose()).trace();
}

Verdict oracle_stack()
{
    Verdict v;
    const fs::path d22 = kOutDir / "design_2x2.csv";
    const fs::path d21 = kOutDir / "design_2x1.csv";
    const fs::path d11 = kOutDir / "design_1x1.csv";
    edf::write_file_atomic(d22, "1,0.5\n-0.3,2\n");
    edf::write_file_atomic(d21, "1\n2\n");
    edf::write_file_atomic(d11, "1.5\n");
    edf::Matrix x22(2, 2);
    x22 << 1, 0.5, -0.3, 2;
    edf::Matrix x21(2, 1);
    x21 << 1, 2;
    edf::Matrix x11(1, 1);
    x11 << 1.5;

    struct Case {
        std::string tag;
        std::vector<std::string> args;
        double exact;
    };
    const std::vector<Case> cases{
        {"ols_2x2", {"--fitter", "ols", "--design", d22.string(), "--mu", "0.5,-1"}, hat_trace(x22, 0.0)},
        {"ols_2x1", {"--fitter", "ols", "--design", d21.string(), "--mu", "0.5,-1"}, hat_trace(x21, 0.0)},
        {"ridge_2x2", {"--fitter", "ridge:lambda=1", "--design", d22.string(), "--mu", "0.5,-1"}, hat_trace(x22, 1.0)},
        {"ridge_2x1", {"--fitter", "ridge:lambda=2", "--design", d21.string(), "--mu", "1,1"}, hat_trace(x21, 2.0)},
        {"ridge_1x1", {"--fitter", "ridge:lambda=0.5", "--design", d11.string(), "--mu", "0.2"}, hat_trace(x11, 0.5)},
        {"ols_gauss_2x2", {"--fitter", "ols", "--design", "gaussian:n=2,p=2,seed=7", "--mu", "3,-2", "--sigma", "0.5"},
         2.0},
        // two points a < b on a line: DF = (b - a) / sigma * phi(((a + b) / 2 - mu) / sigma)
        {"two_point", {"--fitter", "points:at=-1;1", "--mu", "0.3"},
         2.0 * std::exp(-0.5 * 0.3 * 0.3) / std::sqrt(2.0 * std::numbers::pi)},
    };
    for (const auto& c : cases) {
        std::vector<std::string> args{"estimate", "--oracle", "quadrature", "--replicates", "10000000", "--seed", "7"};
        args.insert(args.end(), c.args.begin(), c.args.end());
        const Table t = run("c7_" + c.tag, args);
        const double quad = cell(t, 0, "oracle");
        const double df = cell(t, 0, "df");
        const double se = cell(t, 0, "se");
        v.require(std::abs(quad - c.exact) <= 1e-6 && std::abs(df - c.exact) <= 4.0 * se,
                  c.tag + " exact " + fmt(c.exact, 8) + " quad diff " + fmt(std::abs(quad - c.exact), 2) + " MC z "
                      + fmt(std::abs(df - c.exact) / se, 2));
    }
    return v;
}

Verdict non_monotone()
{
    Verdict v;
    const Table t = run("c8_subset_curve", {"subset-curve", "--search", "--max-seeds", "20", "--replicates", "100000",
                                            "--seed", "8"});
    const double p = 15.0;
    double best_gap = -std::numeric_limits<double>::infinity();
    double best_k = -1.0;
    for (std::size_t r = 0; r < t.cells.size(); ++r) {
        const double k = cell(t, r, "k");
        if (k >= p) continue;
        const double gap = (cell(t, r, "df") - p) / cell(t, r, "se");
        if (gap > best_gap) {
            best_gap = gap;
            best_k = k;
        }
    }
    v.require(best_gap > 2.0, "design seed " + fmt(cell(t, 0, "design_seed")) + ": k=" + fmt(best_k)
                                  + " exceeds 15 by " + fmt(best_gap, 3) + " SE");
    const std::size_t r0 = find_row(t, {{"k", 0.0}});
    const std::size_t rp = find_row(t, {{"k", p}});
    v.require(std::abs(cell(t, r0, "df")) <= 4.0 * cell(t, r0, "se"), "k=0 DF " + fmt(cell(t, r0, "df")));
    v.require(std::abs(cell(t, rp, "df") - p) <= 4.0 * cell(t, rp, "se"),
              "k=15 DF " + fmt(cell(t, rp, "df"), 6) + " (SE " + fmt(cell(t, rp, "se"), 2) + ")");
    return v;
}

Verdict determinism()
{
    Verdict v;
    std::string failed;
    for (const auto& tag : determinism_failures) failed += " " + tag;
    v.require(determinism_failures.empty(), std::to_string(determinism_runs) + " commands byte-identical across workers 1/4/8"
                                                + (failed.empty() ? "" : " (differ:" + failed + ")"));
    return v;
}

Verdict properties()
{
    Verdict v;
    const auto report = edf::test::check_fitter_properties(1000, 20261016);
    for (const auto& violation : report.violations) {
        std::fprintf(stderr, "  violation: %s\n", violation.c_str());
    }
    v.require(report.instances == 1000 && report.violations.empty(),
              std::to_string(report.instances) + " instances, " + std::to_string(report.violations.size())
                  + " violations");
    return v;
}

} // namespace

int main()
{
    fs::create_directories(kOutDir);
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"OLS anchor", ols_anchor},
        {"unbounded example at A = 1e4", unbounded_example},
        {"scaling convergence", scaling_convergence},
        {"heatmap claims", heatmap_claims},
        {"two-point divergence", divergence},
        {"estimator agreement", estimator_agreement},
        {"oracle stack", oracle_stack},
        {"non-monotone subset curve", non_monotone},
        {"determinism across workers", determinism},
        {"fitter properties", properties},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("error: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    v.detail.c_str(), seconds);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
