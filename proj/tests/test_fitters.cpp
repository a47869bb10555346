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

#include <catch2/catch_amalgamated.hpp>

#include "edf/fitters.hpp"
#include "test_support.hpp"

using namespace edf;
using Catch::Approx;

namespace {

using Support = std::vector<std::size_t>;

// Brute force: OLS on every size-k subset through least_squares, minimum RSS.
FitResult brute_force_best_subset(const DesignMatrix& x, std::size_t k, const Vector& y)
{
    const auto p = x.cols();
    FitResult best;
    best.rss = std::numeric_limits<double>::infinity();
    std::vector<bool> mask(p, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        Support cols;
        for (std::size_t j = 0; j < p; ++j) {
            if (mask[j]) cols.push_back(j);
        }
        Matrix sub(x.rows(), static_cast<Eigen::Index>(k));
        for (std::size_t c = 0; c < k; ++c) {
            sub.col(static_cast<Eigen::Index>(c)) = x.values().col(static_cast<Eigen::Index>(cols[c]));
        }
        const DesignMatrix xs(sub);
        if (!xs.full_column_rank()) continue;
        const auto fit = least_squares(xs, y);
        if (fit.rss < best.rss) {
            best.rss = fit.rss;
            best.fitted = fit.fitted;
            best.support = cols;
        }
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return best;
}

} // namespace

TEST_CASE("OLS fitter", "[fitters]")
{
    CHECK((fit_ols(DesignMatrix::identity(2), vec({1.25, -7})).fitted - vec({1.25, -7})).norm() < 1e-14);
    const auto mean_fit = fit_ols(DesignMatrix(Matrix::Ones(2, 1)), vec({0, 4}));
    CHECK(mean_fit.fitted(0) == Approx(2.0));
    CHECK(mean_fit.fitted(1) == Approx(2.0));

    const DesignMatrix x(test::gaussian_matrix(50, 15, 5));
    const Vector y = test::gaussian_vector(50, 6) * 3.0;
    const auto fit = fit_ols(x, y);
    CHECK((x.values().transpose() * (y - fit.fitted)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.rss == Approx((y - fit.fitted).squaredNorm()).epsilon(1e-10));

    CHECK_THROWS_AS(Fitter::ols(DesignMatrix(Matrix::Ones(3, 2))), RankDeficient);
}

TEST_CASE("best subset on the identity design picks the larger coordinate", "[fitters]")
{
    const auto a = fit_best_subset(DesignMatrix::identity(2), 1, vec({3, 1}));
    CHECK(a.support == Support{0});
    CHECK(a.fitted(0) == Approx(3.0));
    CHECK(a.fitted(1) == Approx(0.0).margin(1e-15));

    const auto b = fit_best_subset(DesignMatrix::identity(2), 1, vec({1, 3}));
    CHECK(b.support == Support{1});
    CHECK(b.fitted(0) == Approx(0.0).margin(1e-15));
    CHECK(b.fitted(1) == Approx(3.0));

    // exact tie goes to the lexicographically smaller set
    CHECK(fit_best_subset(DesignMatrix::identity(2), 1, vec({2, -2})).support == Support{0});
}

TEST_CASE("best subset with k = p equals OLS and k = 0 is the zero fit", "[fitters]")
{
    const DesignMatrix x(test::gaussian_matrix(12, 5, 8));
    const Vector y = test::gaussian_vector(12, 9);
    const auto full = fit_best_subset(x, 5, y);
    CHECK((full.fitted - fit_ols(x, y).fitted).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(full.support == Support{0, 1, 2, 3, 4});
    const auto empty = fit_best_subset(x, 0, y);
    CHECK(empty.fitted.norm() == 0.0);
    CHECK(empty.support.empty());
    CHECK(empty.rss == Approx(y.squaredNorm()));
}

TEST_CASE("best subset matches brute-force enumeration", "[fitters]")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const DesignMatrix x(test::gaussian_matrix(9, 5, seed));
        const Vector y = test::gaussian_vector(9, seed + 1000);
        for (std::size_t k = 1; k <= 5; ++k) {
            const auto fast = fit_best_subset(x, k, y);
            const auto slow = brute_force_best_subset(x, k, y);
            CHECK(fast.support == slow.support);
            CHECK(fast.rss == Approx(slow.rss).epsilon(1e-10));
        }
    }
}

TEST_CASE("best subset skips rank-deficient subsets", "[fitters]")
{
    // columns 0 and 1 are parallel; {0, 1} can never be chosen
    Matrix m(4, 3);
    m << 1, 2, 0,
         1, 2, 1,
         0, 0, 1,
         1, 2, 0;
    const DesignMatrix x(m);
    const Vector y = vec({1, 1, 0, 1});
    const auto fit = fit_best_subset(x, 2, y);
    CHECK(fit.support != Support{0, 1});
    CHECK(fit.rss == Approx(brute_force_best_subset(x, 2, y).rss).epsilon(1e-10).margin(1e-12));

    // every size-2 subset of three parallel columns is deficient
    Matrix par(3, 3);
    par << 1, 2, 3, 1, 2, 3, 1, 2, 3;
    CHECK_THROWS_AS(fit_best_subset(DesignMatrix(par), 2, vec({1, 2, 3})), InfeasibleSubset);
}

TEST_CASE("best subset parameter validation", "[fitters]")
{
    CHECK_THROWS_AS(Fitter::best_subset(DesignMatrix::identity(3), 4), InvalidArgument);
    CHECK_THROWS_AS(Fitter::best_subset(DesignMatrix(test::gaussian_matrix(30, 26, 1)), 1), SubsetTooLarge);
    CHECK_THROWS_AS(fit_best_subset(DesignMatrix::identity(2), 1, vec({1, 2, 3})), DimensionMismatch);
}

TEST_CASE("cached and streaming subset search agree exactly", "[fitters]")
{
    // p = 22 with k = 8 exceeds the node cache budget and streams
    const DesignMatrix big(test::gaussian_matrix(30, 22, 77));
    const SubsetSearch streaming(big, 8);
    REQUIRE_FALSE(streaming.cached());
    const SubsetSearch cached(big, 3);
    REQUIRE(cached.cached());
    const ThinQR& qr = streaming.qr();
    const Vector w = qr.q.transpose() * test::gaussian_vector(30, 78);
    const auto a = streaming.best_by_size(w);
    const auto b = cached.best_by_size(w);
    for (std::size_t k = 0; k <= 3; ++k) {
        REQUIRE(a[k]);
        REQUIRE(b[k]);
        CHECK(*a[k] == *b[k]);
    }
}

TEST_CASE("forward stepwise", "[fitters]")
{
    CHECK(fit_forward_stepwise(DesignMatrix::identity(2), 1, vec({3, 1})).support == Support{0});

    const DesignMatrix x(test::gaussian_matrix(20, 6, 12));
    const Vector y = test::gaussian_vector(20, 13);
    CHECK((fit_forward_stepwise(x, 6, y).fitted - fit_ols(x, y).fitted).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit_forward_stepwise(x, 0, y).fitted.norm() == 0.0);

    // support grows by one column per step and keeps earlier choices
    const auto two = fit_forward_stepwise(x, 2, y);
    const auto three = fit_forward_stepwise(x, 3, y);
    REQUIRE(two.support.size() == 2);
    REQUIRE(three.support.size() == 3);
    CHECK(std::equal(two.support.begin(), two.support.end(), three.support.begin()));

    // the first step agrees with best subset of size 1
    CHECK(fit_forward_stepwise(x, 1, y).support == fit_best_subset(x, 1, y).support);

    Matrix par(3, 2);
    par << 1, 2, 1, 2, 1, 2;
    CHECK_THROWS_AS(fit_forward_stepwise(DesignMatrix(par), 2, vec({1, 2, 3})), RankDeficient);
}

TEST_CASE("forward stepwise RSS never beats best subset", "[fitters]")
{
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const DesignMatrix x(test::gaussian_matrix(50, 15, seed));
        const Vector y = x.values() * Vector::Ones(15) + 2.0 * test::gaussian_vector(50, seed + 1);
        const SubsetPathFitter bsr(x, SubsetPathFitter::Method::BestSubset);
        const SubsetPathFitter fsr(x, SubsetPathFitter::Method::ForwardStepwise);
        const Matrix b = bsr.fitted_path(y);
        const Matrix f = fsr.fitted_path(y);
        for (Eigen::Index k = 0; k <= 15; ++k) {
            const double rss_b = (y - b.col(k)).squaredNorm();
            const double rss_f = (y - f.col(k)).squaredNorm();
            CHECK(rss_b <= rss_f * (1 + 1e-12) + 1e-12);
        }
    }
}

TEST_CASE("path fitter columns equal the single-size fitters", "[fitters]")
{
    const DesignMatrix x(test::gaussian_matrix(15, 6, 21));
    const Vector y = test::gaussian_vector(15, 22);
    const Matrix bsr = SubsetPathFitter(x, SubsetPathFitter::Method::BestSubset).fitted_path(y);
    const Matrix fsr = SubsetPathFitter(x, SubsetPathFitter::Method::ForwardStepwise).fitted_path(y);
    for (std::size_t k = 0; k <= 6; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        CHECK((bsr.col(col) - Fitter::best_subset(x, k).fitted(y)).norm() == 0.0);
        CHECK((fsr.col(col) - Fitter::forward_stepwise(x, k).fitted(y)).norm() == 0.0);
    }
}

TEST_CASE("axis subset keeps the largest magnitudes", "[fitters]")
{
    const auto a = fit_axis_subset(1, vec({3, -5}));
    CHECK(a.fitted(0) == 0.0);
    CHECK(a.fitted(1) == -5.0);
    CHECK(a.support == Support{1});

    const Vector y = vec({0.5, -2, 7, 1});
    CHECK(fit_axis_subset(4, y).fitted == y);
    CHECK(fit_axis_subset(2, y).support == Support{1, 2});
    // |y| ties go to the smaller index
    CHECK(fit_axis_subset(1, vec({-4, 4, 1})).support == Support{0});
    CHECK_THROWS_AS(Fitter::axis_subset(2, 3), InvalidArgument);
}

TEST_CASE("axis subset agrees with best subset on the identity", "[fitters]")
{
    std::mt19937_64 gen(5);
    std::normal_distribution<double> normal;
    const Fitter bsr = Fitter::best_subset(DesignMatrix::identity(2), 1);
    const Fitter axis = Fitter::axis_subset(2, 1);
    for (int i = 0; i < 1000; ++i) {
        const Vector y = vec({normal(gen), normal(gen)});
        const auto a = axis.fit(y);
        const auto b = bsr.fit(y);
        CHECK(a.support == b.support);
        CHECK((a.fitted - b.fitted).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("point set fitter", "[fitters]")
{
    const std::vector<Vector> pts{vec({-1}), vec({1})};
    CHECK(fit_point_set(pts, vec({0.2})).fitted(0) == 1.0);
    const auto tie = fit_point_set(pts, vec({0.0}));
    CHECK(tie.fitted(0) == -1.0);
    CHECK(tie.support == Support{0});
    const Vector q = vec({2, -3});
    CHECK(fit_point_set({q}, vec({100, 100})).fitted == q);

    CHECK_THROWS_AS(Fitter::point_set({}), InvalidArgument);
    CHECK_THROWS_AS(Fitter::point_set({vec({1}), vec({1})}), InvalidArgument);
    CHECK_THROWS_AS(Fitter::point_set({vec({1}), vec({1, 2})}), DimensionMismatch);
}

TEST_CASE("ridge fitter", "[fitters]")
{
    const DesignMatrix x(test::gaussian_matrix(20, 4, 31));
    const Vector y = test::gaussian_vector(20, 32);
    CHECK((fit_ridge(x, 0.0, y).fitted - fit_ols(x, y).fitted).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit_ridge(x, 1e12, y).fitted.norm() <= 1e-6 * y.norm());
    const auto shrunk = fit_ridge(DesignMatrix::identity(2), 1.0, vec({2, 4}));
    CHECK(shrunk.fitted(0) == Approx(1.0));
    CHECK(shrunk.fitted(1) == Approx(2.0));
    CHECK_THROWS_AS(Fitter::ridge(x, -1.0), InvalidArgument);
    CHECK_THROWS_AS(Fitter::ridge(DesignMatrix(Matrix::Ones(3, 2)), 0.0), RankDeficient);
    CHECK_NOTHROW(Fitter::ridge(DesignMatrix(Matrix::Ones(3, 2)), 0.5));
}

TEST_CASE("fitters are deterministic", "[fitters]")
{
    const DesignMatrix x(test::gaussian_matrix(30, 8, 41));
    const Vector y = test::gaussian_vector(30, 42);
    for (const Fitter& f : {Fitter::best_subset(x, 3), Fitter::forward_stepwise(x, 3), Fitter::ridge(x, 0.3)}) {
        const auto a = f.fit(y);
        const auto b = f.fit(y);
        CHECK(a.fitted == b.fitted);
        CHECK(a.support == b.support);
        CHECK(a.rss == b.rss);
    }
}
