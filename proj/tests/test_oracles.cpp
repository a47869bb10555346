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

#include <numbers>

#include "edf/engine.hpp"
#include "edf/oracles.hpp"
#include "test_support.hpp"

using namespace edf;
using Catch::Approx;

TEST_CASE("trace oracle for linear fitters", "[oracles]")
{
    const DesignMatrix x(test::gaussian_matrix(30, 6, 3));
    CHECK(df_trace_linear(Fitter::ols(x)) == 6.0);
    CHECK(df_trace_linear(Fitter::ridge(DesignMatrix::identity(4), 1.0)) == Approx(2.0).epsilon(1e-14));
    CHECK(df_trace_linear(Fitter::ridge(x, 0.0)) == Approx(6.0).epsilon(1e-12));

    // ridge hat matrix built column by column agrees with the SVD formula
    const Fitter ridge = Fitter::ridge(x, 2.5);
    double trace = 0.0;
    for (Eigen::Index i = 0; i < 30; ++i) {
        trace += ridge.fitted(Vector::Unit(30, i))(i);
    }
    CHECK(df_trace_linear(ridge) == Approx(trace).epsilon(1e-12));
    CHECK_THROWS_AS(df_trace_linear(Fitter::axis_subset(2, 1)), NotLinear);
}

TEST_CASE("closed forms", "[oracles]")
{
    CHECK(two_point_df(-1, 1, 0, 1) == Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
    CHECK(two_point_df(-1, 1, 0, 0.1) == Approx(10.0 * std::sqrt(2.0 / std::numbers::pi) * std::exp(0.0)).epsilon(1e-15));
    CHECK(axis_subset_origin_df() == Approx(1.63662).epsilon(1e-5));
    CHECK(df_scaling_limit() == Approx(0.5641896).epsilon(1e-7));
    CHECK_THROWS_AS(two_point_df(1, 1, 0, 1), InvalidArgument);
}

TEST_CASE("quadrature oracle reproduces the closed forms", "[oracles]")
{
    const QuadratureEstimate two = df_quadrature(DataModel(vec({0}), 1.0), Fitter::point_set({vec({-1}), vec({1})}));
    CHECK(two.converged);
    CHECK(std::abs(two.value - two_point_df(-1, 1, 0, 1)) < 1e-6);
    const QuadratureEstimate shifted =
        df_quadrature(DataModel(vec({0.7}), 0.4), Fitter::point_set({vec({-1}), vec({2})}));
    CHECK(std::abs(shifted.value - two_point_df(-1, 2, 0.7, 0.4)) < 1e-6);

    const QuadratureEstimate origin = df_heatmap_reference(0.0, 0.0);
    CHECK(origin.converged);
    CHECK(std::abs(origin.value - axis_subset_origin_df()) < 1e-6);

    const IntegrationResult limit = scaling_limit_quadrature();
    CHECK(std::abs(limit.value - df_scaling_limit()) < 1e-10);
}

TEST_CASE("quadrature oracle agrees with the trace on linear fitters", "[oracles]")
{
    Matrix m(2, 2);
    m << 1.0, 0.4, -0.3, 2.0;
    const DesignMatrix x(m);
    for (const Fitter& f : {Fitter::ols(x), Fitter::ridge(x, 0.5), Fitter::ridge(DesignMatrix::identity(2), 3.0)}) {
        const QuadratureEstimate q = df_quadrature(DataModel(vec({1, -2}), 1.2), f);
        CHECK(q.converged);
        CHECK(std::abs(q.value - df_trace_linear(f)) < 1e-6);
    }
    const Fitter ridge = Fitter::ridge(DesignMatrix::identity(3), 0.5);
    CHECK(df_gauss_hermite(DataModel(vec({1, -2, 0.5}), 1.2), ridge, 8) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("quadrature oracle agrees with Monte Carlo", "[oracles]")
{
    const DataModel model(vec({0.5, 1.5}), 1.0);
    const Fitter axis = Fitter::axis_subset(2, 1);
    const QuadratureEstimate q = df_quadrature(model, axis);
    const DfEstimate mc = estimate_df(model, axis, {200000, 31, 1});
    CHECK(std::abs(mc.value - q.value) <= 4.0 * mc.std_error);
}

TEST_CASE("quadrature oracle domain checks", "[oracles]")
{
    CHECK_THROWS_AS(df_quadrature(DataModel(Vector::Zero(4), 1.0), Fitter::axis_subset(4, 1)), DimensionTooLarge);
    CHECK_THROWS_AS(df_quadrature(DataModel(vec({0}), 1.0, NoiseLaw::Uniform), Fitter::point_set({vec({0})})),
                    InvalidArgument);
}
