#include <gtest/gtest.h>

#include <cmath>

#include "dbarrier/scale_oracle.hpp"
#include "dbarrier/valuation.hpp"

using namespace dbarrier;

namespace {

// Unbounded-variation negative part plus finite positive jumps.
LevyModel two_sided(JumpLaw up) {
    JumpSpec j;
    j.arrival_rate = 2.0;
    j.sign_split = 0.5;
    j.positive = std::move(up);
    j.negative = JumpLaw::mixture({0.5, 0.5}, {4.0, 1.5});
    return LevyModel::from_linear_drift(0.3, 0.5, j);
}

}  // namespace

TEST(FixedPoint, NoPositiveJumpsReproducesScaleRatio) {
    JumpSpec j;
    j.arrival_rate = 1.0;
    j.sign_split = 0.0;
    j.negative = JumpLaw::exponential(2.0);
    auto m = LevyModel::from_linear_drift(0.4, 0.6, j);
    auto fp = solve_phibar_fixed_point(m, 0.5, 1.5, 60, 1e-12);
    auto t = scale_function(m, 0.5, 1.5, 6000);
    EXPECT_TRUE(fp.converged);
    EXPECT_EQ(fp.bound, 0.0);
    for (std::size_t i = 0; i < fp.grid.size(); ++i)
        EXPECT_NEAR(fp.phibar[i], exit_up_identity(t, fp.grid[i], 1.5), 1e-9);
    for (double x : {0.13, 0.77, 1.21}) EXPECT_NEAR(fp(x), exit_up_identity(t, x, 1.5), 1e-9);
}

TEST(FixedPoint, ContractsMonotonicallyToANonDecreasingProfile) {
    auto m = two_sided(JumpLaw::mixture({0.6, 0.4}, {3.0, 1.0}));
    const double q = 0.5, r = 1.0;
    auto fp = solve_phibar_fixed_point(m, q, 1.0, 60, 1e-12);
    EXPECT_TRUE(fp.converged);
    EXPECT_TRUE(fp.monotone_iterates);
    EXPECT_NEAR(fp.bound, r / (q + r), 1e-15);
    EXPECT_LE(fp.contraction, fp.bound + 0.05);
    EXPECT_GT(fp.contraction, 0.0);
    for (std::size_t i = 1; i < fp.phibar.size(); ++i) EXPECT_GE(fp.phibar[i], fp.phibar[i - 1] - 1e-12);
    EXPECT_NEAR(fp.phibar.front(), 0.0, 1e-12);
    EXPECT_LE(fp.phibar.back(), 1.0 + 1e-9);
    EXPECT_NEAR(fp.phibar.back(), 1.0, 1e-9);
}

TEST(FixedPoint, GridRefinementIsStable) {
    auto m = two_sided(JumpLaw::exponential(2.0));
    auto coarse = solve_phibar_fixed_point(m, 0.5, 1.0, 40, 1e-12);
    auto fine = solve_phibar_fixed_point(m, 0.5, 1.0, 80, 1e-12);
    for (double x : {0.1, 0.35, 0.5, 0.65, 0.9}) EXPECT_NEAR(coarse(x), fine(x), 1e-6) << x;
}

TEST(FixedPoint, PointMassJumpsAreSupported) {
    auto m = two_sided(JumpLaw::point_mass(0.3));
    auto fp = solve_phibar_fixed_point(m, 0.5, 1.0, 50, 1e-12);
    EXPECT_TRUE(fp.converged);
    EXPECT_LE(fp.contraction, fp.bound + 0.05);
}

TEST(FixedPoint, MatchesMonteCarlo) {
    auto m = two_sided(JumpLaw::mixture({0.6, 0.4}, {3.0, 1.0}));
    const ProblemParams pp{0.5, 1.5};
    auto fp = solve_phibar_fixed_point(m, pp.q, 1.0, 60, 1e-12);
    SimConfig cfg;
    cfg.grid_step = 0.002;
    cfg.seed = 51;
    const std::vector<double> xs{0.2, 0.5, 0.8};
    auto e = exit_laplace_batch(m, pp, xs, 1.0, 10000, cfg);
    for (std::size_t k = 0; k < xs.size(); ++k)
        EXPECT_NEAR(e[k].phibar.mean, fp(xs[k]), 4.0 * e[k].phibar.stderr + e[k].phibar.truncation_bound) << xs[k];
}
