#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dbarrier/barrier.hpp"
#include "dbarrier/scale_oracle.hpp"

using namespace dbarrier;

namespace {

MCEstimate point(double mean, double se) {
    MCEstimate e;
    e.mean = mean;
    e.stderr = se;
    e.n_paths = 100;
    return e;
}

LevyModel two_sided_bv() {
    JumpSpec j;
    j.arrival_rate = 2.0;
    j.sign_split = 0.5;
    j.positive = JumpLaw::exponential(2.0);
    j.negative = JumpLaw::exponential(1.5);
    return LevyModel::from_linear_drift(1.0, 0.0, j);
}

SimConfig config(double h, std::uint64_t seed) {
    SimConfig c;
    c.grid_step = h;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(DerivativeInA, CompositionIdentities) {
    const double nu = 0.6, bx = 0.4, b0 = 0.3, beta = 1.5;
    auto d = value_derivative_in_a(beta, point(nu, 0.01), point(bx, 0.01), point(b0, 0.01));
    const double D = 1.0 - nu * b0;
    EXPECT_NEAR(d.dVL.mean, -bx / D, 1e-15);
    EXPECT_NEAR(d.dVL.mean / d.dVR.mean, 1.0 / nu, 1e-14);
    EXPECT_NEAR(d.dV.mean, d.dVL.mean - beta * d.dVR.mean, 1e-15);
    EXPECT_GT(d.dVL.stderr, 0.0);
    EXPECT_THROW(value_derivative_in_a(beta, point(1.0, 0), point(bx, 0), point(1.0, 0)), EstimationError);
}

TEST(DerivativeInA, DeltaMethodErrorMatchesFiniteDifferenceGradient) {
    const double nu = 0.6, bx = 0.4, b0 = 0.3, beta = 1.5, se = 1e-3;
    auto f = [&](double n, double x, double z) {
        return value_derivative_in_a(beta, point(n, 0), point(x, 0), point(z, 0)).dV.mean;
    };
    const double h = 1e-6;
    const double gn = (f(nu + h, bx, b0) - f(nu - h, bx, b0)) / (2 * h);
    const double gx = (f(nu, bx + h, b0) - f(nu, bx - h, b0)) / (2 * h);
    const double g0 = (f(nu, bx, b0 + h) - f(nu, bx, b0 - h)) / (2 * h);
    const double expect = se * std::sqrt(gn * gn + gx * gx + g0 * g0);
    auto d = value_derivative_in_a(beta, point(nu, se), point(bx, se), point(b0, se));
    EXPECT_NEAR(d.dV.stderr, expect, 1e-8);
}

TEST(DerivativeInA, AnalyticCompositionMatchesClosedFormDerivative) {
    // Spectrally negative: dv/da from the closed form against the nu/nubar composition.
    JumpSpec j;
    j.arrival_rate = 1.5;
    j.sign_split = 0.0;
    j.negative = JumpLaw::exponential(1.0);
    auto m = LevyModel::from_linear_drift(2.0, 0.0, j);
    const ProblemParams pp{0.1, 1.5};
    SnAnalytic sn(m, pp);
    for (double a : {1.0, 2.5, 4.0})
        for (double x : {0.0, 0.5}) {
            auto d = value_derivative_in_a(pp.beta, point(sn.nu(a), 0), point(sn.nu_bar(x, a), 0), point(sn.nu_bar(0, a), 0));
            const double h = 1e-5;
            const double fd_L = (sn.vL(x, a + h) - sn.vL(x, a - h)) / (2 * h);
            const double fd_V = (sn.v(x, a + h) - sn.v(x, a - h)) / (2 * h);
            EXPECT_NEAR(d.dVL.mean, fd_L, 1e-6) << a << " " << x;
            EXPECT_NEAR(d.dV.mean, fd_V, 1e-6) << a << " " << x;
        }
}

TEST(DerivativeInX, ExtensionsAndInterior) {
    ExitEstimate e;
    e.phibar = point(0.4, 0.01);
    e.phiunder = point(0.3, 0.01);
    EXPECT_EQ(value_derivative_in_x(2.0, 1.0, 1.5, e).mean, 1.0);
    EXPECT_EQ(value_derivative_in_x(-1.0, 1.0, 1.5, e).mean, 1.5);
    auto in = value_derivative_in_x(0.5, 1.0, 1.5, e);
    EXPECT_NEAR(in.mean, 0.85, 1e-15);
    EXPECT_NEAR(in.stderr, std::sqrt(1e-4 + 2.25e-4), 1e-15);
}

TEST(SelectAstar, BracketsTheAnalyticBarrierForBrownianMotion) {
    auto m = LevyModel::from_linear_drift(0.5, 1.0);
    const ProblemParams pp{0.5, 1.5};
    const double exact = SnAnalytic(m, pp).astar();
    auto r = select_astar(m, pp, 0.01, 4000, config(0.005, 61));
    EXPECT_FALSE(r.zero);
    EXPECT_LE(r.a_lo, r.a_hi);
    EXPECT_TRUE(r.tight);
    EXPECT_GE(pp.beta * r.nu_lo.mean, 1.0 - 3.0 * pp.beta * r.nu_lo.stderr);
    EXPECT_LE(pp.beta * r.nu_hi.mean, 1.0 + 3.0 * pp.beta * r.nu_hi.stderr);
    // Statistical resolution in a: stderr of nu divided by |nu'| at the crossing.
    SnAnalytic sn(m, pp);
    const double slope = std::abs((sn.nu(exact + 1e-4) - sn.nu(exact - 1e-4)) / 2e-4);
    const double band = 4.0 * r.nu_hi.stderr / slope + 0.01;
    EXPECT_NEAR(r.a_star, exact, band);
}

TEST(SelectAstar, ReturnsZeroWhenTheFirstClaimAlreadyTipsTheBalance) {
    // For this model nu(0+) = lambda_- / (lambda_- + q) = 1/1.1; beta = 1.05 keeps beta * nu below 1.
    auto r = select_astar(two_sided_bv(), ProblemParams{0.1, 1.05}, 0.01, 2000, config(0.01, 67));
    EXPECT_TRUE(r.zero);
    EXPECT_EQ(r.a_star, 0.0);
    EXPECT_NEAR(r.nu_hi.mean, 1.0 / 1.1, 4.0 * r.nu_hi.stderr + 0.003);
}

TEST(SelectAstar, UnboundedVariationReportsSmallestProbeAsUpperBound) {
    auto m = LevyModel::from_linear_drift(5.0, 0.2);
    auto r = select_astar(m, ProblemParams{0.5, 1.01}, 0.01, 200, config(0.01, 71), 0.25);
    if (r.a_lo == 0.0) {
        EXPECT_FALSE(r.zero);
        EXPECT_EQ(r.a_star, 0.25);
    }
}

TEST(BarrierSweep, ArgmaxSitsNearTheAnalyticBarrier) {
    JumpSpec j;
    j.arrival_rate = 1.5;
    j.sign_split = 0.0;
    j.negative = JumpLaw::exponential(1.0);
    auto m = LevyModel::from_linear_drift(2.0, 0.0, j);
    const ProblemParams pp{0.1, 1.5};
    const double exact = SnAnalytic(m, pp).astar();
    auto grid = geometric_grid(0.25 * exact, 4.0 * exact, 9);
    EXPECT_NEAR(grid.front(), 0.25 * exact, 1e-12);
    EXPECT_NEAR(grid.back(), 4.0 * exact, 1e-12);
    auto c = barrier_sweep(m, pp, 0.5, grid, 2000, config(0.01, 73));
    EXPECT_NEAR(grid[c.argmax], exact, exact * 0.8);
    EXPECT_GT(c.derivative.front().mean, 0.0);
    EXPECT_LT(c.derivative.back().mean, 0.0);
    std::ostringstream os;
    write_barrier_csv(os, c);
    EXPECT_EQ(os.str().rfind("a,nu_mean,nu_stderr,V_mean,V_stderr,dV\n", 0), 0u);
}
