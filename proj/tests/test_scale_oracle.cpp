#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dbarrier/scale_oracle.hpp"
#include "dbarrier/valuation.hpp"

using namespace dbarrier;

namespace {

JumpSpec claims(double rate, JumpLaw law) {
    JumpSpec j;
    j.arrival_rate = rate;
    j.sign_split = 0.0;
    j.negative = std::move(law);
    return j;
}

LevyModel brownian() { return LevyModel::from_linear_drift(0.5, 1.0); }
LevyModel cramer_lundberg() { return LevyModel::from_linear_drift(2.0, 0.0, claims(1.5, JumpLaw::exponential(1.0))); }
LevyModel mixed_claims() {
    return LevyModel::from_linear_drift(0.3, 0.5, claims(1.0, JumpLaw::mixture({0.5, 0.5}, {4.0, 1.5})));
}

// Partial fractions of (eta + l) / (d (l - t1)(l - t2)) - independent of the 1/psi' coefficients.
double cl_scale(double d, double lam, double eta, double q, double x) {
    const double b = d * eta - lam - q;
    const double disc = std::sqrt(b * b + 4.0 * d * q * eta);
    const double t1 = (-b + disc) / (2.0 * d), t2 = (-b - disc) / (2.0 * d);
    return (eta + t1) / (d * (t1 - t2)) * std::exp(t1 * x) + (eta + t2) / (d * (t2 - t1)) * std::exp(t2 * x);
}

double bm_scale(double mu, double s, double q, double x) {
    const double r = std::sqrt(mu * mu + 2.0 * q * s * s);
    return (std::exp((-mu + r) / (s * s) * x) - std::exp((-mu - r) / (s * s) * x)) / r;
}

}  // namespace

TEST(PhiInverse, SolvesPsiEqualsP) {
    for (const auto& m : {brownian(), cramer_lundberg(), mixed_claims()})
        for (double p : {0.1, 0.5, 2.0}) {
            const double th = phi_inverse(m, p);
            EXPECT_GT(th, 0.0);
            EXPECT_NEAR(laplace_exponent_sn(m, th), p, 1e-12);
        }
}

TEST(ClosedFormScale, MatchesIndependentPartialFractions) {
    auto bm = closed_form_scale(brownian(), 0.5);
    auto cl = closed_form_scale(cramer_lundberg(), 0.1);
    ASSERT_TRUE(bm);
    ASSERT_TRUE(cl);
    EXPECT_FALSE(closed_form_scale(mixed_claims(), 0.5));
    for (double x : {0.0, 0.1, 0.7, 2.0, 5.0}) {
        EXPECT_NEAR(bm->W(x), bm_scale(0.5, 1.0, 0.5, x), 1e-12 * std::max(1.0, bm->W(x)));
        EXPECT_NEAR(cl->W(x), cl_scale(2.0, 1.5, 1.0, 0.1, x), 1e-12 * std::max(1.0, cl->W(x)));
    }
    EXPECT_EQ(bm->W(-0.3), 0.0);
    EXPECT_NEAR(cl->W(0.0), 0.5, 1e-14);
}

TEST(ScaleFunction, InversionAgreesWithBrownianClosedForm) {
    auto exact = ScaleFunction(brownian(), 0.5);
    auto inv = ScaleFunction::numerical(brownian(), 0.5);
    ASSERT_TRUE(exact.closed_form());
    ASSERT_FALSE(inv.closed_form());
    for (int k = 1; k <= 50; ++k) {
        const double x = 0.1 * k;
        EXPECT_NEAR(inv.W(x), exact.W(x), 1e-8 * std::max(1.0, exact.W(x))) << x;
        EXPECT_NEAR(inv.dW(x), exact.dW(x), 1e-7 * std::max(1.0, exact.dW(x))) << x;
    }
}

TEST(ScaleFunction, InversionAgreesWithCramerLundbergClosedForm) {
    auto exact = ScaleFunction(cramer_lundberg(), 0.1);
    auto inv = ScaleFunction::numerical(cramer_lundberg(), 0.1);
    for (int k = 1; k <= 40; ++k) {
        const double x = 0.25 * k;
        EXPECT_NEAR(inv.W(x), exact.W(x), 1e-8 * std::max(1.0, exact.W(x))) << x;
    }
    EXPECT_NEAR(exact.W0(), 0.5, 1e-15);
    EXPECT_NEAR(exact.dW0(), exact.dW(0.0), 1e-12);
}

TEST(ScaleFunction, UnboundedVariationStartsAtZero) {
    auto inv = ScaleFunction::numerical(mixed_claims(), 0.5);
    EXPECT_EQ(inv.W0(), 0.0);
    EXPECT_LT(inv.W(1e-4), 1e-3);
    EXPECT_NEAR(inv.W(1e-4) / 1e-4, inv.dW0(), 0.02 * inv.dW0());
}

TEST(ScaleFunction, RejectsPositiveJumpsAndNegativeRate) {
    JumpSpec j;
    j.arrival_rate = 1.0;
    j.sign_split = 1.0;
    j.positive = JumpLaw::exponential(1.0);
    EXPECT_THROW(ScaleFunction(LevyModel(0.0, 1.0, j), 0.5), ModelError);
    EXPECT_THROW(ScaleFunction(brownian(), -0.1), ModelError);
}

TEST(ScaleTable, LaplaceDefinitionHoldsForEveryConstruction) {
    struct Case {
        LevyModel m;
        double p;
        double xmax;
    };
    for (const auto& c : {Case{brownian(), 0.5, 12.0}, Case{cramer_lundberg(), 0.1, 25.0}, Case{mixed_claims(), 0.5, 12.0}}) {
        auto t = scale_function(c.m, c.p, c.xmax, 600);
        auto chk = laplace_definition_check(t, c.m);
        ASSERT_EQ(chk.size(), 5u);
        for (const auto& pt : chk) EXPECT_LE(pt.rel_error, 1e-6) << "lambda=" << pt.lambda;
        for (std::size_t i = 1; i < t.values.size(); ++i) EXPECT_GE(t.values[i], t.values[i - 1]);
    }
}

TEST(ScaleTable, InterpolantIsAccurateAndMonotone) {
    auto w = ScaleFunction(brownian(), 0.5);
    auto t = tabulate(w, 4.0, 400);
    double prev = -1.0;
    for (int k = 0; k <= 4000; ++k) {
        const double x = 0.001 * k;
        const double v = t(x);
        EXPECT_NEAR(v, w.W(x), 1e-8 * std::max(1.0, w.W(x)));
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_EQ(t(-1.0), 0.0);
    EXPECT_THROW(t(4.5), std::out_of_range);
    std::ostringstream os;
    write_scale_csv(os, t);
    EXPECT_EQ(os.str().rfind("x,W,W'\n", 0), 0u);
}

TEST(ExitIdentities, EndpointsAndUnboundedVariationStart) {
    auto t = scale_function(brownian(), 0.5, 2.0, 400);
    EXPECT_EQ(exit_up_identity(t, 1.5, 1.5), 1.0);
    EXPECT_EQ(exit_up_identity(t, 0.0, 1.5), 0.0);
    EXPECT_THROW(exit_up_identity(t, 1.6, 1.5), std::invalid_argument);
    EXPECT_EQ(resolvent_functional(t, 0.7, 1.5, [](double) { return 0.0; }), 0.0);
    EXPECT_NEAR(resolvent_functional(t, 0.0, 1.5, [](double) { return 1.0; }), 0.0, 1e-15);
}

TEST(ExitIdentities, ResolventOfOneMatchesIntegratedScale) {
    // \int_0^a [W(x) W(a-y)/W(a) - W(x-y)] dy = W(x) Wbar(a) / W(a) - Wbar(x).
    auto m = cramer_lundberg();
    auto w = *closed_form_scale(m, 0.1);
    auto t = scale_function(m, 0.1, 3.0, 3000);
    for (double x : {0.2, 1.0, 2.5}) {
        const double expect = w.W(x) * w.integral(3.0) / w.W(3.0) - w.integral(x);
        EXPECT_NEAR(resolvent_functional(t, x, 3.0, [](double) { return 1.0; }), expect, 1e-8);
    }
}

TEST(ExitIdentities, DownwardExitMatchesSecondScaleFunction) {
    auto m = brownian();
    SnAnalytic sn(m, ProblemParams{0.5, 1.5});
    auto t = scale_function(m, 0.5, 1.0, 2000);
    for (double x : {0.1, 0.5, 0.9}) EXPECT_NEAR(exit_down_identity(t, x, 1.0), sn.phiunder(x, 1.0), 1e-8);
}

TEST(ExitIdentities, OccupationMatchesMonteCarlo) {
    auto m = brownian();
    const ProblemParams pp{0.5, 1.5};
    auto t = scale_function(m, 0.5, 1.0, 1000);
    SimConfig cfg;
    cfg.grid_step = 0.005;
    cfg.seed = 41;
    auto e = exit_laplace_batch(m, pp, {0.3, 0.6}, 1.0, 10000, cfg);
    for (std::size_t k = 0; k < 2; ++k) {
        const double x = k == 0 ? 0.3 : 0.6;
        const double occ = resolvent_functional(t, x, 1.0, [](double) { return 1.0; });
        EXPECT_NEAR(e[k].occupation.mean, occ, 4.0 * e[k].occupation.stderr + e[k].occupation.truncation_bound);
        EXPECT_NEAR(e[k].phibar.mean, exit_up_identity(t, x, 1.0), 4.0 * e[k].phibar.stderr);
    }
}

TEST(SnAnalytic, BarrierSatisfiesSmoothFit) {
    for (const auto& [m, pp] : {std::pair{brownian(), ProblemParams{0.5, 1.5}}, std::pair{cramer_lundberg(), ProblemParams{0.1, 1.5}}}) {
        SnAnalytic sn(m, pp);
        const double a = sn.astar();
        ASSERT_GT(a, 0.0);
        EXPECT_NEAR(pp.beta * sn.nu(a), 1.0, 1e-10);
        EXPECT_NEAR(sn.d2v(a, a), 0.0, 1e-8);
        EXPECT_NEAR(sn.dv(a, a), 1.0, 1e-12);
        // v(a) - v(0) equals the integral of v' on [0, a].
        const double integral = adaptive_integrate([&](double x) { return sn.dv(x, a); }, 0.0, a);
        EXPECT_NEAR(sn.v(a, a) - sn.v(0.0, a), integral, 1e-9);
    }
}

TEST(SnAnalytic, ReferenceBarriers) {
    EXPECT_NEAR(SnAnalytic(brownian(), ProblemParams{0.5, 1.5}).astar(), 0.83555, 5e-5);
    SnAnalytic cl(cramer_lundberg(), ProblemParams{0.1, 1.5});
    const double a = cl.astar();
    EXPECT_NEAR(a, 2.50657, 5e-5);
    EXPECT_NEAR(cl.v(0.0, a), 1.3415, 5e-4);
    EXPECT_NEAR(cl.v(a, a), 4.0, 5e-4);
}

TEST(SnAnalytic, ValueMatchesMonteCarlo) {
    auto m = cramer_lundberg();
    const ProblemParams pp{0.1, 1.5};
    SnAnalytic sn(m, pp);
    SimConfig cfg;
    cfg.seed = 43;
    NpvBatch b(m, pp, {{0.0, 2.0}, {1.0, 2.0}, {2.0, 2.0}}, 4000, cfg);
    for (std::size_t k = 0; k < 3; ++k) {
        const double x = b.case_at(k).x;
        const auto vL = b.vL(k), vR = b.vR(k);
        EXPECT_NEAR(vL.mean, sn.vL(x, 2.0), 4.0 * vL.stderr + vL.truncation_bound);
        EXPECT_NEAR(vR.mean, sn.vR(x, 2.0), 4.0 * vR.stderr + vR.truncation_bound);
    }
}
