#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dbarrier/path_engine.hpp"

using namespace dbarrier;

namespace {

JumpSpec up_exp(double rate, double eta) {
    JumpSpec j;
    j.arrival_rate = rate;
    j.sign_split = 1.0;
    j.positive = JumpLaw::exponential(eta);
    return j;
}

LevyModel two_sided(double sigma) {
    JumpSpec j;
    j.arrival_rate = 2.0;
    j.sign_split = 0.5;
    j.positive = JumpLaw::exponential(2.0);
    j.negative = JumpLaw::exponential(1.5);
    return LevyModel::from_linear_drift(0.3, sigma, j);
}

PathSpec spec(double T, double h, std::uint64_t seed, std::uint64_t i) {
    PathSpec s;
    s.horizon = T;
    s.grid_step = h;
    s.seed = seed;
    s.path_index = i;
    return s;
}

}  // namespace

TEST(PathSpec, RejectsBadValues) {
    EXPECT_THROW(spec(0.0, 0.1, 0, 0).check(), std::invalid_argument);
    EXPECT_THROW(spec(1.0, 2.0, 0, 0).check(), std::invalid_argument);
    EXPECT_THROW(spec(1.0, 0.0, 0, 0).check(), std::invalid_argument);
}

TEST(SimulatePath, ZeroModelStaysPut) {
    auto p = simulate_path(LevyModel(0.0, 0.0), spec(5.0, 0.1, 3, 0));
    ASSERT_FALSE(p.events.empty());
    for (const auto& e : p.events) EXPECT_EQ(e.dx, 0.0);
    EXPECT_EQ(path_value(p, 5.0), 0.0);
}

TEST(SimulatePath, Deterministic) {
    const auto m = two_sided(0.5);
    auto a = simulate_path(m, spec(3.0, 0.01, 77, 12));
    auto b = simulate_path(m, spec(3.0, 0.01, 77, 12));
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        EXPECT_EQ(a.events[i].t, b.events[i].t);
        EXPECT_EQ(a.events[i].dx, b.events[i].dx);
        EXPECT_EQ(a.events[i].u_peak, b.events[i].u_peak);
    }
    auto c = simulate_path(m, spec(3.0, 0.01, 77, 13));
    EXPECT_NE(path_value(a, 3.0), path_value(c, 3.0));
}

TEST(SimulatePath, EventOrderAndStepBound) {
    const auto m = two_sided(0.5);
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto p = simulate_path(m, spec(4.0, 0.05, 5, i));
        double prev = 0.0;
        for (const auto& e : p.events) {
            EXPECT_GE(e.t, prev);
            EXPECT_LE(e.t, 4.0);
            if (e.kind == EventKind::jump) {
                EXPECT_EQ(e.dt, 0.0);
            } else {
                EXPECT_GT(e.t, prev);
                EXPECT_LE(e.dt, 0.05 * (1.0 + 1e-12));
                EXPECT_NEAR(e.t0(), prev, 1e-15);
                EXPECT_GE(e.peak(), std::max(e.dx, 0.0));
                EXPECT_LE(e.trough(), std::min(e.dx, 0.0));
                EXPECT_LE(e.peak() - std::max(e.dx, 0.0), e.reach + 1e-15);
                EXPECT_LE(std::min(e.dx, 0.0) - e.trough(), e.reach + 1e-15);
            }
            prev = e.t;
        }
        EXPECT_EQ(prev, 4.0);
    }
}

TEST(SimulatePath, DriftOnlyIsExactlyLinear) {
    auto p = simulate_path(LevyModel(1.0, 0.0), spec(2.0, 0.1, 1, 0));
    for (double t : {0.0, 0.3, 1.0, 1.75, 2.0}) EXPECT_NEAR(path_value(p, t), t, 1e-15);
}

TEST(SimulatePath, JumpIncludedAtItsTime) {
    auto m = LevyModel::from_linear_drift(0.5, 0.0, up_exp(0.7, 1.0));
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto p = simulate_path(m, spec(3.0, 0.1, 4, i));
        double jumps = 0.0;
        for (const auto& e : p.events) {
            if (e.kind != EventKind::jump) continue;
            jumps += e.dx;
            EXPECT_NEAR(path_value(p, e.t), 0.5 * e.t + jumps, 1e-13);
        }
        EXPECT_NEAR(path_value(p, 3.0), 1.5 + jumps, 1e-13);
    }
    EXPECT_EQ(path_value(simulate_path(m, spec(3.0, 0.1, 4, 0)), 0.0), 0.0);
    EXPECT_THROW(path_value(simulate_path(m, spec(3.0, 0.1, 4, 0)), 3.5), std::out_of_range);
}

TEST(SimulatePath, MeanMatchesMeanRate) {
    auto m = LevyModel::from_linear_drift(1.0, 0.0, up_exp(2.0, 1.0));
    ASSERT_NEAR(mean_rate(m), 3.0, 1e-15);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = path_value(simulate_path(m, spec(1.0, 1.0, 2024, i)), 1.0);
        s += x;
        s2 += x * x;
    }
    const double mean = s / n, sd = std::sqrt((s2 / n - mean * mean) / n);
    // Var X_1 = rate * E Y^2 = 4.
    EXPECT_NEAR(sd, std::sqrt(4.0 / n), 0.1 * std::sqrt(4.0 / n));
    EXPECT_NEAR(mean, 3.0, 4.0 * sd);
}

TEST(SimulatePath, GaussianVarianceAndJumpCount) {
    const double sigma = 0.8;
    auto m = two_sided(sigma);
    const int n = 100000;
    double sg = 0, sg2 = 0, cnt = 0, cnt2 = 0;
    for (int i = 0; i < n; ++i) {
        auto p = simulate_path(m, spec(1.0, 0.1, 99, i));
        double g = 0.0, k = 0.0;
        for (const auto& e : p.events) {
            if (e.kind == EventKind::jump) {
                k += 1.0;
            } else {
                g += e.dx - 0.3 * e.dt;
            }
        }
        sg += g * g;
        sg2 += g * g * g * g;
        cnt += k;
        cnt2 += k * k;
    }
    const double var = sg / n, se_var = std::sqrt((sg2 / n - var * var) / n);
    EXPECT_NEAR(var, sigma * sigma, 4.0 * se_var);
    const double rate = cnt / n, se_rate = std::sqrt((cnt2 / n - rate * rate) / n);
    EXPECT_NEAR(rate, 2.0, 4.0 * se_rate);
}

TEST(SimulatePath, JumpSkeletonIndependentOfGrid) {
    auto m = two_sided(0.5);
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto coarse = simulate_path(m, spec(5.0, 0.02, 8, i));
        auto fine = simulate_path(m, spec(5.0, 0.01, 8, i));
        std::vector<std::pair<double, double>> jc, jf;
        double dc = 0, df = 0;
        for (const auto& e : coarse.events) {
            if (e.kind == EventKind::jump) jc.push_back({e.t, e.dx});
            else dc += e.dt;
        }
        for (const auto& e : fine.events) {
            if (e.kind == EventKind::jump) jf.push_back({e.t, e.dx});
            else df += e.dt;
        }
        EXPECT_EQ(jc, jf);
        EXPECT_NEAR(dc, df, 1e-12);
    }
}

TEST(SimulatePath, BoundedVariationIsGridFree) {
    JumpSpec j;
    j.arrival_rate = 2.0;
    j.sign_split = 0.5;
    j.positive = JumpLaw::exponential(2.0);
    j.negative = JumpLaw::exponential(1.5);
    auto m = LevyModel::from_linear_drift(1.0, 0.0, j);
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto a = simulate_path(m, spec(5.0, 0.5, 8, i));
        auto b = simulate_path(m, spec(5.0, 0.001, 8, i));
        ASSERT_EQ(a.events.size(), b.events.size());
        for (std::size_t k = 0; k < a.events.size(); ++k) {
            EXPECT_EQ(a.events[k].t, b.events[k].t);
            EXPECT_EQ(a.events[k].dx, b.events[k].dx);
        }
    }
}

TEST(WritePathCsv, HeaderAndRows) {
    auto p = simulate_path(LevyModel::from_linear_drift(1.0, 0.0, up_exp(1.0, 1.0)), spec(1.0, 1.0, 1, 0));
    std::ostringstream os;
    write_path_csv(os, p);
    const std::string s = os.str();
    EXPECT_EQ(s.rfind("time,increment_type,increment_value\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), static_cast<long>(p.events.size() + 1));
}

TEST(ForEachMove, DiffusionMovesSumToIncrement) {
    auto p = simulate_path(two_sided(1.0), spec(1.0, 0.1, 3, 0));
    for (const auto& e : p.events) {
        double sum = 0.0, hi = 0.0, lo = 0.0, run = 0.0;
        int n = 0;
        for_each_move(e, [&](const Move& mv) {
            sum += mv.dx;
            run += mv.dx;
            hi = std::max(hi, run);
            lo = std::min(lo, run);
            ++n;
        });
        EXPECT_NEAR(sum, e.dx, 1e-14);
        if (e.kind == EventKind::diffusion) {
            EXPECT_EQ(n, 3);
            EXPECT_NEAR(hi, e.peak(), 1e-14);
            EXPECT_NEAR(lo, e.trough(), 1e-14);
        }
    }
}
