#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dbarrier/numerics.hpp"
#include "dbarrier/path_engine.hpp"

namespace dbarrier {

struct StepResult {
    double u;
    double dL;
    double dR;
};

/// Two-sided Skorokhod map for one instantaneous increment.
inline StepResult skorokhod_step(double u_prev, double dx, double a) {
    if (!(u_prev >= 0.0 && u_prev <= a)) throw std::invalid_argument("skorokhod_step: u_prev outside [0, a]");
    const double y = u_prev + dx;
    if (y > a) return {a, y - a, 0.0};
    if (y < 0.0) return {0.0, 0.0, -y};
    return {y, 0.0, 0.0};
}

/*
 * Controllers consume elementary moves and report every state change to a
 * sink as step(ts, t, U, dL, dR). ts < t means the increments accrue
 * uniformly on [ts, t]; otherwise they are atoms at t.
 */

/// Surplus under the double barrier strategy at a > 0.
class DoubleBarrier {
public:
    explicit DoubleBarrier(double a) : a_(a) {
        if (!(a > 0.0)) throw std::invalid_argument("double barrier requires a > 0");
    }

    double barrier() const { return a_; }
    double state() const { return u_; }

    template <class Sink>
    void start(double x, Sink& s) {
        if (x > a_) {
            u_ = a_;
            s.step(0.0, 0.0, u_, x - a_, 0.0);
        } else if (x < 0.0) {
            u_ = 0.0;
            s.step(0.0, 0.0, u_, 0.0, -x);
        } else {
            u_ = x;
            s.step(0.0, 0.0, u_, 0.0, 0.0);
        }
    }

    bool collapsible(const PathEvent& e) const {
        return u_ + std::max(e.dx, 0.0) + e.reach <= a_ && u_ + std::min(e.dx, 0.0) - e.reach >= 0.0;
    }

    template <class Sink>
    void move(const Move& m, Sink& s) {
        const double y = u_ + m.dx;
        if (!m.linear) {
            if (y > a_) {
                u_ = a_;
                s.step(m.t1, m.t1, u_, y - a_, 0.0);
            } else if (y < 0.0) {
                u_ = 0.0;
                s.step(m.t1, m.t1, u_, 0.0, -y);
            } else {
                u_ = y;
                s.step(m.t1, m.t1, u_, 0.0, 0.0);
            }
            return;
        }
        if (y > a_) {
            const double ts = touch_time(m, a_ - u_);
            if (ts > m.t0) s.step(ts, ts, a_, 0.0, 0.0);
            u_ = a_;
            s.step(ts, m.t1, u_, y - a_, 0.0);
        } else if (y < 0.0) {
            const double ts = touch_time(m, -u_);
            if (ts > m.t0) s.step(ts, ts, 0.0, 0.0, 0.0);
            u_ = 0.0;
            s.step(ts, m.t1, u_, 0.0, -y);
        } else {
            u_ = y;
            s.step(m.t1, m.t1, u_, 0.0, 0.0);
        }
    }

    /// Time at which a linear move has covered `gap` of its increment.
    static double touch_time(const Move& m, double gap) {
        const double f = std::clamp(gap / m.dx, 0.0, 1.0);
        return std::min(m.t1, m.t0 + f * (m.t1 - m.t0));
    }

private:
    double a_;
    double u_ = 0.0;
};

/// Strategy at barrier 0 for bounded variation models: every increment is regulated away.
class PiZero {
public:
    double state() const { return 0.0; }

    template <class Sink>
    void start(double x, Sink& s) {
        s.step(0.0, 0.0, 0.0, std::max(x, 0.0), std::max(-x, 0.0));
    }

    bool collapsible(const PathEvent&) const { return false; }

    template <class Sink>
    void move(const Move& m, Sink& s) {
        const double ts = m.linear ? m.t0 : m.t1;
        s.step(ts, m.t1, 0.0, std::max(m.dx, 0.0), std::max(-m.dx, 0.0));
    }
};

/// Applies a controller to one event; diffusion sub-steps are collapsed only when provably interior.
template <class Ctrl, class Sink>
inline void drive(Ctrl& c, const PathEvent& e, Sink& s, bool allow_collapse) {
    if (allow_collapse && e.kind == EventKind::diffusion && c.collapsible(e)) {
        c.move(Move{e.t, e.t, e.dx, false}, s);
        return;
    }
    for_each_move(e, [&](const Move& m) { c.move(m, s); });
}

/// Surplus, regulators and path value along one controlled path.
struct ControlledTrajectory {
    std::vector<double> times;
    std::vector<double> X;
    std::vector<double> U;
    std::vector<double> L;
    std::vector<double> R;
    std::vector<double> increment_start;  // == times[k] for atoms
    double barrier = 0.0;
    double start = 0.0;

    std::size_t size() const { return times.size(); }
};

/// Sink that records a ControlledTrajectory; X is interpolated inside the current move.
class TrajectoryRecorder {
public:
    explicit TrajectoryRecorder(ControlledTrajectory& out) : out_(out) {}

    void begin_move(const Move& m) {
        move_ = m;
        x_before_ = x_.value();
        x_.add(m.dx);
    }

    void step(double ts, double t, double U, double dL, double dR) {
        L_.add(dL);
        R_.add(dR);
        // Steps strictly before the end of an instantaneous move precede it.
        double X = x_.value();
        if (t < move_.t1) X = move_.linear ? x_before_ + move_.dx * (t - move_.t0) / (move_.t1 - move_.t0) : x_before_;
        out_.times.push_back(t);
        out_.X.push_back(X);
        out_.U.push_back(U);
        out_.L.push_back(L_.value());
        out_.R.push_back(R_.value());
        out_.increment_start.push_back(ts);
    }

private:
    ControlledTrajectory& out_;
    CompensatedSum x_, L_, R_;
    Move move_{0.0, 0.0, 0.0, false};
    double x_before_ = 0.0;
};

template <class Ctrl>
inline ControlledTrajectory control_path(Ctrl& c, const SamplePath& path, double x, double barrier) {
    ControlledTrajectory tr;
    tr.barrier = barrier;
    tr.start = x;
    TrajectoryRecorder rec(tr);
    c.start(x, rec);
    for (const auto& e : path.events)
        for_each_move(e, [&](const Move& m) {
            rec.begin_move(m);
            c.move(m, rec);
        });
    return tr;
}

inline ControlledTrajectory doubly_reflect(const SamplePath& path, double x, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("doubly_reflect requires a > 0; use pi_zero for a = 0");
    DoubleBarrier c(a);
    return control_path(c, path, x, a);
}

/// Barrier-0 strategy; the path must carry no Gaussian part.
inline ControlledTrajectory pi_zero(const SamplePath& path, double x) {
    for (const auto& e : path.events)
        if (e.kind == EventKind::diffusion) throw std::invalid_argument("pi_zero requires bounded variation paths");
    PiZero c;
    return control_path(c, path, x, 0.0);
}

/// CSV dump with columns time, U, L, R.
inline void write_trajectory_csv(std::ostream& os, const ControlledTrajectory& tr) {
    os << "time,U,L,R\n";
    os.precision(17);
    for (std::size_t k = 0; k < tr.size(); ++k) os << tr.times[k] << ',' << tr.U[k] << ',' << tr.L[k] << ',' << tr.R[k] << '\n';
}

struct ReflectedPoint {
    double t;
    double Y;
};

/// Y^a_t = X_t - max(sup_{s<=t} X_s - a, 0) with X started at x, sampled at every move end and touch.
inline std::vector<ReflectedPoint> reflect_above(const SamplePath& path, double x, double a) {
    std::vector<ReflectedPoint> out;
    double y = std::min(x, a);
    out.push_back({0.0, y});
    for (const auto& e : path.events)
        for_each_move(e, [&](const Move& m) {
            const double target = y + m.dx;
            if (target > a && m.linear) {
                const double ts = DoubleBarrier::touch_time(m, a - y);
                if (ts > m.t0) out.push_back({ts, a});
            }
            y = std::min(target, a);
            out.push_back({m.t1, y});
        });
    return out;
}

/// First-passage times; std::nullopt encodes +infinity.
struct HittingReport {
    std::optional<double> tau_plus;
    std::optional<double> tau_minus;
    std::optional<double> kappa;
};

/**
 * tau_plus: first t with x + X_t > up. tau_minus: first t with x + X_t < down.
 * kappa: first t with Y^a_t < down where Y^a is reflected from above at a.
 */
inline HittingReport hitting_times(const SamplePath& path, double x, double up, double down, double a) {
    HittingReport r;
    double z = x;
    double y = std::min(x, a);
    if (z > up) r.tau_plus = 0.0;
    if (z < down) r.tau_minus = 0.0;
    if (y < down) r.kappa = 0.0;
    for (const auto& e : path.events) {
        if (r.tau_plus && r.tau_minus && r.kappa) break;
        for_each_move(e, [&](const Move& m) {
            const double zt = z + m.dx;
            if (!r.tau_plus && zt > up) r.tau_plus = m.linear ? DoubleBarrier::touch_time(m, up - z) : m.t1;
            if (!r.tau_minus && zt < down) r.tau_minus = m.linear ? DoubleBarrier::touch_time(m, down - z) : m.t1;
            const double yt = y + m.dx;
            if (!r.kappa && yt < down) r.kappa = m.linear ? DoubleBarrier::touch_time(m, down - y) : m.t1;
            z = zt;
            y = std::min(yt, a);
        });
    }
    return r;
}

/// Paired trajectories for barriers a and a + eps on one path, sampled at every move end.
struct BarrierShiftRun {
    std::vector<double> times;
    std::vector<double> diff_U;  // U^{a+eps} - U^a
    std::vector<double> diff_L;  // L^a - L^{a+eps}
    std::vector<double> diff_R;  // R^a - R^{a+eps}
    std::vector<double> L_a;
    std::vector<double> R_a;
};

/// Paired trajectories for starts x and x + eps under one barrier.
struct InitialShiftRun {
    std::vector<double> times;
    std::vector<double> diff_L;  // L^{(x+eps)} - L^{(x)}
    std::vector<double> diff_R;  // R^{(x)} - R^{(x+eps)}
    std::vector<double> diff_U;  // U^{(x+eps)} - U^{(x)}
};

namespace detail {
struct RegulatorTotals {
    CompensatedSum L, R;
    void step(double, double, double, double dL, double dR) {
        L.add(dL);
        R.add(dR);
    }
};
}  // namespace detail

inline BarrierShiftRun coupled_barrier_shift(const SamplePath& path, double x, double a, double eps) {
    if (!(a > 0.0) || !(eps >= 0.0)) throw std::invalid_argument("coupled_barrier_shift: need a > 0, eps >= 0");
    DoubleBarrier lo(a), hi(a + eps);
    detail::RegulatorTotals slo, shi;
    BarrierShiftRun run;
    auto record = [&](double t) {
        run.times.push_back(t);
        run.diff_U.push_back(hi.state() - lo.state());
        run.diff_L.push_back(slo.L.value() - shi.L.value());
        run.diff_R.push_back(slo.R.value() - shi.R.value());
        run.L_a.push_back(slo.L.value());
        run.R_a.push_back(slo.R.value());
    };
    lo.start(x, slo);
    hi.start(x, shi);
    record(0.0);
    for (const auto& e : path.events)
        for_each_move(e, [&](const Move& m) {
            lo.move(m, slo);
            hi.move(m, shi);
            record(m.t1);
        });
    return run;
}

inline InitialShiftRun coupled_initial_shift(const SamplePath& path, double x, double eps, double a) {
    if (!(a > 0.0) || !(eps >= 0.0) || x < 0.0 || x + eps > a)
        throw std::invalid_argument("coupled_initial_shift: need 0 <= x <= x + eps <= a");
    DoubleBarrier lo(a), hi(a);
    detail::RegulatorTotals slo, shi;
    InitialShiftRun run;
    auto record = [&](double t) {
        run.times.push_back(t);
        run.diff_L.push_back(shi.L.value() - slo.L.value());
        run.diff_R.push_back(slo.R.value() - shi.R.value());
        run.diff_U.push_back(hi.state() - lo.state());
    };
    lo.start(x, slo);
    hi.start(x + eps, shi);
    record(0.0);
    for (const auto& e : path.events)
        for_each_move(e, [&](const Move& m) {
            lo.move(m, slo);
            hi.move(m, shi);
            record(m.t1);
        });
    return run;
}

/// Largest violation of each pathwise property; all are 0 when the property holds exactly.
struct BarrierShiftViolations {
    double diff_U_range = 0.0;          // U^{a+eps} - U^a in [0, eps]
    double diff_R_monotone = 0.0;       // R^a - R^{a+eps} non-decreasing
    double diff_L_monotone = 0.0;       // L^a - L^{a+eps} non-decreasing
    double diff_L_cycle_budget = 0.0;   // growth per dividend phase <= eps - diff_U at phase start
    double diff_R_cycle_budget = 0.0;   // growth per injection phase <= diff_U at phase start
    double injection_phase_U = 0.0;     // diff_U non-increasing within [0, start value]
    double dividend_phase_U = 0.0;      // diff_U non-decreasing within [start value, eps]
    std::size_t dividend_phases = 0;
    std::size_t injection_phases = 0;

    double worst() const {
        return std::max({diff_U_range, diff_R_monotone, diff_L_monotone, diff_L_cycle_budget, diff_R_cycle_budget,
                         injection_phase_U, dividend_phase_U});
    }
};

/**
 * Phases alternate, starting with injection: a dividend phase opens at the
 * first record where L^a strictly increases, an injection phase at the first
 * record where R^a strictly increases. The opening record belongs to the new
 * phase; the phase start value is the record before it.
 */
inline BarrierShiftViolations check_barrier_shift(const BarrierShiftRun& r, double eps) {
    BarrierShiftViolations v;
    const std::size_t n = r.times.size();
    if (n == 0) return v;
    auto bump = [](double& slot, double amount) { slot = std::max(slot, amount); };
    // Start values are the left limits at time 0, where both copies coincide.
    bool dividend = r.L_a[0] > 0.0;
    double start_U = 0.0, start_L = 0.0, start_R = 0.0;
    if (dividend)
        ++v.dividend_phases;
    else
        ++v.injection_phases;
    for (std::size_t k = 0; k < n; ++k) {
        bump(v.diff_U_range, -r.diff_U[k]);
        bump(v.diff_U_range, r.diff_U[k] - eps);
        if (k > 0) {
            bump(v.diff_R_monotone, r.diff_R[k - 1] - r.diff_R[k]);
            bump(v.diff_L_monotone, r.diff_L[k - 1] - r.diff_L[k]);
            const bool opens_dividend = !dividend && r.L_a[k] > r.L_a[k - 1];
            const bool opens_injection = dividend && r.R_a[k] > r.R_a[k - 1];
            if (opens_dividend || opens_injection) {
                dividend = opens_dividend;
                start_U = r.diff_U[k - 1];
                start_L = r.diff_L[k - 1];
                start_R = r.diff_R[k - 1];
                if (dividend)
                    ++v.dividend_phases;
                else
                    ++v.injection_phases;
            } else {
                const double du = r.diff_U[k] - r.diff_U[k - 1];
                if (dividend)
                    bump(v.dividend_phase_U, -du);
                else
                    bump(v.injection_phase_U, du);
            }
        }
        if (dividend) {
            bump(v.diff_L_cycle_budget, (r.diff_L[k] - start_L) - (eps - start_U));
            bump(v.dividend_phase_U, start_U - r.diff_U[k]);
        } else {
            bump(v.diff_R_cycle_budget, (r.diff_R[k] - start_R) - start_U);
            bump(v.injection_phase_U, r.diff_U[k] - start_U);
        }
    }
    return v;
}

struct InitialShiftViolations {
    double diff_L_range = 0.0;     // in [0, eps]
    double diff_L_monotone = 0.0;  // non-decreasing
    double diff_R_range = 0.0;
    double diff_R_monotone = 0.0;
    double diff_U_range = 0.0;
    double diff_U_identity = 0.0;  // diff_U = eps - diff_L - diff_R
    double merge_persistence = 0.0;  // once the copies meet, all differences freeze

    double worst() const {
        return std::max({diff_L_range, diff_L_monotone, diff_R_range, diff_R_monotone, diff_U_range, diff_U_identity,
                         merge_persistence});
    }
};

inline InitialShiftViolations check_initial_shift(const InitialShiftRun& r, double eps) {
    InitialShiftViolations v;
    auto bump = [](double& slot, double amount) { slot = std::max(slot, amount); };
    bool merged = false;
    double frozen_L = 0.0, frozen_R = 0.0;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        bump(v.diff_L_range, -r.diff_L[k]);
        bump(v.diff_L_range, r.diff_L[k] - eps);
        bump(v.diff_R_range, -r.diff_R[k]);
        bump(v.diff_R_range, r.diff_R[k] - eps);
        bump(v.diff_U_range, -r.diff_U[k]);
        bump(v.diff_U_range, r.diff_U[k] - eps);
        bump(v.diff_U_identity, std::abs(r.diff_U[k] - (eps - r.diff_L[k] - r.diff_R[k])));
        if (k > 0) {
            bump(v.diff_L_monotone, r.diff_L[k - 1] - r.diff_L[k]);
            bump(v.diff_R_monotone, r.diff_R[k - 1] - r.diff_R[k]);
        }
        if (merged) {
            bump(v.merge_persistence, std::abs(r.diff_U[k]));
            bump(v.merge_persistence, std::abs(r.diff_L[k] - frozen_L));
            bump(v.merge_persistence, std::abs(r.diff_R[k] - frozen_R));
        } else if (r.diff_U[k] == 0.0) {
            merged = true;
            frozen_L = r.diff_L[k];
            frozen_R = r.diff_R[k];
        }
    }
    return v;
}

/// Largest breach of 0 <= U <= a, monotone L and R, and U = x + X - L + R.
struct TrajectoryViolations {
    double range = 0.0;
    double monotone = 0.0;
    double identity = 0.0;
    double worst() const { return std::max({range, monotone, identity}); }
};

inline TrajectoryViolations check_trajectory(const ControlledTrajectory& tr) {
    TrajectoryViolations v;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        v.range = std::max({v.range, -tr.U[k], tr.U[k] - tr.barrier});
        if (k > 0) v.monotone = std::max({v.monotone, tr.L[k - 1] - tr.L[k], tr.R[k - 1] - tr.R[k]});
        v.identity = std::max(v.identity, std::abs(tr.U[k] - (tr.start + tr.X[k] - tr.L[k] + tr.R[k])));
    }
    return v;
}

}  // namespace dbarrier
