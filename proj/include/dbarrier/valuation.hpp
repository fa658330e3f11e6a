#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <variant>
#include <vector>

#include "dbarrier/estimate.hpp"
#include "dbarrier/levy_model.hpp"
#include "dbarrier/path_engine.hpp"
#include "dbarrier/reflection.hpp"
#include "dbarrier/strategies.hpp"

namespace dbarrier {

/// Simulation settings shared by every estimator. A zero horizon means ln(1/eps_disc)/q.
struct SimConfig {
    double grid_step = 0.01;
    std::uint64_t seed = 1;
    double eps_disc = 1e-6;
    double horizon = 0.0;
    unsigned workers = 0;

    double horizon_for(double q) const { return horizon > 0.0 ? horizon : std::log(1.0 / eps_disc) / q; }

    PathSpec path(double q, std::uint64_t index) const {
        PathSpec s;
        s.horizon = horizon_for(q);
        s.grid_step = std::min(grid_step, s.horizon);
        s.seed = seed;
        s.path_index = index;
        return s;
    }

    SimConfig with_seed(std::uint64_t s) const {
        SimConfig c = *this;
        c.seed = s;
        return c;
    }
};

enum class Component { dividends, injections };

/// Realized sum of e^{-q t} dL (or dR) over the trajectory, atoms at 0 with weight 1.
inline double discounted_integral(const ControlledTrajectory& tr, double q, Component c) {
    CompensatedSum s;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double prev = k == 0 ? 0.0 : (c == Component::dividends ? tr.L[k - 1] : tr.R[k - 1]);
        const double cur = c == Component::dividends ? tr.L[k] : tr.R[k];
        const double d = cur - prev;
        if (d != 0.0) s.add(d * discount_weight(q, tr.increment_start[k], tr.times[k]));
    }
    return s.value();
}

/// Sink accumulating discounted dividends and injections.
struct DiscountSink {
    double q = 0.0;
    CompensatedSum L, R;

    void step(double ts, double t, double, double dL, double dR) {
        if (dL == 0.0 && dR == 0.0) return;
        const double w = discount_weight(q, ts, t);
        if (dL != 0.0) L.add(dL * w);
        if (dR != 0.0) R.add(dR * w);
    }
};

namespace detail {

/// Drives several trackers along one path, expanding each diffusion sub-step at most once.
template <class Tracker, class Stop>
inline void run_trackers(PathGenerator& gen, std::vector<Tracker>& trackers, bool allow_collapse, Stop&& done) {
    PathEvent e;
    std::array<Move, 3> moves{};
    while (gen.next(e)) {
        int nm = -1;
        for (auto& tr : trackers) {
            if (tr.finished()) continue;
            if (e.kind != EventKind::diffusion) {
                tr.move(e.kind == EventKind::jump ? Move{e.t, e.t, e.dx, false} : Move{e.t - e.dt, e.t, e.dx, true});
                continue;
            }
            if (allow_collapse && tr.collapsible(e)) {
                tr.move(Move{e.t, e.t, e.dx, false});
                continue;
            }
            if (nm < 0) {
                nm = 0;
                for_each_move(e, [&](const Move& m) { moves[nm++] = m; });
            }
            for (int k = 0; k < nm && !tr.finished(); ++k) tr.move(moves[k]);
        }
        if (done()) return;
    }
}

/// A controller plus its discount sink, in the tracker shape used by run_trackers.
struct ControlledSink {
    AnyController ctrl;
    DiscountSink sink;

    bool finished() const { return false; }
    bool collapsible(const PathEvent& e) const {
        return std::visit([&](const auto& c) { return c.collapsible(e); }, ctrl);
    }
    void move(const Move& m) {
        std::visit([&](auto& c) { c.move(m, sink); }, ctrl);
    }
};

}  // namespace detail

/**
 * Discounted dividends and injections for several (controller, start)
 * pairs on common paths. Column 2j holds dividends of pair j, 2j+1 injections.
 */
inline SampleMatrix simulate_npv(const LevyModel& m, const ProblemParams& pp, const std::vector<AnyController>& ctrls,
                                 const std::vector<double>& starts, std::size_t n_paths, const SimConfig& cfg,
                                 bool allow_collapse = true) {
    m.check();
    pp.check();
    return run_batch(n_paths, 2 * ctrls.size(), cfg.workers, [&](std::uint64_t i, double* row) {
        PathGenerator gen(m, cfg.path(pp.q, i));
        std::vector<detail::ControlledSink> tr;
        tr.reserve(ctrls.size());
        for (std::size_t j = 0; j < ctrls.size(); ++j) {
            tr.push_back({ctrls[j], DiscountSink{pp.q, {}, {}}});
            std::visit([&](auto& c) { c.start(starts[j], tr.back().sink); }, tr.back().ctrl);
        }
        detail::run_trackers(gen, tr, allow_collapse, [] { return false; });
        for (std::size_t j = 0; j < tr.size(); ++j) {
            row[2 * j] = tr[j].sink.L.value();
            row[2 * j + 1] = tr[j].sink.R.value();
        }
    });
}

struct NpvEstimate {
    MCEstimate vL, vR, v;
};

struct NpvCase {
    double x;
    double a;
};

/**
 * Double barrier NPVs for many (x, a) cases on common random numbers.
 *
 * Starts outside [0, a] are simulated at the nearer boundary and shifted
 * by the exact offset x - a (dividends) or -x (injections).
 */
class NpvBatch {
public:
    NpvBatch(const LevyModel& m, const ProblemParams& pp, std::vector<NpvCase> cases, std::size_t n_paths,
             const SimConfig& cfg)
        : cases_(std::move(cases)), q_(pp.q), beta_(pp.beta), horizon_(cfg.horizon_for(pp.q)) {
        const bool bounded = classify_variation(m).bounded;
        std::map<std::pair<double, double>, std::size_t> index;
        std::vector<AnyController> ctrls;
        std::vector<double> starts;
        for (const auto& c : cases_) {
            if (!(c.a >= 0.0)) throw ModelError("barrier must be >= 0");
            if (c.a == 0.0 && !bounded) throw ModelError("barrier 0 requires bounded variation paths");
            const double xe = std::clamp(c.x, 0.0, c.a);
            off_L_.push_back(std::max(c.x - c.a, 0.0));
            off_R_.push_back(std::max(-c.x, 0.0));
            auto key = std::make_pair(xe, c.a);
            auto it = index.find(key);
            if (it == index.end()) {
                it = index.emplace(key, ctrls.size()).first;
                ctrls.push_back(c.a > 0.0 ? AnyController(DoubleBarrier(c.a)) : AnyController(PiZero{}));
                starts.push_back(xe);
            }
            slot_.push_back(it->second);
        }
        samples_ = simulate_npv(m, pp, ctrls, starts, n_paths, cfg);
    }

    std::size_t size() const { return cases_.size(); }
    const NpvCase& case_at(std::size_t c) const { return cases_[c]; }
    const SampleMatrix& samples() const { return samples_; }

    MCEstimate vL(std::size_t c) const { return with_tail(samples_.estimate(2 * slot_[c], off_L_[c]), c); }
    MCEstimate vR(std::size_t c) const { return with_tail(samples_.estimate(2 * slot_[c] + 1, off_R_[c]), c); }
    MCEstimate v(std::size_t c) const { return value_combination({{c, 1.0}}); }

    NpvEstimate npv(std::size_t c) const { return {vL(c), vR(c), v(c)}; }

    /// sum_k w_k v(case_k), paired per path.
    MCEstimate value_combination(const std::vector<std::pair<std::size_t, double>>& terms) const {
        return combine(terms, 1.0, beta_);
    }

    MCEstimate dividend_combination(const std::vector<std::pair<std::size_t, double>>& terms) const {
        return combine(terms, 1.0, 0.0);
    }

    MCEstimate injection_combination(const std::vector<std::pair<std::size_t, double>>& terms) const {
        return combine(terms, 0.0, -1.0);
    }

private:
    MCEstimate combine(const std::vector<std::pair<std::size_t, double>>& terms, double wl, double wr) const {
        std::vector<std::size_t> cols;
        std::vector<double> w;
        double offset = 0.0;
        double tail_a = 0.0;
        for (const auto& [c, k] : terms) {
            if (wl != 0.0) {
                cols.push_back(2 * slot_[c]);
                w.push_back(k * wl);
                offset += k * wl * off_L_[c];
            }
            if (wr != 0.0) {
                cols.push_back(2 * slot_[c] + 1);
                w.push_back(-k * wr);
                offset -= k * wr * off_R_[c];
            }
            tail_a += std::abs(k) * (std::abs(wl) + std::abs(wr)) * cases_[c].a;
        }
        MCEstimate e = samples_.combination(cols, w, offset);
        double scale = 0.0;
        for (const auto& [c, k] : terms) {
            const double l = samples_.estimate(2 * slot_[c]).mean;
            const double r = samples_.estimate(2 * slot_[c] + 1).mean;
            scale += std::abs(k) * (std::abs(wl) * l + std::abs(wr) * r);
        }
        e.truncation_bound = std::exp(-q_ * horizon_) * (scale + tail_a + 3.0 * e.stderr);
        return e;
    }

    // Restart value after the horizon differs from the start value by at most a per component.
    MCEstimate with_tail(MCEstimate e, std::size_t c) const {
        e.truncation_bound = std::exp(-q_ * horizon_) * (std::abs(e.mean) + cases_[c].a + 3.0 * e.stderr);
        return e;
    }

    std::vector<NpvCase> cases_;
    std::vector<std::size_t> slot_;
    std::vector<double> off_L_, off_R_;
    double q_, beta_, horizon_;
    SampleMatrix samples_;
};

inline NpvEstimate estimate_npv(const LevyModel& m, const ProblemParams& pp, double x, double a, std::size_t n_paths,
                                const SimConfig& cfg) {
    NpvBatch b(m, pp, {{x, a}}, n_paths, cfg);
    return b.npv(0);
}

namespace detail {

/// Two-sided exit of x + X from [0, a] with strict crossings.
struct ExitTracker {
    double z;
    double a;
    double q;
    bool done = false;
    double up = 0.0, down = 0.0, occ = 0.0;

    bool finished() const { return done; }
    bool collapsible(const PathEvent& e) const {
        return z + std::max(e.dx, 0.0) + e.reach <= a && z + std::min(e.dx, 0.0) - e.reach >= 0.0;
    }
    void move(const Move& m) {
        const double zt = z + m.dx;
        if (zt > a) {
            finish(m.linear ? DoubleBarrier::touch_time(m, a - z) : m.t1, true);
        } else if (zt < 0.0) {
            finish(m.linear ? DoubleBarrier::touch_time(m, -z) : m.t1, false);
        }
        z = zt;
    }
    void finish(double t, bool upward) {
        done = true;
        const double d = std::exp(-q * t);
        (upward ? up : down) = d;
        occ = -std::expm1(-q * t) / q;
    }
};

}  // namespace detail

struct ExitEstimate {
    MCEstimate phibar;
    MCEstimate phiunder;
    MCEstimate occupation;    // E_x of the discounted time spent in [0, a] before exit
    double cov_bar_under = 0.0;  // covariance of the phibar and phiunder means
};

/// Two-sided exit Laplace transforms at several starts on common paths.
inline std::vector<ExitEstimate> exit_laplace_batch(const LevyModel& m, const ProblemParams& pp,
                                                    const std::vector<double>& xs, double a, std::size_t n_paths,
                                                    const SimConfig& cfg) {
    m.check();
    pp.check();
    for (double x : xs)
        if (x < 0.0 || x > a) throw std::invalid_argument("exit_laplace: x outside [0, a]");
    const double T = cfg.horizon_for(pp.q);
    const double occ_full = -std::expm1(-pp.q * T) / pp.q;
    const std::size_t k = xs.size();
    SampleMatrix s = run_batch(n_paths, 3 * k, cfg.workers, [&](std::uint64_t i, double* row) {
        PathGenerator gen(m, cfg.path(pp.q, i));
        std::vector<detail::ExitTracker> tr;
        for (double x : xs) tr.push_back({x, a, pp.q});
        detail::run_trackers(gen, tr, true, [&] {
            return std::all_of(tr.begin(), tr.end(), [](const auto& t) { return t.done; });
        });
        for (std::size_t j = 0; j < k; ++j) {
            row[3 * j] = tr[j].up;
            row[3 * j + 1] = tr[j].down;
            row[3 * j + 2] = tr[j].done ? tr[j].occ : occ_full;
        }
    });
    const double tail = std::exp(-pp.q * T);
    std::vector<ExitEstimate> out;
    for (std::size_t j = 0; j < k; ++j) {
        ExitEstimate e;
        e.phibar = s.estimate(3 * j);
        e.phiunder = s.estimate(3 * j + 1);
        e.occupation = s.estimate(3 * j + 2);
        e.phibar.truncation_bound = tail;
        e.phiunder.truncation_bound = tail;
        e.occupation.truncation_bound = tail / pp.q;
        e.cov_bar_under = s.mean_covariance(3 * j, 3 * j + 1);
        out.push_back(e);
    }
    return out;
}

inline ExitEstimate exit_laplace(const LevyModel& m, const ProblemParams& pp, double x, double a, std::size_t n_paths,
                                 const SimConfig& cfg) {
    return exit_laplace_batch(m, pp, {x}, a, n_paths, cfg).front();
}

namespace detail {

/// Records e^{-q t} at the first t with drawdown D_t > level for ascending levels.
struct DrawdownTracker {
    const std::vector<double>* levels;
    double q;
    double* out;
    double X = 0.0, M = 0.0;
    std::size_t next = 0;

    bool finished() const { return next >= levels->size(); }
    double D() const { return M - X; }
    // The running maximum needs the bridge peak, so sub-steps are never collapsed.
    bool collapsible(const PathEvent&) const { return false; }
    void move(const Move& m) {
        if (m.linear && m.dx < 0.0) {
            const double d0 = D();
            const double d1 = d0 - m.dx;
            while (next < levels->size() && d1 > (*levels)[next]) {
                const double f = std::clamp(((*levels)[next] - d0) / (-m.dx), 0.0, 1.0);
                out[next++] = std::exp(-q * (m.t0 + f * (m.t1 - m.t0)));
            }
            X += m.dx;
            return;
        }
        X += m.dx;
        M = std::max(M, X);
        while (next < levels->size() && D() > (*levels)[next]) out[next++] = std::exp(-q * m.t1);
    }
};

/// Records e^{-q t} at the first t with V_t > level, V injection-reflected at 0 from x.
struct DrawupTracker {
    const std::vector<double>* levels;
    double q;
    double* out;
    double V;
    std::size_t next = 0;

    bool finished() const { return next >= levels->size(); }
    bool collapsible(const PathEvent& e) const {
        return V + std::max(e.dx, 0.0) + e.reach <= (*levels)[next] && V + std::min(e.dx, 0.0) - e.reach >= 0.0;
    }
    void move(const Move& m) {
        const double v1 = V + m.dx;
        if (m.linear && m.dx > 0.0) {
            while (next < levels->size() && v1 > (*levels)[next]) {
                const double f = std::clamp(((*levels)[next] - V) / m.dx, 0.0, 1.0);
                out[next++] = std::exp(-q * (m.t0 + f * (m.t1 - m.t0)));
            }
            V = v1;
            return;
        }
        V = std::max(v1, 0.0);
        while (next < levels->size() && V > (*levels)[next]) out[next++] = std::exp(-q * m.t1);
    }
};

inline void check_grid(const std::vector<double>& g) {
    if (g.empty()) throw std::invalid_argument("barrier grid must be nonempty");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0)) throw std::invalid_argument("barrier grid values must be > 0");
        if (i > 0 && !(g[i] > g[i - 1])) throw std::invalid_argument("barrier grid must be strictly increasing");
    }
}

}  // namespace detail

/// nu(a) on an ascending grid, one common set of paths; pathwise non-increasing in a.
inline std::vector<MCEstimate> nu_curve(const LevyModel& m, const ProblemParams& pp, const std::vector<double>& grid,
                                        std::size_t n_paths, const SimConfig& cfg) {
    m.check();
    pp.check();
    detail::check_grid(grid);
    SampleMatrix s = run_batch(n_paths, grid.size(), cfg.workers, [&](std::uint64_t i, double* row) {
        PathGenerator gen(m, cfg.path(pp.q, i));
        std::vector<detail::DrawdownTracker> tr{{&grid, pp.q, row}};
        detail::run_trackers(gen, tr, true, [&] { return tr[0].finished(); });
    });
    const double tail = std::exp(-pp.q * cfg.horizon_for(pp.q));
    std::vector<MCEstimate> out;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        out.push_back(s.estimate(j));
        out.back().truncation_bound = tail;
    }
    return out;
}

inline MCEstimate estimate_nu(const LevyModel& m, const ProblemParams& pp, double a, std::size_t n_paths,
                              const SimConfig& cfg) {
    return nu_curve(m, pp, {a}, n_paths, cfg).front();
}

/// nu-bar_x(a) on an ascending grid: discounted time of the first dividend under pi^a.
inline std::vector<MCEstimate> nu_bar_curve(const LevyModel& m, const ProblemParams& pp, double x,
                                            const std::vector<double>& grid, std::size_t n_paths,
                                            const SimConfig& cfg) {
    m.check();
    pp.check();
    detail::check_grid(grid);
    if (x < 0.0) throw std::invalid_argument("nu_bar requires x >= 0");
    SampleMatrix s = run_batch(n_paths, grid.size(), cfg.workers, [&](std::uint64_t i, double* row) {
        std::size_t k = 0;
        while (k < grid.size() && x > grid[k]) row[k++] = 1.0;
        if (k == grid.size()) return;
        std::vector<double> rest(grid.begin() + long(k), grid.end());
        PathGenerator gen(m, cfg.path(pp.q, i));
        std::vector<detail::DrawupTracker> tr{{&rest, pp.q, row + k, x}};
        detail::run_trackers(gen, tr, true, [&] { return tr[0].finished(); });
    });
    const double tail = std::exp(-pp.q * cfg.horizon_for(pp.q));
    std::vector<MCEstimate> out;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        out.push_back(s.estimate(j));
        out.back().truncation_bound = tail;
    }
    return out;
}

inline MCEstimate estimate_nu_bar(const LevyModel& m, const ProblemParams& pp, double x, double a,
                                  std::size_t n_paths, const SimConfig& cfg) {
    return nu_bar_curve(m, pp, x, {a}, n_paths, cfg).front();
}

}  // namespace dbarrier
