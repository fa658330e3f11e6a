#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dbarrier/levy_model.hpp"
#include "dbarrier/philox.hpp"

namespace dbarrier {

struct PathSpec {
    double horizon = 1.0;
    double grid_step = 0.01;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;

    void check() const {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be finite and > 0");
        if (!(grid_step > 0.0) || grid_step > horizon) throw std::invalid_argument("grid_step must lie in (0, horizon]");
    }
};

enum class EventKind : std::uint8_t { jump, drift, diffusion };

/**
 * One path increment ending at `t`.
 *
 * jump: instantaneous, dt = 0. drift: linear over (t - dt, t]. diffusion:
 * Gaussian sub-step over (t - dt, t] carrying two uniforms that fix the
 * exact Brownian-bridge maximum and minimum.
 */
struct PathEvent {
    double t = 0.0;
    double dt = 0.0;
    double dx = 0.0;
    double var = 0.0;     // sigma^2 dt
    double reach = 0.0;   // bound on bridge excursion beyond the endpoints
    double u_peak = 0.5;
    double u_trough = 0.5;
    EventKind kind = EventKind::drift;
    bool peak_first = true;

    double t0() const { return t - dt; }

    /// Bridge maximum of the increment over the sub-step, >= max(dx, 0).
    double peak() const { return 0.5 * (dx + std::sqrt(dx * dx - 2.0 * var * std::log(u_peak))); }
    /// Bridge minimum of the increment over the sub-step, <= min(dx, 0).
    double trough() const { return 0.5 * (dx - std::sqrt(dx * dx - 2.0 * var * std::log(u_trough))); }
};

// -ln of the smallest uniform is below 37.43, so peak - max(dx,0) <= sqrt(18.75 var).
inline constexpr double kBridgeReachFactor = 4.330127018922193;

/// Elementary move: instantaneous when t0 == t1 and !linear, else linear in time.
struct Move {
    double t0;
    double t1;
    double dx;
    bool linear;
};

/// Expands an event into elementary moves; diffusion sub-steps become three bridge moves.
template <class F>
inline void for_each_move(const PathEvent& e, F&& f) {
    switch (e.kind) {
    case EventKind::jump:
        f(Move{e.t, e.t, e.dx, false});
        return;
    case EventKind::drift:
        f(Move{e.t - e.dt, e.t, e.dx, true});
        return;
    case EventKind::diffusion: {
        const double hi = e.peak();
        const double lo = e.trough();
        const double first = e.peak_first ? hi : lo;
        const double second = e.peak_first ? lo : hi;
        const double t0 = e.t - e.dt;
        const double t1 = t0 + e.dt / 3.0;
        const double t2 = t0 + 2.0 * e.dt / 3.0;
        f(Move{t1, t1, first, false});
        f(Move{t2, t2, second - first, false});
        f(Move{e.t, e.t, e.dx - second, false});
        return;
    }
    }
}

/**
 * Lazy event generator for one path.
 *
 * Jump arrivals and marks use stream 0, Gaussian draws stream 1, so the
 * jump skeleton does not depend on grid_step.
 */
class PathGenerator {
public:
    PathGenerator(const LevyModel& m, const PathSpec& spec)
        : spec_(spec),
          jumps_(spec.seed, spec.path_index, 0),
          gauss_(spec.seed, spec.path_index, 1),
          drift_(m.linear_drift()),
          sigma_(m.sigma),
          rate_(m.jumps.arrival_rate),
          split_(m.jumps.sign_split),
          pos_(m.jumps.positive),
          neg_(m.jumps.negative) {
        spec_.check();
        draw_next_jump();
    }

    double horizon() const { return spec_.horizon; }

    bool next(PathEvent& e) {
        if (pending_jump_) {
            pending_jump_ = false;
            e = PathEvent{};
            e.kind = EventKind::jump;
            e.t = next_jump_;
            e.dx = next_size_;
            t_ = next_jump_;
            draw_next_jump();
            return true;
        }
        if (steps_left_ == 0) {
            if (t_ >= spec_.horizon) return false;
            seg_start_ = t_;
            seg_end_ = std::min(next_jump_, spec_.horizon);
            const double len = seg_end_ - seg_start_;
            if (sigma_ > 0.0) {
                steps_total_ = static_cast<std::uint64_t>(std::ceil(len / spec_.grid_step));
                if (steps_total_ == 0) steps_total_ = 1;
                sub_ = len / double(steps_total_);
                sd_ = sigma_ * std::sqrt(sub_);
            } else {
                steps_total_ = 1;
                sub_ = len;
                sd_ = 0.0;
            }
            steps_left_ = steps_total_;
        }
        const std::uint64_t k = steps_total_ - steps_left_ + 1;
        const double t_end = (k == steps_total_) ? seg_end_ : seg_start_ + double(k) * sub_;
        e = PathEvent{};
        e.t = t_end;
        e.dt = t_end - t_;
        if (sigma_ > 0.0) {
            e.kind = EventKind::diffusion;
            e.dx = drift_ * e.dt + sd_ * gauss_.normal();
            e.var = sd_ * sd_;
            e.reach = kBridgeReachFactor * sd_;
            e.u_peak = gauss_.uniform();
            const std::uint64_t bits = gauss_.next_u64();
            e.u_trough = RandomStream::to_open_unit(bits);
            e.peak_first = (bits & 1u) != 0u;
        } else {
            e.kind = EventKind::drift;
            e.dx = drift_ * e.dt;
        }
        t_ = t_end;
        --steps_left_;
        if (steps_left_ == 0 && seg_end_ == next_jump_ && next_jump_ <= spec_.horizon) pending_jump_ = true;
        return true;
    }

private:
    void draw_next_jump() {
        if (!(rate_ > 0.0)) {
            next_jump_ = std::numeric_limits<double>::infinity();
            return;
        }
        const double gap = jumps_.exponential(rate_);
        const double u_sign = jumps_.uniform();
        const double u_comp = jumps_.uniform();
        const double u_size = jumps_.uniform();
        next_jump_ = t_ + gap;
        next_size_ = (u_sign < split_) ? pos_.sample(u_comp, u_size) : -neg_.sample(u_comp, u_size);
    }

    PathSpec spec_;
    RandomStream jumps_;
    RandomStream gauss_;
    double drift_, sigma_, rate_, split_;
    JumpLaw pos_, neg_;

    double t_ = 0.0;
    double next_jump_ = 0.0;
    double next_size_ = 0.0;
    bool pending_jump_ = false;
    double seg_start_ = 0.0, seg_end_ = 0.0, sub_ = 0.0, sd_ = 0.0;
    std::uint64_t steps_total_ = 0, steps_left_ = 0;
};

/**
 * Event-ordered path on [0, terminal_time], generated net of X_0.
 *
 * Times are non-decreasing; a tie is a continuous piece ending at a jump
 * time followed by that jump.
 */
struct SamplePath {
    std::vector<PathEvent> events;
    double terminal_time = 0.0;
};

inline SamplePath simulate_path(const LevyModel& m, const PathSpec& spec) {
    m.check();
    PathGenerator gen(m, spec);
    SamplePath p;
    p.terminal_time = spec.horizon;
    PathEvent e;
    while (gen.next(e)) p.events.push_back(e);
    return p;
}

/// X_t with the cadlag convention; a drift piece straddling t counts pro rata.
inline double path_value(const SamplePath& p, double t) {
    if (!(t >= 0.0) || t > p.terminal_time) throw std::out_of_range("path_value: t outside [0, horizon]");
    double x = 0.0;
    for (const auto& e : p.events) {
        if (e.t <= t) {
            x += e.dx;
            continue;
        }
        if (e.kind == EventKind::drift && e.t0() < t) x += e.dx * (t - e.t0()) / e.dt;
        break;
    }
    return x;
}

inline const char* event_kind_name(EventKind k) {
    switch (k) {
    case EventKind::jump: return "jump";
    case EventKind::drift: return "drift";
    case EventKind::diffusion: return "diffusion";
    }
    return "?";
}

/// CSV dump with columns time, increment_type, increment_value.
inline void write_path_csv(std::ostream& os, const SamplePath& p) {
    os << "time,increment_type,increment_value\n";
    os.precision(17);
    for (const auto& e : p.events) os << e.t << ',' << event_kind_name(e.kind) << ',' << e.dx << '\n';
}

}  // namespace dbarrier
