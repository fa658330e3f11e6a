#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include "dbarrier/reflection.hpp"

namespace dbarrier {

/// Pays the excess over a at review times k*delta; injects continuously to keep U >= 0.
class PeriodicReview {
public:
    PeriodicReview(double a, double delta) : a_(a), delta_(delta) {
        if (!(a >= 0.0) || !(delta > 0.0)) throw std::invalid_argument("periodic review needs a >= 0, delta > 0");
    }

    double state() const { return u_; }

    template <class Sink>
    void start(double x, Sink& s) {
        double dR = 0.0;
        u_ = x;
        if (u_ < 0.0) {
            dR = -u_;
            u_ = 0.0;
        }
        double dL = 0.0;
        if (u_ > a_) {
            dL = u_ - a_;
            u_ = a_;
        }
        s.step(0.0, 0.0, u_, dL, dR);
        k_ = 1;
    }

    bool collapsible(const PathEvent& e) const {
        return next_review() >= e.t && u_ + std::min(e.dx, 0.0) - e.reach >= 0.0;
    }

    template <class Sink>
    void move(const Move& m, Sink& s) {
        if (!m.linear) {
            while (next_review() < m.t1) review(s);
            inject_instant(m.t1, m.dx, s);
        } else {
            double t = m.t0;
            double consumed = 0.0;
            const double len = m.t1 - m.t0;
            while (next_review() < m.t1) {
                const double tau = next_review();
                const double part = m.dx * (tau - m.t0) / len - consumed;
                consumed += part;
                inject_linear(Move{t, tau, part, true}, s);
                review(s);
                t = tau;
            }
            inject_linear(Move{t, m.t1, m.dx - consumed, true}, s);
        }
        if (next_review() == m.t1) review(s);
    }

private:
    double next_review() const { return double(k_) * delta_; }

    template <class Sink>
    void review(Sink& s) {
        const double tau = next_review();
        ++k_;
        if (u_ > a_) {
            const double dL = u_ - a_;
            u_ = a_;
            s.step(tau, tau, u_, dL, 0.0);
        }
    }

    template <class Sink>
    void inject_instant(double t, double dx, Sink& s) {
        const double y = u_ + dx;
        if (y < 0.0) {
            u_ = 0.0;
            s.step(t, t, u_, 0.0, -y);
        } else {
            u_ = y;
            s.step(t, t, u_, 0.0, 0.0);
        }
    }

    template <class Sink>
    void inject_linear(const Move& m, Sink& s) {
        if (!(m.t1 > m.t0)) {
            inject_instant(m.t1, m.dx, s);
            return;
        }
        const double y = u_ + m.dx;
        if (y < 0.0) {
            const double ts = DoubleBarrier::touch_time(m, -u_);
            if (ts > m.t0) s.step(ts, ts, 0.0, 0.0, 0.0);
            u_ = 0.0;
            s.step(ts, m.t1, u_, 0.0, -y);
        } else {
            u_ = y;
            s.step(m.t1, m.t1, u_, 0.0, 0.0);
        }
    }

    double a_, delta_;
    double u_ = 0.0;
    std::uint64_t k_ = 1;
};

/// Pays a lump U - b whenever U reaches a; injects continuously to keep U >= 0.
class Hysteresis {
public:
    Hysteresis(double a, double b) : a_(a), b_(b) {
        if (!(a > 0.0) || !(b >= 0.0) || !(b < a)) throw std::invalid_argument("hysteresis needs 0 <= b < a");
    }

    double state() const { return u_; }

    template <class Sink>
    void start(double x, Sink& s) {
        if (x < 0.0) {
            u_ = 0.0;
            s.step(0.0, 0.0, u_, 0.0, -x);
        } else if (x >= a_) {
            u_ = b_;
            s.step(0.0, 0.0, u_, x - b_, 0.0);
        } else {
            u_ = x;
            s.step(0.0, 0.0, u_, 0.0, 0.0);
        }
    }

    bool collapsible(const PathEvent& e) const {
        return u_ + std::max(e.dx, 0.0) + e.reach < a_ && u_ + std::min(e.dx, 0.0) - e.reach >= 0.0;
    }

    template <class Sink>
    void move(const Move& m, Sink& s) {
        const double y = u_ + m.dx;
        if (!m.linear || !(m.t1 > m.t0)) {
            if (y < 0.0) {
                u_ = 0.0;
                s.step(m.t1, m.t1, u_, 0.0, -y);
            } else if (y >= a_) {
                u_ = b_;
                s.step(m.t1, m.t1, u_, y - b_, 0.0);
            } else {
                u_ = y;
                s.step(m.t1, m.t1, u_, 0.0, 0.0);
            }
            return;
        }
        if (y < 0.0) {
            const double ts = DoubleBarrier::touch_time(m, -u_);
            if (ts > m.t0) s.step(ts, ts, 0.0, 0.0, 0.0);
            u_ = 0.0;
            s.step(ts, m.t1, u_, 0.0, -y);
            return;
        }
        // Upward linear move: one lump per touch of a.
        double t = m.t0;
        double rest = m.dx;
        const double slope = m.dx / (m.t1 - m.t0);
        while (rest > 0.0 && u_ + rest >= a_) {
            const double gap = a_ - u_;
            const double ts = std::min(m.t1, t + gap / slope);
            rest -= gap;
            u_ = b_;
            s.step(ts, ts, u_, a_ - b_, 0.0);
            t = ts;
        }
        u_ += rest;
        s.step(m.t1, m.t1, u_, 0.0, 0.0);
    }

private:
    double a_, b_;
    double u_ = 0.0;
};

struct StrategySpec {
    enum class Kind { double_barrier, periodic_review, hysteresis };
    Kind kind = Kind::double_barrier;
    double a = 1.0;
    double delta = 0.0;  // review spacing
    double b = 0.0;      // hysteresis reset level

    static StrategySpec double_barrier(double a) { return {Kind::double_barrier, a, 0.0, 0.0}; }
    static StrategySpec periodic_review(double a, double delta) { return {Kind::periodic_review, a, delta, 0.0}; }
    static StrategySpec hysteresis(double a, double b) { return {Kind::hysteresis, a, 0.0, b}; }

    void check() const {
        switch (kind) {
        case Kind::double_barrier:
            if (!(a >= 0.0)) throw std::invalid_argument("double_barrier needs a >= 0");
            return;
        case Kind::periodic_review:
            if (!(a >= 0.0) || !(delta > 0.0)) throw std::invalid_argument("periodic_review needs a >= 0, delta > 0");
            return;
        case Kind::hysteresis:
            if (!(a > 0.0) || !(b >= 0.0) || !(b < a)) throw std::invalid_argument("hysteresis needs 0 <= b < a");
            return;
        }
    }

    std::string label() const {
        auto num = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            return std::string(buf);
        };
        switch (kind) {
        case Kind::double_barrier: return "double_barrier(a=" + num(a) + ")";
        case Kind::periodic_review: return "periodic_review(a=" + num(a) + ",delta=" + num(delta) + ")";
        case Kind::hysteresis: return "hysteresis(a=" + num(a) + ",b=" + num(b) + ")";
        }
        return "?";
    }
};

using AnyController = std::variant<DoubleBarrier, PiZero, PeriodicReview, Hysteresis>;

inline AnyController make_controller(const StrategySpec& s) {
    s.check();
    switch (s.kind) {
    case StrategySpec::Kind::double_barrier:
        if (s.a > 0.0) return DoubleBarrier(s.a);
        return PiZero{};
    case StrategySpec::Kind::periodic_review: return PeriodicReview(s.a, s.delta);
    case StrategySpec::Kind::hysteresis: return Hysteresis(s.a, s.b);
    }
    throw std::invalid_argument("unknown strategy");
}

}  // namespace dbarrier
