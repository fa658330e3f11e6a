#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dbarrier/levy_model.hpp"
#include "dbarrier/quadrature.hpp"
#include "dbarrier/scale_oracle.hpp"

namespace dbarrier {

/**
 * f with its derivatives and a linear growth bound |f(x)| <= b1 |x| + b2.
 * `kinks` lists points where f' or f'' may jump; quadrature splits there.
 */
struct GeneratorInput {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;  // required iff sigma > 0
    double b1 = 0.0;
    double b2 = 0.0;
    std::vector<double> kinks;
};

namespace detail {

inline void check_growth(const GeneratorInput& g, double x) {
    const double probes[] = {-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0, x};
    for (double p : probes) {
        const double v = g.f(p);
        if (!std::isfinite(v) || std::abs(v) > g.b1 * std::abs(p) + g.b2)
            throw std::domain_error("generator input violates its linear growth bound");
    }
}

/// \int_0^inf (f(x + s y) - f(x) - f'(x) s y 1{y<1}) law(dy), s = +1 or -1.
inline double jump_integral(const GeneratorInput& g, const JumpLaw& law, double x, double sign) {
    const double fx = g.f(x), dfx = g.df(x);
    auto integrand_core = [&](double y) {
        const double comp = y < 1.0 ? dfx * sign * y : 0.0;
        return g.f(x + sign * y) - fx - comp;
    };
    if (law.kind == JumpLaw::Kind::point_mass) return integrand_core(law.atom);
    const double ymax = 50.0 / law.min_rate();
    std::vector<double> breaks{1.0};
    for (double k : g.kinks) {
        const double y = sign * (k - x);
        if (y > 0.0 && y < ymax) breaks.push_back(y);
    }
    return piecewise_integrate([&](double y) { return integrand_core(y) * law.density(y); }, 0.0, ymax, breaks, 1e-12);
}

}  // namespace detail

/// (Lf)(x) = gamma f' + sigma^2 f'' / 2 + \int (f(x+z) - f(x) - f'(x) z 1{|z|<1}) Pi(dz).
inline double apply_generator(const LevyModel& m, const GeneratorInput& g, double x) {
    m.check();
    if (m.sigma > 0.0 && !g.d2f) throw std::invalid_argument("second derivative required for unbounded variation");
    detail::check_growth(g, x);
    double v = m.gamma * g.df(x);
    if (m.sigma > 0.0) v += 0.5 * m.sigma * m.sigma * g.d2f(x);
    if (m.jumps.has_positive()) v += m.jumps.positive_rate() * detail::jump_integral(g, m.jumps.positive, x, 1.0);
    if (m.jumps.has_negative()) v += m.jumps.negative_rate() * detail::jump_integral(g, m.jumps.negative, x, -1.0);
    return v;
}

struct ResidualPoint {
    double x;
    double value;     // v(x)
    double residual;  // (L - q) v (x)
};

/// (L - q) v on the given points; v must already carry its linear extensions outside [0, a].
inline std::vector<ResidualPoint> generator_residual(const LevyModel& m, const ProblemParams& pp,
                                                     const GeneratorInput& v, const std::vector<double>& xs) {
    std::vector<ResidualPoint> out;
    for (double x : xs) {
        const double fx = v.f(x);
        out.push_back({x, fx, apply_generator(m, v, x) - pp.q * fx});
    }
    return out;
}

/// Value of the double barrier strategy at a with exact derivatives, for a closed-form spectrally negative model.
inline GeneratorInput analytic_value_input(const SnAnalytic& sn, double a, double beta) {
    GeneratorInput g;
    g.f = [sn, a](double x) { return sn.v(x, a); };
    g.df = [sn, a](double x) { return sn.dv(x, a); };
    g.d2f = [sn, a](double x) { return sn.d2v(x, a); };
    g.b1 = beta;
    g.b2 = std::abs(sn.v(0.0, a)) + std::abs(sn.v(a, a)) + a * beta + 1.0;
    g.kinks = {0.0, a};
    return g;
}

/**
 * Local quadratic regression of tabulated values with a tricube kernel.
 * Bandwidth is in x units; the fit supplies v, v' and v'' inside [0, a]
 * and the linear extensions with slopes beta below 0 and 1 above a.
 */
inline GeneratorInput smoothed_value_input(std::vector<double> xs, std::vector<double> vs, double a, double beta,
                                           double bandwidth) {
    if (xs.size() != vs.size() || xs.size() < 3) throw std::invalid_argument("smoothing needs >= 3 points");
    struct Fit {
        double c0, c1, c2;
    };
    auto fit = [xs, vs, bandwidth](double x0) {
        double S[5] = {0, 0, 0, 0, 0}, T[3] = {0, 0, 0};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double d = xs[i] - x0;
            const double u = std::abs(d) / bandwidth;
            if (u >= 1.0) continue;
            const double w = std::pow(1.0 - u * u * u, 3);
            double p = w;
            for (int k = 0; k < 5; ++k) {
                S[k] += p;
                if (k < 3) T[k] += p * vs[i];
                p *= d;
            }
        }
        // Solve the 3x3 normal equations by Cramer's rule.
        const double a11 = S[0], a12 = S[1], a13 = S[2], a22 = S[2], a23 = S[3], a33 = S[4];
        const double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) + a13 * (a12 * a23 - a22 * a13);
        if (std::abs(det) < 1e-300) throw std::domain_error("smoothing window holds too few points");
        auto solve = [&](int col) {
            double m[3][3] = {{a11, a12, a13}, {a12, a22, a23}, {a13, a23, a33}};
            for (int r = 0; r < 3; ++r) m[r][col] = T[r];
            return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                    m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
                   det;
        };
        return Fit{solve(0), solve(1), 2.0 * solve(2)};
    };
    const Fit lo = fit(0.0), hi = fit(a);
    GeneratorInput g;
    g.f = [fit, lo, hi, a, beta](double x) {
        if (x < 0.0) return lo.c0 + beta * x;
        if (x > a) return hi.c0 + (x - a);
        return fit(x).c0;
    };
    g.df = [fit, a, beta](double x) {
        if (x < 0.0) return beta;
        if (x > a) return 1.0;
        return fit(x).c1;
    };
    g.d2f = [fit, a](double x) {
        if (x < 0.0 || x > a) return 0.0;
        return fit(x).c2;
    };
    g.b1 = beta;
    double vmax = 0.0;
    for (double v : vs) vmax = std::max(vmax, std::abs(v));
    g.b2 = vmax + beta * a + 1.0;
    g.kinks = {0.0, a};
    return g;
}

}  // namespace dbarrier
