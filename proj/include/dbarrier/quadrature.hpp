#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace dbarrier {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gauss-Legendre rule on [-1, 1], all nodes ascending.
struct GaussRule {
    std::vector<double> x, w;
};

template <unsigned N>
inline const GaussRule& gauss_rule() {
    static const GaussRule rule = [] {
        using G = boost::math::quadrature::gauss<double, N>;
        const auto& ax = G::abscissa();
        const auto& aw = G::weights();
        GaussRule r;
        for (std::size_t i = ax.size(); i-- > 0;) {
            if (ax[i] == 0.0) continue;
            r.x.push_back(-ax[i]);
            r.w.push_back(aw[i]);
        }
        for (std::size_t i = 0; i < ax.size(); ++i) {
            r.x.push_back(ax[i]);
            r.w.push_back(aw[i]);
        }
        return r;
    }();
    return rule;
}

/// Fixed-order Gauss-Legendre over [lo, hi].
template <unsigned N, class F>
inline double gauss_integrate(F&& f, double lo, double hi) {
    const auto& r = gauss_rule<N>();
    const double h = 0.5 * (hi - lo), c = 0.5 * (hi + lo);
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(c + h * r.x[i]);
    return s * h;
}

/// Adaptive Gauss-Kronrod over [lo, hi]; throws when the error estimate misses the target.
template <class F>
inline double adaptive_integrate(F&& f, double lo, double hi, double rel_tol = 1e-11, double abs_floor = 1e-10) {
    if (!(hi > lo)) return 0.0;
    double err = 0.0, l1 = 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    // The library tolerance is relative only; a vanishing integrand would recurse to full depth.
    const double v0 = GK::integrate(f, lo, hi, 0, rel_tol, &err, &l1);
    if (std::isfinite(v0) && err <= 1e-3 * abs_floor) return v0;
    const double v = GK::integrate(f, lo, hi, 15, rel_tol, &err, &l1);
    if (!std::isfinite(v) || err > std::max(1e3 * rel_tol * l1, abs_floor))
        throw QuadratureError("adaptive quadrature did not converge");
    return v;
}

/// Adaptive integral over [lo, hi] split at every interior break point.
template <class F>
inline double piecewise_integrate(F&& f, double lo, double hi, std::vector<double> breaks, double rel_tol = 1e-11) {
    breaks.push_back(lo);
    breaks.push_back(hi);
    std::sort(breaks.begin(), breaks.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = std::max(lo, breaks[i]), b = std::min(hi, breaks[i + 1]);
        if (b > a) s += adaptive_integrate(f, a, b, rel_tol);
    }
    return s;
}

}  // namespace dbarrier
