#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "dbarrier/levy_model.hpp"
#include "dbarrier/quadrature.hpp"

namespace dbarrier {

/// W(x) = sum_i c_i e^{theta_i x} on [0, inf), 0 below 0.
struct ExponentialSum {
    std::vector<double> c;
    std::vector<double> theta;

    double W(double x) const {
        if (x < 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * std::exp(theta[i] * x);
        return s;
    }
    double dW(double x) const {
        if (x < 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * theta[i] * std::exp(theta[i] * x);
        return s;
    }
    double d2W(double x) const {
        if (x < 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * theta[i] * theta[i] * std::exp(theta[i] * x);
        return s;
    }
    /// \int_0^x W.
    double integral(double x) const {
        if (x <= 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * std::expm1(theta[i] * x) / theta[i];
        return s;
    }
    /// \int_0^x \int_0^y W.
    double integral2(double x) const {
        if (x <= 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double t = theta[i];
            s += c[i] * (std::expm1(t * x) - t * x) / (t * t);
        }
        return s;
    }
};

/// Largest root of psi(theta) = p for a spectrally negative model.
inline double phi_inverse(const LevyModel& sn, double p) {
    if (p < 0.0) throw ModelError("scale rate must be >= 0");
    auto g = [&](double th) { return laplace_exponent_sn(sn, th) - p; };
    double lo = 0.0;
    if (p == 0.0) {
        if (laplace_exponent_sn_derivative(sn, 0.0) >= 0.0) return 0.0;
        lo = 1e-12;
        while (g(lo) >= 0.0) lo *= 0.5;
    }
    double hi = 1.0;
    while (g(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw ModelError("cannot bracket the right inverse of psi");
    }
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

/// Closed-form W^{(p)} for Brownian motion with drift and for drift plus exponential claims.
inline std::optional<ExponentialSum> closed_form_scale(const LevyModel& sn, double p) {
    if (!sn.spectrally_negative()) throw ModelError("scale function requires no positive jumps");
    const double mu = sn.linear_drift();
    const double s2 = sn.sigma * sn.sigma;
    std::vector<double> roots;
    if (sn.sigma > 0.0 && !sn.jumps.has_negative()) {
        const double disc = std::sqrt(mu * mu + 2.0 * p * s2);
        roots = {(-mu + disc) / s2, (-mu - disc) / s2};
    } else if (sn.sigma == 0.0 && sn.jumps.has_negative() && sn.jumps.negative.kind == JumpLaw::Kind::mixture &&
               sn.jumps.negative.rates.size() == 1 && mu > 0.0) {
        const double eta = sn.jumps.negative.rates[0];
        const double lam = sn.jumps.negative_rate();
        const double b = mu * eta - lam - p;
        const double disc = std::sqrt(b * b + 4.0 * mu * p * eta);
        roots = {(-b + disc) / (2.0 * mu), (-b - disc) / (2.0 * mu)};
    } else {
        return std::nullopt;
    }
    ExponentialSum w;
    for (double th : roots) {
        if (th == 0.0) return std::nullopt;
        w.theta.push_back(th);
        w.c.push_back(1.0 / laplace_exponent_sn_derivative(sn, th));
    }
    return w;
}

/**
 * Euler-accelerated Bromwich inversion.
 *
 * Discretization error is of order e^{-A}; the alternating tail is
 * averaged over m + 1 partial sums starting at the n-th.
 */
struct EulerInversion {
    double A = 25.0;
    int n = 50;
    int m = 20;

    template <class F>
    double operator()(F&& fhat, double t) const {
        if (!(t > 0.0)) throw std::invalid_argument("inversion point must be > 0");
        const double x = A / (2.0 * t);
        const double h = 3.14159265358979323846 / t;
        double s = 0.5 * std::real(fhat(std::complex<double>(x, 0.0)));
        std::vector<double> partial;
        partial.reserve(std::size_t(m + 1));
        for (int k = 1; k <= n + m; ++k) {
            const double term = std::real(fhat(std::complex<double>(x, k * h)));
            s += (k % 2 ? -term : term);
            if (k >= n) partial.push_back(s);
        }
        double binom = 1.0, acc = 0.0;
        for (int j = 0; j <= m; ++j) {
            acc += binom * partial[std::size_t(j)];
            binom = binom * double(m - j) / double(j + 1);
        }
        return std::exp(A / 2.0) / t * acc * std::ldexp(1.0, -m);
    }
};

/// W^{(p)} of a spectrally negative model, closed form when available, otherwise by inversion.
class ScaleFunction {
public:
    ScaleFunction(const LevyModel& sn, double p, EulerInversion inv = {}) : model_(sn), p_(p), inv_(inv) {
        sn.check();
        if (!sn.spectrally_negative()) throw ModelError("scale function requires no positive jumps");
        if (p < 0.0) throw ModelError("scale rate must be >= 0");
        if (sn.sigma == 0.0 && !(sn.linear_drift() > 0.0)) throw ModelError("bounded variation scale function needs drift > 0");
        phi_ = phi_inverse(sn, p);
        exact_ = closed_form_scale(sn, p);
    }

    static ScaleFunction numerical(const LevyModel& sn, double p, EulerInversion inv = {}) {
        ScaleFunction f(sn, p, inv);
        f.exact_.reset();
        return f;
    }

    double rate() const { return p_; }
    double Phi() const { return phi_; }
    bool closed_form() const { return exact_.has_value(); }
    const std::optional<ExponentialSum>& exact() const { return exact_; }
    const LevyModel& model() const { return model_; }

    double W0() const { return model_.sigma > 0.0 ? 0.0 : 1.0 / model_.linear_drift(); }

    double dW0() const {
        if (model_.sigma > 0.0) return 2.0 / (model_.sigma * model_.sigma);
        const double d = model_.linear_drift();
        return (p_ + model_.jumps.negative_rate()) / (d * d);
    }

    double W(double x) const {
        if (x < 0.0) return 0.0;
        if (exact_) return exact_->W(x);
        if (x == 0.0) return W0();
        const double c = damping(x);
        auto fhat = [&](std::complex<double> s) { return 1.0 / (laplace_exponent_sn(model_, s + c) - p_); };
        return std::exp(c * x) * inv_(fhat, x);
    }

    double dW(double x) const {
        if (x < 0.0) return 0.0;
        if (exact_) return exact_->dW(x);
        if (x == 0.0) return dW0();
        const double c = damping(x);
        const double w0 = W0();
        auto ghat = [&](std::complex<double> s) {
            return (s + c) / (laplace_exponent_sn(model_, s + c) - p_) - w0;
        };
        return std::exp(c * x) * inv_(ghat, x);
    }

private:
    // Shifting by Phi + 1/x keeps e^{-cx} W(x) of order one, so the e^{cx} rescaling does not amplify roundoff.
    double damping(double x) const { return phi_ + 1.0 / x; }

    LevyModel model_;
    double p_;
    EulerInversion inv_;
    double phi_ = 0.0;
    std::optional<ExponentialSum> exact_;
};

/**
 * Tabulated W^{(p)} on [0, x_max] with a monotone cubic Hermite evaluator.
 *
 * Node slopes are the exact derivatives, limited per cell by the
 * Fritsch-Carlson condition so the interpolant stays non-decreasing.
 */
struct ScaleTable {
    double q_rate = 0.0;
    double Phi = 0.0;
    double asymptotic_slope = 1.0;  // psi'(Phi), so W ~ e^{Phi x} / psi'(Phi)
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> derivs;
    std::vector<double> slopes;

    double x_max() const { return grid.back(); }

    double operator()(double x) const { return eval(x, false); }
    double derivative(double x) const { return eval(x, true); }

    void finalize() {
        slopes = derivs;
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            const double h = grid[k + 1] - grid[k];
            const double d = (values[k + 1] - values[k]) / h;
            if (d <= 0.0) {
                slopes[k] = slopes[k + 1] = 0.0;
                continue;
            }
            const double al = slopes[k] / d, be = slopes[k + 1] / d;
            const double r2 = al * al + be * be;
            if (r2 > 9.0) {
                const double tau = 3.0 / std::sqrt(r2);
                slopes[k] = tau * al * d;
                slopes[k + 1] = tau * be * d;
            }
        }
    }

private:
    double eval(double x, bool deriv) const {
        if (x < 0.0) return 0.0;
        if (x > grid.back() * (1.0 + 1e-12)) throw std::out_of_range("ScaleTable: x beyond x_max");
        x = std::min(x, grid.back());
        std::size_t k = std::size_t(std::upper_bound(grid.begin(), grid.end(), x) - grid.begin());
        k = std::min(std::max<std::size_t>(k, 1), grid.size() - 1) - 1;
        const double h = grid[k + 1] - grid[k];
        const double t = (x - grid[k]) / h;
        const double y0 = values[k], y1 = values[k + 1], m0 = slopes[k], m1 = slopes[k + 1];
        if (deriv) {
            const double d00 = 6.0 * t * t - 6.0 * t, d10 = 3.0 * t * t - 4.0 * t + 1.0;
            const double d01 = -d00, d11 = 3.0 * t * t - 2.0 * t;
            return (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1;
        }
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
    }
};

inline ScaleTable tabulate(const ScaleFunction& w, double x_max, std::size_t grid_n) {
    if (!(x_max > 0.0) || grid_n < 2) throw std::invalid_argument("scale table needs x_max > 0 and grid_n >= 2");
    ScaleTable t;
    t.q_rate = w.rate();
    t.Phi = w.Phi();
    t.asymptotic_slope = laplace_exponent_sn_derivative(w.model(), w.Phi());
    t.grid.resize(grid_n + 1);
    t.values.resize(grid_n + 1);
    t.derivs.resize(grid_n + 1);
    for (std::size_t i = 0; i <= grid_n; ++i) {
        const double x = x_max * double(i) / double(grid_n);
        t.grid[i] = x;
        t.values[i] = w.W(x);
        t.derivs[i] = w.dW(x);
    }
    t.finalize();
    return t;
}

inline ScaleTable scale_function(const LevyModel& sn, double p, double x_max, std::size_t grid_n) {
    return tabulate(ScaleFunction(sn, p), x_max, grid_n);
}

/// CSV export with columns x, W, W'.
inline void write_scale_csv(std::ostream& os, const ScaleTable& t) {
    os << "x,W,W'\n";
    os.precision(17);
    for (std::size_t i = 0; i < t.grid.size(); ++i) os << t.grid[i] << ',' << t.values[i] << ',' << t.derivs[i] << '\n';
}

struct LaplaceCheckPoint {
    double lambda;
    double integral;  // \int_0^\infty e^{-lambda x} W(x) dx from the table plus asymptotic tail
    double target;    // 1 / (psi(lambda) - p)
    double rel_error;
};

/// Compares the tabulated W against its defining Laplace transform at k = 1..count spaced rates above Phi.
inline std::vector<LaplaceCheckPoint> laplace_definition_check(const ScaleTable& t, const LevyModel& sn,
                                                               int count = 5) {
    std::vector<LaplaceCheckPoint> out;
    const double step = std::max(1.0, 30.0 / t.x_max());
    for (int k = 1; k <= count; ++k) {
        const double lam = t.Phi + step * k;
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < t.grid.size(); ++i)
            s += gauss_integrate<6>([&](double x) { return std::exp(-lam * x) * t(x); }, t.grid[i], t.grid[i + 1]);
        const double xm = t.x_max();
        s += std::exp(-(lam - t.Phi) * xm) / ((lam - t.Phi) * t.asymptotic_slope);
        const double target = 1.0 / (laplace_exponent_sn(sn, lam) - t.q_rate);
        out.push_back({lam, s, target, std::abs(s - target) / std::abs(target)});
    }
    return out;
}

/// E_x[e^{-p tau_a^+}; tau_a^+ < tau_0^-] = W(x)/W(a).
inline double exit_up_identity(const ScaleTable& t, double x, double a) {
    if (x < 0.0 || x > a) throw std::invalid_argument("exit_up_identity: x outside [0, a]");
    const double wa = t(a);
    if (!(wa > 0.0)) throw std::domain_error("exit_up_identity: W(a) = 0");
    return t(x) / wa;
}

/// \int_0^a f(y) [W(x) W(a - y) / W(a) - W(x - y)] dy.
inline double resolvent_functional(const ScaleTable& t, double x, double a, const std::function<double(double)>& f) {
    if (x < 0.0 || x > a) throw std::invalid_argument("resolvent_functional: x outside [0, a]");
    const double ratio = t(x) / t(a);
    auto g = [&](double y) {
        const double k = ratio * t(a - y) - (y < x ? t(x - y) : 0.0);
        return f(y) * k;
    };
    return piecewise_integrate(g, 0.0, a, {x});
}

/// E_x[e^{-p tau_0^-}; tau_0^- < tau_a^+] = 1 - W(x)/W(a) - p * resolvent of 1.
inline double exit_down_identity(const ScaleTable& t, double x, double a) {
    const double occ = resolvent_functional(t, x, a, [](double) { return 1.0; });
    return 1.0 - exit_up_identity(t, x, a) - t.q_rate * occ;
}

/**
 * Closed-form value functionals of the double barrier strategy for a
 * spectrally negative model with an exponential-sum scale function.
 */
class SnAnalytic {
public:
    SnAnalytic(const LevyModel& sn, const ProblemParams& pp) : model_(sn), pp_(pp) {
        pp.check();
        auto w = closed_form_scale(sn, pp.q);
        if (!w) throw ModelError("analytic value needs a closed-form scale function");
        w_ = *w;
        mean_ = mean_rate(sn);
    }

    const ExponentialSum& scale() const { return w_; }
    double W(double x) const { return w_.W(x); }
    double Z(double x) const { return x <= 0.0 ? 1.0 : 1.0 + pp_.q * w_.integral(x); }
    double Zbar(double x) const { return x <= 0.0 ? x : x + pp_.q * w_.integral2(x); }

    double vL(double x, double a) const {
        if (x > a) return vL(a, a) + (x - a);
        if (x < 0.0) return vL(0.0, a);
        return Z(x) / (pp_.q * W(a));
    }
    double vR(double x, double a) const {
        if (x > a) return vR(a, a);
        if (x < 0.0) return vR(0.0, a) - x;
        return Z(a) * Z(x) / (pp_.q * W(a)) - Zbar(x) - mean_ / pp_.q;
    }
    double v(double x, double a) const { return vL(x, a) - pp_.beta * vR(x, a); }

    double dv(double x, double a) const {
        if (x > a) return 1.0;
        if (x < 0.0) return pp_.beta;
        const double r = W(x) / W(a);
        return r + pp_.beta * (Z(x) - Z(a) * r);
    }
    double d2v(double x, double a) const {
        if (x > a || x < 0.0) return 0.0;
        const double r = w_.dW(x) / W(a);
        return r + pp_.beta * (pp_.q * W(x) - Z(a) * r);
    }

    /// Laplace transform of the first time the drawdown exceeds a.
    double nu(double a) const { return Z(a) - pp_.q * W(a) * W(a) / w_.dW(a); }
    /// Laplace transform of the first passage above a of X reflected at its infimum, from x.
    double nu_bar(double x, double a) const { return x > a ? 1.0 : Z(x) / Z(a); }
    double phibar(double x, double a) const { return W(x) / W(a); }
    double phiunder(double x, double a) const { return Z(x) - Z(a) * W(x) / W(a); }

    /// Root of beta * nu(a) = 1, or 0 when beta * nu(0+) <= 1.
    double astar() const {
        auto g = [&](double a) { return pp_.beta * nu(a) - 1.0; };
        double lo = 1e-9;
        if (g(lo) <= 0.0) return 0.0;
        double hi = 1.0;
        while (g(hi) > 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e6) throw ModelError("astar: no crossing found");
        }
        boost::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
        return 0.5 * (r.first + r.second);
    }

private:
    LevyModel model_;
    ProblemParams pp_;
    ExponentialSum w_;
    double mean_ = 0.0;
};

/// phi-bar on a grid of [0, a] for a model with finitely many positive jumps.
struct FixedPointResult {
    std::vector<double> grid;
    std::vector<double> phibar;
    std::vector<double> changes;  // sup-norm change per iteration
    double contraction = 0.0;     // largest ratio of successive changes above the noise floor
    double bound = 0.0;           // r / (q + r)
    bool monotone_iterates = true;
    bool converged = false;
    int iterations = 0;

    std::function<double(double)> evaluator;
    double operator()(double x) const { return evaluator(x); }
};

namespace detail {

/// Local cubic Lagrange weights for a uniform grid on [0, a] with N cells.
inline void lagrange_weights(double u, double a, std::size_t N, std::size_t& first, double w[4]) {
    const double h = a / double(N);
    long k = long(std::floor(u / h));
    k = std::clamp<long>(k, 0, long(N) - 1);
    long s = std::clamp<long>(k - 1, 0, long(N) - 3);
    first = std::size_t(s);
    for (int j = 0; j < 4; ++j) {
        double l = 1.0;
        const double xj = h * double(s + j);
        for (int m = 0; m < 4; ++m)
            if (m != j) l *= (u - h * double(s + m)) / (xj - h * double(s + m));
        w[j] = l;
    }
}

}  // namespace detail

/**
 * Successive approximation for phi-bar of Z + compound Poisson(r, J):
 * phi = W(x)/W(a) + r \int_0^a K(x, y) E[phi(y + J)] dy at rate q + r,
 * with phi = 1 above a. K is the resolvent kernel of the negative part.
 */
inline FixedPointResult solve_phibar_fixed_point(const LevyModel& m, double q, double a, std::size_t grid_n,
                                                 double tol, int max_iter = 500) {
    m.check();
    if (!(q > 0.0) || !(a > 0.0)) throw std::invalid_argument("fixed point needs q > 0 and a > 0");
    if (grid_n < 6) grid_n = 6;
    const LevyModel z = m.negative_part();
    const double r = m.jumps.positive_rate();
    const JumpLaw& J = m.jumps.positive;
    const double p = q + r;
    const ScaleTable W = tabulate(ScaleFunction(z, p), a, std::max<std::size_t>(4 * grid_n, 2000));
    const std::size_t N = grid_n;
    const double h = a / double(N);
    const double Wa = W(a);

    FixedPointResult res;
    res.bound = r / p;
    res.grid.resize(N + 1);
    for (std::size_t i = 0; i <= N; ++i) res.grid[i] = h * double(i);
    std::vector<double> A(N + 1);
    for (std::size_t i = 0; i <= N; ++i) A[i] = W(res.grid[i]) / Wa;

    const auto& gr = gauss_rule<8>();
    const std::size_t G = gr.x.size();
    // Outer nodes y on each cell [x_k, x_{k+1}].
    std::vector<double> ys, yw;
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t g = 0; g < G; ++g) {
            ys.push_back(res.grid[k] + 0.5 * h * (1.0 + gr.x[g]));
            yw.push_back(0.5 * h * gr.w[g]);
        }
    const std::size_t Y = ys.size();

    // gmat[y][j]: weight of phi_j in E[phi(y + J); y + J <= a]; gtail[y] = P(y + J > a).
    std::vector<double> gmat(Y * (N + 1), 0.0), gtail(Y, 0.0);
    for (std::size_t iy = 0; iy < Y; ++iy) {
        const double y = ys[iy];
        double* row = &gmat[iy * (N + 1)];
        gtail[iy] = r > 0.0 ? J.tail(a - y) : 0.0;
        if (!(r > 0.0)) continue;
        auto add_point = [&](double u, double weight) {
            std::size_t first;
            double w[4];
            detail::lagrange_weights(u, a, N, first, w);
            for (int j = 0; j < 4; ++j) row[first + std::size_t(j)] += weight * w[j];
        };
        if (J.kind == JumpLaw::Kind::point_mass) {
            if (y + J.atom <= a) add_point(y + J.atom, 1.0);
            continue;
        }
        std::size_t k0 = std::size_t(std::floor(y / h));
        double lo = y;
        for (std::size_t k = k0; k < N; ++k) {
            const double hi = res.grid[k + 1];
            if (hi <= lo) continue;
            const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
            for (std::size_t g = 0; g < G; ++g) {
                const double u = c + hw * gr.x[g];
                add_point(u, hw * gr.w[g] * J.density(u - y));
            }
            lo = hi;
        }
    }

    // M = r * Kw * gmat and b = r * Kw * gtail.
    std::vector<double> M((N + 1) * (N + 1), 0.0), b(N + 1, 0.0);
    std::vector<double> wa_y(Y);
    for (std::size_t iy = 0; iy < Y; ++iy) wa_y[iy] = W(a - ys[iy]);
    for (std::size_t i = 0; i <= N; ++i) {
        const double x = res.grid[i];
        const double ratio = A[i];
        for (std::size_t iy = 0; iy < Y; ++iy) {
            const double y = ys[iy];
            const double k = ratio * wa_y[iy] - (y < x ? W(x - y) : 0.0);
            const double kw = r * yw[iy] * k;
            if (kw == 0.0) continue;
            const double* row = &gmat[iy * (N + 1)];
            double* mrow = &M[i * (N + 1)];
            for (std::size_t j = 0; j <= N; ++j) mrow[j] += kw * row[j];
            b[i] += kw * gtail[iy];
        }
    }

    std::vector<double> phi = A, next(N + 1);
    double prev_change = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i <= N; ++i) {
            double s = A[i] + b[i];
            const double* mrow = &M[i * (N + 1)];
            for (std::size_t j = 0; j <= N; ++j) s += mrow[j] * phi[j];
            next[i] = s;
        }
        double change = 0.0;
        for (std::size_t i = 0; i <= N; ++i) {
            change = std::max(change, std::abs(next[i] - phi[i]));
            if (next[i] < phi[i] - 1e-13) res.monotone_iterates = false;
        }
        res.changes.push_back(change);
        if (it > 1 && prev_change > 1e3 * tol && change > 1e2 * tol)
            res.contraction = std::max(res.contraction, change / prev_change);
        prev_change = change;
        phi.swap(next);
        res.iterations = it;
        if (change < tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) throw QuadratureError("fixed point did not converge within the iteration cap");
    res.phibar = phi;

    // Nystrom evaluation off the grid, with g(y) from the converged iterate.
    std::vector<double> gy(Y);
    for (std::size_t iy = 0; iy < Y; ++iy) {
        double s = gtail[iy];
        const double* row = &gmat[iy * (N + 1)];
        for (std::size_t j = 0; j <= N; ++j) s += row[j] * phi[j];
        gy[iy] = s;
    }
    auto grid = res.grid;
    const double at_zero = phi[0];
    res.evaluator = [W, ys, yw, gy, wa_y, grid, r, a, Wa, h, N, at_zero](double x) {
        if (x >= a) return 1.0;
        if (x < 0.0) return 0.0;
        if (x == 0.0) return at_zero;
        const double ratio = W(x) / Wa;
        double s = ratio;
        const std::size_t kc = std::min(N - 1, std::size_t(std::floor(x / h)));
        for (std::size_t iy = 0; iy < ys.size(); ++iy) {
            if (iy / 8 == kc) continue;
            const double y = ys[iy];
            s += r * yw[iy] * gy[iy] * (ratio * wa_y[iy] - (y < x ? W(x - y) : 0.0));
        }
        // The cell holding x carries the kernel kink at y = x and is integrated in two pieces.
        // g on the cell holding x: degree-7 interpolation through the cell's Gauss nodes.
        auto gfun = [&](double y) {
            const std::size_t base = kc * 8;
            double val = 0.0;
            for (std::size_t j = 0; j < 8; ++j) {
                double l = 1.0;
                for (std::size_t mm = 0; mm < 8; ++mm)
                    if (mm != j) l *= (y - ys[base + mm]) / (ys[base + j] - ys[base + mm]);
                val += l * gy[base + j];
            }
            return val;
        };
        auto integrand = [&](double y) { return gfun(y) * (ratio * W(a - y) - (y < x ? W(x - y) : 0.0)); };
        const double lo = grid[kc], hi = grid[kc + 1];
        s += r * (gauss_integrate<8>(integrand, lo, x) + gauss_integrate<8>(integrand, x, hi));
        return s;
    };
    return res;
}

}  // namespace dbarrier
