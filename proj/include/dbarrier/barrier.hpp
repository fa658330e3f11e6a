#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "dbarrier/estimate.hpp"
#include "dbarrier/valuation.hpp"

namespace dbarrier {

/// Candidate barrier with its bracketing certificate.
struct AstarResult {
    double a_star = 0.0;
    double a_lo = 0.0;
    double a_hi = 0.0;
    MCEstimate nu_lo;  // at a_lo; beta * nu_lo.mean > 1 unless a_lo = 0
    MCEstimate nu_hi;  // at a_hi; beta * nu_hi.mean <= 1
    bool zero = false;
    bool tight = false;
    int refinements = 0;
};

/**
 * Bisection of beta * nu(a) - 1 on common random numbers.
 *
 * Every stage reruns the same paths on a finer grid inside the current
 * bracket; nu-hat is pathwise non-increasing in a, so brackets nest.
 */
inline AstarResult select_astar(const LevyModel& m, const ProblemParams& pp, double tol_a, std::size_t n_paths,
                                const SimConfig& cfg, double a_min = 1.0 / 4096.0, double a_max = 256.0,
                                int max_stages = 8) {
    m.check();
    pp.check();
    const bool bounded = classify_variation(m).bounded;
    std::vector<double> grid;
    for (double a = a_min; a <= a_max * (1.0 + 1e-12); a *= 2.0) grid.push_back(a);
    AstarResult res;
    auto nu = nu_curve(m, pp, grid, n_paths, cfg);
    std::size_t j = 0;
    while (j < grid.size() && pp.beta * nu[j].mean > 1.0) ++j;
    if (j == grid.size()) throw EstimationError("select_astar: beta * nu stays above 1 on the probed range");
    if (j == 0) {
        res.a_lo = 0.0;
        res.a_hi = grid[0];
        res.nu_hi = nu[0];
        res.zero = bounded;
        res.a_star = bounded ? 0.0 : grid[0];
        res.tight = bounded;
        return res;
    }
    double lo = grid[j - 1], hi = grid[j];
    MCEstimate nlo = nu[j - 1], nhi = nu[j];
    for (int stage = 0; stage < max_stages && hi - lo > tol_a; ++stage) {
        const int pts = 31;
        std::vector<double> g;
        for (int k = 1; k <= pts; ++k) g.push_back(lo + (hi - lo) * double(k) / double(pts + 1));
        auto e = nu_curve(m, pp, g, n_paths, cfg);
        std::size_t k = 0;
        while (k < g.size() && pp.beta * e[k].mean > 1.0) ++k;
        const double new_lo = k == 0 ? lo : g[k - 1];
        const double new_hi = k == g.size() ? hi : g[k];
        if (k > 0) nlo = e[k - 1];
        if (k < g.size()) nhi = e[k];
        lo = new_lo;
        hi = new_hi;
        res.refinements = stage + 1;
    }
    res.a_lo = lo;
    res.a_hi = hi;
    res.nu_lo = nlo;
    res.nu_hi = nhi;
    res.tight = hi - lo <= tol_a;
    res.a_star = 0.5 * (lo + hi);
    return res;
}

struct DerivativeInA {
    MCEstimate dVL, dVR, dV;
};

/// Right derivatives in a of the dividend, injection and total values, with delta-method errors for independent inputs.
inline DerivativeInA value_derivative_in_a(double beta, const MCEstimate& nu, const MCEstimate& nubar_x,
                                           const MCEstimate& nubar_0) {
    const double n = nu.mean, bx = nubar_x.mean, b0 = nubar_0.mean;
    const double D = 1.0 - n * b0;
    if (!(D > 0.0)) throw EstimationError("derivative denominator 1 - nu * nubar_0 is not positive");
    auto se = [&](double gx, double gn, double g0) {
        return std::sqrt(gx * gx * nubar_x.stderr * nubar_x.stderr + gn * gn * nu.stderr * nu.stderr +
                         g0 * g0 * nubar_0.stderr * nubar_0.stderr);
    };
    const std::uint64_t np = std::min({nu.n_paths, nubar_x.n_paths, nubar_0.n_paths});
    DerivativeInA d;
    d.dVL.mean = -bx / D;
    d.dVL.stderr = se(-1.0 / D, -bx * b0 / (D * D), -bx * n / (D * D));
    d.dVR.mean = -bx * n / D;
    d.dVR.stderr = se(-n / D, -bx / (D * D), -bx * n * n / (D * D));
    const double c = 1.0 - beta * n;
    d.dV.mean = -bx * c / D;
    d.dV.stderr = se(-c / D, beta * bx / D - bx * c * b0 / (D * D), -bx * c * n / (D * D));
    for (MCEstimate* e : {&d.dVL, &d.dVR, &d.dV}) e->n_paths = np;
    return d;
}

/// Estimates nu, nu-bar_x and nu-bar_0 on independent seeds, then composes the derivative.
inline DerivativeInA value_derivative_in_a(const LevyModel& m, const ProblemParams& pp, double x, double a,
                                           std::size_t n_paths, const SimConfig& cfg) {
    const MCEstimate nu = estimate_nu(m, pp, a, n_paths, cfg.with_seed(derive_seed(cfg.seed, 11)));
    const MCEstimate bx = estimate_nu_bar(m, pp, std::max(x, 0.0), a, n_paths, cfg.with_seed(derive_seed(cfg.seed, 12)));
    const MCEstimate b0 = estimate_nu_bar(m, pp, 0.0, a, n_paths, cfg.with_seed(derive_seed(cfg.seed, 13)));
    return value_derivative_in_a(pp.beta, nu, bx, b0);
}

/// v'(x) = phibar + beta * phiunder inside (0, a); 1 above a and beta below 0.
inline MCEstimate value_derivative_in_x(double x, double a, double beta, const ExitEstimate& exit) {
    MCEstimate e;
    if (x > a) {
        e.mean = 1.0;
        return e;
    }
    if (x < 0.0) {
        e.mean = beta;
        return e;
    }
    e.mean = exit.phibar.mean + beta * exit.phiunder.mean;
    const double var = exit.phibar.stderr * exit.phibar.stderr + beta * beta * exit.phiunder.stderr * exit.phiunder.stderr +
                       2.0 * beta * exit.cov_bar_under;
    e.stderr = std::sqrt(std::max(var, 0.0));
    e.n_paths = exit.phibar.n_paths;
    e.truncation_bound = exit.phibar.truncation_bound + beta * exit.phiunder.truncation_bound;
    return e;
}

struct BarrierCurve {
    double x = 0.0;
    std::vector<double> grid;
    std::vector<MCEstimate> nu;
    std::vector<MCEstimate> value;
    std::vector<MCEstimate> derivative;
    std::size_t argmax = 0;
};

/// V_x(a) on a common path set over the grid, with nu and the derivative composition per point.
inline BarrierCurve barrier_sweep(const LevyModel& m, const ProblemParams& pp, double x, const std::vector<double>& grid,
                                  std::size_t n_paths, const SimConfig& cfg) {
    detail::check_grid(grid);
    BarrierCurve c;
    c.x = x;
    c.grid = grid;
    c.nu = nu_curve(m, pp, grid, n_paths, cfg.with_seed(derive_seed(cfg.seed, 21)));
    const auto bx = nu_bar_curve(m, pp, std::max(x, 0.0), grid, n_paths, cfg.with_seed(derive_seed(cfg.seed, 22)));
    const auto b0 = nu_bar_curve(m, pp, 0.0, grid, n_paths, cfg.with_seed(derive_seed(cfg.seed, 23)));
    std::vector<NpvCase> cases;
    for (double a : grid) cases.push_back({x, a});
    NpvBatch batch(m, pp, cases, n_paths, cfg);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        c.value.push_back(batch.v(k));
        c.derivative.push_back(value_derivative_in_a(pp.beta, c.nu[k], bx[k], b0[k]).dV);
        if (c.value[k].mean > c.value[c.argmax].mean) c.argmax = k;
    }
    return c;
}

/// CSV export with columns a, nu_mean, nu_stderr, V_mean, V_stderr, dV.
inline void write_barrier_csv(std::ostream& os, const BarrierCurve& c) {
    os << "a,nu_mean,nu_stderr,V_mean,V_stderr,dV\n";
    os.precision(17);
    for (std::size_t k = 0; k < c.grid.size(); ++k)
        os << c.grid[k] << ',' << c.nu[k].mean << ',' << c.nu[k].stderr << ',' << c.value[k].mean << ','
           << c.value[k].stderr << ',' << c.derivative[k].mean << '\n';
}

/// Geometric grid of `points` values over [lo, hi].
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
    std::vector<double> g;
    for (std::size_t k = 0; k < points; ++k)
        g.push_back(lo * std::pow(hi / lo, points == 1 ? 0.0 : double(k) / double(points - 1)));
    return g;
}

}  // namespace dbarrier
