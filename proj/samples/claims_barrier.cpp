// Optimal barrier for a Cramer-Lundberg surplus: closed form vs Monte Carlo.
#include <cstdio>

#include "dbarrier/dbarrier.hpp"

using namespace dbarrier;

int main() {
    JumpSpec claims;
    claims.arrival_rate = 1.5;
    claims.sign_split = 0.0;
    claims.negative = JumpLaw::exponential(1.0);
    const LevyModel m = LevyModel::from_linear_drift(2.0, 0.0, claims);
    const ProblemParams pp{0.1, 1.5};

    const SnAnalytic exact(m, pp);
    SimConfig sc;
    sc.seed = 2024;
    sc.grid_step = 0.02;
    const AstarResult mc = select_astar(m, pp, 0.01, 4000, sc);
    std::printf("a*  closed form %.4f   Monte Carlo %.4f in [%.4f, %.4f]\n", exact.astar(), mc.a_star, mc.a_lo, mc.a_hi);

    const double a = exact.astar();
    for (double x : {0.0, 0.5 * a, a, 2.0 * a}) {
        const NpvEstimate v = estimate_npv(m, pp, x, a, 4000, sc);
        std::printf("x = %.3f   v = %.4f +- %.4f   closed form %.4f\n", x, v.v.mean, v.v.stderr, exact.v(x, a));
    }
}
