// One two-sided jump path, reflected in [0, a]; prints the controls and the Skorokhod residuals.
// Pass --csv to dump the trajectory.
#include <cstdio>
#include <iostream>
#include <string>

#include "dbarrier/dbarrier.hpp"

using namespace dbarrier;

int main(int argc, char** argv) {
    JumpSpec j;
    j.arrival_rate = 2.0;
    j.sign_split = 0.5;
    j.positive = JumpLaw::exponential(2.0);
    j.negative = JumpLaw::exponential(1.5);
    const LevyModel m = LevyModel::from_linear_drift(1.0, 0.0, j);

    PathSpec spec;
    spec.horizon = 10.0;
    spec.grid_step = 0.02;
    spec.seed = 7;
    const SamplePath path = simulate_path(m, spec);
    const ControlledTrajectory tr = doubly_reflect(path, 0.5, 1.0);

    std::printf("events %zu   dividends L = %.4f   injections R = %.4f   final U = %.4f\n", tr.size(), tr.L.back(),
                tr.R.back(), tr.U.back());
    std::printf("worst residual %.3g\n", check_trajectory(tr).worst());
    if (argc > 1 && std::string(argv[1]) == "--csv") write_trajectory_csv(std::cout, tr);
}
