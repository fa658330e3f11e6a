#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dbarrier/dbarrier.hpp"
#include "dbarrier/experiments.hpp"

namespace fs = std::filesystem;
using namespace dbarrier;

namespace {

struct Common {
    std::string config;
    std::string experiment;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::string out = "out";
    std::string format = "json";
};

void add_common(CLI::App* app, Common& c, bool with_experiment) {
    app->add_option("--config", c.config, "configuration file (JSON with comments)")->required()->check(CLI::ExistingFile);
    if (with_experiment)
        app->add_option("--experiment", c.experiment, "couplings, oracle_xval, derivatives, astar_optimality, generator, tournament or all");
    app->add_option("--seed", c.seed, "override run.seed");
    app->add_option("--paths", c.paths, "override every Monte Carlo path budget");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "csv"}));
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed) {
        if (*c.seed == 0) throw ConfigError("--seed: must be a positive integer");
        cfg.run.seed = *c.seed;
    }
    if (c.paths) {
        if (*c.paths == 0) throw ConfigError("--paths: must be a positive integer");
        cfg.set_paths(*c.paths);
    }
    if (!c.experiment.empty()) {
        bool known = false;
        for (const char* e : kExperiments) known |= c.experiment == e;
        if (!known) throw ConfigError("--experiment: unknown experiment '" + c.experiment + "'");
        cfg.experiment = c.experiment;
    }
    return cfg;
}

int finish(const Report& r, const Common& c) {
    write_report(r, c.out, c.format == "csv");
    std::printf("%zu checks: %zu pass, %zu fail, %zu inconclusive -> %s\n", r.checks.size(), r.count(Status::pass),
                r.count(Status::fail), r.count(Status::inconclusive), (fs::path(c.out) / "report.json").c_str());
    for (const auto& ch : r.checks)
        if (ch.status == Status::fail)
            std::printf("FAIL %s measured=%s tolerance=%s\n", ch.name.c_str(), format_number(ch.measured).c_str(),
                        format_number(ch.tolerance).c_str());
    return r.failed() ? kExitCheckFailure : kExitPass;
}

template <class F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "estimation failure: %s\n", e.what());
        return kExitEstimationFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation, valuation and verification for double barrier dividend strategies"};
    app.require_subcommand(1);

    Common validate_opts, run_opts, sweep_opts, tour_opts, dump_opts;

    auto* validate = app.add_subcommand("validate", "parse and validate a configuration");
    validate->add_option("--config", validate_opts.config, "configuration file")->required()->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "run an experiment suite and write report.json and curves/*.csv");
    add_common(run, run_opts, true);

    auto* sweep = app.add_subcommand("sweep", "value and nu along a geometric barrier grid");
    add_common(sweep, sweep_opts, false);
    std::string sweep_model;
    double sweep_x = 0.0, sweep_lo = 0.25, sweep_hi = 4.0;
    std::size_t sweep_points = 12;
    sweep->add_option("--model", sweep_model, "fleet model name")->required();
    sweep->add_option("--x", sweep_x, "start value");
    sweep->add_option("--lo", sweep_lo, "lowest barrier as a multiple of a*");
    sweep->add_option("--hi", sweep_hi, "highest barrier as a multiple of a*");
    sweep->add_option("--points", sweep_points, "grid points")->check(CLI::PositiveNumber);

    auto* tour = app.add_subcommand("tournament", "rank the configured strategies on common random numbers");
    add_common(tour, tour_opts, false);

    auto* dump = app.add_subcommand("dump", "write one sample path, its reflected trajectory, or a scale table as CSV");
    add_common(dump, dump_opts, false);
    std::string dump_what = "path", dump_model;
    double dump_x = 0.5, dump_a = 1.0, dump_horizon = 10.0, dump_xmax = 5.0;
    std::uint64_t dump_index = 0;
    dump->add_option("--what", dump_what, "path, trajectory or scale")->check(CLI::IsMember({"path", "trajectory", "scale"}));
    dump->add_option("--model", dump_model, "fleet model name")->required();
    dump->add_option("--x", dump_x, "start value");
    dump->add_option("--a", dump_a, "barrier");
    dump->add_option("--horizon", dump_horizon, "path horizon");
    dump->add_option("--index", dump_index, "path index");
    dump->add_option("--x-max", dump_xmax, "scale table range");

    CLI11_PARSE(app, argc, argv);

    if (*validate)
        return guarded([&] {
            const auto cfg = load_config(validate_opts.config);
            std::printf("ok: %zu models, experiment '%s', seed %llu\n", cfg.models.size(), cfg.experiment.c_str(),
                        static_cast<unsigned long long>(cfg.run.seed));
            return int(kExitPass);
        });

    if (*run)
        return guarded([&] {
            ExperimentRunner runner(load(run_opts));
            return finish(runner.run(runner.config().experiment), run_opts);
        });

    if (*tour)
        return guarded([&] {
            ExperimentRunner runner(load(tour_opts));
            auto res = runner.tournament();
            res.report.experiment = "tournament";
            res.report.seed = runner.config().run.seed;
            for (std::size_t k = 0; k < res.xs.size(); ++k) {
                std::printf("x = %s:", fmt(res.xs[k]).c_str());
                for (std::size_t j : res.ranking[k])
                    std::printf("  %s %.6f", res.entries[j].spec.label().c_str(), res.entries[j].value[k].mean);
                std::printf("\n");
            }
            return finish(res.report, tour_opts);
        });

    if (*sweep)
        return guarded([&] {
            ExperimentRunner runner(load(sweep_opts));
            const double as = runner.barrier_scale(sweep_model);
            Report r;
            r.experiment = "sweep";
            r.seed = runner.config().run.seed;
            r.curves.push_back(runner.sweep_curve(sweep_model, sweep_x, sweep_lo * as, sweep_hi * as, sweep_points));
            r.notes.push_back("a* = " + format_number(as));
            write_report(r, sweep_opts.out, false);
            std::cout << curve_csv(r.curves.front());
            return int(kExitPass);
        });

    return guarded([&] {
        const ExperimentConfig cfg = load(dump_opts);
        const auto& fm = cfg.model(dump_model);
        fs::create_directories(dump_opts.out);
        const fs::path file = fs::path(dump_opts.out) / (dump_what + "_" + dump_model + ".csv");
        std::ofstream os(file);
        if (dump_what == "scale") {
            write_scale_csv(os, scale_function(fm.model, fm.params.q, dump_xmax, 500));
        } else {
            PathSpec spec;
            spec.horizon = dump_horizon;
            spec.grid_step = std::min(cfg.run.grid_step, dump_horizon);
            spec.seed = derive_seed(cfg.run.seed, string_tag("dump/" + dump_model));
            spec.path_index = dump_index;
            const SamplePath p = simulate_path(fm.model, spec);
            if (dump_what == "path")
                write_path_csv(os, p);
            else
                write_trajectory_csv(os, doubly_reflect(p, dump_x, dump_a));
        }
        std::printf("%s\n", file.c_str());
        return int(kExitPass);
    });
}
