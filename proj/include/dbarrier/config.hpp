#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dbarrier/levy_model.hpp"
#include "dbarrier/scale_oracle.hpp"
#include "dbarrier/strategies.hpp"

namespace dbarrier {

/// Malformed or invalid configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FleetModel {
    std::string name;
    LevyModel model;
    ProblemParams params;
};

/// Statistical and pathwise tolerances; all strictly positive.
struct Tolerances {
    double band = 3.0;               // stderr multiple for statistical checks
    double pathwise = 1e-12;
    double laplace = 1e-6;           // relative, scale table Laplace check
    double generator = 1e-3;
    double contraction_slack = 0.05;
};

struct RunBlock {
    std::uint64_t seed = 0;
    double grid_step = 0.02;
    double exit_grid_step = 1e-3;  // exit times carry an O(grid_step) lag, so exit functionals get a finer grid
    double eps_disc = 1e-6;
    unsigned workers = 0;
    Tolerances tol;
};

struct AstarSettings {
    std::size_t n_paths = 10000;
    double tol_a = 0.005;
};

struct CouplingSettings {
    std::vector<std::string> models;
    std::size_t n_paths = 1000;
    double a = 1.0;
    std::vector<double> eps{0.01, 0.1};
    double x = 0.3;
    double horizon = 20.0;
};

struct AdmissibilitySettings {
    std::vector<std::string> models;
    std::vector<std::string> pi_zero_models;
    std::size_t n_paths = 4000;
    double a = 1.0;
    double x = 0.5;
};

struct OracleSettings {
    std::vector<std::string> models;
    std::size_t n_paths = 100000;
    double grid_step = 1e-3;
    double a = 1.0;
    std::vector<double> x_fractions{0.1, 0.3, 0.5, 0.7, 0.9};
    std::size_t table_n = 2000;
};

struct FixedPointSettings {
    std::vector<std::string> models;
    std::size_t n_paths = 100000;
    double a = 1.0;
    std::size_t grid_n = 64;
    double tol = 1e-11;
    std::vector<double> x_fractions{0.1, 0.3, 0.5, 0.7, 0.9};
};

struct DerivativeSettings {
    std::vector<std::string> models;
    std::size_t n_paths = 10000;
    std::vector<double> a_factors{0.5, 1.0, 2.0};  // multiples of a*
    double x_factor = 0.2;  // strictly inside the smallest barrier, clear of the monitoring boundary layer
    double da_fraction = 0.05;
    std::vector<double> x_fractions{0.1, 0.3, 0.5, 0.7, 0.9};
    double dx_fraction = 0.05;
};

struct OptimalitySettings {
    std::vector<std::string> models;
    std::size_t n_paths = 4000;
    std::size_t sweep_points = 12;
    double sweep_lo = 0.25;  // multiples of a*
    double sweep_hi = 4.0;
    std::vector<double> x_factors{0.25, 0.5, 1.0};
    std::size_t slope_paths = 10000;
    std::size_t grid_points = 9;
    std::vector<double> approach{0.01, 0.003, 0.001};  // relative gaps below a*
};

struct GeneratorSettings {
    std::vector<std::string> models;
    std::size_t points = 24;
    double control_factor = 0.5;
};

/// Strategy entry; barrier levels are given as multiples of a* when `relative`.
struct StrategyEntry {
    StrategySpec spec;
    bool relative = true;
};

struct TournamentSettings {
    std::string model;
    std::size_t n_paths = 4000;
    std::vector<double> x_factors{0.0, 0.5, 1.0, 2.0};
    std::vector<StrategyEntry> strategies;  // the first entry is the reference
};

inline constexpr const char* kExperiments[] = {"couplings", "oracle_xval", "derivatives", "astar_optimality",
                                               "generator", "tournament", "all"};

struct ExperimentConfig {
    std::string experiment = "all";
    std::map<std::string, FleetModel> models;
    RunBlock run;
    AstarSettings astar;
    CouplingSettings couplings;
    AdmissibilitySettings admissibility;
    OracleSettings oracle;
    FixedPointSettings fixed_point;
    DerivativeSettings derivatives;
    OptimalitySettings optimality;
    GeneratorSettings generator;
    TournamentSettings tournament;

    const FleetModel& model(const std::string& name) const {
        auto it = models.find(name);
        if (it == models.end()) throw ConfigError("unknown model '" + name + "'");
        return it->second;
    }

    /// Overrides every Monte Carlo budget; used by --paths.
    void set_paths(std::size_t n) {
        astar.n_paths = couplings.n_paths = admissibility.n_paths = oracle.n_paths = fixed_point.n_paths = n;
        derivatives.n_paths = optimality.n_paths = optimality.slope_paths = tournament.n_paths = n;
    }
};

namespace detail {

using json = nlohmann::json;

/// A JSON object together with its dotted path; every read is checked and unread keys are rejected.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError("field '" + where() + "': " + what); }
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError("field '" + sub(key) + "': " + what);
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) fail(key, "missing required field");
        return *it;
    }

    Node child(const std::string& key) { return Node(raw(key), sub(key)); }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }
    double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

    double positive(const std::string& key, double def) {
        const double v = number(key, def);
        if (!(v > 0.0)) fail(key, "must be > 0");
        return v;
    }

    std::uint64_t count(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) fail(key, "expected a positive integer");
        return v.get<std::uint64_t>();
    }
    std::uint64_t count(const std::string& key, std::uint64_t def) { return has(key) ? count(key) : def; }

    std::string text(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> def) {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(key, "expected a non-empty array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::string> names(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) fail(key, "expected an array of model names");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) fail(key, "expected an array of model names");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(it.key(), "unknown field");
    }

    const std::string& path() const { return path_; }
    const json& value() const { return j_; }

private:
    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline JumpLaw parse_law(Node n) {
    const std::string kind = n.text("kind");
    JumpLaw law;
    if (kind == "exponential") {
        law = JumpLaw::exponential(n.number("rate"));
    } else if (kind == "mixture") {
        law = JumpLaw::mixture(n.numbers("weights", {}), n.numbers("rates", {}));
        if (law.weights.empty()) n.fail("weights", "missing required field");
    } else if (kind == "point_mass") {
        law = JumpLaw::point_mass(n.number("size"));
    } else {
        n.fail("kind", "expected exponential, mixture or point_mass");
    }
    n.finish();
    try {
        law.check();
    } catch (const std::exception& e) {
        n.fail(e.what());
    }
    return law;
}

inline FleetModel parse_model(const std::string& name, Node n) {
    FleetModel fm;
    fm.name = name;
    JumpSpec jumps;
    if (n.has("jumps")) {
        Node j = n.child("jumps");
        jumps.arrival_rate = j.number("rate");
        jumps.sign_split = j.number("sign_split", 0.5);
        if (j.has("positive")) jumps.positive = parse_law(j.child("positive"));
        if (j.has("negative")) jumps.negative = parse_law(j.child("negative"));
        j.finish();
    }
    const double sigma = n.number("sigma", 0.0);
    if (n.has("gamma") == n.has("drift")) n.fail("give exactly one of 'gamma' (triplet) or 'drift' (linear drift)");
    try {
        fm.model = n.has("gamma") ? LevyModel(n.number("gamma"), sigma, jumps)
                                  : LevyModel::from_linear_drift(n.number("drift"), sigma, jumps);
        validate(fm.model);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        n.fail(e.what());
    }
    Node p = n.child("params");
    fm.params.q = p.number("q");
    fm.params.beta = p.number("beta");
    p.finish();
    try {
        fm.params.check();
    } catch (const std::exception& e) {
        p.fail(e.what());
    }
    n.finish();
    return fm;
}

inline StrategyEntry parse_strategy(Node n) {
    StrategyEntry s;
    const std::string kind = n.text("kind");
    s.relative = !n.has("a");
    const double a = s.relative ? n.number("a_factor", 1.0) : n.number("a");
    if (kind == "double_barrier") {
        s.spec = StrategySpec::double_barrier(a);
    } else if (kind == "periodic_review") {
        s.spec = StrategySpec::periodic_review(a, n.number("delta"));
    } else if (kind == "hysteresis") {
        s.spec = StrategySpec::hysteresis(a, a * n.number("b_fraction"));
    } else {
        n.fail("kind", "expected double_barrier, periodic_review or hysteresis");
    }
    n.finish();
    try {
        s.spec.check();
    } catch (const std::exception& e) {
        n.fail(std::string("inadmissible strategy: ") + e.what());
    }
    return s;
}

inline json parse_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        // The parser message carries the line and column.
        throw ConfigError(source + ": syntax error: " + e.what());
    }
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void parse_models(Node n, std::map<std::string, FleetModel>& out) {
    for (auto it = n.value().begin(); it != n.value().end(); ++it) out[it.key()] = parse_model(it.key(), n.child(it.key()));
}

inline void check_names(const ExperimentConfig& c, const std::vector<std::string>& names, const std::string& field) {
    for (const auto& m : names)
        if (!c.models.count(m)) throw ConfigError("field '" + field + "': unknown model '" + m + "'");
}

inline std::vector<double> fractions(Node& n, const std::string& key, std::vector<double> def) {
    auto v = n.numbers(key, std::move(def));
    for (double f : v)
        if (!(f > 0.0 && f < 1.0)) n.fail(key, "fractions must lie in (0, 1)");
    return v;
}

}  // namespace detail

/// Models only, as in a fleet file: an object mapping names to model blocks.
inline std::map<std::string, FleetModel> parse_fleet(const std::string& text, const std::string& source = "fleet") {
    const auto j = detail::parse_text(text, source);
    std::map<std::string, FleetModel> out;
    try {
        detail::parse_models(detail::Node(j, "models"), out);
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return out;
}

inline std::map<std::string, FleetModel> load_fleet(const std::filesystem::path& p) {
    return parse_fleet(detail::read_file(p), p.string());
}

/**
 * Parses a configuration document. `base` resolves a relative "fleet" file.
 * Every key is checked; unknown keys and missing seeds are errors.
 */
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "config",
                                     const std::filesystem::path& base = {}) {
    using detail::Node;
    const auto j = detail::parse_text(text, source);
    ExperimentConfig c;
    try {
        Node root(j, "");
        if (root.has("fleet")) {
            const auto path = base / root.text("fleet");
            c.models = load_fleet(path);
        }
        if (root.has("models")) detail::parse_models(root.child("models"), c.models);
        if (c.models.empty()) root.fail("models", "no models given (inline 'models' or a 'fleet' file)");

        c.experiment = root.has("experiment") ? root.text("experiment") : "all";
        bool known = false;
        for (const char* e : kExperiments) known |= c.experiment == e;
        if (!known) root.fail("experiment", "unknown experiment '" + c.experiment + "'");

        Node run = root.child("run");
        c.run.seed = run.count("seed");
        c.run.grid_step = run.positive("grid_step", c.run.grid_step);
        c.run.exit_grid_step = run.positive("exit_grid_step", c.run.exit_grid_step);
        c.run.eps_disc = run.positive("eps_disc", c.run.eps_disc);
        if (!(c.run.eps_disc < 1.0)) run.fail("eps_disc", "must be < 1");
        if (run.has("workers")) c.run.workers = unsigned(run.count("workers"));
        if (run.has("tolerances")) {
            Node t = run.child("tolerances");
            c.run.tol.band = t.positive("band", c.run.tol.band);
            c.run.tol.pathwise = t.positive("pathwise", c.run.tol.pathwise);
            c.run.tol.laplace = t.positive("laplace", c.run.tol.laplace);
            c.run.tol.generator = t.positive("generator", c.run.tol.generator);
            c.run.tol.contraction_slack = t.positive("contraction_slack", c.run.tol.contraction_slack);
            t.finish();
        }
        run.finish();

        auto all_names = [&] {
            std::vector<std::string> v;
            for (const auto& [k, _] : c.models) v.push_back(k);
            return v;
        };
        auto names = [&](Node& n, const std::string& key) { return n.has(key) ? n.names(key) : all_names(); };

        if (root.has("astar")) {
            Node n = root.child("astar");
            c.astar.n_paths = n.count("n_paths", c.astar.n_paths);
            c.astar.tol_a = n.positive("tol_a", c.astar.tol_a);
            n.finish();
        }
        {
            auto& s = c.couplings;
            s.models = all_names();
            if (root.has("couplings")) {
                Node n = root.child("couplings");
                s.models = names(n, "models");
                s.n_paths = n.count("n_paths", s.n_paths);
                s.a = n.positive("a", s.a);
                s.eps = n.numbers("eps", s.eps);
                s.x = n.number("x", s.x);
                s.horizon = n.positive("horizon", s.horizon);
                for (double e : s.eps)
                    if (!(e > 0.0)) n.fail("eps", "shifts must be > 0");
                if (!(s.x >= 0.0) || s.x + *std::max_element(s.eps.begin(), s.eps.end()) > s.a)
                    n.fail("x", "need 0 <= x and x + eps <= a");
                n.finish();
            }
            detail::check_names(c, s.models, "couplings.models");
        }
        {
            auto& s = c.admissibility;
            s.models = all_names();
            if (root.has("admissibility")) {
                Node n = root.child("admissibility");
                s.models = names(n, "models");
                if (n.has("pi_zero_models")) s.pi_zero_models = n.names("pi_zero_models");
                s.n_paths = n.count("n_paths", s.n_paths);
                s.a = n.positive("a", s.a);
                s.x = n.number("x", s.x);
                n.finish();
            }
            detail::check_names(c, s.models, "admissibility.models");
            detail::check_names(c, s.pi_zero_models, "admissibility.pi_zero_models");
            for (const auto& m : s.pi_zero_models)
                if (!classify_variation(c.models[m].model).bounded)
                    throw ConfigError("field 'admissibility.pi_zero_models': '" + m + "' needs bounded variation");
        }
        {
            auto& s = c.oracle;
            if (root.has("oracle_xval")) {
                Node n = root.child("oracle_xval");
                s.models = names(n, "models");
                s.n_paths = n.count("n_paths", s.n_paths);
                s.grid_step = n.positive("grid_step", s.grid_step);
                s.a = n.positive("a", s.a);
                s.x_fractions = detail::fractions(n, "x_fractions", s.x_fractions);
                s.table_n = n.count("table_n", s.table_n);
                n.finish();
            } else {
                for (const auto& [k, fm] : c.models)
                    if (!fm.model.jumps.has_positive()) s.models.push_back(k);
            }
            detail::check_names(c, s.models, "oracle_xval.models");
            for (const auto& m : s.models)
                if (c.models[m].model.jumps.has_positive())
                    throw ConfigError("field 'oracle_xval.models': '" + m + "' is not spectrally negative");
        }
        if (root.has("fixed_point")) {
            auto& s = c.fixed_point;
            Node n = root.child("fixed_point");
            s.models = n.names("models");
            s.n_paths = n.count("n_paths", s.n_paths);
            s.a = n.positive("a", s.a);
            s.grid_n = n.count("grid_n", s.grid_n);
            s.tol = n.positive("tol", s.tol);
            s.x_fractions = detail::fractions(n, "x_fractions", s.x_fractions);
            n.finish();
            detail::check_names(c, s.models, "fixed_point.models");
            for (const auto& m : s.models)
                if (!c.models[m].model.jumps.has_positive())
                    throw ConfigError("field 'fixed_point.models': '" + m + "' has no positive jumps");
        }
        {
            auto& s = c.derivatives;
            s.models = all_names();
            if (root.has("derivatives")) {
                Node n = root.child("derivatives");
                s.models = names(n, "models");
                s.n_paths = n.count("n_paths", s.n_paths);
                s.a_factors = n.numbers("a_factors", s.a_factors);
                s.x_factor = n.number("x_factor", s.x_factor);
                s.da_fraction = n.positive("da_fraction", s.da_fraction);
                s.x_fractions = detail::fractions(n, "x_fractions", s.x_fractions);
                s.dx_fraction = n.positive("dx_fraction", s.dx_fraction);
                for (double f : s.a_factors)
                    if (!(f > 0.0)) n.fail("a_factors", "factors must be > 0");
                n.finish();
            }
            detail::check_names(c, s.models, "derivatives.models");
        }
        {
            auto& s = c.optimality;
            s.models = all_names();
            if (root.has("astar_optimality")) {
                Node n = root.child("astar_optimality");
                s.models = names(n, "models");
                s.n_paths = n.count("n_paths", s.n_paths);
                s.sweep_points = n.count("sweep_points", s.sweep_points);
                s.sweep_lo = n.positive("sweep_lo", s.sweep_lo);
                s.sweep_hi = n.positive("sweep_hi", s.sweep_hi);
                s.x_factors = n.numbers("x_factors", s.x_factors);
                s.slope_paths = n.count("slope_paths", s.slope_paths);
                s.grid_points = n.count("grid_points", s.grid_points);
                s.approach = detail::fractions(n, "approach", s.approach);
                if (!(s.sweep_lo < 1.0 && s.sweep_hi > 1.0)) n.fail("sweep_lo", "sweep must bracket a*: lo < 1 < hi");
                if (s.grid_points < 3) n.fail("grid_points", "need at least 3 points");
                n.finish();
            }
            detail::check_names(c, s.models, "astar_optimality.models");
        }
        {
            auto& s = c.generator;
            if (root.has("generator")) {
                Node n = root.child("generator");
                s.models = names(n, "models");
                s.points = n.count("points", s.points);
                s.control_factor = n.positive("control_factor", s.control_factor);
                n.finish();
            } else {
                for (const auto& [k, fm] : c.models)
                    if (!fm.model.jumps.has_positive() && closed_form_scale(fm.model, fm.params.q)) s.models.push_back(k);
            }
            detail::check_names(c, s.models, "generator.models");
        }
        {
            auto& s = c.tournament;
            if (root.has("tournament")) {
                Node n = root.child("tournament");
                s.model = n.text("model");
                s.n_paths = n.count("n_paths", s.n_paths);
                s.x_factors = n.numbers("x_factors", s.x_factors);
                const auto& arr = n.raw("strategies");
                if (!arr.is_array() || arr.empty()) n.fail("strategies", "expected a non-empty array");
                for (std::size_t i = 0; i < arr.size(); ++i)
                    s.strategies.push_back(detail::parse_strategy(Node(arr[i], "tournament.strategies[" + std::to_string(i) + "]")));
                n.finish();
            } else {
                s.model = c.models.begin()->first;
                for (const double f : {1.0, 0.5, 2.0}) s.strategies.push_back({StrategySpec::double_barrier(f), true});
            }
            detail::check_names(c, {s.model}, "tournament.model");
        }
        root.finish();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
    return parse_config(detail::read_file(p), p.string(), p.parent_path());
}

}  // namespace dbarrier
