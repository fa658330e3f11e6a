#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "dbarrier/experiments.hpp"

using namespace dbarrier;

namespace {

const std::string kFleet = DBARRIER_SOURCE_DIR "/configs/fleet.json";

std::string minimal(const std::string& extra = "", const std::string& run_extra = "") {
    return "{\"fleet\": \"" + kFleet + "\", \"run\": {\"seed\": 5" + run_extra + "}" + extra + "}";
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

LevyModel claims_model() {
    JumpSpec j;
    j.arrival_rate = 1.5;
    j.sign_split = 0.0;
    j.negative = JumpLaw::exponential(1.0);
    return LevyModel::from_linear_drift(2.0, 0.0, j);
}

}  // namespace

TEST(Config, FleetFileLoadsEveryModelWithLinearDrift) {
    const auto fleet = load_fleet(kFleet);
    ASSERT_EQ(fleet.size(), 6u);
    EXPECT_DOUBLE_EQ(fleet.at("F1").model.linear_drift(), 0.5);
    EXPECT_DOUBLE_EQ(fleet.at("F4").model.linear_drift(), 2.0);
    EXPECT_DOUBLE_EQ(fleet.at("F2m").model.linear_drift(), -0.5);
    EXPECT_TRUE(fleet.at("F5").model.jumps.has_positive());
    EXPECT_FALSE(fleet.at("F5").model.jumps.has_negative());
    for (const auto& [name, fm] : fleet) EXPECT_DOUBLE_EQ(fm.params.beta, 1.5) << name;
}

TEST(Config, DefaultsSelectSpectrallyNegativeModelsForOracles) {
    const auto c = parse_config(minimal(), "cfg");
    EXPECT_EQ(c.experiment, "all");
    EXPECT_EQ(c.run.seed, 5u);
    EXPECT_EQ(c.oracle.models, (std::vector<std::string>{"F1", "F4"}));
    EXPECT_EQ(c.generator.models, (std::vector<std::string>{"F1", "F4"}));
    EXPECT_EQ(c.couplings.models.size(), 6u);
    EXPECT_EQ(c.tournament.strategies.size(), 3u);
}

TEST(Config, SyntaxErrorsReportLineAndColumn) {
    const std::string e = error_of("{\n  \"run\": {\"seed\": 1,,}\n}");
    EXPECT_NE(e.find("syntax error"), std::string::npos) << e;
    EXPECT_NE(e.find("line 2"), std::string::npos) << e;
}

TEST(Config, FieldErrorsNameTheField) {
    EXPECT_NE(error_of("{\"fleet\": \"" + kFleet + "\", \"run\": {}}").find("'run.seed': missing"), std::string::npos);
    EXPECT_NE(error_of(minimal("", ", \"grid_step\": -1")).find("'run.grid_step'"), std::string::npos);
    EXPECT_NE(error_of(minimal("", ", \"tolerances\": {\"band\": 0}")).find("'run.tolerances.band'"), std::string::npos);
    EXPECT_NE(error_of(minimal(", \"couplings\": {\"paths\": 3}")).find("'couplings.paths': unknown field"), std::string::npos);
    EXPECT_NE(error_of(minimal(", \"derivatives\": {\"models\": [\"F9\"]}")).find("unknown model 'F9'"), std::string::npos);
    EXPECT_NE(error_of(minimal(", \"experiment\": \"everything\"")).find("'experiment'"), std::string::npos);
    EXPECT_NE(error_of(minimal(", \"oracle_xval\": {\"models\": [\"F2\"]}")).find("not spectrally negative"), std::string::npos);
    EXPECT_NE(error_of(minimal(", \"admissibility\": {\"pi_zero_models\": [\"F1\"]}")).find("bounded variation"),
              std::string::npos);
}

TEST(Config, ModelBlocksAreValidated) {
    auto with_model = [](const std::string& body) {
        return "{\"models\": {\"M\": " + body + "}, \"run\": {\"seed\": 1}}";
    };
    EXPECT_NE(error_of(with_model("{\"gamma\": 1, \"drift\": 1, \"params\": {\"q\": 0.1, \"beta\": 1.5}}")).find("exactly one"),
              std::string::npos);
    EXPECT_NE(error_of(with_model("{\"drift\": 1, \"params\": {\"q\": 0.1, \"beta\": 1.5}}")).find("'models.M'"),
              std::string::npos);  // pure positive drift is monotone
    EXPECT_NE(error_of(with_model("{\"sigma\": 1, \"drift\": 0, \"params\": {\"q\": 0.1, \"beta\": 0.5}}")).find("models.M.params"),
              std::string::npos);
    EXPECT_NE(error_of(with_model("{\"sigma\": 1, \"drift\": 0, \"jumps\": {\"rate\": 1, \"positive\": {\"kind\": \"gamma\"}},"
                                  " \"params\": {\"q\": 0.1, \"beta\": 1.5}}"))
                  .find("models.M.jumps.positive.kind"),
              std::string::npos);
    const auto c = parse_config(with_model("{\"gamma\": 0.2, \"sigma\": 1, \"params\": {\"q\": 0.1, \"beta\": 1.5}}"), "cfg");
    EXPECT_DOUBLE_EQ(c.model("M").model.gamma, 0.2);
}

TEST(Config, InadmissibleStrategiesAreRejected) {
    const std::string bad = ", \"tournament\": {\"model\": \"F1\", \"strategies\": [{\"kind\": \"hysteresis\", \"b_fraction\": 1.2}]}";
    EXPECT_NE(error_of(minimal(bad)).find("'tournament.strategies[0]': inadmissible"), std::string::npos) << error_of(minimal(bad));
    const std::string bad_delta = ", \"tournament\": {\"model\": \"F1\", \"strategies\": [{\"kind\": \"periodic_review\", \"delta\": 0}]}";
    EXPECT_NE(error_of(minimal(bad_delta)).find("inadmissible"), std::string::npos);
}

TEST(Config, PathOverrideReachesEveryBudget) {
    auto c = parse_config(minimal(), "cfg");
    c.set_paths(17);
    EXPECT_EQ(c.oracle.n_paths, 17u);
    EXPECT_EQ(c.optimality.slope_paths, 17u);
    EXPECT_EQ(c.tournament.n_paths, 17u);
    EXPECT_EQ(c.astar.n_paths, 17u);
}

TEST(Report, JsonIsStableAndCountsStatuses) {
    Report r;
    r.experiment = "unit";
    r.seed = 3;
    r.upper("a.pass", "claim", 0.1, 0.2, 0.01);
    r.upper("b.fail", "claim", 0.3, 0.2);
    r.add({"c.inc", "claim", Status::inconclusive, std::nan(""), INFINITY, 0.0});
    r.curves.push_back({"curve", {"x", "y"}, {{0.1, 1.0 / 3.0}}});
    EXPECT_EQ(r.count(Status::pass), 1u);
    EXPECT_TRUE(r.failed());
    const std::string j = report_json(r);
    EXPECT_EQ(j, report_json(r));
    EXPECT_NE(j.find("\"measured\": \"nan\""), std::string::npos);
    EXPECT_NE(j.find("\"tolerance\": \"inf\""), std::string::npos);
    EXPECT_NE(j.find("curves/curve.csv"), std::string::npos);
    const auto parsed = nlohmann::json::parse(j);
    EXPECT_EQ(parsed["summary"]["fail"], 1);
    EXPECT_EQ(curve_csv(r.curves[0]), "x,y\n1.0000000000000001e-01,3.3333333333333331e-01\n");
    EXPECT_EQ(checks_csv(r).substr(0, 44), "name,status,measured,tolerance,stderr,claim\n");
}

TEST(Tournament, SingleEntryRanksFirstTrivially) {
    const auto m = claims_model();
    const ProblemParams pp{0.1, 1.5};
    const double a = SnAnalytic(m, pp).astar();
    SimConfig sc;
    sc.seed = 81;
    auto res = ExperimentRunner::run_tournament(m, pp, {StrategySpec::double_barrier(a)}, {0.0, a}, 200, sc, 3.0);
    ASSERT_EQ(res.ranking.size(), 2u);
    EXPECT_EQ(res.ranking[0], std::vector<std::size_t>{0});
    EXPECT_FALSE(res.report.failed());
    EXPECT_EQ(res.report.count(Status::pass), 2u);
}

TEST(Tournament, OptimalBarrierBeatsHalfAndDoubleBarriers) {
    const auto m = claims_model();
    const ProblemParams pp{0.1, 1.5};
    const double a = SnAnalytic(m, pp).astar();
    SimConfig sc;
    sc.seed = 83;
    const std::vector<StrategySpec> specs{StrategySpec::double_barrier(a), StrategySpec::double_barrier(0.5 * a),
                                          StrategySpec::double_barrier(2.0 * a)};
    auto res = ExperimentRunner::run_tournament(m, pp, specs, {0.0, 0.5 * a, a, 2.0 * a}, 2000, sc, 3.0);
    EXPECT_FALSE(res.report.failed());
    for (std::size_t k = 0; k < res.xs.size(); ++k) EXPECT_EQ(res.ranking[k].front(), 0u) << "x index " << k;
    EXPECT_NE(res.report.notes.front().find("necessary-condition evidence"), std::string::npos);
}

TEST(Tournament, PeriodicReviewApproachesTheBarrierFromBelow) {
    const auto m = claims_model();
    const ProblemParams pp{0.1, 1.5};
    const double a = SnAnalytic(m, pp).astar();
    SimConfig sc;
    sc.seed = 89;
    const std::vector<StrategySpec> specs{StrategySpec::double_barrier(a), StrategySpec::periodic_review(a, 0.5),
                                          StrategySpec::periodic_review(a, 0.1), StrategySpec::periodic_review(a, 0.02)};
    auto res = ExperimentRunner::run_tournament(m, pp, specs, {0.5 * a, 2.0 * a}, 2000, sc, 3.0);
    EXPECT_FALSE(res.report.failed());
    for (std::size_t k = 0; k < res.xs.size(); ++k) {
        const double gap_coarse = res.entries[0].value[k].mean - res.entries[1].value[k].mean;
        const double gap_fine = res.entries[0].value[k].mean - res.entries[3].value[k].mean;
        EXPECT_GT(gap_coarse, 0.0);
        EXPECT_LT(gap_fine, gap_coarse);
        EXPECT_LT(std::abs(gap_fine), 0.1 * gap_coarse + 3.0 * res.entries[3].value[k].stderr);
    }
    ASSERT_NE(res.report.find("tournament.review_refinement.a=" + fmt(a) + ".x=" + fmt(0.5 * a)), nullptr);
}

TEST(Runner, ReportsAreByteIdenticalAndSuitesAreSeedIsolated) {
    auto c = load_config(DBARRIER_SOURCE_DIR "/configs/smoke.json");
    c.set_paths(100);
    const std::string one = report_json(ExperimentRunner(c).run("derivatives"));
    const std::string two = report_json(ExperimentRunner(c).run("derivatives"));
    EXPECT_EQ(one, two);
    // A suite gives the same checks alone or after another suite populated the barrier cache.
    ExperimentRunner warm(c);
    warm.run("tournament");
    Report r = warm.run("derivatives");
    EXPECT_EQ(report_json(r), one);
    c.run.seed += 1;
    EXPECT_NE(report_json(ExperimentRunner(c).run("derivatives")), one);
}

TEST(Runner, UnknownExperimentIsAConfigError) {
    auto c = load_config(DBARRIER_SOURCE_DIR "/configs/smoke.json");
    EXPECT_THROW(ExperimentRunner(c).run("nope"), ConfigError);
}

TEST(Runner, GeneratorSuiteDetectsTheNegativeControl) {
    auto c = load_config(DBARRIER_SOURCE_DIR "/configs/smoke.json");
    const Report r = ExperimentRunner(c).run("generator");
    const Check* ctl = r.find("generator.negative_control.F4");
    ASSERT_NE(ctl, nullptr);
    EXPECT_EQ(ctl->status, Status::pass);
    EXPECT_GT(ctl->measured, ctl->tolerance);
    EXPECT_FALSE(r.failed());
}
