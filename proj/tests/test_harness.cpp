#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kzsparse/config.hpp"
#include "kzsparse/errors.hpp"
#include "kzsparse/harness.hpp"
#include "kzsparse/output.hpp"
#include "kzsparse/toml_lite.hpp"

using namespace kzsparse;
using nlohmann::json;

namespace {

std::vector<std::string> problems_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& field) {
  for (const auto& p : problems) {
    if (p.rfind(field, 0) == 0) return true;
  }
  return false;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_bos(std::size_t trials = 4) {
  ExperimentConfig c;
  c.matrix = {OperatorKind::SubsampledBOS, 32, 128};
  c.s_values = {3};
  c.trials = trials;
  c.base_seed = 11;
  c.solver.epochs = 20;
  c.threads = 1;
  return c;
}

// Drops the elapsed_seconds column (8th) of the long-form trial CSV.
std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    cols.erase(cols.begin() + 7);
    for (const auto& c : cols) out += c + ",";
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("config defaults and round trip") {
  const ExperimentConfig c = config_from_json(json::object());
  CHECK(c.trials == 30);
  CHECK(c.success_threshold == 0.1);
  CHECK(c.solver.name == SolverKind::KZIHT);
  CHECK_FALSE(c.solver.gamma.has_value());

  ExperimentConfig d = small_bos();
  d.solver.gamma = 2.5;
  d.solver.period = 8;
  d.noise = NoiseModel::gaussian(0.01);
  d.rules = {ScheduleRule::Cyclic};
  const ExperimentConfig back = config_from_json(to_json(d));
  CHECK(to_json(back) == to_json(d));
}

TEST_CASE("config errors carry field paths") {
  CHECK(mentions(problems_of({{"trials", 0}}), "trials"));
  CHECK(mentions(problems_of({{"matrix", {{"kind", "hadamard"}, {"N", 1000}}}}), "matrix.N"));
  CHECK(mentions(problems_of({{"matrix", {{"kind", "hadamard"}, {"m", 2048}, {"N", 1024}}}}), "matrix.m"));
  CHECK(mentions(problems_of({{"signal", {{"s", {5, 0}}}}}), "signal.s[1]"));
  CHECK(mentions(problems_of({{"solver", {{"name", "sgd"}}}}), "solver.name"));
  CHECK(mentions(problems_of({{"solver", {{"gamma", -1.0}}}}), "solver.gamma"));
  CHECK(mentions(problems_of({{"solver", {{"period", 999}}}}), "solver.period"));
  CHECK(mentions(problems_of({{"solver", {{"rule", "greedy"}}}}), "solver.rule"));
  CHECK(mentions(problems_of({{"solver", {{"epochs", "many"}}}}), "solver.epochs"));
  CHECK(mentions(problems_of({{"noise", {{"sigma", -0.1}}}}), "noise.sigma"));
  CHECK(mentions(problems_of({{"matrix", {{"rows", 3}}}}), "matrix.rows"));
  CHECK(mentions(problems_of({{"bogus", 1}}), "bogus"));
  CHECK(mentions(problems_of({{"sweep", {{"p_list", {0}}}}}), "sweep.p_list[0]"));
  CHECK(mentions(problems_of({{"solver", {{"preset", "subgaussian"}}}}), "solver.preset"));
  // Several problems are reported together.
  CHECK(problems_of({{"trials", 0}, {"noise", {{"sigma", -1.0}}}}).size() == 2);
}

TEST_CASE("TOML subset") {
  const json j = parse_toml_lite(R"(
# phase grid
trials = 10
base_seed = 3
outputs = "grid"   # trailing comment
[matrix]
kind = "bernoulli"
m = 64
N = 256
[signal]
s = [4, 8,
     12]
[solver]
name = "iht"
gamma = 1.5
[phase]
m_values = [32, 64]
noise.sigma = 0.0
)");
  CHECK(j["trials"] == 10);
  CHECK(j["outputs"] == "grid");
  CHECK(j["matrix"]["kind"] == "bernoulli");
  CHECK(j["signal"]["s"] == json({4, 8, 12}));
  CHECK(j["solver"]["gamma"] == 1.5);
  CHECK(j["phase"]["noise"]["sigma"] == 0.0);
  CHECK_THROWS(parse_toml_lite("x = \n"));
  CHECK_THROWS(parse_toml_lite("[a\n"));
}

TEST_CASE("overrides") {
  json tree = {{"matrix", {{"m", 10}}}};
  apply_override(tree, "matrix.m=64");
  apply_override(tree, "solver.rule=cyclic");
  apply_override(tree, "signal.s=[1,2]");
  CHECK(tree["matrix"]["m"] == 64);
  CHECK(tree["solver"]["rule"] == "cyclic");
  CHECK(tree["signal"]["s"] == json({1, 2}));
  CHECK_THROWS_AS(apply_override(tree, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(tree, "a..b=1"), ConfigError);
}

TEST_CASE("automatic step sizes") {
  ExperimentConfig c;
  c.matrix = {OperatorKind::SubsampledBOS, 256, 1024};
  CHECK(resolve_params(c, 256, 5, 200).gamma == 4.0);
  c.solver.name = SolverKind::KZPT;
  c.solver.period = 128;
  CHECK(resolve_params(c, 256, 5, 200).gamma == 8.0);
  c.matrix.kind = OperatorKind::Bernoulli;
  CHECK(resolve_params(c, 256, 5, 200).gamma == 4.0);
  c.solver.name = SolverKind::KZ;
  CHECK(resolve_params(c, 256, 5, 200).gamma == 1.0);
  c.solver.gamma = 0.5;
  CHECK(resolve_params(c, 256, 5, 200).gamma == 0.5);
  CHECK(resolve_params(c, 256, 5, 200).epochs == 200);
  c.solver.epochs = 7;
  CHECK(resolve_params(c, 256, 5, 300).epochs == 7);

  ExperimentConfig p;
  p.matrix = {OperatorKind::Bernoulli, 100, 1024};
  p.solver.preset = StepPresetKind::SubGaussian;
  CHECK_THROWS_AS(resolve_params(p, 100, 50, 200), InfeasibleParameters);
}

TEST_CASE("trial seeds do not depend on execution order") {
  ExperimentConfig c = small_bos(6);
  const auto serial = run_cell(c, 32, 3, 20);
  c.threads = 4;
  const auto parallel = run_cell(c, 32, 3, 20);
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(serial.trials[t].seed == trial_seed(11, t));
    CHECK(serial.trials[t].trace.final_iterate == parallel.trials[t].trace.final_iterate);
  }
  CHECK(curve_csv(serial.aggregate) == curve_csv(parallel.aggregate));

  // A trial's trace only depends on its own seed.
  c.trials = 3;
  const auto fewer = run_cell(c, 32, 3, 20);
  CHECK(fewer.trials[2].trace.final_iterate == serial.trials[2].trace.final_iterate);
}

TEST_CASE("aggregation pads diverged and early-stopped trials") {
  auto record = [](std::vector<double> errs, RunStatus status) {
    TrialRecord r;
    for (double e : errs) r.trace.epochs.push_back({e, 0.0, 0.0});
    r.trace.status = status;
    return r;
  };
  const std::vector<TrialRecord> trials{record({1.0, 0.5, 0.25}, RunStatus::BudgetExhausted),
                                        record({2.0}, RunStatus::Diverged),
                                        record({0.5}, RunStatus::Converged)};
  const auto agg = aggregate_traces(trials, 100.0);
  REQUIRE(agg.mean.size() == 3);
  CHECK(agg.mean[0] == doctest::Approx((1.0 + 2.0 + 0.5) / 3.0));
  CHECK(agg.mean[1] == doctest::Approx((0.5 + 100.0 + 0.5) / 3.0));
  CHECK(agg.mean[2] == doctest::Approx((0.25 + 100.0 + 0.5) / 3.0));
  CHECK(agg.n_diverged == std::vector<std::size_t>{0, 1, 1});
  CHECK(agg.n_trials == std::vector<std::size_t>{3, 3, 3});
  const double m = agg.mean[0];
  const double sd = std::sqrt((std::pow(1.0 - m, 2) + std::pow(2.0 - m, 2) + std::pow(0.5 - m, 2)) / 2.0);
  CHECK(agg.std_dev[0] == doctest::Approx(sd));
}

TEST_CASE("KZIHT and IHT curves agree on BOS with gamma = N/m") {
  ExperimentConfig c = small_bos(5);
  const auto kz = run_error_curve(c).front();
  c.solver.name = SolverKind::IHT;
  const auto iht = run_error_curve(c).front();
  REQUIRE(kz.aggregate.mean.size() == iht.aggregate.mean.size());
  for (std::size_t k = 0; k < kz.aggregate.mean.size(); ++k) {
    CHECK(std::abs(kz.aggregate.mean[k] - iht.aggregate.mean[k]) <= 1e-9);
  }
}

TEST_CASE("determinism of written artifacts") {
  ExperimentConfig c = small_bos(1);
  c.per_trial_csv = true;
  const auto dir = std::filesystem::temp_directory_path() / "kzsparse_harness_det";
  std::filesystem::remove_all(dir);
  write_curve_outputs(dir / "a", c, run_error_curve(c), "curve");
  write_curve_outputs(dir / "b", c, run_error_curve(c), "curve");
  CHECK(slurp(dir / "a" / "curve_s3.csv") == slurp(dir / "b" / "curve_s3.csv"));
  CHECK(without_timing(slurp(dir / "a" / "trials_s3.csv")) == without_timing(slurp(dir / "b" / "trials_s3.csv")));
  CHECK(slurp(dir / "a" / "curve_s3.csv").rfind("epoch,mean_rel_err,std_rel_err,n_trials,n_diverged\n", 0) == 0);

  const json manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["config"] == to_json(c));
  CHECK(manifest["trial_seeds"] == json({trial_seed(11, 0)}));
  CHECK(manifest["library_version"] == library_version());
  CHECK(manifest.contains("git_describe"));
  // Replaying from the manifest gives the same curve.
  const auto replay = run_error_curve(config_from_json(manifest["config"]));
  CHECK(curve_csv(replay.front().aggregate) == slurp(dir / "a" / "curve_s3.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("phase grid") {
  ExperimentConfig c;
  c.matrix = {OperatorKind::SubsampledBOS, 16, 64};
  c.m_values = {8, 32};
  c.s_values = {1, 40};
  c.trials = 3;
  c.solver.epochs = 40;
  c.threads = 1;
  const auto g = run_phase_transition(c);
  REQUIRE(g.success_prob.size() == 2);
  CHECK(g.success_prob[1][0] == 1.0);
  CHECK(g.success_prob[0][1] == 0.0);  // s >= m
  CHECK(g.success_prob[1][1] == 0.0);
  CHECK(phase_csv(g).rfind("m,s,success_prob,trials\n", 0) == 0);
  CHECK(phase_csv(g) == phase_csv(run_phase_transition(c)));
}

TEST_CASE("ablation shares everything but the schedule") {
  ExperimentConfig c = small_bos(3);
  c.rules = {ScheduleRule::Reshuffle, ScheduleRule::Cyclic};
  const auto runs = run_schedule_ablation(c);
  REQUIRE(runs.size() == 2);
  const auto& a = runs.at(ScheduleRule::Reshuffle).front();
  const auto& b = runs.at(ScheduleRule::Cyclic).front();
  for (std::size_t t = 0; t < 3; ++t) CHECK(a.trials[t].seed == b.trials[t].seed);
  c.solver.rule = ScheduleRule::Cyclic;
  CHECK(curve_csv(run_error_curve(c).front().aggregate) == curve_csv(b.aggregate));
}

TEST_CASE("period sweep with p = m reproduces KZIHT") {
  ExperimentConfig c;
  c.matrix = {OperatorKind::Bernoulli, 24, 64};
  c.s_values = {2};
  c.trials = 3;
  c.threads = 1;
  c.solver.epochs = 15;
  c.solver.gamma = 1.0;
  c.p_list = {24, 6};
  const auto sweep = run_period_sweep(c);
  const auto kz = run_error_curve(c).front();
  REQUIRE(sweep.size() == 2);
  CHECK(curve_csv(sweep[0].curve.aggregate) == curve_csv(kz.aggregate));
  CHECK(sweep[0].rates.kzpt_rate == doctest::Approx(sweep[0].rates.kziht_rate));
  CHECK(sweep_csv(sweep).rfind("period,epochs_to_tolerance,mean_trial_epochs,kziht_rate,kzpt_rate\n", 0) == 0);
}

TEST_CASE("epochs_to_tolerance") {
  CHECK(epochs_to_tolerance(std::vector<double>{1.0, 0.1, 1e-7}, 1e-6) == 3u);
  CHECK_FALSE(epochs_to_tolerance(std::vector<double>{1.0, 0.1}, 1e-6).has_value());
}

TEST_CASE("parallel_for rethrows worker failures") {
  std::vector<int> hit(20, 0);
  parallel_for(20, 3, [&](std::size_t i) { hit[i] = 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 20);
  CHECK_THROWS_AS(parallel_for(5, 2, [](std::size_t i) {
                    if (i == 3) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("identity check report") {
  const auto r = verify_multi_step_identity(16, 32, 9, 1);
  CHECK(r.max_relative_deviation <= 1e-9);
  CHECK(r.instances_by_kind.at(OperatorKind::SubsampledBOS) == 3);
  CHECK(to_json(r)["pass"] == true);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(4.0) == "4");
}
