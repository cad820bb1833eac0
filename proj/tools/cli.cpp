#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kzsparse/analysis.hpp"
#include "kzsparse/config.hpp"
#include "kzsparse/errors.hpp"
#include "kzsparse/harness.hpp"
#include "kzsparse/output.hpp"

namespace kzsparse::cli {
namespace {

using nlohmann::json;

// Flags shared by every subcommand. Each one maps onto a config path and is
// applied after the config file and the --set list, so flags always win.
struct Flags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> matrix;
  std::optional<std::size_t> m;
  std::optional<std::size_t> n;
  std::vector<std::size_t> s;
  std::optional<std::string> solver;
  std::optional<std::string> gamma;
  std::optional<double> lambda;
  std::optional<std::size_t> period;
  std::optional<std::size_t> epochs;
  std::optional<std::string> rule;
  std::optional<double> sigma;
  std::optional<std::size_t> trials;
  std::optional<std::string> preset;
  std::optional<double> k_subg;
  std::optional<std::size_t> threads;
  std::vector<std::size_t> m_values;
  std::vector<std::size_t> p_list;
  std::vector<std::string> rules;
  std::optional<double> success_threshold;
  std::optional<double> tolerance;
  bool per_trial = false;
  std::size_t schedules = 50;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "JSON or TOML experiment config");
  app->add_option("--set", f.sets, "override a config field, e.g. solver.epochs=50");
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--matrix", f.matrix, "hadamard | bernoulli | gaussian");
  app->add_option("--m", f.m, "number of measurements");
  app->add_option("--N", f.n, "signal dimension");
  app->add_option("--s", f.s, "sparsity level(s)")->delimiter(',');
  app->add_option("--solver", f.solver, "kz | iht | kziht | kzpt");
  app->add_option("--gamma", f.gamma, "Kaczmarz step size or 'auto'");
  app->add_option("--lambda", f.lambda, "KZPT extrapolation step");
  app->add_option("--period", f.period, "KZPT thresholding period");
  app->add_option("--epochs", f.epochs, "epoch budget");
  app->add_option("--rule", f.rule, "reshuffle | reshuffle-once | cyclic | replacement");
  app->add_option("--noise-sigma", f.sigma, "Gaussian noise level (0 disables noise)");
  app->add_option("--trials", f.trials, "number of seeded trials");
  app->add_option("--preset", f.preset, "step preset: none | subgaussian");
  app->add_option("--K", f.k_subg, "sub-Gaussian norm parameter");
  app->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  app->add_option("--m-values", f.m_values, "phase grid measurement counts")->delimiter(',');
  app->add_option("--p-list", f.p_list, "KZPT periods to sweep")->delimiter(',');
  app->add_option("--rules", f.rules, "schedule rules to compare")->delimiter(',');
  app->add_option("--success-threshold", f.success_threshold, "phase grid success threshold");
  app->add_option("--tolerance", f.tolerance, "epochs-to-tolerance level");
  app->add_flag("--per-trial", f.per_trial, "also write per-trial long-form CSV");
}

json build_tree(const Flags& f) {
  json tree = f.config_path.empty() ? json::object() : load_config_tree(f.config_path);
  for (const auto& s : f.sets) apply_override(tree, s);

  auto put = [&](const char* section, const char* key, json value) {
    if (section == nullptr) {
      tree[key] = std::move(value);
    } else {
      tree[section][key] = std::move(value);
    }
  };
  if (f.seed) put(nullptr, "base_seed", *f.seed);
  if (f.out) put(nullptr, "outputs", *f.out);
  if (f.matrix) put("matrix", "kind", *f.matrix);
  if (f.m) put("matrix", "m", *f.m);
  if (f.n) put("matrix", "N", *f.n);
  if (!f.s.empty()) put("signal", "s", f.s);
  if (f.solver) put("solver", "name", *f.solver);
  if (f.gamma) {
    if (*f.gamma == "auto") {
      put("solver", "gamma", "auto");
    } else {
      // Non-numeric text is left as a string so validation names the field.
      json parsed = json::parse(*f.gamma, nullptr, false);
      put("solver", "gamma", parsed.is_number() ? parsed : json(*f.gamma));
    }
  }
  if (f.lambda) put("solver", "lambda", *f.lambda);
  if (f.period) put("solver", "period", *f.period);
  if (f.epochs) put("solver", "epochs", *f.epochs);
  if (f.rule) put("solver", "rule", *f.rule);
  if (f.sigma) {
    put("noise", "model", *f.sigma > 0.0 ? "gaussian" : "none");
    put("noise", "sigma", *f.sigma);
  }
  if (f.trials) put(nullptr, "trials", *f.trials);
  if (f.preset) put("solver", "preset", *f.preset);
  if (f.k_subg) put("solver", "K", *f.k_subg);
  if (f.threads) put(nullptr, "threads", *f.threads);
  if (!f.m_values.empty()) put("phase", "m_values", f.m_values);
  if (!f.p_list.empty()) put("sweep", "p_list", f.p_list);
  if (!f.rules.empty()) put("ablation", "rules", f.rules);
  if (f.success_threshold) put(nullptr, "success_threshold", *f.success_threshold);
  if (f.tolerance) put("sweep", "tolerance", *f.tolerance);
  if (f.per_trial) put(nullptr, "per_trial_csv", true);
  return tree;
}

void print_seed(std::ostream& out, const ExperimentConfig& c) {
  out << "seed: " << c.base_seed << "\n";
}

int cmd_solve(const ExperimentConfig& base, std::ostream& out) {
  ExperimentConfig c = base;
  c.trials = 1;
  c.per_trial_csv = true;
  const std::size_t s = c.s_values.front();
  print_seed(out, c);
  CurveResult cell = run_cell(c, c.matrix.m, s, default_curve_epochs);
  const auto& trial = cell.trials.front();
  out << "trial_seed: " << trial.seed << "\n";
  out << "solver: " << to_string(c.solver.name) << "\n";
  out << "gamma: " << format_number(cell.params.gamma) << "\n";
  out << "status: " << to_string(trial.trace.status) << "\n";
  out << "epochs: " << trial.trace.epochs.size() << "\n";
  out << "final_relative_error: " << format_number(trial.final_error) << "\n";
  write_curve_outputs(c.outputs, c, {cell}, "solve");
  out << "trace: " << (std::filesystem::path(c.outputs) / ("trials_s" + std::to_string(s) + ".csv")).string()
      << "\n";
  return trial.trace.status == RunStatus::Diverged ? 2 : 0;
}

int cmd_curve(const ExperimentConfig& c, std::ostream& out) {
  print_seed(out, c);
  auto curves = run_error_curve(c);
  write_curve_outputs(c.outputs, c, curves, "curve");
  for (const auto& r : curves) {
    out << "s=" << r.s << " gamma=" << format_number(r.params.gamma)
        << " final_mean_rel_err=" << format_number(r.aggregate.mean.empty() ? NAN : r.aggregate.mean.back())
        << " diverged=" << (r.aggregate.n_diverged.empty() ? 0 : r.aggregate.n_diverged.back()) << "/"
        << r.trials.size() << "\n";
  }
  out << "outputs: " << c.outputs << "\n";
  return 0;
}

int cmd_phase(const ExperimentConfig& c, std::ostream& out) {
  print_seed(out, c);
  auto grid = run_phase_transition(c);
  write_phase_outputs(c.outputs, c, grid);
  out << phase_csv(grid);
  out << "outputs: " << c.outputs << "\n";
  return 0;
}

int cmd_ablate(const ExperimentConfig& c, std::ostream& out) {
  print_seed(out, c);
  auto runs = run_schedule_ablation(c);
  write_ablation_outputs(c.outputs, c, runs);
  for (const auto& [rule, curves] : runs) {
    for (const auto& r : curves) {
      out << "rule=" << to_string(rule) << " s=" << r.s << " final_mean_rel_err="
          << format_number(r.aggregate.mean.empty() ? NAN : r.aggregate.mean.back())
          << " diverged=" << (r.aggregate.n_diverged.empty() ? 0 : r.aggregate.n_diverged.back()) << "/"
          << r.trials.size() << "\n";
    }
  }
  out << "outputs: " << c.outputs << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& c, std::ostream& out) {
  print_seed(out, c);
  auto entries = run_period_sweep(c);
  write_sweep_outputs(c.outputs, c, entries);
  out << sweep_csv(entries);
  out << "outputs: " << c.outputs << "\n";
  return 0;
}

int cmd_verify_identity(const Flags& f, std::ostream& out) {
  const std::uint64_t seed = f.seed.value_or(0);
  const std::size_t m = f.m.value_or(16);
  const std::size_t n = f.n.value_or(32);
  const std::size_t trials = f.trials.value_or(100);
  out << "seed: " << seed << "\n";
  auto report = verify_multi_step_identity(m, n, trials, seed);
  out << to_json(report).dump(2) << "\n";
  return report.max_relative_deviation <= 1e-9 ? 0 : 2;
}

int cmd_rip(const ExperimentConfig& c, std::ostream& out) {
  print_seed(out, c);
  const std::size_t s = c.s_values.front();
  const Problem p = make_problem(c, c.matrix.m, s, trial_seed(c.base_seed, 0));
  const Matrix scaled = p.a.to_dense() / std::sqrt(static_cast<double>(p.a.rows()));
  json j = to_json(rip_constant_bruteforce(scaled, s));
  j["matrix"] = to_json(c).at("matrix");
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_cross_term(const ExperimentConfig& c, std::size_t schedules, std::ostream& out) {
  print_seed(out, c);
  const Problem p = make_problem(c, c.matrix.m, c.s_values.front(), trial_seed(c.base_seed, 0));
  const double gamma = c.solver.gamma.value_or(cross_term_gamma_max(c.matrix.m, c.matrix.n, c.solver.k_subg));
  json reports = json::array();
  std::size_t below = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < schedules; ++k) {
    const auto sched = next_epoch_schedule(c.solver.rule, p.a.rows(), k, p.schedule_seed);
    const auto r = cross_term_report(p.a, sched, gamma, c.solver.k_subg);
    if (r.operator_norm < r.bound) ++below;
    worst = std::max(worst, r.operator_norm);
    reports.push_back(to_json(r));
  }
  json summary = {{"schedules", schedules},
                  {"gamma", gamma},
                  {"below_bound", below},
                  {"max_operator_norm", worst},
                  {"reports", reports}};
  out << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse recovery with Kaczmarz-type solvers", "kzsparse"};
  bool version = false;
  app.add_flag("--version", version, "print library and schema version");

  Flags f;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "run one trial and write its trace"},
      {"curve", "mean error curves over seeded trials"},
      {"phase", "recovery probability over an (m, s) grid"},
      {"ablate", "compare row-ordering rules"},
      {"sweep-period", "KZPT over a list of thresholding periods"},
      {"verify-identity", "check the closed-form epoch error on random instances"},
      {"rip", "exact restricted isometry constant by enumeration"},
      {"cross-term", "measure the epoch cross-term against its bound"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, f);
    if (name == "cross-term") sub->add_option("--schedules", f.schedules, "number of random schedules");
  }

  // CLI11 expects reversed argv order when given a vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (version) {
    out << "kzsparse " << library_version() << " (schema " << schema_version << ", " << git_describe() << ")\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    err << "error: a subcommand is required\n\n" << app.help();
    return 1;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    if (cmd == "verify-identity") return cmd_verify_identity(f, out);
    const ExperimentConfig c = config_from_json(build_tree(f));
    if (cmd == "solve") return cmd_solve(c, out);
    if (cmd == "curve") return cmd_curve(c, out);
    if (cmd == "phase") return cmd_phase(c, out);
    if (cmd == "ablate") return cmd_ablate(c, out);
    if (cmd == "sweep-period") return cmd_sweep(c, out);
    if (cmd == "rip") return cmd_rip(c, out);
    if (cmd == "cross-term") return cmd_cross_term(c, f.schedules, out);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) err << "config error: " << p << "\n";
    return 1;
  } catch (const InfeasibleParameters& e) {
    err << "infeasible parameters: " << e.what() << " (smallest admissible m: " << e.minimal_m() << ")\n";
    return 1;
  } catch (const GuardExceeded& e) {
    err << "refused: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  err << "error: unknown subcommand '" << cmd << "'\n";
  return 1;
}

}  // namespace kzsparse::cli
