#include "kzsparse/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kzsparse {

std::string library_version() { return KZSPARSE_VERSION; }
std::string git_describe() { return KZSPARSE_GIT_DESCRIBE; }

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string curve_csv(const CurveAggregate& agg) {
  std::ostringstream out;
  out << "epoch,mean_rel_err,std_rel_err,n_trials,n_diverged\n";
  for (std::size_t k = 0; k < agg.mean.size(); ++k) {
    out << (k + 1) << ',' << format_number(agg.mean[k]) << ',' << format_number(agg.std_dev[k])
        << ',' << agg.n_trials[k] << ',' << agg.n_diverged[k] << '\n';
  }
  return out.str();
}

std::string trials_csv(const std::vector<TrialRecord>& trials) {
  std::ostringstream out;
  out << "trial,seed,m,s,epoch,rel_err,iterate_norm,elapsed_seconds,status\n";
  for (const auto& t : trials) {
    const auto status = to_string(t.trace.status);
    for (std::size_t k = 0; k < t.trace.epochs.size(); ++k) {
      const auto& e = t.trace.epochs[k];
      out << t.trial << ',' << t.seed << ',' << t.m << ',' << t.s << ',' << (k + 1) << ','
          << format_number(e.relative_error) << ',' << format_number(e.iterate_norm) << ','
          << format_number(e.elapsed_seconds) << ',' << status << '\n';
    }
  }
  return out.str();
}

std::string phase_csv(const PhaseGrid& grid) {
  std::ostringstream out;
  out << "m,s,success_prob,trials\n";
  for (std::size_t i = 0; i < grid.m_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.s_values.size(); ++j) {
      out << grid.m_values[i] << ',' << grid.s_values[j] << ','
          << format_number(grid.success_prob[i][j]) << ',' << grid.trials << '\n';
    }
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepEntry>& entries) {
  std::ostringstream out;
  out << "period,epochs_to_tolerance,mean_trial_epochs,kziht_rate,kzpt_rate\n";
  for (const auto& e : entries) {
    out << e.period << ','
        << (e.epochs_to_tolerance ? std::to_string(*e.epochs_to_tolerance) : std::string("inf"))
        << ',' << format_number(e.mean_trial_epochs) << ',' << format_number(e.rates.kziht_rate)
        << ',' << format_number(e.rates.kzpt_rate) << '\n';
  }
  return out.str();
}

nlohmann::json manifest(const ExperimentConfig& c, const std::string& experiment,
                        const std::vector<std::uint64_t>& seeds, const nlohmann::json& extra) {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["config"] = to_json(c);
  j["trial_seeds"] = seeds;
  j["library_version"] = library_version();
  j["schema_version"] = schema_version;
  j["git_describe"] = git_describe();
  for (const auto& [key, value] : extra.items()) j[key] = value;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

namespace {

std::vector<std::uint64_t> seeds_of(const ExperimentConfig& c) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t t = 0; t < c.trials; ++t) seeds.push_back(trial_seed(c.base_seed, t));
  return seeds;
}

nlohmann::json params_json(const SolverParams& p) {
  return {{"s", p.s.value()},
          {"gamma", p.gamma},
          {"lambda", p.lambda},
          {"period", p.period ? nlohmann::json(*p.period) : nlohmann::json(nullptr)},
          {"epochs", p.epochs},
          {"divergence_threshold", p.divergence_threshold},
          {"target_error", p.target_error}};
}

}  // namespace

void write_curve_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                         const std::vector<CurveResult>& curves, const std::string& experiment,
                         const std::string& prefix) {
  nlohmann::json resolved = nlohmann::json::array();
  for (const auto& curve : curves) {
    const std::string stem = prefix + "s" + std::to_string(curve.s);
    write_text(dir / ("curve_" + stem + ".csv"), curve_csv(curve.aggregate));
    if (c.per_trial_csv) write_text(dir / ("trials_" + stem + ".csv"), trials_csv(curve.trials));
    resolved.push_back(params_json(curve.params));
  }
  write_text(dir / "manifest.json",
             manifest(c, experiment, seeds_of(c), {{"resolved_params", resolved}}).dump(2) + "\n");
}

void write_phase_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                         const PhaseGrid& grid) {
  write_text(dir / "phase.csv", phase_csv(grid));
  write_text(dir / "manifest.json", manifest(c, "phase", seeds_of(c)).dump(2) + "\n");
}

void write_ablation_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                            const std::map<ScheduleRule, std::vector<CurveResult>>& runs) {
  nlohmann::json resolved = nlohmann::json::object();
  for (const auto& [rule, curves] : runs) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& curve : curves) {
      const std::string stem = to_string(rule) + "_s" + std::to_string(curve.s);
      write_text(dir / ("curve_" + stem + ".csv"), curve_csv(curve.aggregate));
      if (c.per_trial_csv) write_text(dir / ("trials_" + stem + ".csv"), trials_csv(curve.trials));
      list.push_back(params_json(curve.params));
    }
    resolved[to_string(rule)] = list;
  }
  write_text(dir / "manifest.json",
             manifest(c, "ablate", seeds_of(c), {{"resolved_params", resolved}}).dump(2) + "\n");
}

void write_sweep_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                         const std::vector<SweepEntry>& entries) {
  nlohmann::json resolved = nlohmann::json::array();
  for (const auto& e : entries) {
    write_text(dir / ("curve_p" + std::to_string(e.period) + ".csv"), curve_csv(e.curve.aggregate));
    resolved.push_back(params_json(e.curve.params));
  }
  write_text(dir / "sweep.csv", sweep_csv(entries));
  write_text(dir / "manifest.json",
             manifest(c, "sweep-period", seeds_of(c), {{"resolved_params", resolved}}).dump(2) + "\n");
}

}  // namespace kzsparse
