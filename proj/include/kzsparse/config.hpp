#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kzsparse/schedules.hpp"
#include "kzsparse/sensing.hpp"
#include "kzsparse/solvers.hpp"

namespace kzsparse {

enum class SolverKind { KZ, IHT, KZIHT, KZPT };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

enum class StepPresetKind { None, SubGaussian };

struct MatrixConfig {
  OperatorKind kind = OperatorKind::SubsampledBOS;
  std::size_t m = 256;
  std::size_t n = 1024;
};

struct SolverConfig {
  SolverKind name = SolverKind::KZIHT;
  /// Unset means "auto": N/m for kziht, N/p for kzpt on BOS, 1 for kz.
  std::optional<double> gamma;
  double lambda = 1.0;
  std::optional<std::size_t> period;
  /// Unset means the experiment default (200 for curves, 300 for phase grids).
  std::optional<std::size_t> epochs;
  ScheduleRule rule = ScheduleRule::Reshuffle;
  double target_error = 0.0;
  double divergence_threshold = 1e6;
  StepPresetKind preset = StepPresetKind::None;
  double k_subg = 1.0;
  double c_rip = 1.0;
};

/// Everything needed to replay an experiment. Field names mirror the JSON/TOML keys.
struct ExperimentConfig {
  MatrixConfig matrix;
  std::vector<std::size_t> s_values{5};
  NoiseModel noise;
  SolverConfig solver;
  std::size_t trials = 30;
  std::uint64_t base_seed = 0;
  double success_threshold = 1e-1;
  std::string outputs = "out";
  std::vector<std::size_t> m_values;  ///< phase grids
  std::vector<std::size_t> p_list;    ///< period sweeps
  double tolerance = 1e-6;            ///< epochs-to-tolerance in sweeps
  std::vector<ScheduleRule> rules{ScheduleRule::Reshuffle, ScheduleRule::WithReplacement};
  std::size_t threads = 0;  ///< 0 = hardware concurrency
  bool per_trial_csv = false;
};

inline constexpr std::size_t default_curve_epochs = 200;
inline constexpr std::size_t default_phase_epochs = 300;

/// Parses a JSON document. Unknown keys and type errors are reported with
/// their field paths in a single ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

/// Reads a .json or .toml file into the JSON tree used by config_from_json.
nlohmann::json load_config_tree(const std::filesystem::path& path);

/// Applies "dotted.key=value" to a config tree. The value is read as JSON
/// when it parses as JSON and as a plain string otherwise.
void apply_override(nlohmann::json& tree, const std::string& assignment);

/// Field-path messages for every violated invariant; empty when valid.
std::vector<std::string> validate(const ExperimentConfig& c);

/// Solver parameters for one (m, s) cell, with automatic step sizes resolved.
SolverParams resolve_params(const ExperimentConfig& c, std::size_t m, std::size_t s,
                            std::size_t default_epochs);

}  // namespace kzsparse
