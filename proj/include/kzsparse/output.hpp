#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kzsparse/harness.hpp"

namespace kzsparse {

std::string library_version();
std::string git_describe();
/// Version of the config and output layout.
inline constexpr int schema_version = 1;

/// Shortest round-trip decimal form used in every CSV.
std::string format_number(double v);

/// Columns: epoch, mean_rel_err, std_rel_err, n_trials, n_diverged. Epochs are 1-based.
std::string curve_csv(const CurveAggregate& agg);

/// Long form: trial, seed, m, s, epoch, rel_err, iterate_norm, elapsed_seconds, status.
std::string trials_csv(const std::vector<TrialRecord>& trials);

/// Columns: m, s, success_prob, trials.
std::string phase_csv(const PhaseGrid& grid);

/// Columns: period, epochs_to_tolerance, mean_trial_epochs, kziht_rate, kzpt_rate.
std::string sweep_csv(const std::vector<SweepEntry>& entries);

/// Resolved config, seeds, library version and git describe.
nlohmann::json manifest(const ExperimentConfig& c, const std::string& experiment,
                        const std::vector<std::uint64_t>& seeds,
                        const nlohmann::json& extra = nlohmann::json::object());

void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes curve_s<s>.csv (and trials_s<s>.csv when requested) plus manifest.json.
void write_curve_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                         const std::vector<CurveResult>& curves, const std::string& experiment,
                         const std::string& prefix = "");
void write_phase_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                         const PhaseGrid& grid);
void write_ablation_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                            const std::map<ScheduleRule, std::vector<CurveResult>>& runs);
void write_sweep_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                         const std::vector<SweepEntry>& entries);

}  // namespace kzsparse
