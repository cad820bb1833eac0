#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "kzsparse/analysis.hpp"
#include "kzsparse/config.hpp"
#include "kzsparse/solvers.hpp"

namespace kzsparse {

/// Seed of trial `trial` under `base_seed`; independent of execution order.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial);

/// One generated problem instance: operator, planted signal, measurements.
struct Problem {
  SensingOperator a;
  Vector x_star;
  Measurements measurements;
  std::uint64_t schedule_seed = 0;
};

/// Builds the instance of one trial from its four seeded sub-streams.
Problem make_problem(const ExperimentConfig& c, std::size_t m, std::size_t s, std::uint64_t seed);

/// Dispatches to the solver named in the config.
IterateTrace run_solver(SolverKind kind, const SensingOperator& a, const Vector& b,
                        const SolverParams& params, ScheduleStream schedules,
                        const RunOptions& options = {});

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t s = 0;
  IterateTrace trace;
  double final_error = 0.0;
  double bias = 0.0;  ///< bias_term(A, e, s) of the trial's noise
};

struct CurveAggregate {
  std::vector<double> mean;
  std::vector<double> std_dev;
  std::vector<std::size_t> n_trials;
  std::vector<std::size_t> n_diverged;
};

/// Mean/std relative error per epoch. A trial that diverged contributes
/// `divergence_value` from its divergence epoch on; a trial that stopped early
/// on its target repeats its last value.
CurveAggregate aggregate_traces(const std::vector<TrialRecord>& trials, double divergence_value);

struct CurveResult {
  std::size_t m = 0;
  std::size_t s = 0;
  SolverParams params;
  std::vector<TrialRecord> trials;
  CurveAggregate aggregate;
};

/// Runs `c.trials` seeded trials for one (m, s) cell.
CurveResult run_cell(const ExperimentConfig& c, std::size_t m, std::size_t s,
                     std::size_t default_epochs);

/// One curve per entry of c.s_values.
std::vector<CurveResult> run_error_curve(const ExperimentConfig& c);

struct PhaseGrid {
  std::vector<std::size_t> s_values;
  std::vector<std::size_t> m_values;
  std::vector<std::vector<double>> success_prob;  ///< [m index][s index]
  std::size_t trials = 0;
};

/// A trial succeeds when it did not diverge and its final relative error is
/// below c.success_threshold. Uses c.m_values, or matrix.m when that is empty.
PhaseGrid run_phase_transition(const ExperimentConfig& c);

/// Curves for each rule in c.rules under shared matrix/signal/noise seeds.
std::map<ScheduleRule, std::vector<CurveResult>> run_schedule_ablation(const ExperimentConfig& c);

struct SweepEntry {
  std::size_t period = 0;
  CurveResult curve;  ///< first sparsity level of the config
  /// First epoch (1-based) where the mean curve is <= tolerance.
  std::optional<std::size_t> epochs_to_tolerance;
  /// Mean over trials of each trial's first epoch at tolerance; +inf if any trial never gets there.
  double mean_trial_epochs = std::numeric_limits<double>::infinity();
  RateBounds rates;
};

/// KZPT for each period in c.p_list.
std::vector<SweepEntry> run_period_sweep(const ExperimentConfig& c);

/// First 1-based epoch at which the trace is <= tolerance.
std::optional<std::size_t> epochs_to_tolerance(const std::vector<double>& curve, double tolerance);
std::optional<std::size_t> epochs_to_tolerance(const IterateTrace& trace, double tolerance);

struct IdentityCheckReport {
  std::size_t trials = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double max_relative_deviation = 0.0;
  std::map<OperatorKind, std::size_t> instances_by_kind;
};

/// Compares the closed-form epoch error with an actual Kaczmarz epoch on
/// random instances. Operators cycle through Bernoulli, fixed-norm Gaussian
/// and (when N is a power of two and m <= N) subsampled BOS; gamma is drawn
/// from (0, 2), noise and the start point are Gaussian.
IdentityCheckReport verify_multi_step_identity(std::size_t m, std::size_t n, std::size_t trials,
                                               std::uint64_t seed);

nlohmann::json to_json(const IdentityCheckReport& r);

/// Runs fn(0..count-1) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace kzsparse
