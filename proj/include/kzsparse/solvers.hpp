#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kzsparse/core.hpp"
#include "kzsparse/schedules.hpp"
#include "kzsparse/sensing.hpp"

namespace kzsparse {

struct SolverParams {
  SparsityLevel s{1};
  double gamma = 1.0;   ///< Kaczmarz step size
  double lambda = 1.0;  ///< IHT extrapolation step used by KZPT
  /// Thresholding period of KZPT; unset means one thresholding per epoch (p = m).
  std::optional<std::size_t> period;
  std::size_t epochs = 200;
  double divergence_threshold = 1e6;
  /// Stop as soon as the tracked error is at or below this value; 0 disables.
  double target_error = 0.0;
};

enum class RunStatus { Converged, BudgetExhausted, Diverged };

std::string to_string(RunStatus status);

struct EpochRecord {
  double relative_error = 0.0;
  double elapsed_seconds = 0.0;
  double iterate_norm = 0.0;
};

/// Per-epoch history of one solver run.
struct IterateTrace {
  std::vector<EpochRecord> epochs;
  Vector final_iterate;
  RunStatus status = RunStatus::BudgetExhausted;
  /// End-of-epoch iterates, filled only when RunOptions::keep_iterates is set.
  std::vector<Vector> iterates;
};

struct RunOptions {
  /// Starting point; zero when unset.
  std::optional<Vector> x0;
  /// Ground truth used for the relative-error trace. Without it the trace
  /// records the relative residual ||b - Ax|| / ||b|| instead.
  const Vector* reference = nullptr;
  bool keep_iterates = false;
};

/// x + gamma (b_i - a^T x) / ||a||^2 * a.
Vector kz_step(const Vector& x, const Vector& a, double b_i, double gamma);

/// Sequential Kaczmarz steps over the rows listed in `schedule`, no thresholding.
Vector kz_epoch(const Vector& x, const SensingOperator& a, const Vector& b,
                const RowSchedule& schedule, double gamma);

/// Plain Kaczmarz, one schedule per epoch, no sparsity constraint.
IterateTrace kz_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                    ScheduleStream schedules, const RunOptions& options = {});

/// Gradient step x + (1/m) A^T (b - A x) followed by T_s, once per epoch.
IterateTrace iht_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                     const RunOptions& options = {});

/// m Kaczmarz steps with step gamma, then T_s, once per epoch.
IterateTrace kziht_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                       ScheduleStream schedules, const RunOptions& options = {});

/// Kaczmarz with periodic thresholding.
///
/// After every p-th Kaczmarz step the window displacement g = x - anchor is
/// extrapolated to u = anchor + lambda g and thresholded, and the anchor moves
/// to the thresholded point. An epoch consumes p * floor(m / p) rows; the
/// remaining m mod p entries of the schedule are dropped.
IterateTrace kzpt_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                      ScheduleStream schedules, const RunOptions& options = {});

/// Step sizes that make KZPT provably contract on sub-Gaussian operators.
struct StepPreset {
  double gamma = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
};

/// sqrt(3 s ln(N/s) (K ln m)^2 / m).
double subgaussian_delta(std::size_t m, std::size_t n, std::size_t s, double k_subg);

/// (gamma, lambda) with gamma = delta / (2 m (K ln m)^2 sqrt(N)) and
/// lambda = 2 N^{3/2} (K ln m)^2 / delta, so that gamma * lambda = N / m.
///
/// Requires m > margin * 48 s ln(N/s) (K ln m)^2 (equivalently delta < 1/4
/// when margin is 1); otherwise throws InfeasibleParameters carrying the
/// smallest admissible m.
StepPreset subgaussian_step_preset(std::size_t m, std::size_t n, std::size_t s,
                                   double k_subg = 1.0, double margin = 1.0);

}  // namespace kzsparse
