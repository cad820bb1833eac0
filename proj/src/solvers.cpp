#include "kzsparse/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kzsparse/errors.hpp"

namespace kzsparse {

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "converged";
    case RunStatus::BudgetExhausted: return "budget-exhausted";
    case RunStatus::Diverged: return "diverged";
  }
  return "budget-exhausted";
}

namespace {

void check_problem(const SensingOperator& a, const Vector& b, const SolverParams& params,
                   const RunOptions& options) {
  if (static_cast<std::size_t>(b.size()) != a.rows()) {
    throw std::invalid_argument("measurement length " + std::to_string(b.size()) +
                                " does not match operator rows " + std::to_string(a.rows()));
  }
  params.s.check_against(a.cols());
  if (!std::isfinite(params.gamma) || params.gamma < 0.0) {
    throw std::invalid_argument("gamma must be finite and non-negative");
  }
  if (!std::isfinite(params.lambda) || params.lambda <= 0.0) {
    throw std::invalid_argument("lambda must be finite and positive");
  }
  if (params.epochs == 0) throw std::invalid_argument("epoch budget must be positive");
  if (options.x0 && static_cast<std::size_t>(options.x0->size()) != a.cols()) {
    throw std::invalid_argument("x0 dimension does not match operator columns");
  }
  if (options.reference && static_cast<std::size_t>(options.reference->size()) != a.cols()) {
    throw std::invalid_argument("reference dimension does not match operator columns");
  }
}

void kz_step_inplace(Vector& x, const SensingOperator& a, std::size_t row, double b_i,
                     double gamma) {
  const double residual = b_i - a.row_dot(row, x);
  a.add_scaled_row(row, gamma * residual / a.row_norm_sq(row), x);
}

// Drives the epoch loop shared by every solver: records the trace, applies
// the divergence detector and the early stop.
template <typename EpochFn>
IterateTrace run_epochs(const SensingOperator& a, const Vector& b, const SolverParams& params,
                        const RunOptions& options, EpochFn&& epoch) {
  using clock = std::chrono::steady_clock;
  IterateTrace trace;
  trace.epochs.reserve(params.epochs);
  Vector x = options.x0 ? *options.x0 : Vector::Zero(static_cast<Eigen::Index>(a.cols()));
  const double b_norm = b.norm();

  auto tracked_error = [&](const Vector& v) {
    if (options.reference) return relative_error(v, *options.reference);
    const double r = (b - a.apply(v)).norm();
    return b_norm > 0.0 ? r / b_norm : r;
  };

  const auto start = clock::now();
  for (std::size_t k = 0; k < params.epochs; ++k) {
    epoch(x, k);
    const double err = x.allFinite() ? tracked_error(x) : std::numeric_limits<double>::infinity();
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    if (!std::isfinite(err) || err > params.divergence_threshold) {
      trace.status = RunStatus::Diverged;
      trace.final_iterate = std::move(x);
      return trace;
    }
    trace.epochs.push_back({err, elapsed, x.norm()});
    if (options.keep_iterates) trace.iterates.push_back(x);
    if (params.target_error > 0.0 && err <= params.target_error) {
      trace.status = RunStatus::Converged;
      trace.final_iterate = std::move(x);
      return trace;
    }
  }
  trace.status = RunStatus::BudgetExhausted;
  trace.final_iterate = std::move(x);
  return trace;
}

}  // namespace

Vector kz_step(const Vector& x, const Vector& a, double b_i, double gamma) {
  if (a.size() != x.size()) throw std::invalid_argument("kz_step: dimension mismatch");
  const double norm_sq = a.squaredNorm();
  if (norm_sq == 0.0) throw std::invalid_argument("kz_step: row has zero norm");
  return x + (gamma * (b_i - a.dot(x)) / norm_sq) * a;
}

Vector kz_epoch(const Vector& x, const SensingOperator& a, const Vector& b,
                const RowSchedule& schedule, double gamma) {
  if (static_cast<std::size_t>(x.size()) != a.cols() ||
      static_cast<std::size_t>(b.size()) != a.rows()) {
    throw std::invalid_argument("kz_epoch: dimension mismatch");
  }
  if (schedule.order.size() != a.rows()) {
    throw std::invalid_argument("kz_epoch: schedule length must equal the row count");
  }
  Vector out = x;
  for (auto row : schedule.order) {
    if (row >= a.rows()) throw std::invalid_argument("kz_epoch: schedule index out of range");
    if (a.row_norm_sq(row) == 0.0) throw std::invalid_argument("kz_epoch: row has zero norm");
    kz_step_inplace(out, a, row, b[static_cast<Eigen::Index>(row)], gamma);
  }
  return out;
}

IterateTrace kz_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                    ScheduleStream schedules, const RunOptions& options) {
  check_problem(a, b, params, options);
  return run_epochs(a, b, params, options, [&](Vector& x, std::size_t) {
    const auto schedule = schedules.next(a.rows());
    for (auto row : schedule.order) kz_step_inplace(x, a, row, b[static_cast<Eigen::Index>(row)], params.gamma);
  });
}

IterateTrace iht_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                     const RunOptions& options) {
  check_problem(a, b, params, options);
  const double inv_m = 1.0 / static_cast<double>(a.rows());
  return run_epochs(a, b, params, options, [&](Vector& x, std::size_t) {
    x += inv_m * a.apply_adjoint(b - a.apply(x));
    hard_threshold_inplace(x, params.s);
  });
}

IterateTrace kziht_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                       ScheduleStream schedules, const RunOptions& options) {
  check_problem(a, b, params, options);
  return run_epochs(a, b, params, options, [&](Vector& x, std::size_t) {
    const auto schedule = schedules.next(a.rows());
    for (auto row : schedule.order) kz_step_inplace(x, a, row, b[static_cast<Eigen::Index>(row)], params.gamma);
    hard_threshold_inplace(x, params.s);
  });
}

IterateTrace kzpt_run(const SensingOperator& a, const Vector& b, const SolverParams& params,
                      ScheduleStream schedules, const RunOptions& options) {
  check_problem(a, b, params, options);
  const std::size_t m = a.rows();
  const std::size_t p = params.period.value_or(m);
  if (p < 1 || p > m) {
    throw std::invalid_argument("thresholding period " + std::to_string(p) +
                                " must lie in [1, " + std::to_string(m) + "]");
  }
  const std::size_t steps = p * (m / p);
  return run_epochs(a, b, params, options, [&](Vector& x, std::size_t) {
    const auto schedule = schedules.next(m);
    Vector anchor = x;
    for (std::size_t j = 0; j < steps; ++j) {
      const auto row = schedule.order[j];
      kz_step_inplace(x, a, row, b[static_cast<Eigen::Index>(row)], params.gamma);
      if ((j + 1) % p == 0) {
        // lambda == 1 gives u = x exactly; skip the round trip through the anchor.
        if (params.lambda != 1.0) x = anchor + params.lambda * (x - anchor);
        hard_threshold_inplace(x, params.s);
        anchor = x;
      }
    }
  });
}

double subgaussian_delta(std::size_t m, std::size_t n, std::size_t s, double k_subg) {
  if (m < 2 || s == 0 || s > n || !(k_subg > 0.0)) {
    throw std::invalid_argument("subgaussian_delta needs m >= 2, 1 <= s <= N and K > 0");
  }
  const double k_ln_m = k_subg * std::log(static_cast<double>(m));
  return std::sqrt(3.0 * static_cast<double>(s) *
                   std::log(static_cast<double>(n) / static_cast<double>(s)) * k_ln_m * k_ln_m /
                   static_cast<double>(m));
}

StepPreset subgaussian_step_preset(std::size_t m, std::size_t n, std::size_t s, double k_subg,
                                   double margin) {
  if (!(margin > 0.0)) throw std::invalid_argument("preset margin must be positive");
  if (s == 0 || s >= n) {
    throw std::invalid_argument("sub-Gaussian preset needs 1 <= s < N");
  }
  const double c = margin * 48.0 * static_cast<double>(s) *
                   std::log(static_cast<double>(n) / static_cast<double>(s)) * k_subg * k_subg;
  auto admissible = [c](std::size_t rows) {
    const double l = std::log(static_cast<double>(rows));
    return rows >= 2 && static_cast<double>(rows) > c * l * l;
  };
  if (!admissible(m)) {
    // rows - c ln^2(rows) is convex past e, so once it fails at m the admissible
    // counts above m form an upward-closed range.
    std::size_t lo = std::max<std::size_t>(m, 2);
    std::size_t hi = lo;
    while (!admissible(hi)) {
      lo = hi;
      hi *= 2;
    }
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (admissible(mid) ? hi : lo) = mid;
    }
    throw InfeasibleParameters(
        "sub-Gaussian preset infeasible: m=" + std::to_string(m) + " must exceed 48 s ln(N/s) (K ln m)^2; smallest admissible m is " +
            std::to_string(hi),
        hi);
  }
  StepPreset preset;
  preset.delta = subgaussian_delta(m, n, s, k_subg);
  const double k_ln_m = k_subg * std::log(static_cast<double>(m));
  const double root_n = std::sqrt(static_cast<double>(n));
  preset.gamma = preset.delta / (2.0 * static_cast<double>(m) * k_ln_m * k_ln_m * root_n);
  preset.lambda = 2.0 * static_cast<double>(n) * root_n * k_ln_m * k_ln_m / preset.delta;
  return preset;
}

}  // namespace kzsparse
