#include "kzsparse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace kzsparse {

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(trial));
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Problem make_problem(const ExperimentConfig& c, std::size_t m, std::size_t s, std::uint64_t seed) {
  const auto matrix_seed = stream_seed(seed, Stream::matrix);
  Rng matrix_rng = make_rng(matrix_seed);
  SensingOperator a = [&] {
    switch (c.matrix.kind) {
      case OperatorKind::SubsampledBOS: return gen_subsampled_bos(c.matrix.n, m, matrix_rng);
      case OperatorKind::Bernoulli: return gen_bernoulli(m, c.matrix.n, matrix_rng);
      case OperatorKind::GaussianFixedNorm: return gen_gaussian_fixed_norm(m, c.matrix.n, matrix_rng);
      case OperatorKind::ExplicitDense: break;
    }
    throw std::invalid_argument("experiments cannot generate explicit dense operators");
  }();
  a = a.with_seed(matrix_seed);

  Rng signal_rng = make_rng(stream_seed(seed, Stream::signal));
  Vector x_star = random_sparse_signal(c.matrix.n, SparsityLevel(s), signal_rng);

  Rng noise_rng = make_rng(stream_seed(seed, Stream::noise));
  Measurements meas = make_measurements(a, x_star, c.noise, noise_rng);

  return Problem{std::move(a), std::move(x_star), std::move(meas), stream_seed(seed, Stream::schedule)};
}

IterateTrace run_solver(SolverKind kind, const SensingOperator& a, const Vector& b,
                        const SolverParams& params, ScheduleStream schedules,
                        const RunOptions& options) {
  switch (kind) {
    case SolverKind::KZ: return kz_run(a, b, params, schedules, options);
    case SolverKind::IHT: return iht_run(a, b, params, options);
    case SolverKind::KZIHT: return kziht_run(a, b, params, schedules, options);
    case SolverKind::KZPT: return kzpt_run(a, b, params, schedules, options);
  }
  throw std::invalid_argument("unknown solver");
}

CurveAggregate aggregate_traces(const std::vector<TrialRecord>& trials, double divergence_value) {
  CurveAggregate agg;
  // A diverged trial still owns the epoch at which it blew up.
  std::size_t length = 0;
  for (const auto& t : trials) {
    const std::size_t len = t.trace.epochs.size() + (t.trace.status == RunStatus::Diverged ? 1 : 0);
    length = std::max(length, len);
  }
  agg.mean.assign(length, 0.0);
  agg.std_dev.assign(length, 0.0);
  agg.n_trials.assign(length, trials.size());
  agg.n_diverged.assign(length, 0);
  if (trials.empty()) return agg;

  auto value_at = [&](const TrialRecord& t, std::size_t k) {
    const auto& ep = t.trace.epochs;
    if (k < ep.size()) return ep[k].relative_error;
    if (t.trace.status == RunStatus::Diverged) return divergence_value;
    return ep.empty() ? divergence_value : ep.back().relative_error;
  };

  const double n = static_cast<double>(trials.size());
  for (std::size_t k = 0; k < length; ++k) {
    double sum = 0.0;
    for (const auto& t : trials) {
      sum += value_at(t, k);
      if (t.trace.status == RunStatus::Diverged && k >= t.trace.epochs.size()) ++agg.n_diverged[k];
    }
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& t : trials) {
      const double d = value_at(t, k) - mean;
      sq += d * d;
    }
    agg.mean[k] = mean;
    agg.std_dev[k] = trials.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  }
  return agg;
}

CurveResult run_cell(const ExperimentConfig& c, std::size_t m, std::size_t s,
                     std::size_t default_epochs) {
  CurveResult result;
  result.m = m;
  result.s = s;
  result.params = resolve_params(c, m, s, default_epochs);
  result.trials.resize(c.trials);

  parallel_for(c.trials, c.threads, [&](std::size_t t) {
    const auto seed = trial_seed(c.base_seed, t);
    const Problem problem = make_problem(c, m, s, seed);
    RunOptions options;
    options.reference = &problem.x_star;
    TrialRecord rec;
    rec.trial = t;
    rec.seed = seed;
    rec.m = m;
    rec.s = s;
    rec.trace = run_solver(c.solver.name, problem.a, problem.measurements.b, result.params,
                           ScheduleStream(c.solver.rule, problem.schedule_seed), options);
    rec.final_error = rec.trace.status == RunStatus::Diverged || rec.trace.epochs.empty()
                          ? std::numeric_limits<double>::infinity()
                          : rec.trace.epochs.back().relative_error;
    rec.bias = bias_term(problem.a, problem.measurements.noise, s);
    result.trials[t] = std::move(rec);
  });

  result.aggregate = aggregate_traces(result.trials, result.params.divergence_threshold);
  return result;
}

std::vector<CurveResult> run_error_curve(const ExperimentConfig& c) {
  std::vector<CurveResult> out;
  out.reserve(c.s_values.size());
  for (auto s : c.s_values) out.push_back(run_cell(c, c.matrix.m, s, default_curve_epochs));
  return out;
}

PhaseGrid run_phase_transition(const ExperimentConfig& c) {
  PhaseGrid grid;
  grid.s_values = c.s_values;
  grid.m_values = c.m_values.empty() ? std::vector<std::size_t>{c.matrix.m} : c.m_values;
  grid.trials = c.trials;
  for (auto m : grid.m_values) {
    std::vector<double> row;
    row.reserve(grid.s_values.size());
    for (auto s : grid.s_values) {
      const auto cell = run_cell(c, m, s, default_phase_epochs);
      std::size_t successes = 0;
      for (const auto& t : cell.trials) {
        if (t.trace.status != RunStatus::Diverged && t.final_error < c.success_threshold) ++successes;
      }
      row.push_back(static_cast<double>(successes) / static_cast<double>(c.trials));
    }
    grid.success_prob.push_back(std::move(row));
  }
  return grid;
}

std::map<ScheduleRule, std::vector<CurveResult>> run_schedule_ablation(const ExperimentConfig& c) {
  std::map<ScheduleRule, std::vector<CurveResult>> out;
  for (auto rule : c.rules) {
    ExperimentConfig variant = c;
    variant.solver.rule = rule;
    out[rule] = run_error_curve(variant);
  }
  return out;
}

std::optional<std::size_t> epochs_to_tolerance(const std::vector<double>& curve, double tolerance) {
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (curve[k] <= tolerance) return k + 1;
  }
  return std::nullopt;
}

std::optional<std::size_t> epochs_to_tolerance(const IterateTrace& trace, double tolerance) {
  if (trace.status == RunStatus::Diverged) return std::nullopt;
  for (std::size_t k = 0; k < trace.epochs.size(); ++k) {
    if (trace.epochs[k].relative_error <= tolerance) return k + 1;
  }
  return std::nullopt;
}

std::vector<SweepEntry> run_period_sweep(const ExperimentConfig& c) {
  std::vector<SweepEntry> out;
  const std::size_t s = c.s_values.front();
  for (auto p : c.p_list) {
    ExperimentConfig variant = c;
    variant.solver.name = SolverKind::KZPT;
    variant.solver.period = p;
    SweepEntry entry;
    entry.period = p;
    entry.curve = run_cell(variant, c.matrix.m, s, default_curve_epochs);
    entry.epochs_to_tolerance = epochs_to_tolerance(entry.curve.aggregate.mean, c.tolerance);
    double total = 0.0;
    bool all_reached = true;
    for (const auto& t : entry.curve.trials) {
      const auto k = epochs_to_tolerance(t.trace, c.tolerance);
      if (!k) {
        all_reached = false;
        break;
      }
      total += static_cast<double>(*k);
    }
    if (all_reached && !entry.curve.trials.empty()) {
      entry.mean_trial_epochs = total / static_cast<double>(entry.curve.trials.size());
    }
    entry.rates = theorem_rate_bounds(c.matrix.m, c.matrix.n, s, c.solver.c_rip, p);
    out.push_back(std::move(entry));
  }
  return out;
}

IdentityCheckReport verify_multi_step_identity(std::size_t m, std::size_t n, std::size_t trials,
                                               std::uint64_t seed) {
  IdentityCheckReport report;
  report.trials = trials;
  report.m = m;
  report.n = n;
  report.seed = seed;

  const bool bos_ok = is_power_of_two(n) && m <= n;
  std::vector<OperatorKind> kinds{OperatorKind::Bernoulli, OperatorKind::GaussianFixedNorm};
  if (bos_ok) kinds.push_back(OperatorKind::SubsampledBOS);

  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(derive_seed(seed, t));
    const auto kind = kinds[t % kinds.size()];
    const SensingOperator a = kind == OperatorKind::SubsampledBOS ? gen_subsampled_bos(n, m, rng)
                              : kind == OperatorKind::Bernoulli   ? gen_bernoulli(m, n, rng)
                                                                  : gen_gaussian_fixed_norm(m, n, rng);
    ++report.instances_by_kind[kind];

    std::uniform_real_distribution<double> step(0.0, 2.0);
    double gamma = 0.0;
    while (gamma == 0.0) gamma = step(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(static_cast<Eigen::Index>(n));
    Vector x1(static_cast<Eigen::Index>(n));
    Vector e(static_cast<Eigen::Index>(m));
    for (auto& v : x) v = normal(rng);
    for (auto& v : x1) v = normal(rng);
    for (auto& v : e) v = 0.1 * normal(rng);
    const auto schedule = next_epoch_schedule(ScheduleRule::Reshuffle, m, 0, rng());

    const Vector b = a.apply(x) + e;
    const Vector actual = kz_epoch(x1, a, b, schedule, gamma) - x;
    const Vector predicted = multi_step_rhs(a, schedule, gamma, x1 - x, e);
    const double scale = std::max(actual.norm(), std::numeric_limits<double>::min());
    report.max_relative_deviation =
        std::max(report.max_relative_deviation, (actual - predicted).norm() / scale);
  }
  return report;
}

nlohmann::json to_json(const IdentityCheckReport& r) {
  nlohmann::json kinds = nlohmann::json::object();
  for (const auto& [kind, count] : r.instances_by_kind) kinds[to_string(kind)] = count;
  return {{"check", "multi-step-identity"},
          {"m", r.m},
          {"N", r.n},
          {"trials", r.trials},
          {"seed", r.seed},
          {"instances", kinds},
          {"max_relative_deviation", r.max_relative_deviation},
          {"tolerance", 1e-9},
          {"pass", r.max_relative_deviation <= 1e-9}};
}

}  // namespace kzsparse
