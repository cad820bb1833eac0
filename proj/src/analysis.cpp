#include "kzsparse/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "kzsparse/errors.hpp"

namespace kzsparse {

namespace {

void guard_dense(const SensingOperator& a, std::size_t steps, const char* who) {
  const std::size_t work = std::max(a.rows(), steps) * a.cols();
  if (work > dense_oracle_limit) {
    throw GuardExceeded(std::string(who) + ": instance with m*N = " + std::to_string(work) +
                        " exceeds the dense oracle limit of " + std::to_string(dense_oracle_limit));
  }
}

void check_schedule_rows(const SensingOperator& a, const RowSchedule& schedule) {
  for (auto row : schedule.order) {
    if (row >= a.rows()) throw std::invalid_argument("schedule index out of range");
    if (a.row_norm_sq(row) == 0.0) throw std::invalid_argument("schedule visits a zero row");
  }
}

void check_fixed_norm_rows(const SensingOperator& a) {
  const double target = std::sqrt(static_cast<double>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (std::abs(std::sqrt(a.row_norm_sq(i)) - target) > 1e-9 * target) {
      throw std::invalid_argument("cross-term rearrangement needs every row norm equal to sqrt(N); row " +
                                  std::to_string(i) + " differs");
    }
  }
}

// (I - gamma a a^T / ||a||^2) v
void apply_factor(const Vector& row, double row_norm_sq, double gamma, Vector& v) {
  v -= (gamma * row.dot(v) / row_norm_sq) * row;
}

}  // namespace

Vector multi_step_rhs(const SensingOperator& a, const RowSchedule& schedule, double gamma,
                      const Vector& start_error, const Vector& noise) {
  guard_dense(a, schedule.order.size(), "multi_step_rhs");
  if (static_cast<std::size_t>(start_error.size()) != a.cols() ||
      static_cast<std::size_t>(noise.size()) != a.rows()) {
    throw std::invalid_argument("multi_step_rhs: dimension mismatch");
  }
  check_schedule_rows(a, schedule);

  const auto& tau = schedule.order;
  const std::size_t steps = tau.size();
  const Matrix dense = a.to_dense();
  auto row_of = [&](std::size_t step) -> Vector {
    return dense.row(static_cast<Eigen::Index>(tau[step])).transpose();
  };

  // Product term: the factor for tau(1) acts first.
  Vector result = start_error;
  for (std::size_t j = 0; j < steps; ++j) {
    apply_factor(row_of(j), a.row_norm_sq(tau[j]), gamma, result);
  }

  // Noise term, i = 0..steps-1: e_{tau(steps-i)} pushed through the factors
  // of the i steps that follow it, innermost (earliest) first.
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t origin = steps - 1 - i;
    const std::size_t origin_row = tau[origin];
    Vector carried = row_of(origin) / a.row_norm_sq(origin_row);
    for (std::size_t later = origin + 1; later < steps; ++later) {
      apply_factor(row_of(later), a.row_norm_sq(tau[later]), gamma, carried);
    }
    result += gamma * noise[static_cast<Eigen::Index>(origin_row)] * carried;
  }
  return result;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (std::min(m.rows(), m.cols()) <= 256) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
  }
  Vector v = Vector::LinSpaced(m.cols(), 1.0, 2.0).normalized();
  double estimate = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    Vector w = m.transpose() * (m * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = std::sqrt(norm);
    v = w / norm;
    if (std::abs(next - estimate) <= 1e-12 * next) return next;
    estimate = next;
  }
  return estimate;
}

Matrix cross_term_matrix(const SensingOperator& a, const RowSchedule& schedule, double gamma) {
  guard_dense(a, schedule.order.size(), "cross_term_matrix");
  if (a.cols() * a.cols() > 16 * dense_oracle_limit) {
    throw GuardExceeded("cross_term_matrix: N x N matrix too large");
  }
  check_schedule_rows(a, schedule);
  check_fixed_norm_rows(a);
  const auto n = static_cast<Eigen::Index>(a.cols());
  const double inv_n = 1.0 / static_cast<double>(a.cols());
  const Matrix dense = a.to_dense();

  Matrix product = Matrix::Identity(n, n);
  Matrix linear = Matrix::Zero(n, n);
  for (auto row : schedule.order) {
    const Vector r = dense.row(static_cast<Eigen::Index>(row)).transpose();
    product -= (gamma * inv_n) * r * (r.transpose() * product);
    linear += r * r.transpose();
  }
  return product - Matrix::Identity(n, n) + (gamma * inv_n) * linear;
}

double cross_term_gamma_max(std::size_t m, std::size_t n, double k_subg) {
  const double ln_m = std::log(static_cast<double>(m));
  const double denom = k_subg * k_subg * ln_m * ln_m;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(static_cast<double>(n)) / (2.0 * static_cast<double>(m) * denom);
}

CrossTermReport cross_term_report(const SensingOperator& a, const RowSchedule& schedule,
                                  double gamma, double k_subg) {
  guard_dense(a, schedule.order.size(), "cross_term_report");
  check_schedule_rows(a, schedule);
  check_fixed_norm_rows(a);

  const double inv_n = 1.0 / static_cast<double>(a.cols());
  const Matrix dense = a.to_dense();

  // Orthonormal basis of (a superset of) the row space.
  Eigen::HouseholderQR<Matrix> qr(dense.transpose());
  const Matrix basis = qr.householderQ() * Matrix::Identity(dense.cols(), dense.rows());
  const Eigen::Index r = basis.cols();

  Matrix mapped = basis;  // (epoch product) * basis
  Matrix linear = Matrix::Zero(r, r);
  for (auto row : schedule.order) {
    const Vector full = dense.row(static_cast<Eigen::Index>(row)).transpose();
    mapped -= (gamma * inv_n) * full * (full.transpose() * mapped);
    const Vector reduced = basis.transpose() * full;
    linear += reduced * reduced.transpose();
  }
  const Matrix compressed =
      basis.transpose() * mapped - Matrix::Identity(r, r) + (gamma * inv_n) * linear;

  CrossTermReport report;
  // Cross terms are sums over pairs of steps; a single step has none.
  report.operator_norm = schedule.order.size() < 2 ? 0.0 : spectral_norm(compressed);
  const double m = static_cast<double>(a.rows());
  const double ln_m = std::log(m);
  report.bound = 2.0 * gamma * gamma * m * m * k_subg * k_subg * ln_m * ln_m /
                 std::sqrt(static_cast<double>(a.cols()));
  report.gamma_max = cross_term_gamma_max(a.rows(), a.cols(), k_subg);
  report.gamma_admissible = gamma <= report.gamma_max;
  report.m = a.rows();
  report.n = a.cols();
  report.gamma = gamma;
  report.k_subg = k_subg;
  report.schedule_hash = schedule_hash(schedule);
  report.kind = a.kind();
  report.seed = a.seed();
  return report;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr auto cap = std::numeric_limits<std::size_t>::max();
  std::size_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    const std::size_t factor = n - k + i;
    if (result > cap / factor) return cap;
    result = result * factor / i;
  }
  return result;
}

RipReport rip_constant_bruteforce(const Matrix& scaled, std::size_t s) {
  const auto n = static_cast<std::size_t>(scaled.cols());
  if (s == 0 || s > n) throw std::invalid_argument("rip_constant_bruteforce needs 1 <= s <= N");
  const std::size_t count = binomial(n, s);
  if (count > rip_support_limit) {
    throw GuardExceeded("rip_constant_bruteforce: C(" + std::to_string(n) + ", " +
                        std::to_string(s) + ") supports exceed the enumeration limit");
  }

  const bool precompute = n <= 2048;
  const Matrix gram_all = precompute ? Matrix(scaled.transpose() * scaled) : Matrix();

  RipReport report;
  report.s = s;
  report.delta = -1.0;
  report.lambda_min = std::numeric_limits<double>::infinity();
  report.lambda_max = -std::numeric_limits<double>::infinity();

  std::vector<std::size_t> support(s);
  std::iota(support.begin(), support.end(), std::size_t{0});
  const auto k = static_cast<Eigen::Index>(s);
  Matrix gram(k, k);
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  while (true) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto ci = static_cast<Eigen::Index>(support[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j <= i; ++j) {
        const auto cj = static_cast<Eigen::Index>(support[static_cast<std::size_t>(j)]);
        const double g = precompute ? gram_all(ci, cj) : scaled.col(ci).dot(scaled.col(cj));
        gram(i, j) = g;
        gram(j, i) = g;
      }
    }
    eig.compute(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()[0];
    const double hi = eig.eigenvalues()[k - 1];
    report.lambda_min = std::min(report.lambda_min, lo);
    report.lambda_max = std::max(report.lambda_max, hi);
    const double delta = std::max(hi - 1.0, 1.0 - lo);
    if (delta > report.delta) {
      report.delta = delta;
      report.argmax_support = SupportSet(support, n);
    }
    ++report.supports_checked;

    // Next combination in lexicographic order.
    std::size_t pos = s;
    while (pos > 0 && support[pos - 1] == n - s + (pos - 1)) --pos;
    if (pos == 0) break;
    ++support[pos - 1];
    for (std::size_t i = pos; i < s; ++i) support[i] = support[i - 1] + 1;
  }
  report.delta = std::max(report.delta, 0.0);
  return report;
}

double bias_term(const SensingOperator& a, const Vector& noise, std::size_t s) {
  if (static_cast<std::size_t>(noise.size()) != a.rows()) {
    throw std::invalid_argument("bias_term: noise length does not match operator rows");
  }
  const Vector grad = a.apply_adjoint(noise) / static_cast<double>(a.rows());
  const std::size_t keep = std::min(2 * s, a.cols());
  double sum = 0.0;
  for (auto i : largest_magnitude_indices(grad, keep)) {
    const double g = grad[static_cast<Eigen::Index>(i)];
    sum += g * g;
  }
  return std::sqrt(sum);
}

RateBounds theorem_rate_bounds(std::size_t m, std::size_t n, std::size_t s, double c_rip,
                               std::size_t p) {
  if (m == 0 || n == 0 || s == 0 || p == 0 || !(c_rip > 0.0)) {
    throw std::invalid_argument("theorem_rate_bounds needs positive arguments");
  }
  const double ln_n = std::log(static_cast<double>(n));
  const double md = static_cast<double>(m);
  const double blocks = md / static_cast<double>(p);
  RateBounds out;
  out.kziht_rate = 2.0 * std::sqrt(c_rip * static_cast<double>(s) * std::pow(ln_n, 4) / md);
  out.kzpt_rate = std::pow(blocks, blocks / 2.0) * std::pow(out.kziht_rate, blocks);
  return out;
}

nlohmann::json to_json(const CrossTermReport& r) {
  nlohmann::json j;
  j["operator_norm"] = r.operator_norm;
  j["bound"] = r.bound;
  j["gamma_max"] = r.gamma_max;
  j["gamma_admissible"] = r.gamma_admissible;
  j["below_bound"] = r.operator_norm < r.bound;
  j["input"] = {{"kind", to_string(r.kind)}, {"m", r.m},      {"N", r.n},
                {"gamma", r.gamma},          {"K", r.k_subg}, {"schedule_hash", r.schedule_hash}};
  if (r.seed) j["input"]["seed"] = *r.seed;
  return j;
}

nlohmann::json to_json(const RipReport& r) {
  const auto idx = r.argmax_support.indices();
  return {{"s", r.s},
          {"delta", r.delta},
          {"lambda_min", r.lambda_min},
          {"lambda_max", r.lambda_max},
          {"argmax_support", std::vector<std::size_t>(idx.begin(), idx.end())},
          {"supports_checked", r.supports_checked}};
}

}  // namespace kzsparse
