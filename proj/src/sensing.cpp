#include "kzsparse/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kzsparse/errors.hpp"

namespace kzsparse {

namespace {

// Above this many entries BOS rows are evaluated on the fly.
constexpr std::size_t bos_cache_limit = std::size_t{1} << 22;

void check_sizes(std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw std::invalid_argument("operator dimensions must be positive");
}

}  // namespace

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::SubsampledBOS: return "hadamard";
    case OperatorKind::Bernoulli: return "bernoulli";
    case OperatorKind::GaussianFixedNorm: return "gaussian";
    case OperatorKind::ExplicitDense: return "dense";
  }
  return "dense";
}

OperatorKind operator_kind_from_string(const std::string& name) {
  if (name == "hadamard" || name == "bos") return OperatorKind::SubsampledBOS;
  if (name == "bernoulli") return OperatorKind::Bernoulli;
  if (name == "gaussian") return OperatorKind::GaussianFixedNorm;
  if (name == "dense") return OperatorKind::ExplicitDense;
  throw std::invalid_argument("unknown matrix kind '" + name +
                              "' (expected hadamard, bernoulli, gaussian or dense)");
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("fwht: length " + std::to_string(n) + " is not a power of two");
  }
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

Vector fwht(const Vector& v) {
  Vector out = v;
  fwht_inplace(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

SensingOperator SensingOperator::subsampled_bos(std::size_t n, std::vector<std::size_t> row_indices) {
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("subsampled BOS needs a power-of-two dimension, got " +
                                std::to_string(n));
  }
  check_sizes(row_indices.size(), n);
  if (row_indices.size() > n) throw std::invalid_argument("more BOS rows than the base transform has");
  {
    auto sorted = row_indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("BOS row indices must be distinct");
    }
    if (sorted.back() >= n) throw std::invalid_argument("BOS row index out of range");
  }

  SensingOperator op;
  op.kind_ = OperatorKind::SubsampledBOS;
  op.m_ = row_indices.size();
  op.n_ = n;
  op.bos_rows_ = std::move(row_indices);
  op.row_norm_sq_.assign(op.m_, static_cast<double>(n));
  if (op.m_ * n <= bos_cache_limit) {
    auto rows = std::make_shared<RowMatrix>(op.m_, n);
    for (std::size_t i = 0; i < op.m_; ++i) {
      for (std::size_t c = 0; c < n; ++c) {
        (*rows)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            hadamard_entry(op.bos_rows_[i], c);
      }
    }
    op.dense_ = std::move(rows);
  }
  return op;
}

SensingOperator SensingOperator::dense(RowMatrix rows, OperatorKind kind) {
  if (kind == OperatorKind::SubsampledBOS) {
    throw std::invalid_argument("use subsampled_bos() for BOS operators");
  }
  check_sizes(static_cast<std::size_t>(rows.rows()), static_cast<std::size_t>(rows.cols()));
  if (!rows.allFinite()) throw std::invalid_argument("operator entries must be finite");
  SensingOperator op;
  op.kind_ = kind;
  op.m_ = static_cast<std::size_t>(rows.rows());
  op.n_ = static_cast<std::size_t>(rows.cols());
  op.row_norm_sq_.resize(op.m_);
  for (std::size_t i = 0; i < op.m_; ++i) {
    op.row_norm_sq_[i] = rows.row(static_cast<Eigen::Index>(i)).squaredNorm();
  }
  op.dense_ = std::make_shared<const RowMatrix>(std::move(rows));
  return op;
}

SensingOperator SensingOperator::with_seed(std::uint64_t seed) const {
  SensingOperator copy = *this;
  copy.seed_ = seed;
  return copy;
}

double SensingOperator::row_dot(std::size_t i, const Vector& x) const {
  if (dense_) return dense_->row(static_cast<Eigen::Index>(i)).dot(x);
  const std::size_t r = bos_rows_[i];
  double acc = 0.0;
  for (std::size_t c = 0; c < n_; ++c) acc += hadamard_entry(r, c) * x[static_cast<Eigen::Index>(c)];
  return acc;
}

void SensingOperator::add_scaled_row(std::size_t i, double alpha, Vector& x) const {
  if (dense_) {
    x.noalias() += alpha * dense_->row(static_cast<Eigen::Index>(i)).transpose();
    return;
  }
  const std::size_t r = bos_rows_[i];
  for (std::size_t c = 0; c < n_; ++c) x[static_cast<Eigen::Index>(c)] += alpha * hadamard_entry(r, c);
}

Vector SensingOperator::row(std::size_t i) const {
  if (i >= m_) throw std::invalid_argument("row index out of range");
  if (dense_) return dense_->row(static_cast<Eigen::Index>(i)).transpose();
  Vector out(static_cast<Eigen::Index>(n_));
  for (std::size_t c = 0; c < n_; ++c) out[static_cast<Eigen::Index>(c)] = hadamard_entry(bos_rows_[i], c);
  return out;
}

Vector SensingOperator::apply(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n_) {
    throw std::invalid_argument("apply: expected vector of length " + std::to_string(n_));
  }
  if (kind_ == OperatorKind::SubsampledBOS) {
    const Vector hx = fwht(x);
    Vector out(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      out[static_cast<Eigen::Index>(i)] = hx[static_cast<Eigen::Index>(bos_rows_[i])];
    }
    return out;
  }
  return *dense_ * x;
}

Vector SensingOperator::apply_adjoint(const Vector& y) const {
  if (static_cast<std::size_t>(y.size()) != m_) {
    throw std::invalid_argument("apply_adjoint: expected vector of length " + std::to_string(m_));
  }
  if (kind_ == OperatorKind::SubsampledBOS) {
    Vector padded = Vector::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < m_; ++i) {
      padded[static_cast<Eigen::Index>(bos_rows_[i])] = y[static_cast<Eigen::Index>(i)];
    }
    // H is symmetric, so the adjoint of "transform then select" is "scatter then transform".
    fwht_inplace(std::span<double>(padded.data(), n_));
    return padded;
  }
  return dense_->transpose() * y;
}

Matrix SensingOperator::to_dense() const {
  if (dense_) return *dense_;
  Matrix out(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < m_; ++i) out.row(static_cast<Eigen::Index>(i)) = row(i).transpose();
  return out;
}

SensingOperator gen_subsampled_bos(std::size_t n, std::size_t m, Rng& rng) {
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("subsampled BOS needs a power-of-two dimension, got " +
                                std::to_string(n));
  }
  if (m == 0 || m > n) {
    throw std::invalid_argument("subsampled BOS needs 1 <= m <= N (m=" + std::to_string(m) +
                                ", N=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  picked.reserve(m);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), m, rng);
  return SensingOperator::subsampled_bos(n, std::move(picked));
}

SensingOperator gen_bernoulli(std::size_t m, std::size_t n, Rng& rng) {
  check_sizes(m, n);
  RowMatrix rows(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = coin(rng) ? 1.0 : -1.0;
  }
  return SensingOperator::dense(std::move(rows), OperatorKind::Bernoulli);
}

SensingOperator gen_gaussian_fixed_norm(std::size_t m, std::size_t n, Rng& rng) {
  check_sizes(m, n);
  RowMatrix rows(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double target = std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = normal(rng);
      norm = rows.row(i).norm();
    }
    rows.row(i) *= target / norm;
  }
  return SensingOperator::dense(std::move(rows), OperatorKind::GaussianFixedNorm);
}

Measurements make_measurements(const SensingOperator& a, const Vector& x_star,
                               const NoiseModel& noise, Rng& rng) {
  if (static_cast<std::size_t>(x_star.size()) != a.cols()) {
    throw std::invalid_argument("make_measurements: signal dimension does not match operator");
  }
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) {
    throw std::invalid_argument("noise sigma must be finite and non-negative");
  }
  Measurements out;
  out.clean = a.apply(x_star);
  out.noise = Vector::Zero(out.clean.size());
  if (noise.kind == NoiseModel::Kind::Gaussian && noise.sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, noise.sigma);
    for (Eigen::Index i = 0; i < out.noise.size(); ++i) out.noise[i] = normal(rng);
  }
  out.b = out.clean + out.noise;
  return out;
}

nlohmann::json to_json(const SensingOperator& a) {
  nlohmann::json j;
  j["kind"] = to_string(a.kind());
  j["m"] = a.rows();
  j["N"] = a.cols();
  if (a.seed()) j["seed"] = *a.seed();
  if (a.kind() == OperatorKind::SubsampledBOS) {
    j["transform"] = "walsh-hadamard";
    j["row_indices"] = std::vector<std::size_t>(a.row_indices().begin(), a.row_indices().end());
  } else {
    const Matrix dense = a.to_dense();
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(dense.size()));
    for (Eigen::Index i = 0; i < dense.rows(); ++i) {
      for (Eigen::Index k = 0; k < dense.cols(); ++k) entries.push_back(dense(i, k));
    }
    j["entries"] = std::move(entries);
  }
  return j;
}

SensingOperator operator_from_json(const nlohmann::json& j) {
  const auto kind = operator_kind_from_string(j.at("kind").get<std::string>());
  const auto m = j.at("m").get<std::size_t>();
  const auto n = j.at("N").get<std::size_t>();
  SensingOperator op = [&] {
    if (kind == OperatorKind::SubsampledBOS) {
      auto rows = j.at("row_indices").get<std::vector<std::size_t>>();
      if (rows.size() != m) throw std::invalid_argument("row_indices length does not match m");
      return SensingOperator::subsampled_bos(n, std::move(rows));
    }
    const auto entries = j.at("entries").get<std::vector<double>>();
    if (entries.size() != m * n) throw std::invalid_argument("entries length does not match m*N");
    RowMatrix rows(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::copy(entries.begin(), entries.end(), rows.data());
    return SensingOperator::dense(std::move(rows), kind);
  }();
  if (j.contains("seed")) op = op.with_seed(j.at("seed").get<std::uint64_t>());
  return op;
}

}  // namespace kzsparse
