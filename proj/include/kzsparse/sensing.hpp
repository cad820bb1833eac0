#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kzsparse/core.hpp"
#include "kzsparse/rng.hpp"

namespace kzsparse {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class OperatorKind { SubsampledBOS, Bernoulli, GaussianFixedNorm, ExplicitDense };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& name);

/// In-place unnormalized Walsh-Hadamard transform (Sylvester ordering).
/// Throws std::invalid_argument unless the length is a power of two.
void fwht_inplace(std::span<double> v);

/// Returns H v, where H has entries (-1)^popcount(r & c).
Vector fwht(const Vector& v);

bool is_power_of_two(std::size_t n) noexcept;

/// Entry (r, c) of the unnormalized Walsh-Hadamard matrix.
inline double hadamard_entry(std::size_t r, std::size_t c) noexcept {
  return (__builtin_popcountll(r & c) & 1) ? -1.0 : 1.0;
}

/// An m x N measurement operator with row access, products and adjoints.
///
/// Subsampled bounded orthonormal systems store only the selected Hadamard
/// row indices; small instances additionally cache the dense rows so that
/// Kaczmarz sweeps run at dense speed. Instances are immutable and cheap to
/// copy, so one operator can be shared by many threads.
class SensingOperator {
 public:
  /// Rows `row_indices` (0-based, distinct) of the N x N Hadamard matrix.
  static SensingOperator subsampled_bos(std::size_t n, std::vector<std::size_t> row_indices);

  /// Operator backed by explicit row-major entries.
  static SensingOperator dense(RowMatrix rows, OperatorKind kind = OperatorKind::ExplicitDense);

  OperatorKind kind() const noexcept { return kind_; }
  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }

  /// Selected Hadamard rows; empty for dense kinds.
  std::span<const std::size_t> row_indices() const noexcept { return bos_rows_; }

  /// a_i^T x.
  double row_dot(std::size_t i, const Vector& x) const;
  /// x += alpha * a_i.
  void add_scaled_row(std::size_t i, double alpha, Vector& x) const;
  /// ||a_i||_2^2.
  double row_norm_sq(std::size_t i) const { return row_norm_sq_[i]; }
  Vector row(std::size_t i) const;

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& y) const;

  /// Explicit m x N matrix, regardless of representation.
  Matrix to_dense() const;

  /// Seed the generator was constructed from, when known; echoed in reports.
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  SensingOperator with_seed(std::uint64_t seed) const;

 private:
  SensingOperator() = default;

  OperatorKind kind_ = OperatorKind::ExplicitDense;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<std::size_t> bos_rows_;
  std::shared_ptr<const RowMatrix> dense_;
  std::vector<double> row_norm_sq_;
  std::optional<std::uint64_t> seed_;
};

/// m distinct Hadamard rows drawn uniformly without replacement.
SensingOperator gen_subsampled_bos(std::size_t n, std::size_t m, Rng& rng);

/// i.i.d. Rademacher entries; every row has norm sqrt(N).
SensingOperator gen_bernoulli(std::size_t m, std::size_t n, Rng& rng);

/// Gaussian rows rescaled to norm sqrt(N), i.e. uniform on the sphere of that radius.
SensingOperator gen_gaussian_fixed_norm(std::size_t m, std::size_t n, Rng& rng);

struct NoiseModel {
  enum class Kind { None, Gaussian };
  Kind kind = Kind::None;
  double sigma = 0.0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma) { return {Kind::Gaussian, sigma}; }
};

/// b = clean + noise with clean = A x.
struct Measurements {
  Vector b;
  Vector noise;
  Vector clean;
};

Measurements make_measurements(const SensingOperator& a, const Vector& x_star,
                               const NoiseModel& noise, Rng& rng);

/// Self-describing JSON form. Dense kinds carry their entries; BOS carries
/// its row indices. Reading it back reproduces the operator bit for bit.
nlohmann::json to_json(const SensingOperator& a);
SensingOperator operator_from_json(const nlohmann::json& j);

}  // namespace kzsparse
