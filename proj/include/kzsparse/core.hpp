#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kzsparse/rng.hpp"

namespace kzsparse {

/// Dense real signal of dimension N (iterates, ground truth, gradients).
using Vector = Eigen::VectorXd;

/// Sparsity level s, validated against the ambient dimension at use sites.
class SparsityLevel {
 public:
  /// Throws std::invalid_argument when s == 0.
  explicit SparsityLevel(std::size_t s);

  std::size_t value() const noexcept { return s_; }

  /// Throws std::invalid_argument unless s <= dim.
  void check_against(std::size_t dim) const;

  friend bool operator==(SparsityLevel, SparsityLevel) = default;

 private:
  std::size_t s_;
};

/// Sorted set of 0-based coordinate indices inside [0, ambient_dim).
class SupportSet {
 public:
  SupportSet(std::vector<std::size_t> indices, std::size_t ambient_dim);

  static SupportSet full(std::size_t ambient_dim);
  static SupportSet empty(std::size_t ambient_dim) { return SupportSet({}, ambient_dim); }
  /// Indices of the nonzero entries of v.
  static SupportSet of(const Vector& v);

  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  std::size_t ambient_dim() const noexcept { return dim_; }
  bool contains(std::size_t i) const;

  /// Union of two supports over the same ambient dimension.
  SupportSet unite(const SupportSet& other) const;

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t dim_;
};

/// Indices of the s largest-magnitude entries of v, ties broken toward the
/// smaller index, returned in increasing order.
std::vector<std::size_t> largest_magnitude_indices(const Vector& v, std::size_t s);

/// T_s: keeps the s largest-magnitude entries of v and zeroes the rest.
Vector hard_threshold(const Vector& v, SparsityLevel s);

/// In-place T_s. Avoids an allocation inside the solver loops.
void hard_threshold_inplace(Vector& v, SparsityLevel s);

/// P_Omega: copies v on the support and zeroes everything else.
Vector project_support(const Vector& v, const SupportSet& support);

/// ||x - x_star||_2 / ||x_star||_2. Throws when x_star is zero.
double relative_error(const Vector& x, const Vector& x_star);

/// Number of nonzero entries.
std::size_t count_nonzeros(const Vector& v);

/// s-sparse signal: support uniform without replacement, values i.i.d. N(0, 1).
Vector random_sparse_signal(std::size_t dim, SparsityLevel s, Rng& rng);

}  // namespace kzsparse
