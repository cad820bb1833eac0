#include "kzsparse/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace kzsparse {

SparsityLevel::SparsityLevel(std::size_t s) : s_(s) {
  if (s == 0) throw std::invalid_argument("sparsity level must be at least 1");
}

void SparsityLevel::check_against(std::size_t dim) const {
  if (s_ > dim) {
    throw std::invalid_argument("sparsity level " + std::to_string(s_) +
                                " exceeds dimension " + std::to_string(dim));
  }
}

SupportSet::SupportSet(std::vector<std::size_t> indices, std::size_t ambient_dim)
    : indices_(std::move(indices)), dim_(ambient_dim) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw std::invalid_argument("support indices must be distinct");
  }
  if (!indices_.empty() && indices_.back() >= dim_) {
    throw std::invalid_argument("support index " + std::to_string(indices_.back()) +
                                " out of range for dimension " + std::to_string(dim_));
  }
}

SupportSet SupportSet::full(std::size_t ambient_dim) {
  std::vector<std::size_t> all(ambient_dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return SupportSet(std::move(all), ambient_dim);
}

SupportSet SupportSet::of(const Vector& v) {
  std::vector<std::size_t> idx;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) idx.push_back(static_cast<std::size_t>(i));
  }
  return SupportSet(std::move(idx), static_cast<std::size_t>(v.size()));
}

bool SupportSet::contains(std::size_t i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

SupportSet SupportSet::unite(const SupportSet& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("support dimensions differ");
  std::vector<std::size_t> out;
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(),
                 other.indices_.end(), std::back_inserter(out));
  return SupportSet(std::move(out), dim_);
}

std::vector<std::size_t> largest_magnitude_indices(const Vector& v, std::size_t s) {
  const auto n = static_cast<std::size_t>(v.size());
  if (s > n) throw std::invalid_argument("cannot select more entries than the vector holds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Total order: larger magnitude first, then smaller index.
  auto before = [&v](std::size_t a, std::size_t b) {
    const double ma = std::abs(v[static_cast<Eigen::Index>(a)]);
    const double mb = std::abs(v[static_cast<Eigen::Index>(b)]);
    return ma > mb || (ma == mb && a < b);
  };
  if (s < n) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s),
                     order.end(), before);
  }
  order.resize(s);
  std::sort(order.begin(), order.end());
  return order;
}

void hard_threshold_inplace(Vector& v, SparsityLevel s) {
  s.check_against(static_cast<std::size_t>(v.size()));
  if (s.value() == static_cast<std::size_t>(v.size())) return;
  const auto keep = largest_magnitude_indices(v, s.value());
  Vector out = Vector::Zero(v.size());
  for (auto i : keep) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(i)];
  v = std::move(out);
}

Vector hard_threshold(const Vector& v, SparsityLevel s) {
  Vector out = v;
  hard_threshold_inplace(out, s);
  return out;
}

Vector project_support(const Vector& v, const SupportSet& support) {
  if (support.ambient_dim() != static_cast<std::size_t>(v.size())) {
    throw std::invalid_argument("support ambient dimension does not match vector");
  }
  Vector out = Vector::Zero(v.size());
  for (auto i : support.indices()) {
    out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double relative_error(const Vector& x, const Vector& x_star) {
  if (x.size() != x_star.size()) throw std::invalid_argument("relative_error: dimension mismatch");
  const double ref = x_star.norm();
  if (ref == 0.0) throw std::invalid_argument("relative_error: reference vector is zero");
  return (x - x_star).norm() / ref;
}

std::size_t count_nonzeros(const Vector& v) {
  return static_cast<std::size_t>((v.array() != 0.0).count());
}

Vector random_sparse_signal(std::size_t dim, SparsityLevel s, Rng& rng) {
  s.check_against(dim);
  std::vector<std::size_t> all(dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> support;
  support.reserve(s.value());
  std::sample(all.begin(), all.end(), std::back_inserter(support), s.value(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (auto i : support) {
    double value = 0.0;
    // An exact zero would silently lower the sparsity.
    while (value == 0.0) value = normal(rng);
    x[static_cast<Eigen::Index>(i)] = value;
  }
  return x;
}

}  // namespace kzsparse
