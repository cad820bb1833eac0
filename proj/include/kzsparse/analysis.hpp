#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "kzsparse/core.hpp"
#include "kzsparse/schedules.hpp"
#include "kzsparse/sensing.hpp"

namespace kzsparse {

/// Largest m * N the dense oracles accept.
inline constexpr std::size_t dense_oracle_limit = 1'000'000;
/// Largest number of supports the RIP brute force enumerates.
inline constexpr std::size_t rip_support_limit = 1'000'000;

/// Closed-form end-of-epoch error of a Kaczmarz sweep.
///
/// Evaluates the ordered product of (I - gamma a a^T / ||a||^2) over the
/// schedule applied to `start_error`, plus the noise sum in which noise entry
/// e_{tau(m-i)} is carried by the a_{tau(m-i)} / ||a||^2 direction through the
/// i later factors. Every term is evaluated independently of the others.
/// Throws GuardExceeded when m * N > dense_oracle_limit.
Vector multi_step_rhs(const SensingOperator& a, const RowSchedule& schedule, double gamma,
                      const Vector& start_error, const Vector& noise);

/// Spectral norm (largest singular value).
///
/// Exact SVD up to 256 columns, power iteration on M^T M to 1e-12 relative
/// change above that.
double spectral_norm(const Matrix& m);

/// B_tau = (ordered epoch product) - I + (gamma / N) sum_j a_j a_j^T as an
/// explicit N x N matrix. Needs every row norm equal to sqrt(N).
Matrix cross_term_matrix(const SensingOperator& a, const RowSchedule& schedule, double gamma);

struct CrossTermReport {
  double operator_norm = 0.0;
  double bound = 0.0;             ///< 2 gamma^2 m^2 sqrt(K^4 ln^4 m / N)
  double gamma_max = 0.0;         ///< (1 / 2m) sqrt(N / (K^4 ln^4 m))
  bool gamma_admissible = false;  ///< gamma <= gamma_max
  // input echo
  std::size_t m = 0;
  std::size_t n = 0;
  double gamma = 0.0;
  double k_subg = 1.0;
  std::uint64_t schedule_hash = 0;
  OperatorKind kind = OperatorKind::ExplicitDense;
  std::optional<std::uint64_t> seed;
};

/// Largest admissible Kaczmarz step for the cross-term bound.
double cross_term_gamma_max(std::size_t m, std::size_t n, double k_subg);

/// Measures ||B_tau|| and compares it with the uniform bound.
///
/// B_tau vanishes on the orthogonal complement of the row space and maps into
/// it, so the norm is computed on an orthonormal basis of the row space.
/// Throws std::invalid_argument when some row norm differs from sqrt(N) by
/// more than 1e-9 relative, GuardExceeded above dense_oracle_limit.
CrossTermReport cross_term_report(const SensingOperator& a, const RowSchedule& schedule,
                                  double gamma, double k_subg = 1.0);

struct RipReport {
  std::size_t s = 0;
  double delta = 0.0;
  SupportSet argmax_support = SupportSet::empty(0);
  double lambda_min = 1.0;  ///< extreme Gram eigenvalues over all supports
  double lambda_max = 1.0;
  std::size_t supports_checked = 0;
};

/// Exact restricted isometry constant by enumerating every size-s support.
///
/// `scaled` is used as given; pass (1 / sqrt(m)) A for the usual scaling.
/// Supports are visited in lexicographic order and the first one attaining
/// the maximum is reported. Throws GuardExceeded when C(N, s) > rip_support_limit.
RipReport rip_constant_bruteforce(const Matrix& scaled, std::size_t s);

/// C(n, k), saturating at SIZE_MAX.
std::size_t binomial(std::size_t n, std::size_t k);

/// sup over |Omega| <= 2s of ||P_Omega((1/m) A^T e)||_2: the norm of the 2s
/// largest-magnitude entries.
double bias_term(const SensingOperator& a, const Vector& noise, std::size_t s);

struct RateBounds {
  double kziht_rate = 0.0;  ///< 2 sqrt(C s ln^4 N / m)
  double kzpt_rate = 0.0;   ///< (m/p)^{m/2p} * kziht_rate^{m/p}
};

/// Per-epoch contraction factors predicted for KZIHT and for KZPT with period p.
RateBounds theorem_rate_bounds(std::size_t m, std::size_t n, std::size_t s, double c_rip,
                               std::size_t p);

nlohmann::json to_json(const CrossTermReport& r);
nlohmann::json to_json(const RipReport& r);

}  // namespace kzsparse
