#pragma once

#include <cstdint>
#include <random>

namespace kzsparse {

/// Generator used by every seeded routine in the library.
using Rng = std::mt19937_64;

/// One round of the SplitMix64 output function.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministically mixes a parent seed with a child index.
///
/// Used to derive per-trial seeds from a base seed, per-purpose sub-streams
/// from a trial seed, and per-epoch schedule seeds from a schedule stream.
/// The result depends only on (parent, index), never on call order.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// Independent sub-streams of a single trial.
enum class Stream : std::uint64_t {
  matrix = 0,
  signal = 1,
  noise = 2,
  schedule = 3,
};

inline std::uint64_t stream_seed(std::uint64_t trial_seed, Stream s) noexcept {
  return derive_seed(trial_seed, 0x5354524541ULL + static_cast<std::uint64_t>(s));
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace kzsparse
