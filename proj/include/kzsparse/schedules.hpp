#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace kzsparse {

/// How the rows of one Kaczmarz epoch are ordered.
enum class ScheduleRule {
  Reshuffle,        ///< fresh uniform permutation every epoch
  ReshuffleOnce,    ///< one uniform permutation, reused for every epoch
  Cyclic,           ///< 0, 1, ..., m-1 every epoch
  WithReplacement,  ///< m i.i.d. uniform draws
};

/// CLI/config names: reshuffle, reshuffle-once, cyclic, replacement.
std::string to_string(ScheduleRule rule);
ScheduleRule schedule_rule_from_string(const std::string& name);

/// Row indices (0-based) consumed by one epoch.
struct RowSchedule {
  std::vector<std::size_t> order;
  ScheduleRule rule = ScheduleRule::Cyclic;
};

/// Schedule for `epoch_index` of the stream identified by `stream_seed`.
///
/// The result depends only on (rule, m, epoch_index, stream_seed), so any
/// epoch can be regenerated without replaying the earlier ones.
RowSchedule next_epoch_schedule(ScheduleRule rule, std::size_t m, std::size_t epoch_index,
                                std::uint64_t stream_seed);

/// True iff the order satisfies the invariants of its claimed rule for m rows.
bool validate_schedule(const RowSchedule& schedule, std::size_t m);

/// Convenience cursor over successive epochs of one schedule stream.
class ScheduleStream {
 public:
  ScheduleStream(ScheduleRule rule, std::uint64_t seed) : rule_(rule), seed_(seed) {}

  RowSchedule next(std::size_t m) { return next_epoch_schedule(rule_, m, epoch_++, seed_); }

  ScheduleRule rule() const noexcept { return rule_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t epochs_drawn() const noexcept { return epoch_; }

 private:
  ScheduleRule rule_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
};

/// Stable 64-bit FNV-1a hash of a schedule order, echoed in reports.
std::uint64_t schedule_hash(const RowSchedule& schedule);

}  // namespace kzsparse
