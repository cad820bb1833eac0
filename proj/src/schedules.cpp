#include "kzsparse/schedules.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "kzsparse/rng.hpp"

namespace kzsparse {

std::string to_string(ScheduleRule rule) {
  switch (rule) {
    case ScheduleRule::Reshuffle: return "reshuffle";
    case ScheduleRule::ReshuffleOnce: return "reshuffle-once";
    case ScheduleRule::Cyclic: return "cyclic";
    case ScheduleRule::WithReplacement: return "replacement";
  }
  return "reshuffle";
}

ScheduleRule schedule_rule_from_string(const std::string& name) {
  if (name == "reshuffle") return ScheduleRule::Reshuffle;
  if (name == "reshuffle-once") return ScheduleRule::ReshuffleOnce;
  if (name == "cyclic") return ScheduleRule::Cyclic;
  if (name == "replacement") return ScheduleRule::WithReplacement;
  throw std::invalid_argument("unknown schedule rule '" + name +
                              "' (expected reshuffle, reshuffle-once, cyclic or replacement)");
}

RowSchedule next_epoch_schedule(ScheduleRule rule, std::size_t m, std::size_t epoch_index,
                                std::uint64_t stream_seed) {
  RowSchedule out;
  out.rule = rule;
  out.order.resize(m);
  switch (rule) {
    case ScheduleRule::Cyclic:
      std::iota(out.order.begin(), out.order.end(), std::size_t{0});
      break;
    case ScheduleRule::Reshuffle:
    case ScheduleRule::ReshuffleOnce: {
      const std::size_t draw = rule == ScheduleRule::ReshuffleOnce ? 0 : epoch_index;
      Rng rng = make_rng(derive_seed(stream_seed, draw));
      std::iota(out.order.begin(), out.order.end(), std::size_t{0});
      std::shuffle(out.order.begin(), out.order.end(), rng);
      break;
    }
    case ScheduleRule::WithReplacement: {
      if (m == 0) break;
      Rng rng = make_rng(derive_seed(stream_seed, epoch_index));
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      for (auto& idx : out.order) idx = pick(rng);
      break;
    }
  }
  return out;
}

bool validate_schedule(const RowSchedule& schedule, std::size_t m) {
  if (schedule.order.size() != m) return false;
  if (std::any_of(schedule.order.begin(), schedule.order.end(),
                  [m](std::size_t i) { return i >= m; })) {
    return false;
  }
  switch (schedule.rule) {
    case ScheduleRule::WithReplacement:
      return true;
    case ScheduleRule::Cyclic:
    case ScheduleRule::Reshuffle:
    case ScheduleRule::ReshuffleOnce: {
      std::vector<bool> seen(m, false);
      for (auto i : schedule.order) {
        if (seen[i]) return false;
        seen[i] = true;
      }
      return true;
    }
  }
  return false;
}

std::uint64_t schedule_hash(const RowSchedule& schedule) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto idx : schedule.order) {
    auto v = static_cast<std::uint64_t>(idx);
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace kzsparse
