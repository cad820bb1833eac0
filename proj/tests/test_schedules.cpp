#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "kzsparse/schedules.hpp"

using namespace kzsparse;

namespace {

bool is_permutation_of_range(std::vector<std::size_t> v, std::size_t m) {
  std::sort(v.begin(), v.end());
  std::vector<std::size_t> expect(m);
  std::iota(expect.begin(), expect.end(), 0);
  return v == expect;
}

}  // namespace

TEST_CASE("cyclic is the identity order") {
  for (std::size_t e : {0u, 1u, 7u}) {
    CHECK(next_epoch_schedule(ScheduleRule::Cyclic, 4, e, 99).order == std::vector<std::size_t>{0, 1, 2, 3});
  }
}

TEST_CASE("reshuffle draws a fresh permutation each epoch") {
  const auto e0 = next_epoch_schedule(ScheduleRule::Reshuffle, 4, 0, 123);
  CHECK(is_permutation_of_range(e0.order, 4));
  CHECK(validate_schedule(e0, 4));

  bool changed = false;
  std::vector<std::size_t> visits(50, 0);
  const auto first = next_epoch_schedule(ScheduleRule::Reshuffle, 50, 0, 7).order;
  for (std::size_t e = 0; e < 20; ++e) {
    const auto s = next_epoch_schedule(ScheduleRule::Reshuffle, 50, e, 7);
    CHECK(is_permutation_of_range(s.order, 50));
    changed = changed || s.order != first;
    for (auto i : s.order) ++visits[i];
  }
  CHECK(changed);
  CHECK(std::all_of(visits.begin(), visits.end(), [](std::size_t v) { return v == 20; }));
}

TEST_CASE("reshuffle-once reuses its permutation") {
  const auto a = next_epoch_schedule(ScheduleRule::ReshuffleOnce, 30, 0, 5);
  const auto b = next_epoch_schedule(ScheduleRule::ReshuffleOnce, 30, 9, 5);
  CHECK(a.order == b.order);
  CHECK(is_permutation_of_range(a.order, 30));
}

TEST_CASE("with replacement is uniform") {
  std::vector<double> counts(4, 0.0);
  const std::size_t epochs = 100000;
  bool duplicate = false;
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto s = next_epoch_schedule(ScheduleRule::WithReplacement, 4, e, 2024);
    REQUIRE(s.order.size() == 4);
    for (auto i : s.order) {
      REQUIRE(i < 4);
      counts[i] += 1.0;
    }
    duplicate = duplicate || !is_permutation_of_range(s.order, 4);
  }
  CHECK(duplicate);
  for (double c : counts) {
    const double freq = c / (4.0 * static_cast<double>(epochs));
    CHECK(freq > 0.24);
    CHECK(freq < 0.26);
  }
}

TEST_CASE("schedules are reproducible per epoch") {
  ScheduleStream a(ScheduleRule::Reshuffle, 17);
  std::vector<RowSchedule> first;
  for (int e = 0; e < 5; ++e) first.push_back(a.next(12));
  ScheduleStream b(ScheduleRule::Reshuffle, 17);
  for (int e = 0; e < 5; ++e) CHECK(b.next(12).order == first[static_cast<std::size_t>(e)].order);
  // Random access agrees with the stream.
  CHECK(next_epoch_schedule(ScheduleRule::Reshuffle, 12, 3, 17).order == first[3].order);
  CHECK(schedule_hash(first[0]) == schedule_hash(next_epoch_schedule(ScheduleRule::Reshuffle, 12, 0, 17)));
  CHECK(schedule_hash(first[0]) != schedule_hash(first[1]));
}

TEST_CASE("validate_schedule") {
  CHECK(validate_schedule({{1, 0, 2}, ScheduleRule::Reshuffle}, 3));
  CHECK_FALSE(validate_schedule({{0, 0, 2}, ScheduleRule::Reshuffle}, 3));
  CHECK(validate_schedule({{0, 0, 2}, ScheduleRule::WithReplacement}, 3));
  CHECK_FALSE(validate_schedule({{0, 3, 2}, ScheduleRule::WithReplacement}, 3));
  CHECK_FALSE(validate_schedule({{0, 1}, ScheduleRule::Reshuffle}, 3));
}

TEST_CASE("rule names") {
  for (auto r : {ScheduleRule::Reshuffle, ScheduleRule::ReshuffleOnce, ScheduleRule::Cyclic,
                 ScheduleRule::WithReplacement}) {
    CHECK(schedule_rule_from_string(to_string(r)) == r);
  }
  CHECK(to_string(ScheduleRule::WithReplacement) == "replacement");
  CHECK_THROWS_AS(schedule_rule_from_string("greedy"), std::invalid_argument);
}
