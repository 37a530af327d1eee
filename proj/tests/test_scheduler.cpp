#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <vector>

#include <pricesim/csv.hpp>
#include <pricesim/rng.hpp>
#include <pricesim/scheduler.hpp>

using namespace pricesim;

namespace {

Itinerary make_it(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "h%04d", n);
  Itinerary it;
  it.hotel_id = buf;
  it.criteria.checkin = CivilDate(20454 + (n % 200));
  it.criteria.checkout = it.criteria.checkin + 1;
  return it;
}

ItineraryPlanEntry entry(int n, SimTime ttl, double value) {
  return make_plan_entry(make_it(n), ttl, value);
}

}  // namespace

TEST_CASE("itinerary frequency: worked values") {
  CHECK(itinerary_frequency(21600) == 4);   // 6 h ttl -> 4 fetches/day
  CHECK(itinerary_frequency(86400) == 1);   // full-day ttl -> 1
  CHECK(itinerary_frequency(25200) == 4);   // 7 h -> ceil(24/7) = 4
  CHECK(itinerary_frequency(43200) == 2);
  CHECK(itinerary_frequency(900) == 96);
  CHECK(itinerary_frequency(1) == 86400);
  CHECK(itinerary_frequency(86401) == 1);
  CHECK_THROWS_AS((void)itinerary_frequency(0), std::invalid_argument);
  CHECK_THROWS_AS((void)itinerary_frequency(-900), std::invalid_argument);
}

TEST_CASE("frequency covers the day: f * ttl >= 86400") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    SimTime ttl = 1 + static_cast<SimTime>(rng.uniform_below(2 * 86400));
    std::int64_t f = itinerary_frequency(ttl);
    CHECK(f * ttl >= kSecondsPerDay);
    // And f is minimal: one fewer fetch would leave a gap.
    CHECK((f - 1) * ttl < kSecondsPerDay);
  }
}

TEST_CASE("itinerary value sums booking-if-accurate mass") {
  std::vector<std::pair<double, double>> searches{{0.25, 0.5}, {0.1, 1.0}};
  CHECK(itinerary_value(searches) ==
        doctest::Approx(0.125 + 0.1).epsilon(1e-12));
  CHECK(itinerary_value({}) == 0.0);
  std::vector<std::pair<double, double>> bad{{1.5, 0.5}};
  CHECK_THROWS_AS((void)itinerary_value(bad), std::invalid_argument);
}

TEST_CASE("plan entries derive frequency and density") {
  auto e = entry(1, 21600, 2.0);
  CHECK(e.frequency == 4);
  CHECK(e.value_per_request == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("selection: density beats raw value") {
  // A: value 2.0 at f=4 (0.5/request). B: value 2.4 at f=24 (0.1/request).
  // Budget 4: only A fits anyway; budget 28: both.
  std::vector<ItineraryPlanEntry> entries{entry(1, 21600, 2.0),
                                          entry(2, 3600, 2.4)};
  auto picked = select_top_requests(entries, 4);
  REQUIRE(picked.size() == 1);
  CHECK(picked[0].itinerary == make_it(1));

  picked = select_top_requests(entries, 28);
  CHECK(picked.size() == 2);
  CHECK(picked[0].itinerary == make_it(1));  // densest first in output

  // Budget 23: A admitted, B (f=24) does not fit; nothing else to scan.
  picked = select_top_requests(entries, 23);
  REQUIRE(picked.size() == 1);
  CHECK(picked[0].itinerary == make_it(1));
}

TEST_CASE("selection: atomic admission leaves short budgets empty") {
  // One itinerary needing 4 requests against a budget of 3: nothing enters.
  std::vector<ItineraryPlanEntry> entries{entry(1, 21600, 1.0)};
  CHECK(select_top_requests(entries, 3).empty());
  CHECK(select_top_requests(entries, 0).empty());
  auto picked = select_top_requests(entries, 4);
  CHECK(picked.size() == 1);
}

TEST_CASE("selection: continue-scan admits later entries that fit") {
  // Budget 5: C (f=4, densest) enters, B (f=4) does not fit the leftover 1,
  // but A (f=1) does.
  std::vector<ItineraryPlanEntry> entries{
      entry(1, 86400, 0.05),  // A: f=1, 0.05/request
      entry(2, 21600, 0.8),   // B: f=4, 0.2/request
      entry(3, 21600, 1.2),   // C: f=4, 0.3/request
  };
  auto picked = select_top_requests(entries, 5);
  REQUIRE(picked.size() == 2);
  CHECK(picked[0].itinerary == make_it(3));
  CHECK(picked[1].itinerary == make_it(1));
}

TEST_CASE("selection: per-request granularity truncates the boundary entry") {
  std::vector<ItineraryPlanEntry> entries{entry(1, 21600, 1.0)};
  auto picked =
      select_top_requests(entries, 3, AdmissionGranularity::kPerRequest);
  REQUIRE(picked.size() == 1);
  CHECK(picked[0].frequency == 3);
  CHECK(picked[0].ttl == 21600);  // ttl untouched; audits expose the gap
  CHECK(picked[0].value == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(picked[0].value_per_request == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("selection: deterministic tie-breaks") {
  // Equal density and value: input order decides, stably.
  std::vector<ItineraryPlanEntry> entries{entry(5, 43200, 1.0),
                                          entry(2, 43200, 1.0),
                                          entry(9, 43200, 1.0)};
  auto picked = select_top_requests(entries, 4);
  REQUIRE(picked.size() == 2);
  CHECK(picked[0].itinerary == make_it(5));
  CHECK(picked[1].itinerary == make_it(2));

  // Equal density, different value: higher value first.
  std::vector<ItineraryPlanEntry> mixed{entry(1, 43200, 1.0),
                                        entry(2, 21600, 2.0)};
  auto out = select_top_requests(mixed, 6);
  REQUIRE(out.size() == 2);
  CHECK(out[0].itinerary == make_it(2));
}

TEST_CASE("selection: equal frequencies make greedy exactly optimal") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ItineraryPlanEntry> entries;
    for (int i = 0; i < 12; ++i)
      entries.push_back(entry(i, 21600, rng.next_unit() * 3.0));
    std::int64_t budget = 4 * (1 + static_cast<std::int64_t>(
                                       rng.uniform_below(12)));
    auto picked = select_top_requests(entries, budget);
    // Greedy keeps the top budget/4 values.
    std::vector<double> values;
    for (const auto& e : entries) values.push_back(e.value);
    std::sort(values.rbegin(), values.rend());
    double best = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(budget / 4) &&
                            i < values.size();
         ++i)
      best += values[i];
    double got = 0;
    std::int64_t used = 0;
    for (const auto& e : picked) {
      got += e.value;
      used += e.frequency;
    }
    CHECK(got == doctest::Approx(best).epsilon(1e-9));
    CHECK(used <= budget);
  }
}

TEST_CASE("schedule: single group spreads evenly with covering gaps") {
  // 4 itineraries at 6 h ttl, mu 1: window 21600, slots 0..3, four repeats.
  std::vector<ItineraryPlanEntry> sel;
  for (int i = 0; i < 4; ++i) sel.push_back(entry(i, 21600, 1.0));
  auto plan = build_schedule(sel, 1);
  CHECK(plan.total_sends == 16);

  auto audit = audit_plan(plan, 1);
  CHECK(audit.ok);
  CHECK(audit.max_second_load == 1);
  CHECK(audit.total_sends == 16);

  // Each itinerary fires exactly every 21600 s.
  std::vector<std::vector<SimTime>> sends(4);
  for (std::size_t s = 0; s < plan.buckets.size(); ++s)
    for (auto idx : plan.buckets[s]) sends[idx].push_back((SimTime)s);
  for (const auto& ts : sends) {
    REQUIRE(ts.size() == 4);
    for (std::size_t j = 0; j + 1 < ts.size(); ++j)
      CHECK(ts[j + 1] - ts[j] == 21600);
    CHECK(ts[0] + kSecondsPerDay - ts[3] == 21600);
  }
}

TEST_CASE("schedule: two full groups fill mu exactly") {
  // Two f=1 groups of 86400 itineraries each would be heavy; use a cheaper
  // full-fill: 86400 itineraries at f=1 (ttl 86400) on mu=1.
  std::vector<ItineraryPlanEntry> sel;
  sel.reserve(86400);
  for (int i = 0; i < 86400; ++i) {
    ItineraryPlanEntry e;
    e.itinerary.hotel_id = "h" + std::to_string(i);
    e.itinerary.criteria.checkin = CivilDate(20454);
    e.itinerary.criteria.checkout = CivilDate(20455);
    e.ttl = 86400;
    e.frequency = 1;
    e.value = 1.0;
    e.value_per_request = 1.0;
    sel.push_back(std::move(e));
  }
  auto plan = build_schedule(sel, 1);
  CHECK(plan.total_sends == 86400);
  for (const auto& bucket : plan.buckets) CHECK(bucket.size() == 1);
}

TEST_CASE("schedule: non-divisor ttl keeps wrap gap within ttl") {
  // f = 4 with ttl 25200 (window 21600): gaps alternate 21600 and the wrap
  // completes the day; all gaps must stay <= 25200.
  std::vector<ItineraryPlanEntry> sel{entry(0, 25200, 1.0),
                                      entry(1, 25200, 1.0)};
  auto plan = build_schedule(sel, 1);
  auto audit = audit_plan(plan, 1);
  CHECK(audit.ok);
  for (const auto& v : audit.violations) CHECK(v.empty());
}

TEST_CASE("schedule: budget and overload failures") {
  // Sum of frequencies past mu*86400 is invalid_argument.
  std::vector<ItineraryPlanEntry> heavy{entry(0, 1, 1.0), entry(1, 1, 1.0)};
  CHECK_THROWS_AS((void)build_schedule(heavy, 1), std::invalid_argument);

  // Mixed groups dodge each other: the f=2 member claims slot 0, so the
  // f=1 member shifts to the next free second instead of colliding.
  std::vector<ItineraryPlanEntry> mixed{entry(0, 86400, 1.0),
                                        entry(1, 43200, 1.0)};
  auto plan = build_schedule(mixed, 1);
  CHECK(audit_plan(plan, 1).ok);
  CHECK(plan.total_sends == 3);

  // A genuinely unplaceable mix: 28799 f=3 entries leave only seconds
  // 28799, 57599, 86399 free, no two of which sit 43200 apart, so the f=2
  // entry fits the budget (86399 <= 86400) but has no collision-free slot.
  std::vector<ItineraryPlanEntry> jammed;
  jammed.push_back(entry(0, 43200, 9.0));
  for (int i = 0; i < 28799; ++i)
    jammed.push_back(entry(1 + i, 28800, 1.0));
  CHECK_THROWS_WITH_AS((void)build_schedule(jammed, 1),
                       doctest::Contains("frequency 2"), std::runtime_error);

  CHECK_THROWS_AS((void)build_schedule(mixed, 0), std::invalid_argument);
}

TEST_CASE("audit catches corrupted plans") {
  std::vector<ItineraryPlanEntry> sel{entry(0, 21600, 1.0)};
  auto plan = build_schedule(sel, 1);
  REQUIRE(audit_plan(plan, 1).ok);

  // Drop one send: count no longer matches frequency and one gap doubles.
  SchedulePlan broken = plan;
  for (auto& bucket : broken.buckets) {
    if (!bucket.empty()) {
      bucket.clear();
      break;
    }
  }
  auto audit = audit_plan(broken, 1);
  CHECK(!audit.ok);
  CHECK(audit.violations.size() >= 1);

  // Duplicate a second: per-second load violation.
  SchedulePlan doubled = plan;
  for (auto& bucket : doubled.buckets) {
    if (!bucket.empty()) {
      bucket.push_back(bucket[0]);
      break;
    }
  }
  audit = audit_plan(doubled, 1);
  CHECK(!audit.ok);

  // Unknown ttl (0) skips cadence checks but load checks still run.
  SchedulePlan anon = plan;
  for (auto& item : anon.items) item.ttl = 0;
  CHECK(audit_plan(anon, 1).ok);
}

TEST_CASE("schedule csv round trip preserves buckets") {
  std::vector<ItineraryPlanEntry> sel{entry(0, 21600, 1.0),
                                      entry(1, 25200, 0.5)};
  auto plan = build_schedule(sel, 2);
  std::string csv = plan.to_csv();
  CHECK(csv.rfind("second,hotel_id,checkin,checkout,adults,children,rooms\n",
                  0) == 0);

  auto path = std::filesystem::temp_directory_path() / "pricesim_plan_rt.csv";
  write_text_file(path.string(), csv);
  auto back = SchedulePlan::from_csv_file(path.string(), nullptr,
                                          CivilDate(20454));
  CHECK(back.total_sends == plan.total_sends);
  REQUIRE(back.items.size() == plan.items.size());
  // Same seconds, same hotel per slot.
  for (std::size_t s = 0; s < plan.buckets.size(); ++s) {
    REQUIRE(back.buckets[s].size() == plan.buckets[s].size());
    for (std::size_t i = 0; i < plan.buckets[s].size(); ++i)
      CHECK(back.items[back.buckets[s][i]].itinerary ==
            plan.items[plan.buckets[s][i]].itinerary);
  }
  // Without a ttl table the cadence audit is skipped but loads still verify.
  CHECK(audit_plan(back, 2).ok);
  std::filesystem::remove(path);
}

TEST_CASE("lru refresh batch spends exactly the leftover budget") {
  LruSearchCache cache(8);
  for (int i = 0; i < 5; ++i) cache.admit(make_it(i));
  cache.update_quote(make_it(0), 0, 100);
  cache.update_quote(make_it(1), 0, 50);

  auto batch = lru_refresh_batch(cache, 4, 1, 60);
  REQUIRE(batch.size() == 3);
  // Never-fetched first (most recently admitted first), then soonest expiry.
  CHECK(batch[0] == make_it(4));
  CHECK(batch[1] == make_it(3));
  CHECK(batch[2] == make_it(2));

  CHECK(lru_refresh_batch(cache, 4, 4, 60).empty());
  CHECK(lru_refresh_batch(cache, 2, 0, 60).size() == 2);
  CHECK_THROWS_AS((void)lru_refresh_batch(cache, 2, 3, 60),
                  std::invalid_argument);

  LruSearchCache empty(4);
  CHECK(lru_refresh_batch(empty, 4, 0, 60).empty());
}
