#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "v2xsim/errors.hpp"
#include "v2xsim/mac.hpp"
#include "v2xsim/rng.hpp"

using namespace v2xsim;

namespace {

mac::PendingTx item(std::int64_t id, int demand, std::int64_t arrival = 0) {
  mac::PendingTx p;
  p.id = id;
  p.demand_prbs = demand;
  p.arrival_tti = arrival;
  return p;
}

int granted(const std::vector<mac::Grant>& grants, std::int64_t id) {
  int total = 0;
  for (const auto& g : grants)
    if (g.id == id) total += g.prbs;
  return total;
}

int total_granted(const std::vector<mac::Grant>& grants) {
  int total = 0;
  for (const auto& g : grants) total += g.prbs;
  return total;
}

mac::LatencyTrace clean_trace() {
  // gen 0: +1 UE processing, +0.5 alignment, 1 TTI uplink ending 2.5,
  // +1 eNB processing, +0.5 alignment, 1 TTI downlink ending 5.0, +1 UE.
  mac::LatencyTrace t;
  t.gen_ms = 0.0;
  t.ul_ready_ms = 1.5;
  t.ul_end_ms = 2.5;
  t.dl_ready_ms = 4.0;
  t.dl_end_ms = 5.0;
  t.same_enb = true;
  t.delivered = true;
  return t;
}

}  // namespace

TEST_SUITE("mac") {

TEST_CASE("round robin splits a tight tti and finishes the loser next tti") {
  std::vector<mac::PendingTx> items = {item(0, 17), item(1, 17), item(2, 17)};
  std::int64_t last = -1;
  auto grants = mac::schedule_uplink_rr(items, 50, last);
  CHECK(granted(grants, 0) == 17);
  CHECK(granted(grants, 1) == 17);
  CHECK(granted(grants, 2) == 16);
  CHECK(total_granted(grants) == 50);
  CHECK(items[2].allocated_prbs == 16);

  std::vector<mac::PendingTx> next = {item(2, 1)};
  grants = mac::schedule_uplink_rr(next, 50, last);
  CHECK(granted(grants, 2) == 1);
}

TEST_CASE("round robin resumes after the last served id") {
  // Quantum rotation left off at id 1; id 2 gets the first quantum now and,
  // with 4 PRBs over the cycle 2,0,1,2, also the last.
  std::vector<mac::PendingTx> items = {item(0, 2), item(1, 2), item(2, 2)};
  std::int64_t last = 1;
  const auto grants = mac::schedule_uplink_rr(items, 4, last);
  CHECK(granted(grants, 2) == 2);
  CHECK(granted(grants, 0) == 1);
  CHECK(granted(grants, 1) == 1);
  CHECK(last == 2);
}

TEST_CASE("newest arrival preempts older downlink traffic") {
  std::vector<mac::PendingTx> items = {item(0, 30, 3), item(1, 30, 5)};
  std::int64_t last = -1;
  auto grants = mac::schedule_downlink_newest_first(items, 50, last);
  CHECK(granted(grants, 1) == 30);  // newer takes all it wants
  CHECK(granted(grants, 0) == 20);  // older gets the leftover

  std::vector<mac::PendingTx> rest = {item(0, 10, 3)};
  grants = mac::schedule_downlink_newest_first(rest, 50, last);
  CHECK(granted(grants, 0) == 10);
}

TEST_CASE("equal downlink arrivals share round robin") {
  std::vector<mac::PendingTx> fits = {item(0, 17, 4), item(1, 17, 4)};
  std::int64_t last = -1;
  auto grants = mac::schedule_downlink_newest_first(fits, 50, last);
  CHECK(granted(grants, 0) == 17);
  CHECK(granted(grants, 1) == 17);

  std::vector<mac::PendingTx> tight = {item(0, 30, 4), item(1, 30, 4)};
  last = -1;
  grants = mac::schedule_downlink_newest_first(tight, 50, last);
  CHECK(granted(grants, 0) == 25);
  CHECK(granted(grants, 1) == 25);
}

TEST_CASE("harq spacing is one rtt and exhaustion ends the chain") {
  const mac::LatencyBudget budget;

  // Failed attempt ends at 4 ms: the retransmission may start at 11 ms.
  auto out = mac::harq_next_attempt(1, 3, 4.0, 1.0, 0.0, budget);
  CHECK_FALSE(out.exhausted);
  CHECK(out.ready_ms == doctest::Approx(11.0).epsilon(1e-12));

  // No retransmissions allowed: first failure exhausts.
  out = mac::harq_next_attempt(1, 0, 4.0, 1.0, 0.0, budget);
  CHECK(out.exhausted);

  // Attempts used up.
  out = mac::harq_next_attempt(4, 3, 40.0, 1.0, 0.0, budget);
  CHECK(out.exhausted);

  // Lifetime used up: next start 104, earliest delivery 104 + 2 > gen + 100.
  out = mac::harq_next_attempt(1, 3, 97.0, 2.0, 5.0, budget);
  CHECK(out.exhausted);

  // Same numbers but the deadline still covers it.
  out = mac::harq_next_attempt(1, 3, 90.0, 2.0, 5.0, budget);
  CHECK_FALSE(out.exhausted);
  CHECK(out.ready_ms == doctest::Approx(97.0));
}

TEST_CASE("end to end latency adds the fixed budget to the grid times") {
  const mac::LatencyBudget budget;

  CHECK(mac::e2e_latency(clean_trace(), budget) == 6.0);

  // One downlink HARQ round pushes the end by exactly 7 + 1 ms.
  auto retx = clean_trace();
  retx.dl_end_ms = 13.0;
  CHECK(mac::e2e_latency(retx, budget) == 14.0);

  auto lost = clean_trace();
  lost.delivered = false;
  CHECK(std::isinf(mac::e2e_latency(lost, budget)));

  // Inconsistent instants must throw, not silently produce a number.
  auto bad = clean_trace();
  bad.dl_end_ms = bad.dl_ready_ms - 1.0;
  CHECK_THROWS_AS(mac::e2e_latency(bad, budget), AccountingError);

  auto early = clean_trace();
  early.ul_ready_ms = 0.5;  // less than UE processing + alignment after gen
  CHECK_THROWS_AS(mac::e2e_latency(early, budget), AccountingError);
}

TEST_CASE("resource grid slides forward and clears vacated rows") {
  mac::ResourceGrid grid(50, 8);
  grid.at(0, 10).tx_participant = 4;
  grid.at(0, 10).item = 77;
  CHECK(grid.busy_count(0) == 1);
  CHECK(grid.busy_count(3) == 0);

  CHECK_THROWS(grid.at(8, 0));    // beyond the held window
  CHECK_THROWS(grid.at(-1, 0));

  grid.advance_to(9);  // window now [2, 10): row 0 fell off
  CHECK(grid.begin_tti() == 2);
  CHECK_THROWS(grid.at(0, 10));
  CHECK(grid.busy_count(9) == 0);

  // The row that re-uses tti 0's storage must come back clean.
  grid.at(8, 10).tx_participant = 1;
  CHECK(grid.busy_count(8) == 1);
  grid.advance_to(16);
  CHECK(grid.busy_count(16) == 0);

  // Never moves backwards.
  grid.advance_to(3);
  CHECK(grid.begin_tti() == 9);
}

TEST_CASE("schedulers conserve prbs and work over randomized ttis") {
  RngStream rng(13, "mac_prop");
  for (int trial = 0; trial < 2000; ++trial) {
    const int capacity = 10 + static_cast<int>(rng.uniform_int(91));
    const int n = 1 + static_cast<int>(rng.uniform_int(10));
    std::vector<mac::PendingTx> items;
    for (int i = 0; i < n; ++i)
      items.push_back(item(i, 1 + static_cast<int>(rng.uniform_int(40)),
                           static_cast<std::int64_t>(rng.uniform_int(6))));
    auto copy = items;

    std::int64_t last = -1;
    const bool rr = (trial % 2) == 0;
    const auto grants = rr ? mac::schedule_uplink_rr(items, capacity, last)
                           : mac::schedule_downlink_newest_first(items, capacity, last);

    int total = 0, demand = 0;
    for (const auto& g : grants) {
      CHECK(g.prbs > 0);
      total += g.prbs;
    }
    for (const auto& it : copy) demand += it.demand_prbs;

    // Conservation: never hand out more than the TTI holds; work
    // conservation: capacity left over only when every demand is met.
    CHECK(total <= capacity);
    CHECK(total == std::min(capacity, demand));

    // Per-item sanity: grant never exceeds the item's demand, and the
    // in-place allocation mirrors the grant list.
    std::map<std::int64_t, int> by_id;
    for (const auto& g : grants) by_id[g.id] += g.prbs;
    for (size_t i = 0; i < copy.size(); ++i) {
      CHECK(items[i].allocated_prbs == by_id[items[i].id]);
      CHECK(by_id[items[i].id] <= copy[i].demand_prbs);
    }

    if (!rr) {
      // Newest-first dominance: an item gets PRBs only if every strictly
      // newer item was fully served this TTI.
      for (size_t i = 0; i < copy.size(); ++i) {
        if (by_id[copy[i].id] == 0) continue;
        for (size_t j = 0; j < copy.size(); ++j)
          if (copy[j].arrival_tti > copy[i].arrival_tti)
            CHECK(by_id[copy[j].id] == copy[j].demand_prbs);
      }
    }
  }
}

TEST_CASE("round robin keeps cumulative service within one prb") {
  // Four long-running flows, capacity never divisible evenly: after every
  // TTI the cumulative grants of any two flows differ by at most one PRB.
  std::vector<int> cumulative(4, 0);
  std::int64_t last = -1;
  for (int tti = 0; tti < 200; ++tti) {
    std::vector<mac::PendingTx> items;
    for (int i = 0; i < 4; ++i) items.push_back(item(i, 1000 - cumulative[i]));
    const auto grants = mac::schedule_uplink_rr(items, 7, last);
    for (const auto& g : grants) cumulative[static_cast<size_t>(g.id)] += g.prbs;
    const auto [lo, hi] = std::minmax_element(cumulative.begin(), cumulative.end());
    CHECK(*hi - *lo <= 1);
  }
}

}  // TEST_SUITE("mac")
