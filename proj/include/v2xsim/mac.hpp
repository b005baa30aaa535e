#pragma once

#include <cstdint>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/errors.hpp"

namespace v2xsim::mac {

// Fixed per-hop delay components charged outside the TTI grids.
struct LatencyBudget {
  double ue_processing_ms = 1.0;
  double frame_alignment_ms = 0.5;
  double tti_ms = 1.0;
  double harq_gap_ms = 7.0;  // end of failed attempt -> start of retransmission
  double enb_processing_ms = 1.0;
  double inter_enb_ms = 1.0;
  double packet_lifetime_ms = 100.0;
  int max_retx = 3;
};

LatencyBudget budget_from(const config::MacConfig& cfg);

// One schedulable transmission as the per-TTI schedulers see it. demand_prbs
// is what the item still wants; the scheduler adds its grant to
// allocated_prbs and also reports it in the returned grant list.
struct PendingTx {
  std::int64_t id = 0;           // stable identity and round-robin order key
  int demand_prbs = 0;           // unmet PRBs wanted
  int allocated_prbs = 0;        // granted this TTI (scheduler output)
  std::int64_t arrival_tti = 0;  // downlink: when the packet reached the eNB
};

struct Grant {
  std::int64_t id = 0;
  int prbs = 0;
};

// Round robin with a one-PRB quantum: items ordered by id, service starts at
// the first id after last_served_id (cyclic), items leave the cycle once met.
// last_served_id is updated to the id that received the final quantum. Grants
// come back in first-service order; allocated_prbs is updated in place.
std::vector<Grant> schedule_uplink_rr(std::vector<PendingTx>& items,
                                      int prbs_total,
                                      std::int64_t& last_served_id);

// Newest eNB-arrival first; a group of equal arrivals that does not fit whole
// is split round-robin (same quantum rule as uplink), and anything left after
// a full grant spills to the next-older group.
std::vector<Grant> schedule_downlink_newest_first(std::vector<PendingTx>& items,
                                                  int prbs_total,
                                                  std::int64_t& last_served_id);

// Decision after a failed attempt: when the next attempt may start and
// whether the packet is out of attempts or out of time. min_tx_ms is the
// caller-computed gap between that start and the earliest possible delivery.
struct HarqOutcome {
  bool exhausted = false;
  double ready_ms = 0.0;
};

HarqOutcome harq_next_attempt(int attempts_done, int max_retx,
                              double failure_end_ms, double min_tx_ms,
                              double gen_ms, const LatencyBudget& budget);

// Instants accumulated while a packet crosses the two hops. All values are
// absolute ms; a packet that never completed has delivered = false.
struct LatencyTrace {
  double gen_ms = 0.0;
  double ul_ready_ms = 0.0;  // gen + UE processing + frame alignment
  double ul_end_ms = 0.0;    // end of the last TTI of the successful UL attempt
  double dl_ready_ms = 0.0;  // ul_end + eNB processing [+ inter-site] + alignment
  double dl_end_ms = 0.0;    // end of the last TTI of the successful DL attempt
  bool same_enb = true;
  bool delivered = false;
};

// End-to-end latency = dl_end + UE processing - gen. Validates the trace
// against the budget (component sums and ordering) and throws
// AccountingError on any inconsistency; returns +inf when not delivered.
double e2e_latency(const LatencyTrace& trace, const LatencyBudget& budget);

// Occupancy map for one sector and direction: a ring of TTI rows, each with
// one Owner per PRB. Rows slide forward with advance_to; vacated rows are
// cleared. Lookups outside [begin_tti, begin_tti + ring) throw.
struct Owner {
  int tx_participant = -1;   // -1 free, -2 the sector itself (downlink)
  std::int64_t item = -1;    // owning transmission id
  double per_prb_dbm = 0.0;  // transmit power on this PRB
};

class ResourceGrid {
 public:
  ResourceGrid(int prbs_per_tti, int ring_ttis = 192);

  int prbs() const { return prbs_; }
  int ring() const { return ring_; }
  std::int64_t begin_tti() const { return begin_; }
  std::int64_t end_tti() const { return begin_ + ring_; }

  // Slides the window so that `tti` is the last held row, clearing rows that
  // fall off the back. Never moves backwards.
  void advance_to(std::int64_t tti);

  Owner& at(std::int64_t tti, int prb);
  const Owner& at(std::int64_t tti, int prb) const;

  int busy_count(std::int64_t tti) const;

 private:
  int row_of(std::int64_t tti) const;

  int prbs_;
  int ring_;
  std::int64_t begin_ = 0;
  std::vector<Owner> cells_;
};

}  // namespace v2xsim::mac
