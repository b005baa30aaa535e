#include "v2xsim/mac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace v2xsim::mac {

namespace {

constexpr double kEps = 1e-9;

// Indices of items, sorted by id, rotated so service starts after
// last_served_id (cyclic).
std::vector<size_t> service_order(const std::vector<PendingTx>& items,
                                  const std::vector<size_t>& subset,
                                  std::int64_t last_served_id) {
  std::vector<size_t> order = subset;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return items[a].id < items[b].id;
  });
  auto pivot = std::find_if(order.begin(), order.end(), [&](size_t i) {
    return items[i].id > last_served_id;
  });
  std::rotate(order.begin(), pivot, order.end());
  return order;
}

// One-PRB-quantum round robin over `subset`, consuming up to prbs_left.
// Appends aggregated grants in first-service order.
void quantum_rr(std::vector<PendingTx>& items, const std::vector<size_t>& subset,
                int& prbs_left, std::int64_t& last_served_id,
                std::vector<Grant>& grants) {
  std::vector<size_t> cycle = service_order(items, subset, last_served_id);
  std::vector<int> granted(cycle.size(), 0);
  std::vector<size_t> first_service;  // positions in `cycle`, service order

  size_t pos = 0;
  size_t active = 0;
  for (size_t c : cycle)
    if (items[c].demand_prbs > items[c].allocated_prbs) ++active;
  while (prbs_left > 0 && active > 0) {
    PendingTx& it = items[cycle[pos]];
    if (it.allocated_prbs < it.demand_prbs) {
      if (granted[pos] == 0) first_service.push_back(pos);
      ++it.allocated_prbs;
      ++granted[pos];
      --prbs_left;
      last_served_id = it.id;
      if (it.allocated_prbs == it.demand_prbs) --active;
    }
    pos = (pos + 1) % cycle.size();
  }
  for (size_t p : first_service)
    grants.push_back({items[cycle[p]].id, granted[p]});
}

}  // namespace

LatencyBudget budget_from(const config::MacConfig& cfg) {
  LatencyBudget b;
  b.ue_processing_ms = cfg.ue_processing_ms;
  b.frame_alignment_ms = cfg.frame_alignment_ms;
  b.harq_gap_ms = cfg.harq_gap_ms;
  b.enb_processing_ms = cfg.enb_processing_ms;
  b.inter_enb_ms = cfg.inter_enb_ms;
  b.packet_lifetime_ms = cfg.packet_lifetime_ms;
  b.max_retx = cfg.max_retx;
  return b;
}

std::vector<Grant> schedule_uplink_rr(std::vector<PendingTx>& items,
                                      int prbs_total,
                                      std::int64_t& last_served_id) {
  std::vector<Grant> grants;
  if (items.empty() || prbs_total <= 0) return grants;
  std::vector<size_t> subset(items.size());
  std::iota(subset.begin(), subset.end(), size_t{0});
  int prbs_left = prbs_total;
  quantum_rr(items, subset, prbs_left, last_served_id, grants);
  return grants;
}

std::vector<Grant> schedule_downlink_newest_first(std::vector<PendingTx>& items,
                                                  int prbs_total,
                                                  std::int64_t& last_served_id) {
  std::vector<Grant> grants;
  if (items.empty() || prbs_total <= 0) return grants;

  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (items[a].arrival_tti != items[b].arrival_tti)
      return items[a].arrival_tti > items[b].arrival_tti;
    return items[a].id < items[b].id;
  });

  int prbs_left = prbs_total;
  size_t g0 = 0;
  while (g0 < order.size() && prbs_left > 0) {
    size_t g1 = g0;
    long long group_demand = 0;
    while (g1 < order.size() &&
           items[order[g1]].arrival_tti == items[order[g0]].arrival_tti) {
      group_demand +=
          items[order[g1]].demand_prbs - items[order[g1]].allocated_prbs;
      ++g1;
    }
    if (group_demand <= prbs_left) {
      for (size_t k = g0; k < g1; ++k) {
        PendingTx& it = items[order[k]];
        const int want = it.demand_prbs - it.allocated_prbs;
        if (want <= 0) continue;
        it.allocated_prbs += want;
        prbs_left -= want;
        grants.push_back({it.id, want});
      }
    } else {
      std::vector<size_t> group(order.begin() + g0, order.begin() + g1);
      quantum_rr(items, group, prbs_left, last_served_id, grants);
    }
    g0 = g1;
  }
  return grants;
}

HarqOutcome harq_next_attempt(int attempts_done, int max_retx,
                              double failure_end_ms, double min_tx_ms,
                              double gen_ms, const LatencyBudget& budget) {
  HarqOutcome out;
  out.ready_ms = failure_end_ms + budget.harq_gap_ms;
  if (attempts_done >= 1 + max_retx) {
    out.exhausted = true;
    return out;
  }
  if (out.ready_ms + min_tx_ms > gen_ms + budget.packet_lifetime_ms + kEps)
    out.exhausted = true;
  return out;
}

double e2e_latency(const LatencyTrace& t, const LatencyBudget& budget) {
  if (!t.delivered) return std::numeric_limits<double>::infinity();

  const double ul_ready =
      t.gen_ms + budget.ue_processing_ms + budget.frame_alignment_ms;
  if (std::abs(t.ul_ready_ms - ul_ready) > kEps)
    throw AccountingError("uplink readiness does not match its components");
  if (t.ul_end_ms < t.ul_ready_ms + budget.tti_ms - kEps)
    throw AccountingError("uplink ended before one whole TTI could elapse");

  const double backhaul = t.same_enb ? 0.0 : budget.inter_enb_ms;
  const double dl_ready = t.ul_end_ms + budget.enb_processing_ms + backhaul +
                          budget.frame_alignment_ms;
  if (std::abs(t.dl_ready_ms - dl_ready) > kEps)
    throw AccountingError("downlink readiness does not match its components");
  if (t.dl_end_ms < t.dl_ready_ms + budget.tti_ms - kEps)
    throw AccountingError("downlink ended before one whole TTI could elapse");

  return t.dl_end_ms + budget.ue_processing_ms - t.gen_ms;
}

ResourceGrid::ResourceGrid(int prbs_per_tti, int ring_ttis)
    : prbs_(prbs_per_tti), ring_(ring_ttis) {
  if (prbs_ < 1) throw std::invalid_argument("grid needs at least one PRB");
  if (ring_ < 1) throw std::invalid_argument("grid needs at least one TTI row");
  cells_.assign(static_cast<size_t>(prbs_) * ring_, Owner{});
}

void ResourceGrid::advance_to(std::int64_t tti) {
  const std::int64_t new_begin = tti - ring_ + 1;
  if (new_begin <= begin_) return;
  const std::int64_t wiped = std::min<std::int64_t>(new_begin - begin_, ring_);
  for (std::int64_t t = new_begin - wiped; t < new_begin; ++t) {
    Owner* row = cells_.data() + static_cast<size_t>(((t % ring_) + ring_) % ring_) * prbs_;
    std::fill(row, row + prbs_, Owner{});
  }
  begin_ = new_begin;
}

int ResourceGrid::row_of(std::int64_t tti) const {
  if (tti < begin_ || tti >= begin_ + ring_)
    throw std::logic_error("resource grid access outside retained window");
  return static_cast<int>(((tti % ring_) + ring_) % ring_);
}

Owner& ResourceGrid::at(std::int64_t tti, int prb) {
  if (prb < 0 || prb >= prbs_)
    throw std::logic_error("resource grid PRB index out of range");
  return cells_[static_cast<size_t>(row_of(tti)) * prbs_ + prb];
}

const Owner& ResourceGrid::at(std::int64_t tti, int prb) const {
  if (prb < 0 || prb >= prbs_)
    throw std::logic_error("resource grid PRB index out of range");
  return cells_[static_cast<size_t>(row_of(tti)) * prbs_ + prb];
}

int ResourceGrid::busy_count(std::int64_t tti) const {
  const Owner* row = cells_.data() + static_cast<size_t>(row_of(tti)) * prbs_;
  int n = 0;
  for (int p = 0; p < prbs_; ++p)
    if (row[p].tx_participant != -1) ++n;
  return n;
}

}  // namespace v2xsim::mac
