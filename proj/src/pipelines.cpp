#include "v2xsim/pipelines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "v2xsim/mac.hpp"
#include "v2xsim/phy.hpp"
#include "v2xsim/rng.hpp"
#include "v2xsim/scenario.hpp"

namespace v2xsim::pipelines {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-9;
constexpr int kRingTtis = 192;  // retained TTI history, > packet lifetime

double lin(double db) { return std::pow(10.0, db / 10.0); }
double to_db(double l) { return 10.0 * std::log10(l); }

// First TTI of a grid with phase phi whose span [t+phi, t+1+phi) starts at or
// after ready_ms. A readiness instant exactly on a boundary uses that TTI.
std::int64_t first_tti(double ready_ms, double phi) {
  return static_cast<std::int64_t>(std::ceil(ready_ms - phi - kEps));
}

double frac(double x) { return x - std::floor(x); }

struct CellRange {
  std::int64_t tti = 0;
  int lo = 0;
  int n = 0;
};

struct UlJob {
  std::int64_t pkt = -1;
  std::int64_t elig = 0;
  int demand = 0;
  int got = 0;
  int attempts = 0;  // attempts started, the in-flight one included
  bool dead = false;
  const phy::McsEntry* mcs = nullptr;
  std::vector<CellRange> fp;
};

struct DlJob {  // one unicast (packet, receiver) chain
  std::int64_t pkt = -1;
  int rx = -1;
  int sector = 0;
  std::int64_t arrival = 0;  // eNB arrival mapped to its first eligible TTI
  std::int64_t elig = 0;     // pushed forward by HARQ gaps
  std::int64_t stale_tti = 0;  // last TTI this attempt may finish on
  int demand = 0;
  int got = 0;
  int attempts = 0;
  bool dead = false;
  const phy::McsEntry* mcs = nullptr;
  std::vector<CellRange> fp;
};

struct McGroup {  // one multicast window: a packet toward one sector's receivers
  std::int64_t pkt = -1;
  int sector = 0;
  std::int64_t arrival = 0;
  std::int64_t start_by = 0;       // last TTI the first replica may start on
  std::int64_t last_grant = -1;    // back-to-back check: served every TTI
  int replica_prbs = 0;
  int window_prbs = 0;  // replica_prbs * max replicas, cumulative cap
  int got = 0;
  int replicas_done = 0;
  bool dead = false;
  std::vector<CellRange> fp;            // whole-window footprint, append order
  std::vector<int> pending_rx;          // receivers still undecoded
  std::vector<double> pending_mrc_lin;  // accumulated linear SINR, parallel
};

struct Pkt {
  std::int64_t id = 0;
  int tx = 0;
  double gen_ms = 0.0;
  double deadline_ms = 0.0;
  bool counted = false;
  std::int64_t rec0 = -1;
  std::vector<int> receivers;  // ascending participant ids
  phy::TransportBlock tb;
  std::int64_t ul_job = -1;
  double ul_ready_ms = 0.0;
  double ul_end_ms = kInf;
  double dl_ready_ms = kInf;
};

struct SectorState {
  std::vector<std::int64_t> ul_q;  // UlJob arena indices
  // Downlink queue keyed by arrival TTI, newest first. Values are DlJob or
  // McGroup arena indices depending on the run's mode.
  std::map<std::int64_t, std::vector<std::int64_t>, std::greater<>> dl_q;
  std::int64_t ul_last_served = -1;
  std::int64_t dl_last_served = -1;
  mac::ResourceGrid ul_grid;
  mac::ResourceGrid dl_grid;

  SectorState(int ul_prbs, int dl_prbs)
      : ul_grid(ul_prbs, kRingTtis), dl_grid(dl_prbs, kRingTtis) {}
};

class Engine {
 public:
  Engine(const config::RunConfig& cfg, std::uint64_t seed,
         const ErrorOverride* ov)
      : cfg_(cfg), seed_(seed), ov_(ov) {}

  SimResult run();

 private:
  void setup();
  void precompute_channel();
  void precompute_dl_selection();
  void build_traffic();

  void spawn_packets(std::int64_t t);
  void schedule_uplink(int s, std::int64_t t);
  void schedule_downlink(int s, std::int64_t t);
  void evaluate_uplink(std::int64_t t);
  void evaluate_downlink(std::int64_t t);
  void sweep_expired(int s, std::int64_t t);
  void drain_all();

  void enqueue_downlink(Pkt& p);
  void finalize_ul_failure(const Pkt& p, int attempts);
  void finalize_dl_job(const DlJob& j);
  void finalize_mc_group(const McGroup& g);
  void kill_dl_item(std::int64_t idx);

  DeliveryRecord* slot(const Pkt& p, int rx);
  bool decide_error(double bler, int n_blocks, const char* tag,
                    std::int64_t pkt_id, int rx, int attempt,
                    radio::Direction dir);

  double ul_select_snr_db(int tx, int sector, int prbs) const;
  std::pair<const phy::McsEntry*, int> select_uplink_mcs(
      const phy::TransportBlock& tb, int tx, int sector) const;

  // Optimistic delivery instants used for HARQ gating and expiry pruning.
  double ul_min_delivery_from(double ready_ms, int demand) const;
  double ul_min_delivery_now(std::int64_t t, int remaining) const;
  double dl_min_delivery_from(double ready_ms, int demand) const;
  double dl_min_delivery_now(std::int64_t t, int remaining) const;

  double ul_effective_sinr_db(const UlJob& j, int sector, int tx) const;
  double dl_effective_sinr_db(const std::vector<CellRange>& fp, long cum0,
                              long cum1, int sector, int rx) const;

  const config::RunConfig& cfg_;
  std::uint64_t seed_;
  const ErrorOverride* ov_ = nullptr;

  scenario::Scenario scn_;
  phy::McsTable mcs_table_;
  const phy::McsEntry* mc_mcs_ = nullptr;
  radio::NoiseModel noise_;
  mac::LatencyBudget budget_;
  Mode mode_ = Mode::Multicast;
  bool dl_policy_rr_ = false;
  bool interference_ = true;
  bool jitter_ = false;

  int n_sectors_ = 0;
  int ul_prbs_ = 0;
  int dl_prbs_ = 0;
  std::int64_t queue_window_ttis_ = 8;  // staleness bound, one HARQ round trip
  int rmax_eff_ = 0;  // replica cap after resolving 0 = uncapped
  std::vector<int> ul_off_;             // per-sector first PRB, wraps modulo
  double phi_ul_ = 0.0;
  double phi_dl_ = 0.0;
  double dl_per_prb_dbm_ = 0.0;
  double dl_per_prb_lin_ = 0.0;
  double noise_ul_dbm_ = 0.0;  // per PRB
  double noise_dl_dbm_ = 0.0;
  double noise_ul_lin_ = 0.0;
  double noise_dl_lin_ = 0.0;
  std::int64_t end_tti_ = 0;
  std::int64_t lifetime_ttis_ = 0;
  double warmup_ms_ = 0.0;
  double window_ms_ = 0.0;

  std::vector<std::array<double, 3>> c_db_;
  std::vector<std::array<double, 3>> c_lin_;
  std::vector<const phy::McsEntry*> dl_mcs_;
  std::vector<int> dl_demand_;

  std::vector<Pkt> pkts_;
  std::vector<std::vector<std::int64_t>> spawn_;
  std::vector<SectorState> sectors_;
  std::vector<UlJob> ul_jobs_;
  std::vector<DlJob> dl_jobs_;
  std::vector<McGroup> mc_groups_;
  std::vector<DeliveryRecord> records_;
  std::int64_t packets_counted_ = 0;

  std::vector<std::int64_t> ul_done_;
  std::vector<std::int64_t> dl_done_;
  std::vector<std::int64_t> mc_done_;
  std::vector<mac::PendingTx> scratch_;
  std::vector<mac::PendingTx> scratch_b_;  // multicast repetition tier
};

void Engine::setup() {
  scn_ = scenario::build_scenario(cfg_, seed_);
  mcs_table_ = phy::McsTable::from_config(cfg_.phy);
  noise_ = radio::noise_model(cfg_.radio);
  budget_ = mac::budget_from(cfg_.mac);
  mode_ = cfg_.run.downlink_mode == "unicast" ? Mode::Unicast : Mode::Multicast;
  dl_policy_rr_ = cfg_.mac.dl_policy == "rr";
  interference_ = cfg_.radio.interference;
  jitter_ = cfg_.phy.packet_size_jitter;
  if (mode_ == Mode::Multicast)
    mc_mcs_ = &mcs_table_.by_efficiency(cfg_.run.multicast_mcs_efficiency);

  n_sectors_ = static_cast<int>(scn_.sectors.size());
  ul_prbs_ = config::prbs_for_bandwidth(cfg_.run.bandwidth_ul_mhz,
                                        cfg_.run.allow_custom_bw);
  dl_prbs_ = config::prbs_for_bandwidth(cfg_.run.bandwidth_dl_mhz,
                                        cfg_.run.allow_custom_bw);
  phi_ul_ = frac(budget_.ue_processing_ms + budget_.frame_alignment_ms);
  phi_dl_ = frac(phi_ul_ + budget_.enb_processing_ms + budget_.frame_alignment_ms);

  dl_per_prb_dbm_ =
      scn_.sectors.front().tx_power_dbm - to_db(static_cast<double>(dl_prbs_));
  dl_per_prb_lin_ = lin(dl_per_prb_dbm_);
  noise_ul_dbm_ = radio::noise_power_dbm(noise_, radio::Direction::Uplink, 1);
  noise_dl_dbm_ = radio::noise_power_dbm(noise_, radio::Direction::Downlink, 1);
  noise_ul_lin_ = lin(noise_ul_dbm_);
  noise_dl_lin_ = lin(noise_dl_dbm_);

  warmup_ms_ = cfg_.run.warmup_s * 1000.0;
  window_ms_ = (cfg_.run.warmup_s + cfg_.run.horizon_s) * 1000.0;
  lifetime_ttis_ =
      static_cast<std::int64_t>(std::ceil(budget_.packet_lifetime_ms));
  end_tti_ = static_cast<std::int64_t>(std::ceil(window_ms_)) + lifetime_ttis_ + 10;

  sectors_.clear();
  sectors_.reserve(n_sectors_);
  for (int s = 0; s < n_sectors_; ++s) sectors_.emplace_back(ul_prbs_, dl_prbs_);

  // Uplink: co-sited sectors stagger their first PRB so light-load
  // allocations stay orthogonal; transmitters send at a fixed total power,
  // so without this stand-in for uplink power control two boundary UEs on
  // the same PRBs erase each other regardless of bandwidth. Downlink uses a
  // distributed placement instead: each sector starts its contiguous block at
  // a per-TTI hashed offset, so the co-PRB overlap other sectors inflict is
  // proportional to their actual load rather than pinned to the low indices.
  // The staleness bound flushes head-of-line work the eNB could not serve
  // within one HARQ round trip: deliveries are prompt or never.
  ul_off_.resize(n_sectors_);
  for (int s = 0; s < n_sectors_; ++s)
    ul_off_[s] = static_cast<int>(static_cast<std::int64_t>(s) * ul_prbs_ /
                                  n_sectors_);
  queue_window_ttis_ =
      std::max<std::int64_t>(1, std::llround(budget_.harq_gap_ms)) + 1;
  // Repetition cap. 0 means fill whatever resource stays available; the
  // packet lifetime already bounds how long a window can live, so "uncapped"
  // only needs a ceiling no live window can reach.
  rmax_eff_ = cfg_.run.multicast_max_replicas > 0
                  ? cfg_.run.multicast_max_replicas
                  : static_cast<int>(lifetime_ttis_) + 2;

  precompute_channel();
  precompute_dl_selection();
  build_traffic();
}

void Engine::precompute_channel() {
  const auto& parts = scn_.participants;
  c_db_.assign(parts.size(), {});
  c_lin_.assign(parts.size(), {});
  const scenario::Vec2 site = scn_.sectors.front().site_xy;
  const double dz = scn_.sectors.front().site_z - cfg_.scenario.ue_height_m;
  for (size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    const bool los = radio::is_los(p.pos, site, scn_.geometry);
    const double d2 = scenario::dist2d(p.pos, site);
    const double d3 = std::sqrt(d2 * d2 + dz * dz);
    const double pl = radio::pathloss_db(d3, los, cfg_.radio);
    for (int j = 0; j < n_sectors_; ++j) {
      const double sh = radio::shadowing_db(seed_, p.id, j, los, cfg_.radio);
      const double g = radio::antenna_gain_db(scn_.sectors[j], p.pos);
      c_db_[i][j] = -pl - sh + g;
      c_lin_[i][j] = lin(c_db_[i][j]);
    }
  }
}

void Engine::precompute_dl_selection() {
  const auto& parts = scn_.participants;
  dl_mcs_.assign(parts.size(), nullptr);
  dl_demand_.assign(parts.size(), 0);
  const phy::TransportBlock base_tb =
      phy::build_transport_block(cfg_.phy.packet_size_bytes);
  for (size_t i = 0; i < parts.size(); ++i) {
    const int sp = parts[i].serving_sector;
    const double sig = dl_per_prb_lin_ * c_lin_[i][sp];
    double denom = noise_dl_lin_;
    if (interference_)
      for (int j = 0; j < n_sectors_; ++j)
        if (j != sp) denom += dl_per_prb_lin_ * c_lin_[i][j];
    // Selection assumes every co-channel sector loaded on the PRB, so the
    // chosen MCS keeps its error target under worst-case interference.
    const double sinr = to_db(sig / denom);
    dl_mcs_[i] = &phy::select_mcs_unicast(sinr, mcs_table_);
    dl_demand_[i] =
        phy::prbs_required(base_tb, *dl_mcs_[i], cfg_.phy.data_res_per_prb);
  }
}

void Engine::build_traffic() {
  const double period = cfg_.run.cam_period_ms;
  const bool integral_period =
      std::abs(period - std::round(period)) < 1e-12 && period >= 1.0;
  struct Gen {
    double gen;
    int tx;
  };
  std::vector<Gen> gens;
  for (const auto& p : scn_.participants) {
    if (p.kind != scenario::Kind::Vehicle) continue;
    RngStream gs(seed_, "genoffset", static_cast<std::uint64_t>(p.id));
    double off;
    if (integral_period) {
      // Whole-millisecond offsets keep readiness instants on the grid phase,
      // so the alignment cost is exactly the configured constant.
      off = static_cast<double>(
          gs.uniform_int(static_cast<std::uint64_t>(std::llround(period))));
    } else {
      off = gs.uniform(0.0, period);
    }
    for (double g = off; g < window_ms_ - kEps; g += period)
      gens.push_back({g, p.id});
  }
  std::sort(gens.begin(), gens.end(), [](const Gen& a, const Gen& b) {
    if (a.gen != b.gen) return a.gen < b.gen;
    return a.tx < b.tx;
  });

  pkts_.clear();
  pkts_.reserve(gens.size());
  spawn_.assign(static_cast<size_t>(end_tti_) + 1, {});
  for (size_t i = 0; i < gens.size(); ++i) {
    Pkt p;
    p.id = static_cast<std::int64_t>(i);
    p.tx = gens[i].tx;
    p.gen_ms = gens[i].gen;
    p.deadline_ms = p.gen_ms + budget_.packet_lifetime_ms;
    p.counted = p.gen_ms >= warmup_ms_ - kEps;
    if (p.counted) ++packets_counted_;
    const auto bucket = static_cast<size_t>(std::floor(p.gen_ms));
    pkts_.push_back(std::move(p));
    spawn_[bucket].push_back(static_cast<std::int64_t>(i));
  }
}

DeliveryRecord* Engine::slot(const Pkt& p, int rx) {
  if (p.rec0 < 0) return nullptr;
  const auto it =
      std::lower_bound(p.receivers.begin(), p.receivers.end(), rx);
  return &records_[p.rec0 + (it - p.receivers.begin())];
}

bool Engine::decide_error(double bler, int n_blocks, const char* tag,
                          std::int64_t pkt_id, int rx, int attempt,
                          radio::Direction dir) {
  if (ov_) {
    const auto forced = (*ov_)(pkt_id, rx, attempt, dir);
    if (forced.has_value()) return *forced;
  }
  RngStream rng(seed_, tag, static_cast<std::uint64_t>(pkt_id),
                static_cast<std::uint64_t>(rx + 1),
                static_cast<std::uint64_t>(attempt));
  return phy::draw_transport_error(bler, n_blocks, rng);
}

double Engine::ul_select_snr_db(int tx, int sector, int prbs) const {
  return scn_.participants[tx].tx_power_dbm + c_db_[tx][sector] -
         noise_ul_dbm_ - to_db(static_cast<double>(prbs));
}

std::pair<const phy::McsEntry*, int> Engine::select_uplink_mcs(
    const phy::TransportBlock& tb, int tx, int sector) const {
  // Power is fixed and spread over the allocation, so each candidate MCS is
  // judged at the SNR of its own PRB demand.
  const auto& es = mcs_table_.entries();
  for (auto it = es.rbegin(); it != es.rend(); ++it) {
    const int n = phy::prbs_required(tb, *it, cfg_.phy.data_res_per_prb);
    const double snr = ul_select_snr_db(tx, sector, n);
    if (phy::bler(snr, *it) <= 0.1 * (1.0 + 1e-9)) return {&*it, n};
  }
  const phy::McsEntry& fallback = mcs_table_.by_index(1);
  return {&fallback, phy::prbs_required(tb, fallback, cfg_.phy.data_res_per_prb)};
}

double Engine::ul_min_delivery_from(double ready_ms, int demand) const {
  const std::int64_t e = first_tti(ready_ms, phi_ul_);
  const std::int64_t uend = e + phy::tti_span(demand, ul_prbs_) - 1;
  const double ul_end = static_cast<double>(uend) + budget_.tti_ms + phi_ul_;
  const double dl_ready =
      ul_end + budget_.enb_processing_ms + budget_.frame_alignment_ms;
  const std::int64_t d = first_tti(dl_ready, phi_dl_);
  return static_cast<double>(d) + budget_.tti_ms + phi_dl_ +
         budget_.ue_processing_ms;
}

double Engine::ul_min_delivery_now(std::int64_t t, int remaining) const {
  const std::int64_t uend = t + phy::tti_span(remaining, ul_prbs_) - 1;
  const double ul_end = static_cast<double>(uend) + budget_.tti_ms + phi_ul_;
  const double dl_ready =
      ul_end + budget_.enb_processing_ms + budget_.frame_alignment_ms;
  const std::int64_t d = first_tti(dl_ready, phi_dl_);
  return static_cast<double>(d) + budget_.tti_ms + phi_dl_ +
         budget_.ue_processing_ms;
}

double Engine::dl_min_delivery_from(double ready_ms, int demand) const {
  const std::int64_t e = first_tti(ready_ms, phi_dl_);
  const std::int64_t dend = e + phy::tti_span(demand, dl_prbs_) - 1;
  return static_cast<double>(dend) + budget_.tti_ms + phi_dl_ +
         budget_.ue_processing_ms;
}

double Engine::dl_min_delivery_now(std::int64_t t, int remaining) const {
  const std::int64_t dend = t + phy::tti_span(remaining, dl_prbs_) - 1;
  return static_cast<double>(dend) + budget_.tti_ms + phi_dl_ +
         budget_.ue_processing_ms;
}

void Engine::spawn_packets(std::int64_t t) {
  if (t >= static_cast<std::int64_t>(spawn_.size())) return;
  for (const std::int64_t pi : spawn_[t]) {
    Pkt& p = pkts_[pi];
    p.receivers = scenario::receiver_set(scn_.participants[p.tx],
                                         scn_.participants,
                                         cfg_.scenario.radius_m);
    if (p.counted) {
      p.rec0 = static_cast<std::int64_t>(records_.size());
      for (const int rx : p.receivers) {
        DeliveryRecord r;
        r.packet_id = p.id;
        r.tx_id = p.tx;
        r.rx_id = rx;
        r.gen_ms = p.gen_ms;
        r.mode = mode_;
        records_.push_back(r);
      }
    }

    int bytes = cfg_.phy.packet_size_bytes;
    if (jitter_) {
      RngStream js(seed_, "size", static_cast<std::uint64_t>(p.id));
      bytes = std::max(
          1, static_cast<int>(std::llround(bytes * js.uniform(0.8, 1.2))));
    }
    p.tb = phy::build_transport_block(bytes);
    p.ul_ready_ms =
        p.gen_ms + budget_.ue_processing_ms + budget_.frame_alignment_ms;

    const int sector = scn_.participants[p.tx].serving_sector;
    const auto [mcs, demand] = select_uplink_mcs(p.tb, p.tx, sector);
    UlJob j;
    j.pkt = pi;
    j.elig = first_tti(p.ul_ready_ms, phi_ul_);
    j.demand = demand;
    j.mcs = mcs;
    p.ul_job = static_cast<std::int64_t>(ul_jobs_.size());
    ul_jobs_.push_back(std::move(j));
    sectors_[sector].ul_q.push_back(p.ul_job);
  }
}

void Engine::finalize_ul_failure(const Pkt& p, int attempts) {
  if (p.rec0 < 0) return;
  for (size_t i = 0; i < p.receivers.size(); ++i)
    records_[p.rec0 + i].ul_attempts = attempts;
}

void Engine::finalize_dl_job(const DlJob& j) {
  const Pkt& p = pkts_[j.pkt];
  if (DeliveryRecord* r = slot(p, j.rx)) r->dl_attempts = j.attempts;
}

void Engine::finalize_mc_group(const McGroup& g) {
  const Pkt& p = pkts_[g.pkt];
  for (const int rx : g.pending_rx)
    if (DeliveryRecord* r = slot(p, rx)) r->dl_attempts = g.replicas_done;
}

void Engine::kill_dl_item(std::int64_t idx) {
  if (mode_ == Mode::Unicast) {
    DlJob& j = dl_jobs_[idx];
    finalize_dl_job(j);
    j.dead = true;
  } else {
    McGroup& g = mc_groups_[idx];
    finalize_mc_group(g);
    g.dead = true;
  }
}

void Engine::schedule_uplink(int s, std::int64_t t) {
  SectorState& st = sectors_[s];
  // Prune finished jobs and jobs that can no longer meet their deadline.
  std::erase_if(st.ul_q, [&](std::int64_t ji) {
    UlJob& j = ul_jobs_[ji];
    if (j.dead) return true;
    if (j.elig > t) return false;
    const Pkt& p = pkts_[j.pkt];
    if (ul_min_delivery_now(t, j.demand - j.got) > p.deadline_ms + kEps) {
      finalize_ul_failure(p, j.attempts);
      j.dead = true;
      return true;
    }
    return false;
  });

  scratch_.clear();
  for (const std::int64_t ji : st.ul_q) {
    const UlJob& j = ul_jobs_[ji];
    if (j.elig > t) continue;
    scratch_.push_back({pkts_[j.pkt].id, j.demand - j.got, 0, 0});
  }
  if (scratch_.empty()) return;

  const auto grants =
      mac::schedule_uplink_rr(scratch_, ul_prbs_, st.ul_last_served);

  // A transmitter's power splits over everything it sends this TTI.
  std::vector<std::pair<int, int>> tx_prbs;  // (participant, total)
  for (const auto& g : grants) {
    const int tx = pkts_[g.id].tx;
    auto it = std::find_if(tx_prbs.begin(), tx_prbs.end(),
                           [&](const auto& e) { return e.first == tx; });
    if (it == tx_prbs.end())
      tx_prbs.emplace_back(tx, g.prbs);
    else
      it->second += g.prbs;
  }

  int cursor = ul_off_[s];
  for (const auto& g : grants) {
    UlJob& j = ul_jobs_[pkts_[g.id].ul_job];
    if (j.got == 0) ++j.attempts;
    j.fp.push_back({t, cursor % ul_prbs_, g.prbs});
    j.got += g.prbs;

    const int tx = pkts_[g.id].tx;
    const int total = std::find_if(tx_prbs.begin(), tx_prbs.end(),
                                   [&](const auto& e) { return e.first == tx; })
                          ->second;
    const double per_prb = scn_.participants[tx].tx_power_dbm -
                           to_db(static_cast<double>(total));
    for (int p = 0; p < g.prbs; ++p)
      st.ul_grid.at(t, (cursor + p) % ul_prbs_) = {tx, g.id, per_prb};
    cursor += g.prbs;
    if (j.got == j.demand) ul_done_.push_back(pkts_[g.id].ul_job);
  }
}

void Engine::schedule_downlink(int s, std::int64_t t) {
  SectorState& st = sectors_[s];

  scratch_.clear();
  scratch_b_.clear();
  std::vector<std::int64_t> empty_keys;
  int cum_first = 0;
  int cum_rep = 0;
  for (auto& [arrival, items] : st.dl_q) {
    if (arrival > t) continue;
    if (mode_ == Mode::Unicast && cum_first >= dl_prbs_) break;
    std::erase_if(items, [&](std::int64_t idx) {
      if (mode_ == Mode::Unicast) {
        DlJob& j = dl_jobs_[idx];
        if (j.dead) return true;
        if (j.elig > t) return false;
        const Pkt& p = pkts_[j.pkt];
        if (t > j.stale_tti ||
            dl_min_delivery_now(t, j.demand - j.got) > p.deadline_ms + kEps) {
          kill_dl_item(idx);
          return true;
        }
        scratch_.push_back({idx, j.demand - j.got, 0, j.arrival});
        cum_first += j.demand - j.got;
      } else {
        McGroup& g = mc_groups_[idx];
        if (g.dead) return true;
        const Pkt& p = pkts_[g.pkt];
        // Replicas go out back-to-back: a started group that a newer packet
        // squeezed out of a TTI is over, whatever it managed to send.
        if (g.got > 0 && g.last_grant < t - 1) {
          kill_dl_item(idx);
          return true;
        }
        if (g.got == 0 && t > g.start_by) {
          kill_dl_item(idx);
          return true;
        }
        const int in_replica = g.got % g.replica_prbs;
        const int rest = g.replica_prbs - in_replica;
        if (dl_min_delivery_now(t, rest) > p.deadline_ms + kEps) {
          kill_dl_item(idx);
          return true;
        }
        // Request at most one replica per TTI: the rest of the one in
        // progress, or the next repetition once a replica boundary is hit.
        const int req =
            std::min(in_replica > 0 ? rest : g.replica_prbs,
                     g.window_prbs - g.got);
        if (req <= 0) return false;
        if (g.got < g.replica_prbs) {
          if (cum_first < dl_prbs_) {
            scratch_.push_back({idx, req, 0, g.arrival});
            cum_first += req;
          }
        } else if (cum_first + cum_rep < dl_prbs_) {
          scratch_b_.push_back({idx, req, 0, g.arrival});
          cum_rep += req;
        }
      }
      return false;
    });
    if (items.empty()) empty_keys.push_back(arrival);
  }
  for (const std::int64_t k : empty_keys) st.dl_q.erase(k);
  if (scratch_.empty() && scratch_b_.empty()) return;

  // First transmissions take the band before any repetition: repeats only
  // ever fill resource nothing newer has a first claim on.
  auto run_sched = [&](std::vector<mac::PendingTx>& items, int capacity) {
    if (items.empty() || capacity <= 0) return std::vector<mac::Grant>{};
    return dl_policy_rr_
               ? mac::schedule_uplink_rr(items, capacity, st.dl_last_served)
               : mac::schedule_downlink_newest_first(items, capacity,
                                                     st.dl_last_served);
  };
  const auto grants = run_sched(scratch_, dl_prbs_);
  int used = 0;
  for (const auto& g : grants) used += g.prbs;
  const auto grants_b = run_sched(scratch_b_, dl_prbs_ - used);

  RngStream place(seed_, "dl_place", static_cast<std::uint64_t>(s),
                  static_cast<std::uint64_t>(t));
  int cursor = static_cast<int>(
      place.uniform_int(static_cast<std::uint64_t>(dl_prbs_)));
  auto apply = [&](const mac::Grant& g) {
    std::int64_t pkt_id;
    if (mode_ == Mode::Unicast) {
      DlJob& j = dl_jobs_[g.id];
      if (j.got == 0) ++j.attempts;
      j.fp.push_back({t, cursor % dl_prbs_, g.prbs});
      j.got += g.prbs;
      pkt_id = pkts_[j.pkt].id;
      if (j.got == j.demand) dl_done_.push_back(g.id);
    } else {
      McGroup& mg = mc_groups_[g.id];
      mg.last_grant = t;
      const int before = mg.got;
      mg.fp.push_back({t, cursor % dl_prbs_, g.prbs});
      mg.got += g.prbs;
      pkt_id = pkts_[mg.pkt].id;
      if (mg.got / mg.replica_prbs > before / mg.replica_prbs)
        mc_done_.push_back(g.id);
    }
    for (int p = 0; p < g.prbs; ++p)
      st.dl_grid.at(t, (cursor + p) % dl_prbs_) = {-2, pkt_id, dl_per_prb_dbm_};
    cursor += g.prbs;
  };
  for (const auto& g : grants) apply(g);
  for (const auto& g : grants_b) apply(g);
}

void Engine::enqueue_downlink(Pkt& p) {
  const std::int64_t arrival = first_tti(p.dl_ready_ms, phi_dl_);
  const std::int64_t pi = &p - pkts_.data();
  if (mode_ == Mode::Unicast) {
    for (const int rx : p.receivers) {
      DlJob j;
      j.pkt = pi;
      j.rx = rx;
      const int sector = scn_.participants[rx].serving_sector;
      j.sector = sector;
      j.arrival = arrival;
      j.elig = arrival;
      j.mcs = dl_mcs_[rx];
      j.demand = jitter_ ? phy::prbs_required(p.tb, *j.mcs,
                                              cfg_.phy.data_res_per_prb)
                         : dl_demand_[rx];
      j.stale_tti = j.elig + queue_window_ttis_ +
                    phy::tti_span(j.demand, dl_prbs_) - 1;
      const auto idx = static_cast<std::int64_t>(dl_jobs_.size());
      dl_jobs_.push_back(std::move(j));
      sectors_[sector].dl_q[arrival].push_back(idx);
    }
  } else {
    const int replica =
        phy::prbs_required(p.tb, *mc_mcs_, cfg_.phy.data_res_per_prb);
    for (int s = 0; s < n_sectors_; ++s) {
      McGroup g;
      for (const int rx : p.receivers)
        if (scn_.participants[rx].serving_sector == s) g.pending_rx.push_back(rx);
      if (g.pending_rx.empty()) continue;
      g.pkt = pi;
      g.sector = s;
      g.arrival = arrival;
      g.start_by = arrival + queue_window_ttis_;
      g.replica_prbs = replica;
      g.window_prbs = replica * rmax_eff_;
      g.pending_mrc_lin.assign(g.pending_rx.size(), 0.0);
      const auto idx = static_cast<std::int64_t>(mc_groups_.size());
      mc_groups_.push_back(std::move(g));
      sectors_[s].dl_q[arrival].push_back(idx);
    }
  }
}

void Engine::evaluate_uplink(std::int64_t t) {
  for (const std::int64_t ji : ul_done_) {
    UlJob& j = ul_jobs_[ji];
    Pkt& p = pkts_[j.pkt];
    const int sector = scn_.participants[p.tx].serving_sector;
    const double sinr = ul_effective_sinr_db(j, sector, p.tx);
    const double bler = phy::bler(sinr, *j.mcs);
    const bool err = decide_error(
        bler, static_cast<int>(p.tb.code_blocks.size()), "ul_err", p.id, -1,
        j.attempts, radio::Direction::Uplink);
    const double end_ms = static_cast<double>(t) + budget_.tti_ms + phi_ul_;

    if (!err) {
      p.ul_end_ms = end_ms;
      p.dl_ready_ms =
          end_ms + budget_.enb_processing_ms + budget_.frame_alignment_ms;
      if (p.rec0 >= 0)
        for (size_t i = 0; i < p.receivers.size(); ++i) {
          records_[p.rec0 + i].ul_ms = end_ms - p.gen_ms;
          records_[p.rec0 + i].ul_attempts = j.attempts;
        }
      enqueue_downlink(p);
      j.dead = true;
      continue;
    }

    const double retx_ready = end_ms + budget_.harq_gap_ms;
    const double min_tx = ul_min_delivery_from(retx_ready, j.demand) - retx_ready;
    const auto h = mac::harq_next_attempt(j.attempts, budget_.max_retx, end_ms,
                                          min_tx, p.gen_ms, budget_);
    if (h.exhausted) {
      finalize_ul_failure(p, j.attempts);
      j.dead = true;
    } else {
      j.elig = first_tti(h.ready_ms, phi_ul_);
      j.got = 0;
      j.fp.clear();
    }
  }
  ul_done_.clear();
}

void Engine::evaluate_downlink(std::int64_t t) {
  const double end_ms = static_cast<double>(t) + budget_.tti_ms + phi_dl_;

  for (const std::int64_t di : dl_done_) {
    DlJob& j = dl_jobs_[di];
    Pkt& p = pkts_[j.pkt];
    const double sinr =
        dl_effective_sinr_db(j.fp, 0, j.demand, j.sector, j.rx);
    const double bler = phy::bler(sinr, *j.mcs);
    const bool err = decide_error(
        bler, static_cast<int>(p.tb.code_blocks.size()), "dl_err", p.id, j.rx,
        j.attempts, radio::Direction::Downlink);

    if (!err) {
      mac::LatencyTrace tr;
      tr.gen_ms = p.gen_ms;
      tr.ul_ready_ms = p.ul_ready_ms;
      tr.ul_end_ms = p.ul_end_ms;
      tr.dl_ready_ms = p.dl_ready_ms;
      tr.dl_end_ms = end_ms;
      tr.same_enb = true;
      tr.delivered = true;
      const double e2e = mac::e2e_latency(tr, budget_);
      if (DeliveryRecord* r = slot(p, j.rx)) {
        r->e2e_ms = e2e;
        r->dl_ms = e2e - (p.ul_end_ms - p.gen_ms);
        r->dl_attempts = j.attempts;
      }
      j.dead = true;
      continue;
    }

    const double retx_ready = end_ms + budget_.harq_gap_ms;
    const double min_tx = dl_min_delivery_from(retx_ready, j.demand) - retx_ready;
    const auto h = mac::harq_next_attempt(j.attempts, budget_.max_retx, end_ms,
                                          min_tx, p.gen_ms, budget_);
    if (h.exhausted) {
      finalize_dl_job(j);
      j.dead = true;
    } else {
      j.elig = first_tti(h.ready_ms, phi_dl_);
      j.stale_tti = j.elig + queue_window_ttis_ +
                    phy::tti_span(j.demand, dl_prbs_) - 1;
      j.got = 0;
      j.fp.clear();
    }
  }
  dl_done_.clear();

  for (const std::int64_t gi : mc_done_) {
    McGroup& g = mc_groups_[gi];
    Pkt& p = pkts_[g.pkt];
    const int target = g.got / g.replica_prbs;

    for (int k = g.replicas_done + 1; k <= target; ++k) {
      const long c0 = static_cast<long>(k - 1) * g.replica_prbs;
      const long c1 = static_cast<long>(k) * g.replica_prbs;
      std::vector<int> still;
      std::vector<double> still_lin;
      for (size_t i = 0; i < g.pending_rx.size(); ++i) {
        const int rx = g.pending_rx[i];
        const double replica_sinr =
            dl_effective_sinr_db(g.fp, c0, c1, g.sector, rx);
        const double mrc_lin = g.pending_mrc_lin[i] + lin(replica_sinr);
        const double bler = phy::bler(to_db(mrc_lin), *mc_mcs_);
        const bool err = decide_error(
            bler, static_cast<int>(p.tb.code_blocks.size()), "mc_err", p.id,
            rx, k, radio::Direction::Downlink);
        if (!err) {
          mac::LatencyTrace tr;
          tr.gen_ms = p.gen_ms;
          tr.ul_ready_ms = p.ul_ready_ms;
          tr.ul_end_ms = p.ul_end_ms;
          tr.dl_ready_ms = p.dl_ready_ms;
          tr.dl_end_ms = end_ms;
          tr.same_enb = true;
          tr.delivered = true;
          const double e2e = mac::e2e_latency(tr, budget_);
          if (DeliveryRecord* r = slot(p, rx)) {
            r->e2e_ms = e2e;
            r->dl_ms = e2e - (p.ul_end_ms - p.gen_ms);
            r->dl_attempts = k;
          }
        } else {
          still.push_back(rx);
          still_lin.push_back(mrc_lin);
        }
      }
      g.pending_rx = std::move(still);
      g.pending_mrc_lin = std::move(still_lin);
    }
    g.replicas_done = target;

    // Blind repetition has no feedback, so a window never closes early on
    // success; it ends at the replica cap here, or in the scheduler when a
    // newer packet squeezes it out of a TTI.
    if (g.replicas_done >= rmax_eff_) {
      finalize_mc_group(g);
      g.dead = true;
    }
  }
  mc_done_.clear();
}

void Engine::sweep_expired(int s, std::int64_t t) {
  auto& q = sectors_[s].dl_q;
  const std::int64_t cutoff = t - lifetime_ttis_ - 1;
  while (!q.empty()) {
    const auto last = std::prev(q.end());  // oldest arrival (keys descend)
    if (last->first > cutoff) break;
    for (const std::int64_t idx : last->second) {
      const bool dead = mode_ == Mode::Unicast ? dl_jobs_[idx].dead
                                               : mc_groups_[idx].dead;
      if (!dead) kill_dl_item(idx);
    }
    q.erase(last);
  }
}

void Engine::drain_all() {
  for (auto& st : sectors_) {
    for (const std::int64_t ji : st.ul_q) {
      UlJob& j = ul_jobs_[ji];
      if (j.dead) continue;
      finalize_ul_failure(pkts_[j.pkt], j.attempts);
      j.dead = true;
    }
    st.ul_q.clear();
    for (auto& [key, items] : st.dl_q)
      for (const std::int64_t idx : items) {
        const bool dead = mode_ == Mode::Unicast ? dl_jobs_[idx].dead
                                                 : mc_groups_[idx].dead;
        if (!dead) kill_dl_item(idx);
      }
    st.dl_q.clear();
  }
}

double Engine::ul_effective_sinr_db(const UlJob& j, int sector, int tx) const {
  double sig = 0.0;
  double den = 0.0;
  for (const auto& r : j.fp) {
    const double per_prb =
        lin(sectors_[sector].ul_grid.at(r.tti, r.lo).per_prb_dbm);
    sig += r.n * per_prb * c_lin_[tx][sector];
    for (int k = 0; k < r.n; ++k) {
      const int p = (r.lo + k) % ul_prbs_;
      double d = noise_ul_lin_;
      if (interference_)
        for (int s2 = 0; s2 < n_sectors_; ++s2) {
          if (s2 == sector) continue;
          const mac::Owner& o = sectors_[s2].ul_grid.at(r.tti, p);
          if (o.tx_participant >= 0)
            d += lin(o.per_prb_dbm) * c_lin_[o.tx_participant][sector];
        }
      den += d;
    }
  }
  return to_db(sig / den);
}

double Engine::dl_effective_sinr_db(const std::vector<CellRange>& fp,
                                    long cum0, long cum1, int sector,
                                    int rx) const {
  double sig = 0.0;
  double den = 0.0;
  long cum = 0;
  for (const auto& r : fp) {
    const long lo = std::max(cum, cum0);
    const long hi = std::min(cum + r.n, cum1);
    if (lo < hi) {
      const int plo = r.lo + static_cast<int>(lo - cum);
      const int n = static_cast<int>(hi - lo);
      sig += n * dl_per_prb_lin_ * c_lin_[rx][sector];
      for (int k = 0; k < n; ++k) {
        const int p = (plo + k) % dl_prbs_;
        double d = noise_dl_lin_;
        if (interference_)
          for (int s2 = 0; s2 < n_sectors_; ++s2) {
            if (s2 == sector) continue;
            const mac::Owner& o = sectors_[s2].dl_grid.at(r.tti, p);
            if (o.tx_participant != -1)
              d += lin(o.per_prb_dbm) * c_lin_[rx][s2];
          }
        den += d;
      }
    }
    cum += r.n;
    if (cum >= cum1) break;
  }
  return to_db(sig / den);
}

SimResult Engine::run() {
  setup();
  for (std::int64_t t = 0; t <= end_tti_; ++t) {
    if (cfg_.scenario.mobility && t > 0) {
      RngStream mob(seed_, "mobility", static_cast<std::uint64_t>(t));
      scenario::step_mobility(scn_.participants, 1e-3, scn_.geometry, mob);
      precompute_channel();
      precompute_dl_selection();
    }
    for (auto& st : sectors_) {
      st.ul_grid.advance_to(t);
      st.dl_grid.advance_to(t);
    }
    spawn_packets(t);
    for (int s = 0; s < n_sectors_; ++s) schedule_uplink(s, t);
    for (int s = 0; s < n_sectors_; ++s) schedule_downlink(s, t);
    evaluate_uplink(t);
    evaluate_downlink(t);
    for (int s = 0; s < n_sectors_; ++s) sweep_expired(s, t);
  }
  drain_all();

  std::sort(records_.begin(), records_.end(),
            [](const DeliveryRecord& a, const DeliveryRecord& b) {
              if (a.packet_id != b.packet_id) return a.packet_id < b.packet_id;
              return a.rx_id < b.rx_id;
            });
  SimResult out;
  out.records = std::move(records_);
  out.packets_counted = packets_counted_;
  out.packets_simulated = static_cast<std::int64_t>(pkts_.size());
  return out;
}

}  // namespace

SimResult run_simulation(const config::RunConfig& cfg, std::uint64_t seed,
                         const ErrorOverride* error_override) {
  config::validate(cfg);
  Engine e(cfg, seed, error_override);
  return e.run();
}

}  // namespace v2xsim::pipelines
