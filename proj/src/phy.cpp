#include "v2xsim/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace v2xsim::phy {

namespace {

// 90% standard-normal quantile: sqrt(2)*erfcinv(0.2). The waterfall is placed
// this many slopes below the 10%-BLER calibration point.
constexpr double kZ90 = 1.2815515655446004;

constexpr double kShannonAttenuation = 0.6;
constexpr double kTargetBler = 0.10;
constexpr int kCodeBlockLimit = 6144;
constexpr int kCrcBits = 24;

}  // namespace

double shannon_switch_snr_db(double efficiency) {
  return 10.0 * std::log10(std::pow(2.0, efficiency / kShannonAttenuation) - 1.0);
}

McsTable McsTable::standard(double slope_db) {
  McsTable t;
  t.entries_.reserve(config::kStandardEfficiencies.size());
  int idx = 1;
  for (double eff : config::kStandardEfficiencies) {
    McsEntry e;
    e.index = idx++;
    e.efficiency = eff;
    e.curve.slope_db = slope_db;
    e.curve.threshold_db = shannon_switch_snr_db(eff) - kZ90 * slope_db;
    t.entries_.push_back(e);
  }
  return t;
}

McsTable McsTable::from_config(const config::PhyConfig& cfg) {
  McsTable t = standard(cfg.bler_slope_db);
  for (const auto& o : cfg.mcs_overrides) {
    if (o.index < 1 || o.index > t.size())
      throw ConfigError(ConfigError::Kind::OutOfRange,
                        "mcs override index must be 1..15");
    McsEntry& e = t.entries_[o.index - 1];
    e.efficiency = o.efficiency;
    e.curve.threshold_db = o.threshold_db;
    e.curve.slope_db = o.slope_db;
  }
  for (size_t i = 1; i < t.entries_.size(); ++i)
    if (t.entries_[i].efficiency <= t.entries_[i - 1].efficiency)
      throw ConfigError(ConfigError::Kind::OutOfRange,
                        "mcs efficiencies must be strictly increasing");
  return t;
}

const McsEntry& McsTable::by_index(int index) const {
  if (index < 1 || index > size())
    throw std::out_of_range("mcs index out of range");
  return entries_[index - 1];
}

const McsEntry& McsTable::by_efficiency(double efficiency) const {
  for (const auto& e : entries_)
    if (std::abs(e.efficiency - efficiency) <= 1e-6) return e;
  throw ConfigError(ConfigError::Kind::OutOfRange,
                    "efficiency does not match any MCS table entry");
}

double bler(double sinr_db, const McsEntry& mcs) {
  const double x = (sinr_db - mcs.curve.threshold_db) /
                   (M_SQRT2 * mcs.curve.slope_db);
  return 0.5 * std::erfc(x);
}

const McsEntry& select_mcs_unicast(double sinr_db, const McsTable& table) {
  const auto& es = table.entries();
  const McsEntry* best = nullptr;
  for (const auto& e : es) {
    // Tiny slack keeps "SINR exactly at the calibration point" inside target.
    if (bler(sinr_db, e) <= kTargetBler * (1.0 + 1e-9)) {
      if (!best || e.efficiency > best->efficiency) best = &e;
    }
  }
  return best ? *best : es.front();
}

TransportBlock build_transport_block(int payload_bytes) {
  if (payload_bytes < 0) throw std::invalid_argument("negative payload");
  TransportBlock tb;
  tb.payload_bits = payload_bytes * 8;
  const int with_tb_crc = tb.payload_bits + kCrcBits;
  if (with_tb_crc <= kCodeBlockLimit) {
    tb.crc_bits = kCrcBits;
    tb.code_blocks.push_back(with_tb_crc);
    return tb;
  }
  const int n_blocks =
      (with_tb_crc + kCodeBlockLimit - kCrcBits - 1) / (kCodeBlockLimit - kCrcBits);
  const int total = with_tb_crc + n_blocks * kCrcBits;
  tb.crc_bits = kCrcBits + n_blocks * kCrcBits;
  const int base = total / n_blocks;
  const int rem = total % n_blocks;
  for (int i = 0; i < n_blocks; ++i)
    tb.code_blocks.push_back(base + (i < rem ? 1 : 0));
  return tb;
}

int prbs_required(const TransportBlock& tb, const McsEntry& mcs,
                  int data_res_per_prb) {
  const double bits_per_prb = mcs.efficiency * data_res_per_prb;
  const double total = tb.total_bits();
  if (total <= 0.0) return 1;
  int n = static_cast<int>(std::ceil(total / bits_per_prb));
  // Snap against rounding at exact multiples.
  while (n > 1 && (n - 1) * bits_per_prb >= total) --n;
  while (n * bits_per_prb < total) ++n;
  return n;
}

int tti_span(int prbs, int prbs_per_tti) {
  if (prbs_per_tti < 1) throw std::invalid_argument("empty grid");
  return (prbs + prbs_per_tti - 1) / prbs_per_tti;
}

bool draw_block_error(double bler_value, RngStream& rng) {
  return rng.uniform() < bler_value;
}

bool draw_transport_error(double bler_value, int n_code_blocks, RngStream& rng) {
  for (int i = 0; i < n_code_blocks; ++i)
    if (draw_block_error(bler_value, rng)) return true;
  return false;
}

double mrc_combine(std::span<const double> sinr_db) {
  if (sinr_db.empty()) throw std::invalid_argument("mrc of zero branches");
  double lin = 0.0;
  for (double s : sinr_db) lin += std::pow(10.0, s / 10.0);
  return 10.0 * std::log10(lin);
}

}  // namespace v2xsim::phy
