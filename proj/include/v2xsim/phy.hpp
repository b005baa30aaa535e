#pragma once

#include <span>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/rng.hpp"

namespace v2xsim::phy {

// SNR at which the attenuated Shannon rate 0.6*log2(1+snr) equals the given
// spectral efficiency; used to place each MCS's 10%-BLER point.
double shannon_switch_snr_db(double efficiency);

struct BlerCurve {
  double threshold_db = 0.0;  // t_m: 50% point of the erfc waterfall
  double slope_db = 1.0;      // s_m
};

struct McsEntry {
  int index = 0;
  double efficiency = 0.0;  // bit/s/Hz
  BlerCurve curve;
};

class McsTable {
 public:
  // 15 entries with the standard CQI efficiencies; t_m is calibrated so
  // BLER = 0.1 exactly at the Shannon switch point of each efficiency.
  static McsTable standard(double slope_db = 1.0);
  // standard(slope) with per-index overrides applied. Throws ConfigError if
  // the resulting efficiencies are not strictly increasing.
  static McsTable from_config(const config::PhyConfig& cfg);

  const McsEntry& by_index(int index) const;            // 1-based
  const McsEntry& by_efficiency(double efficiency) const;  // |diff| <= 1e-6
  const std::vector<McsEntry>& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.size()); }

 private:
  std::vector<McsEntry> entries_;
};

// Gaussian-waterfall block error rate at the given SINR.
double bler(double sinr_db, const McsEntry& mcs);

// Highest-efficiency MCS whose BLER at sinr_db stays within the 10% target;
// falls back to MCS 1 when nothing qualifies.
const McsEntry& select_mcs_unicast(double sinr_db, const McsTable& table);

struct TransportBlock {
  int payload_bits = 0;
  int crc_bits = 0;                // transport CRC + per-code-block CRCs
  std::vector<int> code_blocks;    // coded block sizes, each <= 6144
  int total_bits() const {
    int t = 0;
    for (int b : code_blocks) t += b;
    return t;
  }
};

// 24-bit transport CRC; blocks above 6144 bits are segmented into
// ceil(bits/6120) pieces, each carrying its own 24-bit CRC.
TransportBlock build_transport_block(int payload_bytes);

// PRBs needed to carry the block at the MCS's efficiency with
// data_res_per_prb resource elements per PRB per TTI.
int prbs_required(const TransportBlock& tb, const McsEntry& mcs,
                  int data_res_per_prb = 120);

// Whole TTIs needed for prbs PRBs on a grid offering prbs_per_tti each TTI.
int tti_span(int prbs, int prbs_per_tti);

// One Bernoulli error draw (true = block in error).
bool draw_block_error(double bler_value, RngStream& rng);

// Transport block fails if any of its code blocks fails.
bool draw_transport_error(double bler_value, int n_code_blocks, RngStream& rng);

// Maximum-ratio combining of repeated receptions: SINRs add linearly.
double mrc_combine(std::span<const double> sinr_db);

}  // namespace v2xsim::phy
