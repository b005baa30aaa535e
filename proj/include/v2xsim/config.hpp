#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "v2xsim/errors.hpp"

namespace v2xsim::config {

// Standard 4-bit CQI spectral efficiencies (bit/s/Hz), index 1..15.
inline constexpr std::array<double, 15> kStandardEfficiencies = {
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
    1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
    3.3223, 3.9023, 4.5234, 5.1152, 5.5547};

struct ScenarioConfig {
  // Madrid-grid layout: rows x cols square blocks separated by streets,
  // one block slot left open as a park. No street ring around the outside.
  int grid_rows = 4;
  int grid_cols = 4;
  double block_m = 120.0;
  double street_m = 21.0;
  int park_row = 2;
  int park_col = 2;
  int bs_row = 1;   // block whose roof carries the three-sector site
  int bs_col = 1;
  double building_height_m = 24.0;
  double bs_height_above_roof_m = 3.0;
  double ue_height_m = 1.5;
  double density_per_km2 = 1000.0;  // participants per km^2 of grid extent
  double vehicle_fraction = 0.5;    // probability a participant is a vehicle
  double radius_m = 200.0;          // target receiver set radius
  bool mobility = false;            // static snapshot by default
  double max_speed_vehicle_kmh = 50.0;
  double max_speed_vru_kmh = 5.0;

  bool operator==(const ScenarioConfig&) const = default;
};

struct RadioConfig {
  double fc_ghz = 0.8;
  // Urban micro pathloss coefficients: a*log10(d_m) + b + c*log10(fc_GHz).
  double pl_los_a = 22.0;
  double pl_los_b = 28.0;
  double pl_los_c = 20.0;
  double pl_nlos_a = 36.7;
  double pl_nlos_b = 22.7;
  double pl_nlos_c = 26.0;
  double shadow_sigma_los_db = 4.0;
  double shadow_sigma_nlos_db = 6.0;
  // Three-sector horizontal pattern: G - min(12*(dtheta/bw)^2, Am).
  double antenna_beamwidth_deg = 65.0;
  double antenna_max_attenuation_db = 30.0;
  double antenna_boresight_gain_dbi = 14.0;
  double sector_power_dbm_per_10mhz = 46.0;  // scaled linearly with bandwidth
  double vehicle_tx_power_dbm = 24.0;
  double noise_figure_enb_db = 5.0;
  double noise_figure_ue_db = 9.0;
  double thermal_noise_dbm_hz = -174.0;
  bool interference = true;  // inter-sector co-PRB interference on/off

  bool operator==(const RadioConfig&) const = default;
};

struct McsOverride {
  int index = 0;            // 1..15
  double efficiency = 0.0;  // bit/s/Hz
  double threshold_db = 0.0;
  double slope_db = 1.0;

  bool operator==(const McsOverride&) const = default;
};

struct PhyConfig {
  int data_res_per_prb = 120;  // data REs per PRB per TTI
  int packet_size_bytes = 212;
  bool packet_size_jitter = false;  // uniform +-20% when set
  double bler_slope_db = 1.0;       // default s_m for every MCS
  std::vector<McsOverride> mcs_overrides;

  bool operator==(const PhyConfig&) const = default;
};

struct MacConfig {
  int max_retx = 3;
  double packet_lifetime_ms = 100.0;
  double harq_gap_ms = 7.0;  // end of failed attempt -> start of retransmission
  double ue_processing_ms = 1.0;
  double frame_alignment_ms = 0.5;
  double enb_processing_ms = 1.0;
  double inter_enb_ms = 1.0;  // only charged when tx and rx attach to different sites
  std::string dl_policy = "newest_first_then_rr";  // or "rr"

  bool operator==(const MacConfig&) const = default;
};

struct RunSection {
  double bandwidth_ul_mhz = 10.0;
  double bandwidth_dl_mhz = 10.0;
  bool allow_custom_bw = false;
  std::string downlink_mode = "multicast";  // "unicast" | "multicast"
  double multicast_mcs_efficiency = 0.877;
  int multicast_max_replicas = 0;  // repetition cap per packet; 0 = fill
                                   // whatever resource stays available
  double horizon_s = 2.0;
  double warmup_s = 0.2;  // discarded from KPIs
  double cam_period_ms = 100.0;
  uint64_t seed = 1;
  std::vector<uint64_t> seeds = {1};  // sweep default

  bool operator==(const RunSection&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  double cdf_resolution_ms = 0.1;
  bool dump_scenario = false;

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  ScenarioConfig scenario;
  RadioConfig radio;
  PhyConfig phy;
  MacConfig mac;
  RunSection run;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

// PRBs for a carrier bandwidth. The four standard bandwidths map to fixed
// counts; anything else is rejected unless allow_custom is set, in which case
// the count is floor(bw/0.18) rounded down to a multiple of 12.
int prbs_for_bandwidth(double mhz, bool allow_custom);

// Parse + validate. Empty text yields the defaults above.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Canonical config document carrying every default; parses back to RunConfig{}.
std::string print_default_config();

// Cross-field validation (also called by the parsers).
void validate(const RunConfig& cfg);

}  // namespace v2xsim::config
