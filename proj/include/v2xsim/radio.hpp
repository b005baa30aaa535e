#pragma once

#include <span>

#include "v2xsim/config.hpp"
#include "v2xsim/scenario.hpp"

namespace v2xsim::radio {

constexpr double kPrbHz = 180e3;

enum class Direction { Uplink, Downlink };

// True iff the 2D segment a-b crosses no building footprint interior.
// A footprint that contains an endpoint does not obstruct (the eNodeB sits on
// a rooftop; its own building never blocks its links). Symmetric in a,b.
bool is_los(scenario::Vec2 a, scenario::Vec2 b, const scenario::Geometry& g);

// Urban micro pathloss, a*log10(d) + b + c*log10(fc). Distance floored at 1 m.
double pathloss_db(double distance_m, bool los, const config::RadioConfig& cfg);

// Horizontal three-sector pattern: boresight gain minus min(12*(d/bw)^2, Am),
// with the azimuth delta wrapped to [-180, 180].
double antenna_gain_db(const scenario::Sector& s, scenario::Vec2 target);

// Log-normal shadowing draw, frozen per (seed, participant, sector) so that
// re-evaluating a link within one drop always yields the same value.
double shadowing_db(uint64_t seed, int participant_id, int sector_id, bool los,
                    const config::RadioConfig& cfg);

struct NoiseModel {
  double thermal_dbm_hz = -174.0;
  double noise_figure_enb_db = 5.0;
  double noise_figure_ue_db = 9.0;
};

NoiseModel noise_model(const config::RadioConfig& cfg);

// Thermal noise over n PRBs plus the receiver-side noise figure
// (eNB for uplink, UE for downlink).
double noise_power_dbm(const NoiseModel& n, Direction dir, int prbs);

struct LinkState {
  int tx_id = -1;
  int rx_id = -1;
  double distance_m = 0.0;
  bool los = true;
  double pathloss_db = 0.0;
  double shadowing_db = 0.0;    // positive = extra loss
  double antenna_gain_db = 0.0; // both ends combined
  Direction direction = Direction::Uplink;
};

// SINR of a transmission: tx_power is the total power radiated into the
// allocated PRBs; noise spans the same PRBs; interferer powers are already
// received powers (dBm) and add linearly.
double link_sinr_db(const LinkState& link, double tx_power_dbm,
                    int allocated_prbs,
                    std::span<const double> interferer_powers_dbm,
                    const NoiseModel& noise);

}  // namespace v2xsim::radio
