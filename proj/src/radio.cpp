#include "v2xsim/radio.hpp"

#include <algorithm>
#include <cmath>

namespace v2xsim::radio {

namespace {

// Liang-Barsky clip of segment a+t*(b-a), t in [0,1], against one rectangle.
// Counts only interior crossings of positive length, so segments sliding
// along a wall or grazing a corner stay line-of-sight.
bool segment_crosses_interior(scenario::Vec2 a, scenario::Vec2 b,
                              const scenario::Rect& r) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;

  // x slab
  if (dx == 0.0) {
    if (a.x <= r.x0 || a.x >= r.x1) return false;
  } else {
    double ta = (r.x0 - a.x) / dx;
    double tb = (r.x1 - a.x) / dx;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  // y slab
  if (dy == 0.0) {
    if (a.y <= r.y0 || a.y >= r.y1) return false;
  } else {
    double ta = (r.y0 - a.y) / dy;
    double tb = (r.y1 - a.y) / dy;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 - t0 > 1e-12;
}

}  // namespace

bool is_los(scenario::Vec2 a, scenario::Vec2 b, const scenario::Geometry& g) {
  for (const auto& bld : g.buildings) {
    if (bld.contains_interior(a) || bld.contains_interior(b)) continue;
    if (segment_crosses_interior(a, b, bld)) return false;
  }
  return true;
}

double pathloss_db(double distance_m, bool los, const config::RadioConfig& cfg) {
  const double d = std::max(distance_m, 1.0);
  const double lf = std::log10(cfg.fc_ghz);
  if (los) return cfg.pl_los_a * std::log10(d) + cfg.pl_los_b + cfg.pl_los_c * lf;
  return cfg.pl_nlos_a * std::log10(d) + cfg.pl_nlos_b + cfg.pl_nlos_c * lf;
}

double antenna_gain_db(const scenario::Sector& s, scenario::Vec2 target) {
  const double az =
      std::atan2(target.y - s.site_xy.y, target.x - s.site_xy.x) * 180.0 / M_PI;
  double d = az - s.boresight_azimuth_deg;
  while (d > 180.0) d -= 360.0;
  while (d < -180.0) d += 360.0;
  const double att =
      std::min(12.0 * (d / s.antenna.beamwidth_deg) * (d / s.antenna.beamwidth_deg),
               s.antenna.max_attenuation_db);
  return s.antenna.boresight_gain_dbi - att;
}

double shadowing_db(uint64_t seed, int participant_id, int sector_id, bool los,
                    const config::RadioConfig& cfg) {
  const double sigma =
      los ? cfg.shadow_sigma_los_db : cfg.shadow_sigma_nlos_db;
  if (sigma <= 0.0) return 0.0;
  RngStream s(seed, "shadowing", static_cast<uint64_t>(participant_id),
              static_cast<uint64_t>(sector_id));
  return s.normal(sigma);
}

NoiseModel noise_model(const config::RadioConfig& cfg) {
  return {cfg.thermal_noise_dbm_hz, cfg.noise_figure_enb_db,
          cfg.noise_figure_ue_db};
}

double noise_power_dbm(const NoiseModel& n, Direction dir, int prbs) {
  const double nf = (dir == Direction::Uplink) ? n.noise_figure_enb_db
                                               : n.noise_figure_ue_db;
  return n.thermal_dbm_hz + 10.0 * std::log10(kPrbHz * prbs) + nf;
}

double link_sinr_db(const LinkState& link, double tx_power_dbm,
                    int allocated_prbs,
                    std::span<const double> interferer_powers_dbm,
                    const NoiseModel& noise) {
  const double s_dbm = tx_power_dbm - link.pathloss_db - link.shadowing_db +
                       link.antenna_gain_db;
  const double n_dbm = noise_power_dbm(noise, link.direction, allocated_prbs);
  if (interferer_powers_dbm.empty()) return s_dbm - n_dbm;  // exact SNR
  double ni_lin = std::pow(10.0, n_dbm / 10.0);
  for (double p : interferer_powers_dbm) ni_lin += std::pow(10.0, p / 10.0);
  return s_dbm - 10.0 * std::log10(ni_lin);
}

}  // namespace v2xsim::radio
