#include "v2xsim/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "v2xsim/radio.hpp"

namespace v2xsim::scenario {

namespace {

constexpr double kKmhToMps = 1.0 / 3.6;
constexpr int kMaxDropTries = 100000;

double pitch(const Geometry& g) { return g.block_m + g.street_m; }

// Index of the street band the coordinate lies in, or -1. Band k sits between
// block k and block k+1: (k*pitch + block, (k+1)*pitch).
int band_index(double v, double block, double p, int slots) {
  if (v <= block) return -1;
  const int k = static_cast<int>(std::floor(v / p));
  if (k >= slots - 1) return -1;
  const double frac = v - k * p;
  return (frac > block && frac < p) ? k : -1;
}

std::vector<Vec2> permitted_axes(Vec2 pos, const Geometry& g) {
  const bool vert = g.in_vertical_band(pos.x);
  const bool horiz = g.in_horizontal_band(pos.y);
  if (vert && !horiz) return {{0, 1}, {0, -1}};
  if (horiz && !vert) return {{1, 0}, {-1, 0}};
  // Intersection, park interior, or degenerate single-block grids.
  return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
}

}  // namespace

double Geometry::street_area() const {
  double a = extent.area();
  for (const auto& b : buildings) a -= b.area();  // footprints never overlap
  return a;
}

bool Geometry::in_vertical_band(double x) const {
  return band_index(x, block_m, pitch(*this), cols) >= 0;
}

bool Geometry::in_horizontal_band(double y) const {
  return band_index(y, block_m, pitch(*this), rows) >= 0;
}

int Geometry::intersection_cell(Vec2 p) const {
  const int bx = band_index(p.x, block_m, pitch(*this), cols);
  const int by = band_index(p.y, block_m, pitch(*this), rows);
  if (bx < 0 || by < 0) return -1;
  return by * (cols - 1) + bx;
}

Geometry build_geometry(const config::ScenarioConfig& cfg) {
  if (cfg.grid_rows < 1 || cfg.grid_cols < 1 || cfg.block_m <= 0 ||
      cfg.street_m <= 0)
    throw ConfigError(ConfigError::Kind::OutOfRange,
                      "grid dimensions must be positive");
  if (cfg.park_row < 0 || cfg.park_row >= cfg.grid_rows || cfg.park_col < 0 ||
      cfg.park_col >= cfg.grid_cols)
    throw ConfigError(ConfigError::Kind::OutOfRange, "park slot outside grid");

  Geometry g;
  g.rows = cfg.grid_rows;
  g.cols = cfg.grid_cols;
  g.block_m = cfg.block_m;
  g.street_m = cfg.street_m;
  const double p = cfg.block_m + cfg.street_m;
  g.extent = {0.0, 0.0, cfg.grid_cols * cfg.block_m + (cfg.grid_cols - 1) * cfg.street_m,
              cfg.grid_rows * cfg.block_m + (cfg.grid_rows - 1) * cfg.street_m};
  for (int r = 0; r < cfg.grid_rows; ++r) {
    for (int c = 0; c < cfg.grid_cols; ++c) {
      Rect slot{c * p, r * p, c * p + cfg.block_m, r * p + cfg.block_m};
      if (r == cfg.park_row && c == cfg.park_col)
        g.park = slot;
      else
        g.buildings.push_back(slot);
    }
  }
  return g;
}

std::vector<Sector> make_sectors(const config::RunConfig& cfg, const Geometry& g) {
  const auto& s = cfg.scenario;
  if (s.bs_row < 0 || s.bs_row >= g.rows || s.bs_col < 0 || s.bs_col >= g.cols)
    throw ConfigError(ConfigError::Kind::OutOfRange, "site block outside grid");
  if (s.bs_row == s.park_row && s.bs_col == s.park_col)
    throw ConfigError(ConfigError::Kind::OutOfRange,
                      "site block must be a building");
  const double p = g.block_m + g.street_m;
  const Vec2 site{s.bs_col * p + g.block_m / 2.0, s.bs_row * p + g.block_m / 2.0};
  const double z = s.building_height_m + s.bs_height_above_roof_m;
  // Sector power scales linearly (in watts) with the downlink bandwidth.
  const double power = cfg.radio.sector_power_dbm_per_10mhz +
                       10.0 * std::log10(cfg.run.bandwidth_dl_mhz / 10.0);
  AntennaPattern pat{cfg.radio.antenna_beamwidth_deg,
                     cfg.radio.antenna_max_attenuation_db,
                     cfg.radio.antenna_boresight_gain_dbi};
  std::vector<Sector> out;
  for (int i = 0; i < 3; ++i)
    out.push_back({i, site, z, i * 120.0, power, pat});
  return out;
}

std::vector<Participant> drop_participants(const Geometry& g,
                                           const config::RunConfig& cfg,
                                           uint64_t seed) {
  const auto& sc = cfg.scenario;
  const double area_km2 = g.extent.area() / 1e6;
  const int n = static_cast<int>(std::llround(sc.density_per_km2 * area_km2));
  std::vector<Participant> out;
  if (n <= 0) return out;
  if (g.street_area() <= 1e-9)
    throw ScenarioError("no street area to place participants on");

  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    RngStream pos_rng(seed, "drop", i);
    Vec2 pos;
    int tries = 0;
    do {
      if (++tries > kMaxDropTries)
        throw ScenarioError("street sampling failed to converge");
      pos.x = pos_rng.uniform(g.extent.x0, g.extent.x1);
      pos.y = pos_rng.uniform(g.extent.y0, g.extent.y1);
    } while (g.in_building(pos));

    Participant p;
    p.id = i;
    p.pos = pos;
    p.kind = RngStream(seed, "kind", i).uniform() < sc.vehicle_fraction
                 ? Kind::Vehicle
                 : Kind::Vru;
    const double vmax = (p.kind == Kind::Vehicle ? sc.max_speed_vehicle_kmh
                                                 : sc.max_speed_vru_kmh) *
                        kKmhToMps;
    RngStream vel_rng(seed, "velocity", i);
    const auto axes = permitted_axes(pos, g);
    const Vec2 dir = axes[vel_rng.uniform_int(axes.size())];
    p.vel_mps = dir * vel_rng.uniform(0.0, vmax);
    p.tx_power_dbm =
        p.kind == Kind::Vehicle ? cfg.radio.vehicle_tx_power_dbm : 0.0;
    out.push_back(p);
  }
  return out;
}

int attach_to_sector(const Participant& p, const std::vector<Sector>& sectors,
                     const Geometry& g, const config::RadioConfig& radio_cfg) {
  int best = -1;
  double best_dbm = 0.0;
  for (const auto& s : sectors) {
    const double dz = s.site_z;  // participant height cancels in the argmax
    const double d = std::hypot(dist2d(s.site_xy, p.pos), dz);
    const bool los = radio::is_los(s.site_xy, p.pos, g);
    const double rx = s.tx_power_dbm - radio::pathloss_db(d, los, radio_cfg) +
                      radio::antenna_gain_db(s, p.pos);
    if (best < 0 || rx > best_dbm + 1e-12) {
      best = s.id;
      best_dbm = rx;
    }
  }
  return best;
}

std::vector<int> receiver_set(const Participant& tx,
                              const std::vector<Participant>& all,
                              double radius_m) {
  std::vector<int> out;
  for (const auto& p : all) {
    if (p.id == tx.id) continue;
    if (dist2d(tx.pos, p.pos) <= radius_m) out.push_back(p.id);
  }
  return out;
}

void step_mobility(std::vector<Participant>& parts, double dt_s,
                   const Geometry& g, RngStream& rng) {
  if (dt_s <= 0.0) return;
  for (auto& p : parts) {
    const double speed = std::hypot(p.vel_mps.x, p.vel_mps.y);
    if (speed <= 0.0) continue;
    const Vec2 next = p.pos + p.vel_mps * dt_s;
    if (!g.on_street(next)) {
      // Street end or building wall: hold position, re-draw direction among
      // axes whose first step stays on the street.
      const double probe = std::min(speed * dt_s, 0.5);
      std::vector<Vec2> ok;
      for (const auto& a : permitted_axes(p.pos, g))
        if (g.on_street(p.pos + a * probe)) ok.push_back(a);
      if (!ok.empty()) p.vel_mps = ok[rng.uniform_int(ok.size())] * speed;
      continue;
    }
    const int cell_before = g.intersection_cell(p.pos);
    const int cell_after = g.intersection_cell(next);
    p.pos = next;
    if (cell_after >= 0 && cell_after != cell_before) {
      // Entered a new intersection: pick a fresh direction.
      const auto axes = permitted_axes(next, g);
      p.vel_mps = axes[rng.uniform_int(axes.size())] * speed;
    }
  }
}

Scenario build_scenario(const config::RunConfig& cfg, uint64_t seed) {
  Scenario sc;
  sc.geometry = build_geometry(cfg.scenario);
  sc.sectors = make_sectors(cfg, sc.geometry);
  sc.participants = drop_participants(sc.geometry, cfg, seed);
  for (auto& p : sc.participants)
    p.serving_sector = attach_to_sector(p, sc.sectors, sc.geometry, cfg.radio);
  return sc;
}

}  // namespace v2xsim::scenario
