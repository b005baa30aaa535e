#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/rng.hpp"

namespace v2xsim::scenario {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
inline double dist2d(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  // Strict interior: points exactly on a wall count as street.
  bool contains_interior(Vec2 p) const {
    return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1;
  }
  bool contains_closed(Vec2 p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
};

// Madrid-grid street map: rows x cols square blocks separated by streets, one
// slot left open as a park. The outer boundary is building wall (no ring road),
// so extent = cols*block + (cols-1)*street per axis.
struct Geometry {
  Rect extent;
  std::vector<Rect> buildings;  // rows*cols - 1 slots
  Rect park;                    // the open slot (walkable, never blocks LOS)
  int rows = 0, cols = 0;
  double block_m = 0.0, street_m = 0.0;

  bool in_building(Vec2 p) const {
    for (const auto& b : buildings)
      if (b.contains_interior(p)) return true;
    return false;
  }
  bool on_street(Vec2 p) const {
    return extent.contains_closed(p) && !in_building(p);
  }
  double street_area() const;  // extent minus building footprints (exact)

  // Street band queries used for travel-direction assignment. A vertical
  // street band is the x-interval between two block columns.
  bool in_vertical_band(double x) const;
  bool in_horizontal_band(double y) const;
  // Intersection cell id for points inside both bands, -1 otherwise.
  int intersection_cell(Vec2 p) const;
};

Geometry build_geometry(const config::ScenarioConfig& cfg);

enum class Kind { Vehicle, Vru };

struct Participant {
  int id = 0;
  Kind kind = Kind::Vehicle;
  Vec2 pos;
  Vec2 vel_mps;
  double tx_power_dbm = 0.0;  // meaningful for vehicles (the transmitters)
  int serving_sector = -1;
};

struct AntennaPattern {
  double beamwidth_deg = 65.0;
  double max_attenuation_db = 30.0;
  double boresight_gain_dbi = 14.0;
};

struct Sector {
  int id = 0;
  Vec2 site_xy;
  double site_z = 0.0;
  double boresight_azimuth_deg = 0.0;  // degrees CCW from +x
  double tx_power_dbm = 0.0;           // total over the configured carrier
  AntennaPattern antenna;
};

// Three co-sited sectors on the roof of the configured block, boresights
// 120 degrees apart, each radiating the per-10MHz power scaled to the
// downlink bandwidth.
std::vector<Sector> make_sectors(const config::RunConfig& cfg, const Geometry& g);

// Uniform drop over the street region (rejection sampling), count =
// round(density * extent area). Velocities point along a street axis with
// speed uniform in [0, vmax] for the participant's kind.
std::vector<Participant> drop_participants(const Geometry& g,
                                           const config::RunConfig& cfg,
                                           uint64_t seed);

// Strongest-downlink attachment; pathloss is sector-independent on a single
// site, so the antenna pattern decides. Ties break to the lowest sector id.
int attach_to_sector(const Participant& p, const std::vector<Sector>& sectors,
                     const Geometry& g, const config::RadioConfig& radio);

// Ids of all other participants within radius_m (2D) of the transmitter.
std::vector<int> receiver_set(const Participant& tx,
                              const std::vector<Participant>& all,
                              double radius_m);

// Advance positions by dt seconds. Participants never enter buildings or
// leave the extent; on a blocked move or on entering a new intersection the
// travel direction is re-drawn uniformly among the permitted street axes.
void step_mobility(std::vector<Participant>& parts, double dt_s,
                   const Geometry& g, RngStream& rng);

struct Scenario {
  Geometry geometry;
  std::vector<Sector> sectors;
  std::vector<Participant> participants;
};

// Geometry + sectors + dropped, attached participants.
Scenario build_scenario(const config::RunConfig& cfg, uint64_t seed);

}  // namespace v2xsim::scenario
