#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/kpi.hpp"

namespace v2xsim::sweep {

// One axis of variation crossed with an optional mode list and a seed list.
struct SweepSpec {
  std::string axis_name;            // "bandwidth" | "mcs" | "" (no axis)
  std::vector<double> axis_values;  // MHz or bit/s/Hz depending on axis
  std::vector<std::string> modes;   // empty = keep the config's downlink mode
  std::vector<std::uint64_t> seeds;
  int jobs = 0;  // worker threads; 0 = hardware concurrency
  std::string out_dir;
};

struct SweepRow {
  std::string point;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  kpi::KpiSummary summary;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered by point, then seed
  bool all_ok = true;
};

// Simulate one (config, seed) and write records.csv, summary.json, cdf.csv
// (and scenario.csv when the config asks for a dump) into out_dir.
kpi::KpiSummary run_single(const config::RunConfig& cfg, std::uint64_t seed,
                           const std::string& out_dir);

// The point id for an axis value and mode, e.g. "bandwidth_10_unicast".
std::string point_id(const std::string& axis_name, double value,
                     const std::string& mode);

// Per-point config: axis value and mode applied to the base.
config::RunConfig apply_point(const config::RunConfig& base,
                              const std::string& axis_name, double value,
                              const std::string& mode);

// Cartesian product of points and seeds, run on a small thread pool. Each
// point writes under out_dir/<point>/seed_<n>/; a cross-point
// sweep_summary.csv lands in out_dir. Failed points are recorded in the
// result (and in the summary file as NA) and do not stop the sweep.
SweepResult run_sweep(const config::RunConfig& base, const SweepSpec& spec);

}  // namespace v2xsim::sweep
