#include "v2xsim/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "v2xsim/pipelines.hpp"
#include "v2xsim/scenario.hpp"

namespace v2xsim::sweep {

namespace {

std::string fmt_value(double v) {
  char buf[32];
  if (v == std::floor(v) && std::abs(v) < 1e15)
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
  else
    std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_scenario_csv(const std::string& path,
                        const config::RunConfig& cfg, std::uint64_t seed) {
  const auto scn = scenario::build_scenario(cfg, seed);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::string buf =
      "id,kind,x_m,y_m,vx_mps,vy_mps,tx_power_dbm,serving_sector\n";
  char row[160];
  for (const auto& p : scn.participants) {
    std::snprintf(row, sizeof row, "%d,%s,%.3f,%.3f,%.3f,%.3f,%.2f,%d\n",
                  p.id, p.kind == scenario::Kind::Vehicle ? "vehicle" : "vru",
                  p.pos.x, p.pos.y, p.vel_mps.x, p.vel_mps.y, p.tx_power_dbm,
                  p.serving_sector);
    buf += row;
  }
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

kpi::KpiSummary run_single(const config::RunConfig& cfg, std::uint64_t seed,
                           const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto result = pipelines::run_simulation(cfg, seed);
  const auto summary = kpi::summarize(result.records);
  const auto cdf = kpi::cdf_points(result.records, cfg.output.cdf_resolution_ms);
  const auto base = std::filesystem::path(out_dir);
  kpi::write_records_csv((base / "records.csv").string(), result.records);
  kpi::write_summary_json((base / "summary.json").string(), summary, cfg, seed);
  kpi::write_cdf_csv((base / "cdf.csv").string(), cdf);
  if (cfg.output.dump_scenario)
    write_scenario_csv((base / "scenario.csv").string(), cfg, seed);
  return summary;
}

std::string point_id(const std::string& axis_name, double value,
                     const std::string& mode) {
  std::string id;
  if (!axis_name.empty()) id = axis_name + "_" + fmt_value(value);
  if (!mode.empty()) id += (id.empty() ? "" : "_") + mode;
  if (id.empty()) id = "base";
  return id;
}

config::RunConfig apply_point(const config::RunConfig& base,
                              const std::string& axis_name, double value,
                              const std::string& mode) {
  config::RunConfig cfg = base;
  if (axis_name == "bandwidth") {
    cfg.run.bandwidth_ul_mhz = value;
    cfg.run.bandwidth_dl_mhz = value;
  } else if (axis_name == "mcs") {
    cfg.run.multicast_mcs_efficiency = value;
  } else if (!axis_name.empty()) {
    throw ConfigError(ConfigError::Kind::BadValue,
                      "unknown sweep axis: " + axis_name);
  }
  if (!mode.empty()) cfg.run.downlink_mode = mode;
  return cfg;
}

SweepResult run_sweep(const config::RunConfig& base, const SweepSpec& spec) {
  if (spec.seeds.empty())
    throw ConfigError(ConfigError::Kind::BadValue, "empty seed list");

  struct Point {
    std::string id;
    double value = 0.0;
    std::string mode;
  };
  std::vector<Point> points;
  const std::vector<double> values =
      spec.axis_values.empty() ? std::vector<double>{0.0} : spec.axis_values;
  const std::vector<std::string> modes =
      spec.modes.empty() ? std::vector<std::string>{""} : spec.modes;
  for (const double v : values)
    for (const auto& m : modes)
      points.push_back({point_id(spec.axis_name, v, m), v, m});

  SweepResult result;
  result.rows.resize(points.size() * spec.seeds.size());
  for (size_t pi = 0; pi < points.size(); ++pi)
    for (size_t si = 0; si < spec.seeds.size(); ++si) {
      auto& row = result.rows[pi * spec.seeds.size() + si];
      row.point = points[pi].id;
      row.seed = spec.seeds[si];
    }

  const int jobs =
      spec.jobs > 0 ? spec.jobs
                    : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= result.rows.size()) return;
      auto& row = result.rows[i];
      const Point& pt = points[i / spec.seeds.size()];
      try {
        const auto cfg =
            apply_point(base, spec.axis_name, pt.value, pt.mode);
        config::validate(cfg);
        const auto dir = std::filesystem::path(spec.out_dir) / row.point /
                         ("seed_" + std::to_string(row.seed));
        row.summary = run_single(cfg, row.seed, dir.string());
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers =
      static_cast<int>(std::min<size_t>(jobs, result.rows.size()));
  pool.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const auto& row : result.rows)
    if (!row.ok) result.all_ok = false;

  std::filesystem::create_directories(spec.out_dir);
  const auto sum_path =
      std::filesystem::path(spec.out_dir) / "sweep_summary.csv";
  std::ofstream f(sum_path, std::ios::binary);
  if (!f)
    throw std::runtime_error("cannot open for writing: " + sum_path.string());
  std::string buf = "point,seed,success_rate,mean_latency_ms\n";
  char num[64];
  for (const auto& row : result.rows) {
    buf += row.point;
    buf += ',';
    buf += std::to_string(row.seed);
    buf += ',';
    if (row.ok && row.summary.rate_defined) {
      std::snprintf(num, sizeof num, "%.6f", row.summary.success_rate);
      buf += num;
    } else {
      buf += "NA";
    }
    buf += ',';
    if (row.ok && row.summary.mean_defined) {
      std::snprintf(num, sizeof num, "%.3f", row.summary.mean_latency_ms);
      buf += num;
    } else {
      buf += "NA";
    }
    buf += '\n';
  }
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  return result;
}

}  // namespace v2xsim::sweep
