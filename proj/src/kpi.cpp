#include "v2xsim/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace v2xsim::kpi {

namespace {

constexpr double kEps = 1e-9;

std::string fmt_ms(double v) {
  if (std::isinf(v)) return "INF";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

nlohmann::json config_echo(const config::RunConfig& c) {
  nlohmann::json j;
  j["scenario"] = {{"grid_rows", c.scenario.grid_rows},
                   {"grid_cols", c.scenario.grid_cols},
                   {"block_m", c.scenario.block_m},
                   {"street_m", c.scenario.street_m},
                   {"park_row", c.scenario.park_row},
                   {"park_col", c.scenario.park_col},
                   {"bs_row", c.scenario.bs_row},
                   {"bs_col", c.scenario.bs_col},
                   {"building_height_m", c.scenario.building_height_m},
                   {"bs_height_above_roof_m", c.scenario.bs_height_above_roof_m},
                   {"ue_height_m", c.scenario.ue_height_m},
                   {"density_per_km2", c.scenario.density_per_km2},
                   {"vehicle_fraction", c.scenario.vehicle_fraction},
                   {"radius_m", c.scenario.radius_m},
                   {"mobility", c.scenario.mobility},
                   {"max_speed_vehicle_kmh", c.scenario.max_speed_vehicle_kmh},
                   {"max_speed_vru_kmh", c.scenario.max_speed_vru_kmh}};
  j["radio"] = {{"fc_ghz", c.radio.fc_ghz},
                {"pl_los_a", c.radio.pl_los_a},
                {"pl_los_b", c.radio.pl_los_b},
                {"pl_los_c", c.radio.pl_los_c},
                {"pl_nlos_a", c.radio.pl_nlos_a},
                {"pl_nlos_b", c.radio.pl_nlos_b},
                {"pl_nlos_c", c.radio.pl_nlos_c},
                {"shadow_sigma_los_db", c.radio.shadow_sigma_los_db},
                {"shadow_sigma_nlos_db", c.radio.shadow_sigma_nlos_db},
                {"antenna_beamwidth_deg", c.radio.antenna_beamwidth_deg},
                {"antenna_max_attenuation_db", c.radio.antenna_max_attenuation_db},
                {"antenna_boresight_gain_dbi", c.radio.antenna_boresight_gain_dbi},
                {"sector_power_dbm_per_10mhz", c.radio.sector_power_dbm_per_10mhz},
                {"vehicle_tx_power_dbm", c.radio.vehicle_tx_power_dbm},
                {"noise_figure_enb_db", c.radio.noise_figure_enb_db},
                {"noise_figure_ue_db", c.radio.noise_figure_ue_db},
                {"thermal_noise_dbm_hz", c.radio.thermal_noise_dbm_hz},
                {"interference", c.radio.interference}};
  j["phy"] = {{"data_res_per_prb", c.phy.data_res_per_prb},
              {"packet_size_bytes", c.phy.packet_size_bytes},
              {"packet_size_jitter", c.phy.packet_size_jitter},
              {"bler_slope_db", c.phy.bler_slope_db}};
  auto& ov = j["phy"]["mcs_overrides"] = nlohmann::json::array();
  for (const auto& o : c.phy.mcs_overrides)
    ov.push_back({{"index", o.index},
                  {"efficiency", o.efficiency},
                  {"threshold_db", o.threshold_db},
                  {"slope_db", o.slope_db}});
  j["mac"] = {{"max_retx", c.mac.max_retx},
              {"packet_lifetime_ms", c.mac.packet_lifetime_ms},
              {"harq_gap_ms", c.mac.harq_gap_ms},
              {"ue_processing_ms", c.mac.ue_processing_ms},
              {"frame_alignment_ms", c.mac.frame_alignment_ms},
              {"enb_processing_ms", c.mac.enb_processing_ms},
              {"inter_enb_ms", c.mac.inter_enb_ms},
              {"dl_policy", c.mac.dl_policy}};
  j["run"] = {{"bandwidth_ul_mhz", c.run.bandwidth_ul_mhz},
              {"bandwidth_dl_mhz", c.run.bandwidth_dl_mhz},
              {"allow_custom_bw", c.run.allow_custom_bw},
              {"downlink_mode", c.run.downlink_mode},
              {"multicast_mcs_efficiency", c.run.multicast_mcs_efficiency},
              {"multicast_max_replicas", c.run.multicast_max_replicas},
              {"horizon_s", c.run.horizon_s},
              {"warmup_s", c.run.warmup_s},
              {"cam_period_ms", c.run.cam_period_ms},
              {"seed", c.run.seed},
              {"seeds", c.run.seeds}};
  j["output"] = {{"dir", c.output.dir},
                 {"cdf_resolution_ms", c.output.cdf_resolution_ms},
                 {"dump_scenario", c.output.dump_scenario}};
  return j;
}

}  // namespace

KpiSummary summarize(const std::vector<pipelines::DeliveryRecord>& records) {
  KpiSummary s;
  s.n_expected = static_cast<std::int64_t>(records.size());
  for (const auto& r : records)
    if (std::isfinite(r.e2e_ms)) {
      ++s.n_success;
      s.latency_sum_ms += r.e2e_ms;
    }
  s.rate_defined = s.n_expected > 0;
  s.mean_defined = s.n_success > 0;
  if (s.rate_defined)
    s.success_rate = static_cast<double>(s.n_success) /
                     static_cast<double>(s.n_expected);
  if (s.mean_defined)
    s.mean_latency_ms = s.latency_sum_ms / static_cast<double>(s.n_success);
  return s;
}

KpiSummary merge(const KpiSummary& a, const KpiSummary& b) {
  KpiSummary s;
  s.n_expected = a.n_expected + b.n_expected;
  s.n_success = a.n_success + b.n_success;
  s.latency_sum_ms = a.latency_sum_ms + b.latency_sum_ms;
  s.rate_defined = s.n_expected > 0;
  s.mean_defined = s.n_success > 0;
  if (s.rate_defined)
    s.success_rate = static_cast<double>(s.n_success) /
                     static_cast<double>(s.n_expected);
  if (s.mean_defined)
    s.mean_latency_ms = s.latency_sum_ms / static_cast<double>(s.n_success);
  return s;
}

std::vector<CdfPoint> cdf_points(
    const std::vector<pipelines::DeliveryRecord>& records,
    double resolution_ms) {
  if (!(resolution_ms > 0.0))
    throw std::invalid_argument("cdf resolution must be positive");
  if (records.empty()) return {};

  std::vector<double> finite;
  finite.reserve(records.size());
  for (const auto& r : records)
    if (std::isfinite(r.e2e_ms)) finite.push_back(r.e2e_ms);
  const auto n = static_cast<double>(records.size());
  if (finite.empty()) return {{0.0, 0.0}};
  std::sort(finite.begin(), finite.end());

  const auto last = static_cast<std::int64_t>(
      std::ceil(finite.back() / resolution_ms - kEps));
  std::vector<CdfPoint> out;
  out.reserve(static_cast<size_t>(last) + 1);
  size_t covered = 0;
  for (std::int64_t k = 0; k <= last; ++k) {
    const double x = static_cast<double>(k) * resolution_ms;
    while (covered < finite.size() && finite[covered] <= x + kEps) ++covered;
    out.push_back({x, static_cast<double>(covered) / n});
  }
  return out;
}

void write_records_csv(const std::string& path,
                       const std::vector<pipelines::DeliveryRecord>& records) {
  auto f = open_out(path);
  std::string buf =
      "packet_id,tx_id,rx_id,gen_ms,e2e_ms,ul_ms,dl_ms,ul_attempts,"
      "dl_attempts,mode\n";
  buf.reserve(records.size() * 64 + buf.size());
  char head[96];
  for (const auto& r : records) {
    std::snprintf(head, sizeof head, "%lld,%d,%d,",
                  static_cast<long long>(r.packet_id), r.tx_id, r.rx_id);
    buf += head;
    buf += fmt_ms(r.gen_ms);
    buf += ',';
    buf += fmt_ms(r.e2e_ms);
    buf += ',';
    buf += fmt_ms(r.ul_ms);
    buf += ',';
    buf += fmt_ms(r.dl_ms);
    buf += ',';
    std::snprintf(head, sizeof head, "%d,%d,", r.ul_attempts, r.dl_attempts);
    buf += head;
    buf += r.mode == pipelines::Mode::Unicast ? "unicast" : "multicast";
    buf += '\n';
  }
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_summary_json(const std::string& path, const KpiSummary& s,
                        const config::RunConfig& cfg, std::uint64_t seed) {
  nlohmann::json j;
  j["seed"] = seed;
  j["kpi"]["n_expected"] = s.n_expected;
  j["kpi"]["n_success"] = s.n_success;
  j["kpi"]["latency_sum_ms"] = s.latency_sum_ms;
  if (s.rate_defined)
    j["kpi"]["success_rate"] = s.success_rate;
  else
    j["kpi"]["success_rate"] = nullptr;
  if (s.mean_defined)
    j["kpi"]["mean_latency_ms"] = s.mean_latency_ms;
  else
    j["kpi"]["mean_latency_ms"] = nullptr;
  j["config"] = config_echo(cfg);
  auto f = open_out(path);
  const std::string text = j.dump(2) + "\n";
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_cdf_csv(const std::string& path,
                   const std::vector<CdfPoint>& points) {
  auto f = open_out(path);
  std::string buf = "latency_ms,fraction\n";
  char row[80];
  for (const auto& p : points) {
    std::snprintf(row, sizeof row, "%.3f,%.9f\n", p.latency_ms, p.fraction);
    buf += row;
  }
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace v2xsim::kpi
