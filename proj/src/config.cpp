#include "v2xsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace v2xsim::config {

namespace {

struct Value {
  enum class Kind { Bool, Number, String, Array };
  Kind kind = Kind::Number;
  bool b = false;
  double num = 0.0;
  std::string str;
  std::vector<double> arr;
  int line = 0;
};

using LineMap = std::map<std::string, int>;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strip a trailing comment. '#' inside a quoted string does not count.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

bool parse_number(const std::string& s, double* out) {
  const char* c = s.c_str();
  char* end = nullptr;
  double v = std::strtod(c, &end);
  if (end == c || *end != '\0') return false;
  *out = v;
  return true;
}

Value parse_value(const std::string& raw, int line) {
  Value v;
  v.line = line;
  const std::string s = trim(raw);
  if (s.empty())
    throw ConfigError(ConfigError::Kind::Syntax, "missing value", line);
  if (s == "true" || s == "false") {
    v.kind = Value::Kind::Bool;
    v.b = (s == "true");
    return v;
  }
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw ConfigError(ConfigError::Kind::Syntax, "unterminated string", line);
    v.kind = Value::Kind::String;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']')
      throw ConfigError(ConfigError::Kind::Syntax, "unterminated array", line);
    v.kind = Value::Kind::Array;
    std::string body = trim(s.substr(1, s.size() - 2));
    if (!body.empty()) {
      std::stringstream ss(body);
      std::string item;
      while (std::getline(ss, item, ',')) {
        double d = 0.0;
        if (!parse_number(trim(item), &d))
          throw ConfigError(ConfigError::Kind::Syntax,
                            "array element is not a number: '" + trim(item) + "'",
                            line);
        v.arr.push_back(d);
      }
    }
    return v;
  }
  if (!parse_number(s, &v.num))
    throw ConfigError(ConfigError::Kind::Syntax, "cannot parse value '" + s + "'",
                      line);
  v.kind = Value::Kind::Number;
  return v;
}

double as_number(const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::Number)
    throw ConfigError(ConfigError::Kind::BadValue, key + " expects a number",
                      v.line);
  return v.num;
}

int as_int(const std::string& key, const Value& v) {
  double d = as_number(key, v);
  if (d != std::floor(d) || std::abs(d) > 2147483647.0)
    throw ConfigError(ConfigError::Kind::BadValue, key + " expects an integer",
                      v.line);
  return static_cast<int>(d);
}

bool as_bool(const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::Bool)
    throw ConfigError(ConfigError::Kind::BadValue, key + " expects true/false",
                      v.line);
  return v.b;
}

std::string as_string(const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::String)
    throw ConfigError(ConfigError::Kind::BadValue, key + " expects a quoted string",
                      v.line);
  return v.str;
}

const std::vector<double>& as_array(const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::Array)
    throw ConfigError(ConfigError::Kind::BadValue, key + " expects an array",
                      v.line);
  return v.arr;
}

void apply_key(RunConfig& cfg, const std::string& section, const std::string& key,
               const Value& v) {
  const std::string full = section + "." + key;

  if (section == "scenario") {
    auto& s = cfg.scenario;
    if (key == "grid_rows") { s.grid_rows = as_int(full, v); return; }
    if (key == "grid_cols") { s.grid_cols = as_int(full, v); return; }
    if (key == "block_m") { s.block_m = as_number(full, v); return; }
    if (key == "street_m") { s.street_m = as_number(full, v); return; }
    if (key == "park_row") { s.park_row = as_int(full, v); return; }
    if (key == "park_col") { s.park_col = as_int(full, v); return; }
    if (key == "bs_row") { s.bs_row = as_int(full, v); return; }
    if (key == "bs_col") { s.bs_col = as_int(full, v); return; }
    if (key == "building_height_m") { s.building_height_m = as_number(full, v); return; }
    if (key == "bs_height_above_roof_m") { s.bs_height_above_roof_m = as_number(full, v); return; }
    if (key == "ue_height_m") { s.ue_height_m = as_number(full, v); return; }
    if (key == "density_per_km2") { s.density_per_km2 = as_number(full, v); return; }
    if (key == "vehicle_fraction") { s.vehicle_fraction = as_number(full, v); return; }
    if (key == "radius_m") { s.radius_m = as_number(full, v); return; }
    if (key == "mobility") { s.mobility = as_bool(full, v); return; }
    if (key == "max_speed_vehicle_kmh") { s.max_speed_vehicle_kmh = as_number(full, v); return; }
    if (key == "max_speed_vru_kmh") { s.max_speed_vru_kmh = as_number(full, v); return; }
  } else if (section == "radio") {
    auto& r = cfg.radio;
    if (key == "fc_ghz") { r.fc_ghz = as_number(full, v); return; }
    if (key == "pl_los_a") { r.pl_los_a = as_number(full, v); return; }
    if (key == "pl_los_b") { r.pl_los_b = as_number(full, v); return; }
    if (key == "pl_los_c") { r.pl_los_c = as_number(full, v); return; }
    if (key == "pl_nlos_a") { r.pl_nlos_a = as_number(full, v); return; }
    if (key == "pl_nlos_b") { r.pl_nlos_b = as_number(full, v); return; }
    if (key == "pl_nlos_c") { r.pl_nlos_c = as_number(full, v); return; }
    if (key == "shadow_sigma_los_db") { r.shadow_sigma_los_db = as_number(full, v); return; }
    if (key == "shadow_sigma_nlos_db") { r.shadow_sigma_nlos_db = as_number(full, v); return; }
    if (key == "antenna_beamwidth_deg") { r.antenna_beamwidth_deg = as_number(full, v); return; }
    if (key == "antenna_max_attenuation_db") { r.antenna_max_attenuation_db = as_number(full, v); return; }
    if (key == "antenna_boresight_gain_dbi") { r.antenna_boresight_gain_dbi = as_number(full, v); return; }
    if (key == "sector_power_dbm_per_10mhz") { r.sector_power_dbm_per_10mhz = as_number(full, v); return; }
    if (key == "vehicle_tx_power_dbm") { r.vehicle_tx_power_dbm = as_number(full, v); return; }
    if (key == "noise_figure_enb_db") { r.noise_figure_enb_db = as_number(full, v); return; }
    if (key == "noise_figure_ue_db") { r.noise_figure_ue_db = as_number(full, v); return; }
    if (key == "thermal_noise_dbm_hz") { r.thermal_noise_dbm_hz = as_number(full, v); return; }
    if (key == "interference") { r.interference = as_bool(full, v); return; }
  } else if (section == "phy") {
    auto& p = cfg.phy;
    if (key == "data_res_per_prb") { p.data_res_per_prb = as_int(full, v); return; }
    if (key == "packet_size_bytes") { p.packet_size_bytes = as_int(full, v); return; }
    if (key == "packet_size_jitter") { p.packet_size_jitter = as_bool(full, v); return; }
    if (key == "bler_slope_db") { p.bler_slope_db = as_number(full, v); return; }
  } else if (section == "phy.mcs_override") {
    // mcs<N> = [efficiency, threshold_db, slope_db]
    if (key.rfind("mcs", 0) == 0) {
      int idx = 0;
      try {
        idx = std::stoi(key.substr(3));
      } catch (...) {
        throw ConfigError(ConfigError::Kind::UnknownKey, full, v.line);
      }
      const auto& a = as_array(full, v);
      if (a.size() != 3)
        throw ConfigError(ConfigError::Kind::BadValue,
                          full + " expects [efficiency, threshold_db, slope_db]",
                          v.line);
      cfg.phy.mcs_overrides.push_back({idx, a[0], a[1], a[2]});
      return;
    }
  } else if (section == "mac") {
    auto& m = cfg.mac;
    if (key == "max_retx") { m.max_retx = as_int(full, v); return; }
    if (key == "packet_lifetime_ms") { m.packet_lifetime_ms = as_number(full, v); return; }
    if (key == "harq_gap_ms") { m.harq_gap_ms = as_number(full, v); return; }
    if (key == "ue_processing_ms") { m.ue_processing_ms = as_number(full, v); return; }
    if (key == "frame_alignment_ms") { m.frame_alignment_ms = as_number(full, v); return; }
    if (key == "enb_processing_ms") { m.enb_processing_ms = as_number(full, v); return; }
    if (key == "inter_enb_ms") { m.inter_enb_ms = as_number(full, v); return; }
    if (key == "dl_policy") { m.dl_policy = as_string(full, v); return; }
  } else if (section == "run") {
    auto& r = cfg.run;
    if (key == "bandwidth_ul_mhz") { r.bandwidth_ul_mhz = as_number(full, v); return; }
    if (key == "bandwidth_dl_mhz") { r.bandwidth_dl_mhz = as_number(full, v); return; }
    if (key == "allow_custom_bw") { r.allow_custom_bw = as_bool(full, v); return; }
    if (key == "downlink_mode") { r.downlink_mode = as_string(full, v); return; }
    if (key == "multicast_mcs_efficiency") { r.multicast_mcs_efficiency = as_number(full, v); return; }
    if (key == "multicast_max_replicas") { r.multicast_max_replicas = as_int(full, v); return; }
    if (key == "horizon_s") { r.horizon_s = as_number(full, v); return; }
    if (key == "warmup_s") { r.warmup_s = as_number(full, v); return; }
    if (key == "cam_period_ms") { r.cam_period_ms = as_number(full, v); return; }
    if (key == "seed") {
      double d = as_number(full, v);
      if (d < 0 || d != std::floor(d))
        throw ConfigError(ConfigError::Kind::BadValue,
                          full + " expects a non-negative integer", v.line);
      r.seed = static_cast<uint64_t>(d);
      return;
    }
    if (key == "seeds") {
      const auto& a = as_array(full, v);
      r.seeds.clear();
      for (double d : a) {
        if (d < 0 || d != std::floor(d))
          throw ConfigError(ConfigError::Kind::BadValue,
                            full + " expects non-negative integers", v.line);
        r.seeds.push_back(static_cast<uint64_t>(d));
      }
      return;
    }
  } else if (section == "output") {
    auto& o = cfg.output;
    if (key == "dir") { o.dir = as_string(full, v); return; }
    if (key == "cdf_resolution_ms") { o.cdf_resolution_ms = as_number(full, v); return; }
    if (key == "dump_scenario") { o.dump_scenario = as_bool(full, v); return; }
  } else {
    throw ConfigError(ConfigError::Kind::UnknownKey, "section [" + section + "]",
                      v.line);
  }
  throw ConfigError(ConfigError::Kind::UnknownKey, full, v.line);
}

// Raises OutOfRange, attaching the defining line when the key is known.
[[noreturn]] void fail_range(const std::string& key, const std::string& why,
                             const LineMap* lines) {
  int line = 0;
  if (lines) {
    auto it = lines->find(key);
    if (it != lines->end()) line = it->second;
  }
  throw ConfigError(ConfigError::Kind::OutOfRange, key + ": " + why, line);
}

void validate_impl(const RunConfig& cfg, const LineMap* lines) {
  const auto& s = cfg.scenario;
  if (s.grid_rows < 1) fail_range("scenario.grid_rows", "must be >= 1", lines);
  if (s.grid_cols < 1) fail_range("scenario.grid_cols", "must be >= 1", lines);
  if (s.block_m <= 0) fail_range("scenario.block_m", "must be > 0", lines);
  if (s.street_m <= 0) fail_range("scenario.street_m", "must be > 0", lines);
  if (s.park_row < 0 || s.park_row >= s.grid_rows)
    fail_range("scenario.park_row", "outside the grid", lines);
  if (s.park_col < 0 || s.park_col >= s.grid_cols)
    fail_range("scenario.park_col", "outside the grid", lines);
  if (s.bs_row < 0 || s.bs_row >= s.grid_rows)
    fail_range("scenario.bs_row", "outside the grid", lines);
  if (s.bs_col < 0 || s.bs_col >= s.grid_cols)
    fail_range("scenario.bs_col", "outside the grid", lines);
  if (s.bs_row == s.park_row && s.bs_col == s.park_col)
    fail_range("scenario.bs_row", "site block must be a building, not the park",
               lines);
  if (s.building_height_m <= 0)
    fail_range("scenario.building_height_m", "must be > 0", lines);
  if (s.bs_height_above_roof_m < 0)
    fail_range("scenario.bs_height_above_roof_m", "must be >= 0", lines);
  if (s.ue_height_m <= 0) fail_range("scenario.ue_height_m", "must be > 0", lines);
  if (s.density_per_km2 < 0)
    fail_range("scenario.density_per_km2", "must be >= 0", lines);
  if (s.vehicle_fraction < 0 || s.vehicle_fraction > 1)
    fail_range("scenario.vehicle_fraction", "must be in [0,1]", lines);
  if (s.radius_m <= 0) fail_range("scenario.radius_m", "must be > 0", lines);
  if (s.max_speed_vehicle_kmh < 0)
    fail_range("scenario.max_speed_vehicle_kmh", "must be >= 0", lines);
  if (s.max_speed_vru_kmh < 0)
    fail_range("scenario.max_speed_vru_kmh", "must be >= 0", lines);

  const auto& r = cfg.radio;
  if (r.fc_ghz <= 0) fail_range("radio.fc_ghz", "must be > 0", lines);
  if (r.shadow_sigma_los_db < 0)
    fail_range("radio.shadow_sigma_los_db", "must be >= 0", lines);
  if (r.shadow_sigma_nlos_db < 0)
    fail_range("radio.shadow_sigma_nlos_db", "must be >= 0", lines);
  if (r.antenna_beamwidth_deg <= 0)
    fail_range("radio.antenna_beamwidth_deg", "must be > 0", lines);
  if (r.antenna_max_attenuation_db < 0)
    fail_range("radio.antenna_max_attenuation_db", "must be >= 0", lines);
  if (r.noise_figure_enb_db < 0)
    fail_range("radio.noise_figure_enb_db", "must be >= 0", lines);
  if (r.noise_figure_ue_db < 0)
    fail_range("radio.noise_figure_ue_db", "must be >= 0", lines);

  const auto& p = cfg.phy;
  if (p.data_res_per_prb < 1)
    fail_range("phy.data_res_per_prb", "must be >= 1", lines);
  if (p.packet_size_bytes < 0)
    fail_range("phy.packet_size_bytes", "must be >= 0", lines);
  if (p.bler_slope_db <= 0) fail_range("phy.bler_slope_db", "must be > 0", lines);
  for (const auto& o : p.mcs_overrides) {
    if (o.index < 1 || o.index > 15)
      fail_range("phy.mcs_override", "index must be 1..15", lines);
    if (o.efficiency <= 0)
      fail_range("phy.mcs_override", "efficiency must be > 0", lines);
    if (o.slope_db <= 0)
      fail_range("phy.mcs_override", "slope_db must be > 0", lines);
  }

  const auto& m = cfg.mac;
  if (m.max_retx < 0) fail_range("mac.max_retx", "must be >= 0", lines);
  if (m.packet_lifetime_ms <= 0)
    fail_range("mac.packet_lifetime_ms", "must be > 0", lines);
  if (m.harq_gap_ms < 0) fail_range("mac.harq_gap_ms", "must be >= 0", lines);
  if (m.ue_processing_ms < 0)
    fail_range("mac.ue_processing_ms", "must be >= 0", lines);
  if (m.frame_alignment_ms < 0)
    fail_range("mac.frame_alignment_ms", "must be >= 0", lines);
  if (m.enb_processing_ms < 0)
    fail_range("mac.enb_processing_ms", "must be >= 0", lines);
  if (m.inter_enb_ms < 0) fail_range("mac.inter_enb_ms", "must be >= 0", lines);
  if (m.dl_policy != "newest_first_then_rr" && m.dl_policy != "rr")
    fail_range("mac.dl_policy", "must be \"newest_first_then_rr\" or \"rr\"", lines);

  const auto& ru = cfg.run;
  try {
    (void)prbs_for_bandwidth(ru.bandwidth_ul_mhz, ru.allow_custom_bw);
  } catch (const ConfigError& e) {
    fail_range("run.bandwidth_ul_mhz", e.what(), lines);
  }
  try {
    (void)prbs_for_bandwidth(ru.bandwidth_dl_mhz, ru.allow_custom_bw);
  } catch (const ConfigError& e) {
    fail_range("run.bandwidth_dl_mhz", e.what(), lines);
  }
  if (ru.downlink_mode != "unicast" && ru.downlink_mode != "multicast")
    fail_range("run.downlink_mode", "must be \"unicast\" or \"multicast\"", lines);
  if (ru.multicast_max_replicas < 0)
    fail_range("run.multicast_max_replicas", "must be >= 0 (0 = uncapped)",
               lines);
  if (ru.downlink_mode == "multicast") {
    // Effective efficiencies = standard table with overrides applied by index.
    std::array<double, 15> eff = kStandardEfficiencies;
    for (const auto& o : p.mcs_overrides)
      if (o.index >= 1 && o.index <= 15) eff[o.index - 1] = o.efficiency;
    bool found = false;
    for (double e : eff)
      if (std::abs(e - ru.multicast_mcs_efficiency) <= 1e-6) found = true;
    if (!found)
      fail_range("run.multicast_mcs_efficiency",
                 "does not match any MCS table entry", lines);
  }
  if (ru.horizon_s <= 0) fail_range("run.horizon_s", "must be > 0", lines);
  if (ru.warmup_s < 0) fail_range("run.warmup_s", "must be >= 0", lines);
  if (ru.cam_period_ms <= 0)
    fail_range("run.cam_period_ms", "must be > 0", lines);
  if (ru.seeds.empty()) fail_range("run.seeds", "must not be empty", lines);

  if (cfg.output.cdf_resolution_ms <= 0)
    fail_range("output.cdf_resolution_ms", "must be > 0", lines);
}

RunConfig parse_text_impl(const std::string& text) {
  RunConfig cfg;
  LineMap lines;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError(ConfigError::Kind::Syntax, "malformed section header",
                          lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(ConfigError::Kind::Syntax, "empty section name", lineno);
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(ConfigError::Kind::Syntax, "expected key = value", lineno);
    std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(ConfigError::Kind::Syntax, "empty key", lineno);
    if (section.empty())
      throw ConfigError(ConfigError::Kind::Syntax,
                        "key '" + key + "' outside any [section]", lineno);
    Value v = parse_value(line.substr(eq + 1), lineno);
    apply_key(cfg, section, key, v);
    lines[section + "." + key] = lineno;
  }
  validate_impl(cfg, &lines);
  return cfg;
}

}  // namespace

int prbs_for_bandwidth(double mhz, bool allow_custom) {
  struct Entry { double mhz; int prbs; };
  static constexpr Entry kStandard[] = {{10, 50}, {20, 100}, {40, 200}, {100, 500}};
  for (const auto& e : kStandard)
    if (std::abs(mhz - e.mhz) <= 1e-9) return e.prbs;
  if (!allow_custom)
    throw ConfigError(ConfigError::Kind::OutOfRange,
                      "bandwidth " + std::to_string(mhz) +
                          " MHz is not one of 10/20/40/100 "
                          "(set run.allow_custom_bw to permit others)");
  if (mhz <= 0)
    throw ConfigError(ConfigError::Kind::OutOfRange, "bandwidth must be > 0");
  int n = static_cast<int>(std::floor(mhz / 0.18));
  n = (n / 12) * 12;  // whole PRB dozens only
  if (n < 12)
    throw ConfigError(ConfigError::Kind::OutOfRange,
                      "custom bandwidth too small for a 12-PRB grid");
  return n;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f)
    throw ConfigError(ConfigError::Kind::MissingFile, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text_impl(ss.str());
}

RunConfig parse_config_text(const std::string& text) {
  return parse_text_impl(text);
}

void validate(const RunConfig& cfg) { validate_impl(cfg, nullptr); }

std::string print_default_config() {
  // Keep in sync with the defaults in config.hpp; round-trips to RunConfig{}.
  return R"([scenario]
grid_rows = 4
grid_cols = 4
block_m = 120.0
street_m = 21.0
park_row = 2
park_col = 2
bs_row = 1
bs_col = 1
building_height_m = 24.0
bs_height_above_roof_m = 3.0
ue_height_m = 1.5
density_per_km2 = 1000.0
vehicle_fraction = 0.5
radius_m = 200.0
mobility = false
max_speed_vehicle_kmh = 50.0
max_speed_vru_kmh = 5.0

[radio]
fc_ghz = 0.8
pl_los_a = 22.0
pl_los_b = 28.0
pl_los_c = 20.0
pl_nlos_a = 36.7
pl_nlos_b = 22.7
pl_nlos_c = 26.0
shadow_sigma_los_db = 4.0
shadow_sigma_nlos_db = 6.0
antenna_beamwidth_deg = 65.0
antenna_max_attenuation_db = 30.0
antenna_boresight_gain_dbi = 14.0
sector_power_dbm_per_10mhz = 46.0
vehicle_tx_power_dbm = 24.0
noise_figure_enb_db = 5.0
noise_figure_ue_db = 9.0
thermal_noise_dbm_hz = -174.0
interference = true

[phy]
data_res_per_prb = 120
packet_size_bytes = 212
packet_size_jitter = false
bler_slope_db = 1.0
# Per-MCS overrides live in [phy.mcs_override] as
#   mcs<index> = [efficiency, threshold_db, slope_db]

[mac]
max_retx = 3
packet_lifetime_ms = 100.0
harq_gap_ms = 7.0
ue_processing_ms = 1.0
frame_alignment_ms = 0.5
enb_processing_ms = 1.0
inter_enb_ms = 1.0
dl_policy = "newest_first_then_rr"

[run]
bandwidth_ul_mhz = 10.0
bandwidth_dl_mhz = 10.0
allow_custom_bw = false
downlink_mode = "multicast"
multicast_mcs_efficiency = 0.877
multicast_max_replicas = 0
horizon_s = 2.0
warmup_s = 0.2
cam_period_ms = 100.0
seed = 1
seeds = [1]

[output]
dir = "out"
cdf_resolution_ms = 0.1
dump_scenario = false
)";
}

}  // namespace v2xsim::config
