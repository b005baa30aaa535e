#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "v2xsim/config.hpp"
#include "v2xsim/errors.hpp"
#include "v2xsim/sweep.hpp"

namespace {

using namespace v2xsim;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t end = text.find(sep, start);
    if (end == std::string::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s) {
  size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (...) {
    pos = 0;
  }
  if (pos != s.size() || s.empty())
    throw ConfigError(ConfigError::Kind::BadValue, "bad seed: '" + s + "'");
  return v;
}

// "1..5" (inclusive range), "1,2,7", or a mix of both.
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& tok : split(text, ',')) {
    const size_t dots = tok.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(parse_u64(tok));
      continue;
    }
    const std::uint64_t lo = parse_u64(tok.substr(0, dots));
    const std::uint64_t hi = parse_u64(tok.substr(dots + 2));
    if (hi < lo)
      throw ConfigError(ConfigError::Kind::BadValue,
                        "bad seed range: '" + tok + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty())
    throw ConfigError(ConfigError::Kind::BadValue, "empty seed list");
  return seeds;
}

std::pair<std::string, std::vector<double>> parse_axis(
    const std::string& text) {
  const size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size())
    throw ConfigError(ConfigError::Kind::BadValue,
                      "axis must look like name=v1,v2,... : '" + text + "'");
  const std::string name = text.substr(0, eq);
  if (name != "bandwidth" && name != "mcs")
    throw ConfigError(ConfigError::Kind::BadValue,
                      "unknown sweep axis: '" + name + "'");
  std::vector<double> values;
  for (const auto& tok : split(text.substr(eq + 1), ',')) {
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos != tok.size() || tok.empty())
      throw ConfigError(ConfigError::Kind::BadValue,
                        "bad axis value: '" + tok + "'");
    values.push_back(v);
  }
  return {name, values};
}

std::vector<std::string> parse_modes(const std::string& text) {
  std::vector<std::string> modes;
  for (const auto& tok : split(text, ',')) {
    if (tok != "unicast" && tok != "multicast")
      throw ConfigError(ConfigError::Kind::BadValue,
                        "bad downlink mode: '" + tok + "'");
    modes.push_back(tok);
  }
  return modes;
}

std::string pick_out_dir(const std::string& cli_out,
                         const config::RunConfig& cfg) {
  if (!cli_out.empty()) return cli_out;
  if (const char* root = std::getenv("V2XSIM_OUTPUT_ROOT"); root && *root)
    return std::string(root) + "/" + cfg.output.dir;
  return cfg.output.dir;
}

std::string fmt_or_na(bool defined, double v, const char* fmt) {
  if (!defined) return "NA";
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LTE cellular V2X simulator (uplink + unicast/multicast downlink)"};
  app.require_subcommand(0, 1);
  bool print_default = false;
  app.add_flag("--print-default-config", print_default,
               "Print the canonical config file with every default and exit");

  std::string run_config_path, run_out;
  std::uint64_t run_seed = 0;
  bool run_dump = false;
  auto* cmd_run = app.add_subcommand("run", "Run one simulation");
  cmd_run->add_option("--config", run_config_path,
                      "Config file (defaults apply when omitted)");
  auto* run_seed_opt =
      cmd_run->add_option("--seed", run_seed, "RNG seed (default from config)");
  cmd_run->add_option("--out", run_out, "Output directory");
  cmd_run->add_flag("--dump-scenario", run_dump,
                    "Also write the dropped scenario as scenario.csv");

  std::string sw_config_path, sw_out, sw_axis, sw_modes, sw_seeds;
  int sw_jobs = 0;
  bool sw_dump = false;
  auto* cmd_sweep =
      app.add_subcommand("sweep", "Run a point grid and summarize");
  cmd_sweep->add_option("--config", sw_config_path,
                        "Config file (defaults apply when omitted)");
  cmd_sweep->add_option("--axis", sw_axis,
                        "Sweep axis, e.g. bandwidth=10,20,40,100 or "
                        "mcs=0.1523,0.877");
  cmd_sweep->add_option("--modes", sw_modes,
                        "Downlink modes, e.g. unicast,multicast");
  cmd_sweep->add_option("--seeds", sw_seeds, "Seed list, e.g. 1..5 or 1,2,7");
  cmd_sweep->add_option("--jobs", sw_jobs,
                        "Concurrent runs (default: hardware threads)");
  cmd_sweep->add_option("--out", sw_out, "Output directory");
  cmd_sweep->add_flag("--dump-scenario", sw_dump,
                      "Also write scenario.csv per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (print_default) {
      const std::string text = config::print_default_config();
      std::fwrite(text.data(), 1, text.size(), stdout);
      return 0;
    }

    if (cmd_run->parsed()) {
      config::RunConfig cfg = run_config_path.empty()
                                  ? config::RunConfig{}
                                  : config::parse_config_file(run_config_path);
      if (run_dump) cfg.output.dump_scenario = true;
      const std::uint64_t seed =
          run_seed_opt->count() > 0 ? run_seed : cfg.run.seed;
      const std::string out = pick_out_dir(run_out, cfg);
      const auto s = sweep::run_single(cfg, seed, out);
      std::printf(
          "n_expected=%lld n_success=%lld success_rate=%s "
          "mean_latency_ms=%s\nout=%s\n",
          static_cast<long long>(s.n_expected),
          static_cast<long long>(s.n_success),
          fmt_or_na(s.rate_defined, s.success_rate, "%.6f").c_str(),
          fmt_or_na(s.mean_defined, s.mean_latency_ms, "%.3f").c_str(),
          out.c_str());
      return 0;
    }

    if (cmd_sweep->parsed()) {
      config::RunConfig cfg = sw_config_path.empty()
                                  ? config::RunConfig{}
                                  : config::parse_config_file(sw_config_path);
      if (sw_dump) cfg.output.dump_scenario = true;
      sweep::SweepSpec spec;
      if (!sw_axis.empty()) {
        auto [name, values] = parse_axis(sw_axis);
        spec.axis_name = std::move(name);
        spec.axis_values = std::move(values);
      }
      if (!sw_modes.empty()) spec.modes = parse_modes(sw_modes);
      spec.seeds = sw_seeds.empty() ? cfg.run.seeds : parse_seed_list(sw_seeds);
      spec.jobs = sw_jobs;
      spec.out_dir = pick_out_dir(sw_out, cfg);
      const auto result = sweep::run_sweep(cfg, spec);
      int failures = 0;
      for (const auto& row : result.rows)
        if (!row.ok) {
          ++failures;
          std::fprintf(stderr, "point %s seed %llu failed: %s\n",
                       row.point.c_str(),
                       static_cast<unsigned long long>(row.seed),
                       row.error.c_str());
        }
      std::printf("rows=%zu failures=%d\nout=%s\n", result.rows.size(),
                  failures, spec.out_dir.c_str());
      return result.all_ok ? 0 : 3;
    }

    const std::string help = app.help();
    std::fwrite(help.data(), 1, help.size(), stdout);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
