#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/pipelines.hpp"

namespace v2xsim::kpi {

// Aggregate over (packet, receiver) delivery records. Mergeable: counts and
// the latency sum add, the derived fields are recomputed from the totals, so
// partial aggregation over any partition matches a single pass.
struct KpiSummary {
  std::int64_t n_expected = 0;
  std::int64_t n_success = 0;
  double latency_sum_ms = 0.0;   // over successes only
  double success_rate = 0.0;     // n_success / n_expected
  double mean_latency_ms = 0.0;  // latency_sum_ms / n_success
  bool rate_defined = false;     // false iff n_expected == 0
  bool mean_defined = false;     // false iff n_success == 0
};

KpiSummary summarize(const std::vector<pipelines::DeliveryRecord>& records);

// Combine summaries of disjoint record sets.
KpiSummary merge(const KpiSummary& a, const KpiSummary& b);

struct CdfPoint {
  double latency_ms = 0.0;
  double fraction = 0.0;
};

// Empirical CDF of e2e latency sampled at multiples of resolution_ms, from 0
// to the first multiple covering the largest finite latency. Failures count
// in the denominator and never in the numerator, so the terminal plateau
// equals the success rate exactly. Empty input gives an empty list; input
// with no finite latency gives the single point (0, 0).
std::vector<CdfPoint> cdf_points(
    const std::vector<pipelines::DeliveryRecord>& records,
    double resolution_ms);

// CSV with fixed header packet_id,tx_id,rx_id,gen_ms,e2e_ms,ul_ms,dl_ms,
// ul_attempts,dl_attempts,mode; millisecond columns printed with three
// decimals, infinities as the literal INF. Byte-identical across runs of the
// same (config, seed).
void write_records_csv(const std::string& path,
                       const std::vector<pipelines::DeliveryRecord>& records);

// Summary KPIs plus the full effective configuration and the seed.
void write_summary_json(const std::string& path, const KpiSummary& s,
                        const config::RunConfig& cfg, std::uint64_t seed);

// CSV with header latency_ms,fraction.
void write_cdf_csv(const std::string& path,
                   const std::vector<CdfPoint>& points);

}  // namespace v2xsim::kpi
