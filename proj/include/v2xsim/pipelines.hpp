#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/radio.hpp"

namespace v2xsim::pipelines {

enum class Mode { Unicast, Multicast };

// One (packet, in-radius receiver) outcome. Failures keep infinite latency;
// phase columns are finite only for the parts that completed.
struct DeliveryRecord {
  std::int64_t packet_id = 0;
  int tx_id = 0;
  int rx_id = 0;
  double gen_ms = 0.0;
  double e2e_ms = std::numeric_limits<double>::infinity();
  double ul_ms = std::numeric_limits<double>::infinity();  // gen -> uplink done
  double dl_ms = std::numeric_limits<double>::infinity();  // e2e - ul
  int ul_attempts = 0;
  int dl_attempts = 0;  // unicast: HARQ attempts; multicast: replicas drawn
  Mode mode = Mode::Unicast;
};

// Test hook consulted before every Bernoulli error decision; a returned value
// replaces the draw (true = decode failure) and consumes no randomness.
// attempt is 1-based and counts HARQ attempts (or replicas for multicast);
// rx_id is -1 for uplink decisions.
using ErrorOverride = std::function<std::optional<bool>(
    std::int64_t packet_id, int rx_id, int attempt, radio::Direction dir)>;

struct SimResult {
  std::vector<DeliveryRecord> records;  // sorted by (packet_id, rx_id)
  std::int64_t packets_counted = 0;     // generated inside the measured window
  std::int64_t packets_simulated = 0;   // including warm-up traffic
};

// Full deterministic run: builds the scenario, generates periodic packets
// over warm-up + horizon, carries each through uplink and the configured
// downlink mode, and emits one record per (measured packet, receiver) pair.
SimResult run_simulation(const config::RunConfig& cfg, std::uint64_t seed,
                         const ErrorOverride* error_override = nullptr);

}  // namespace v2xsim::pipelines
