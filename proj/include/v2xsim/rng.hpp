#pragma once

#include <cstdint>
#include <string_view>

namespace v2xsim {

// Deterministic, independently seeded random substream. Every stochastic concern
// in a run (drop positions, shadowing, generation offsets, uplink error draws,
// downlink error draws, ...) gets its own stream keyed by (master seed, tag,
// up to three entity ids), so re-running with the same seed reproduces each
// concern bit-identically and changing one concern never shifts another.
//
// Generator: splitmix64 over a mixed 64-bit state. Good enough statistics for
// Monte-Carlo error draws, tiny state, and the keyed construction gives
// evaluation-order independence (a stream's output depends only on its key).
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view tag,
            uint64_t k0 = 0, uint64_t k1 = 0, uint64_t k2 = 0);

  uint64_t next_u64();

  // Uniform in [0,1).
  double uniform();
  // Uniform in [lo,hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0,n), n >= 1. Unbiased (fixed-point multiply).
  uint64_t uniform_int(uint64_t n);
  // Zero-mean normal draw, standard deviation sigma. Box-Muller.
  double normal(double sigma);

 private:
  uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace v2xsim
