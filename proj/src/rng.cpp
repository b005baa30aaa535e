#include "v2xsim/rng.hpp"

#include <cmath>

namespace v2xsim {

namespace {

constexpr uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(uint64_t seed, std::string_view tag,
                     uint64_t k0, uint64_t k1, uint64_t k2) {
  uint64_t s = mix64(seed + kGamma);
  s = mix64(s ^ fnv1a(tag));
  s = mix64(s ^ (k0 + 0x9e3779b97f4a7c15ULL));
  s = mix64(s ^ (k1 + 0xc2b2ae3d27d4eb4fULL));
  s = mix64(s ^ (k2 + 0x165667b19e3779f9ULL));
  state_ = s;
}

uint64_t RngStream::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double RngStream::uniform() {
  // 53 mantissa bits -> [0,1) on a dyadic grid.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

uint64_t RngStream::uniform_int(uint64_t n) {
  // Fixed-point multiply; bias is < 2^-64 per draw, irrelevant at our n.
  return static_cast<uint64_t>(
      (static_cast<__uint128_t>(next_u64()) * n) >> 64);
}

double RngStream::normal(double sigma) {
  if (has_cached_) {
    has_cached_ = false;
    return cached_ * sigma;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a) * sigma;
}

}  // namespace v2xsim
