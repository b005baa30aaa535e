#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/errors.hpp"
#include "v2xsim/phy.hpp"
#include "v2xsim/rng.hpp"

using namespace v2xsim;

namespace {

// Q(z) = 0.1 at this z; the 10% point of each BLER curve sits z*slope above
// the curve threshold.
constexpr double kTenPercentZ = 1.2815515655446004;

// Smallest PRB count whose capacity covers the block, evaluated with the
// same double arithmetic as the production path so equality cases agree.
int prbs_oracle(int total_bits, double efficiency, int res_per_prb) {
  const double bits_per_prb = efficiency * res_per_prb;
  int n = 1;
  while (n * bits_per_prb < static_cast<double>(total_bits)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("phy") {

TEST_CASE("shannon switch point inverts the attenuated capacity") {
  for (double eff : config::kStandardEfficiencies) {
    const double snr_db = phy::shannon_switch_snr_db(eff);
    const double snr = std::pow(10.0, snr_db / 10.0);
    CHECK(0.6 * std::log2(1.0 + snr) == doctest::Approx(eff).epsilon(1e-12));
  }
}

TEST_CASE("bler is a waterfall centered on the curve threshold") {
  const auto table = phy::McsTable::standard();
  const auto& m = table.by_index(7);
  CHECK(phy::bler(m.curve.threshold_db, m) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(phy::bler(m.curve.threshold_db + 50.0, m) <= 1e-12);
  CHECK(phy::bler(m.curve.threshold_db - 50.0, m) >= 1.0 - 1e-12);
  double prev = 1.0;
  for (double snr = -20.0; snr <= 30.0; snr += 0.25) {
    const double b = phy::bler(snr, m);
    CHECK(b <= prev + 1e-15);
    prev = b;
  }
}

TEST_CASE("every mcs decodes at ten percent error on its calibration point") {
  const auto table = phy::McsTable::standard();
  REQUIRE(table.size() == 15);
  for (const auto& m : table.entries()) {
    const double point = phy::shannon_switch_snr_db(m.efficiency);
    CHECK(std::abs(phy::bler(point, m) - 0.10) < 1e-6);
    CHECK(m.curve.threshold_db ==
          doctest::Approx(point - kTenPercentZ * m.curve.slope_db).epsilon(1e-12));
  }
}

TEST_CASE("mcs selection picks the highest efficiency meeting the target") {
  const auto table = phy::McsTable::standard();
  CHECK(phy::select_mcs_unicast(40.0, table).index == 15);
  CHECK(phy::select_mcs_unicast(-20.0, table).index == 1);  // floor fallback

  // Exactly on an entry's 10% point that entry still qualifies; a hair below
  // it the next lower entry wins.
  const double p7 = phy::shannon_switch_snr_db(table.by_index(7).efficiency);
  CHECK(phy::select_mcs_unicast(p7, table).index == 7);
  CHECK(phy::select_mcs_unicast(p7 - 0.01, table).index == 6);

  // Selection is monotone in SINR.
  int prev = 1;
  for (double snr = -12.0; snr <= 25.0; snr += 0.05) {
    const int idx = phy::select_mcs_unicast(snr, table).index;
    CHECK(idx >= prev);
    prev = idx;
  }
}

TEST_CASE("transport blocks carry a crc and segment above the block limit") {
  const auto small = phy::build_transport_block(212);
  CHECK(small.payload_bits == 1696);
  CHECK(small.crc_bits == 24);
  REQUIRE(small.code_blocks.size() == 1);
  CHECK(small.code_blocks[0] == 1720);
  CHECK(small.total_bits() == 1720);

  const auto empty = phy::build_transport_block(0);
  CHECK(empty.total_bits() == 24);
  CHECK(empty.code_blocks.size() == 1);

  const auto big = phy::build_transport_block(1000);
  CHECK(big.payload_bits == 8000);
  REQUIRE(big.code_blocks.size() == 2);
  CHECK(big.code_blocks[0] == 4036);
  CHECK(big.code_blocks[1] == 4036);
  CHECK(big.crc_bits == 24 + 2 * 24);
  for (int b : big.code_blocks) CHECK(b <= 6144);

  for (int bytes : {0, 1, 212, 767, 768, 769, 4096}) {
    const auto tb = phy::build_transport_block(bytes);
    int sum = 0;
    for (int b : tb.code_blocks) {
      CHECK(b <= 6144);
      sum += b;
    }
    CHECK(sum == bytes * 8 + tb.crc_bits);
  }
}

TEST_CASE("prb demand matches the capacity ceiling") {
  const auto table = phy::McsTable::standard();
  const auto cam = phy::build_transport_block(212);
  CHECK(phy::prbs_required(cam, table.by_efficiency(0.877)) == 17);
  CHECK(phy::prbs_required(cam, table.by_efficiency(0.1523)) == 95);
  CHECK(phy::prbs_required(phy::build_transport_block(0), table.by_index(15)) == 1);

  for (int bytes = 0; bytes <= 1024; bytes += 7) {
    const auto tb = phy::build_transport_block(bytes);
    for (const auto& m : table.entries())
      CHECK(phy::prbs_required(tb, m) ==
            prbs_oracle(tb.total_bits(), m.efficiency, 120));
  }
}

TEST_CASE("tti span is the grid-capacity ceiling") {
  CHECK(phy::tti_span(17, 50) == 1);
  CHECK(phy::tti_span(50, 50) == 1);
  CHECK(phy::tti_span(51, 50) == 2);
  CHECK(phy::tti_span(95, 50) == 2);
  CHECK(phy::tti_span(0, 50) == 0);
  CHECK_THROWS_AS(phy::tti_span(10, 0), std::invalid_argument);
}

TEST_CASE("error draws follow the block error rate") {
  RngStream rng(7, "bler_mc");
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(phy::draw_block_error(0.0, rng));
    CHECK(phy::draw_block_error(1.0, rng));
  }
  int fails = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    if (phy::draw_block_error(0.1, rng)) ++fails;
  CHECK(std::abs(fails / static_cast<double>(n) - 0.1) < 0.005);
}

TEST_CASE("transport error draws fail when any code block fails") {
  RngStream rng(11, "tb_mc");
  for (int i = 0; i < 100; ++i) {
    CHECK(phy::draw_transport_error(1.0, 3, rng));
    CHECK_FALSE(phy::draw_transport_error(0.0, 3, rng));
  }
  // With k independent blocks the failure rate is 1-(1-p)^k.
  int fails = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    if (phy::draw_transport_error(0.1, 2, rng)) ++fails;
  CHECK(std::abs(fails / static_cast<double>(n) - 0.19) < 0.006);
}

TEST_CASE("mrc adds replica powers linearly") {
  const double one[] = {7.25};
  CHECK(phy::mrc_combine(one) == doctest::Approx(7.25).epsilon(1e-12));

  const double pair[] = {0.0, 0.0};
  CHECK(phy::mrc_combine(pair) == doctest::Approx(3.0103).epsilon(1e-4));

  const double trio[] = {10.0, 0.0, -10.0};
  CHECK(phy::mrc_combine(trio) == doctest::Approx(10.4532).epsilon(1e-4));

  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> snr(-15.0, 25.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + static_cast<size_t>(gen() % 5));
    for (auto& x : v) x = snr(gen);

    double lin = 0.0;
    for (double x : v) lin += std::pow(10.0, x / 10.0);
    const double expect = 10.0 * std::log10(lin);
    CHECK(std::abs(phy::mrc_combine(v) - expect) < 1e-9);

    auto shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(phy::mrc_combine(shuffled) ==
          doctest::Approx(phy::mrc_combine(v)).epsilon(1e-12));

    auto grown = v;
    grown.push_back(snr(gen));
    CHECK(phy::mrc_combine(grown) > phy::mrc_combine(v));
  }
}

TEST_CASE("mcs table accepts consistent overrides and rejects broken ones") {
  config::PhyConfig cfg;
  cfg.mcs_overrides.push_back({3, 0.5, 0.0, 2.0});
  const auto table = phy::McsTable::from_config(cfg);
  CHECK(table.by_index(3).efficiency == doctest::Approx(0.5));
  CHECK(table.by_index(3).curve.slope_db == doctest::Approx(2.0));
  // Untouched entries keep the standard calibration.
  CHECK(table.by_index(7).efficiency == doctest::Approx(1.4766));

  config::PhyConfig broken;
  broken.mcs_overrides.push_back({3, 0.7, 0.0, 1.0});  // above entry 4
  CHECK_THROWS_AS(phy::McsTable::from_config(broken), ConfigError);
}

}  // TEST_SUITE("phy")
