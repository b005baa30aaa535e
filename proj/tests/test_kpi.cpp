#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "v2xsim/kpi.hpp"
#include "v2xsim/pipelines.hpp"

using namespace v2xsim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

pipelines::DeliveryRecord rec(double e2e, std::int64_t pkt = 0, int rx = 0) {
  pipelines::DeliveryRecord r;
  r.packet_id = pkt;
  r.rx_id = rx;
  r.e2e_ms = e2e;
  r.ul_ms = std::isinf(e2e) ? kInf : 2.5;
  r.dl_ms = std::isinf(e2e) ? kInf : e2e - 2.5;
  return r;
}

double cdf_at(const std::vector<kpi::CdfPoint>& points, double x) {
  double f = 0.0;
  for (const auto& p : points)
    if (p.latency_ms <= x + 1e-12) f = p.fraction;
  return f;
}

}  // namespace

TEST_SUITE("kpi") {

TEST_CASE("summary counts successes and averages their latency") {
  const std::vector<pipelines::DeliveryRecord> records = {
      rec(5.0), rec(7.0), rec(kInf)};
  const auto s = kpi::summarize(records);
  CHECK(s.n_expected == 3);
  CHECK(s.n_success == 2);
  CHECK(s.rate_defined);
  CHECK(s.mean_defined);
  CHECK(s.success_rate == 2.0 / 3.0);  // same division, bitwise equal
  CHECK(s.mean_latency_ms == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(s.latency_sum_ms == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("empty and all-failure inputs keep their flags honest") {
  const auto none = kpi::summarize({});
  CHECK(none.n_expected == 0);
  CHECK_FALSE(none.rate_defined);
  CHECK_FALSE(none.mean_defined);

  const auto lost = kpi::summarize({rec(kInf), rec(kInf)});
  CHECK(lost.n_expected == 2);
  CHECK(lost.n_success == 0);
  CHECK(lost.rate_defined);
  CHECK(lost.success_rate == 0.0);
  CHECK_FALSE(lost.mean_defined);
}

TEST_CASE("cdf steps at the latencies and plateaus at the success rate") {
  const std::vector<pipelines::DeliveryRecord> records = {
      rec(6.0), rec(6.0), rec(14.0), rec(kInf)};
  const auto points = kpi::cdf_points(records, 0.1);
  REQUIRE_FALSE(points.empty());

  CHECK(points.front().latency_ms == 0.0);
  CHECK(cdf_at(points, 5.9) == 0.0);
  CHECK(cdf_at(points, 6.0) == 0.5);
  CHECK(cdf_at(points, 13.9) == 0.5);   // plateau between the two steps
  CHECK(cdf_at(points, 14.0) == 0.75);

  // The terminal plateau equals the success rate exactly, and the grid ends
  // at the first multiple of the resolution covering the largest latency.
  const auto s = kpi::summarize(records);
  CHECK(points.back().fraction == s.success_rate);
  CHECK(points.back().latency_ms == doctest::Approx(14.0).epsilon(1e-12));

  // Monotone non-decreasing fractions on a monotone grid.
  for (size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].latency_ms > points[i - 1].latency_ms);
    CHECK(points[i].fraction >= points[i - 1].fraction);
  }
}

TEST_CASE("cdf edge cases") {
  CHECK(kpi::cdf_points({}, 0.1).empty());

  const auto lost = kpi::cdf_points({rec(kInf)}, 0.1);
  REQUIRE(lost.size() == 1);
  CHECK(lost[0].latency_ms == 0.0);
  CHECK(lost[0].fraction == 0.0);

  CHECK_THROWS_AS(kpi::cdf_points({rec(6.0)}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kpi::cdf_points({rec(6.0)}, -1.0), std::invalid_argument);
}

TEST_CASE("a latency exactly on a grid point is counted by that point") {
  // 6.0 is the 60th multiple of 0.1; accumulating 0.1 sixty times lands a
  // hair off, so the sampling must be robust to that.
  const auto points = kpi::cdf_points({rec(6.0)}, 0.1);
  CHECK(cdf_at(points, 6.0) == 1.0);
  CHECK(cdf_at(points, 5.95) == 0.0);
  CHECK(points.back().fraction == 1.0);
}

TEST_CASE("merging partial summaries equals one pass over everything") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> lat(5.0, 40.0);
  std::vector<pipelines::DeliveryRecord> records;
  for (int i = 0; i < 500; ++i) {
    const bool ok = gen() % 4 != 0;
    records.push_back(rec(ok ? lat(gen) : kInf, i));
  }
  const auto whole = kpi::summarize(records);

  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(records.begin(), records.end(), gen);
    const size_t parts = 1 + gen() % 7;
    kpi::KpiSummary acc;  // identity: zero counts
    size_t at = 0;
    for (size_t p = 0; p < parts; ++p) {
      const size_t take = (p + 1 == parts) ? records.size() - at
                                           : gen() % (records.size() - at + 1);
      std::vector<pipelines::DeliveryRecord> chunk(
          records.begin() + at, records.begin() + at + take);
      at += take;
      acc = kpi::merge(acc, kpi::summarize(chunk));
    }
    CHECK(acc.n_expected == whole.n_expected);
    CHECK(acc.n_success == whole.n_success);
    CHECK(acc.latency_sum_ms ==
          doctest::Approx(whole.latency_sum_ms).epsilon(1e-12));
    CHECK(acc.success_rate == doctest::Approx(whole.success_rate).epsilon(1e-12));
    CHECK(acc.mean_latency_ms ==
          doctest::Approx(whole.mean_latency_ms).epsilon(1e-12));
  }
}

TEST_CASE("records csv is fixed-header three-decimal with INF literals") {
  const std::string path = "kpi_test_records.csv";
  std::vector<pipelines::DeliveryRecord> records = {rec(6.0, 3, 7), rec(kInf, 4, 8)};
  records[0].mode = pipelines::Mode::Multicast;
  records[0].ul_attempts = 1;
  records[0].dl_attempts = 2;
  kpi::write_records_csv(path, records);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header, line1, line2;
  std::getline(in, header);
  std::getline(in, line1);
  std::getline(in, line2);
  CHECK(header ==
        "packet_id,tx_id,rx_id,gen_ms,e2e_ms,ul_ms,dl_ms,ul_attempts,dl_attempts,mode");
  CHECK(line1 == "3,0,7,0.000,6.000,2.500,3.500,1,2,multicast");
  CHECK(line2.find("INF") != std::string::npos);
  std::remove(path.c_str());
}

}  // TEST_SUITE("kpi")
