#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "oracle/oracles.hpp"
#include "spdebias/random.hpp"
#include "spdebias/rideshare.hpp"
#include "spdebias/stats.hpp"

using namespace spdebias;

namespace {

SynthData small_city(std::size_t rides, std::size_t drivers, std::uint64_t seed) {
  SynthParams p = SynthParams::city_default();
  p.n_rides = rides;
  p.n_drivers = drivers;
  return synth_rides(p, seed);
}

// Admissible pairs by exhaustive scan.
std::set<std::pair<int, int>> brute_pairs(const std::vector<RideRecord>& rides,
                                          const std::vector<DriverRecord>& drivers,
                                          std::size_t k) {
  auto feasible = [&](int i, int j) {
    return rides[i].request_time >= drivers[j].online_time &&
           rides[i].request_time < drivers[j].online_time + drivers[j].window;
  };
  auto dist = [&](int i, int j) { return haversine(drivers[j].location, rides[i].pickup); };
  std::set<std::pair<int, int>> out;
  const int n = static_cast<int>(rides.size()), m = static_cast<int>(drivers.size());
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> c;
    for (int j = 0; j < m; ++j) {
      if (feasible(i, j)) c.push_back({dist(i, j), j});
    }
    std::sort(c.begin(), c.end());
    for (std::size_t q = 0; q < std::min(k, c.size()); ++q) out.insert({i, c[q].second});
  }
  for (int j = 0; j < m; ++j) {
    std::vector<std::pair<double, int>> c;
    for (int i = 0; i < n; ++i) {
      if (feasible(i, j)) c.push_back({dist(i, j), i});
    }
    std::sort(c.begin(), c.end());
    for (std::size_t q = 0; q < std::min(k, c.size()); ++q) out.insert({c[q].second, j});
  }
  std::set<std::pair<int, int>> positive;
  for (const auto& [i, j] : out) {
    if (haversine(rides[i].pickup, rides[i].dropoff) - dist(i, j) > 0.0) positive.insert({i, j});
  }
  return positive;
}

}  // namespace

TEST(Haversine, ClosedFormDistances) {
  EXPECT_EQ(haversine({10.0, 20.0}, {10.0, 20.0}), 0.0);
  EXPECT_NEAR(haversine({0.0, 0.0}, {0.0, 180.0}), std::numbers::pi * 6371.0, 1e-6);
  EXPECT_NEAR(haversine({0.0, 0.0}, {0.0, 1.0}), 6371.0 * std::numbers::pi / 180.0, 1e-9);
  EXPECT_DOUBLE_EQ(haversine({1.0, 2.0}, {3.0, 4.0}), haversine({3.0, 4.0}, {1.0, 2.0}));
}

TEST(BuildMatching, SingleEdgeAtDriverLocation) {
  const GeoPoint origin{40.7, -74.0};
  RideRecord ride;
  ride.pickup = origin;
  ride.dropoff = {40.7 + 5.0 / 111.195, -74.0};
  ride.request_time = 100.0;
  DriverRecord driver;
  driver.location = origin;
  driver.online_time = 50.0;
  const RideshareMarket m = build_matching({ride}, {driver}, 50);
  ASSERT_EQ(m.inst.edge_count(), 1u);
  EXPECT_NEAR(m.inst.edges()[0].v, 5.0, 1e-3);
}

TEST(BuildMatching, OutOfWindowRideIsIsolated) {
  RideRecord near, late;
  near.pickup = late.pickup = {40.7, -74.0};
  near.dropoff = late.dropoff = {40.75, -74.0};
  near.request_time = 10.0;
  late.request_time = 5000.0;
  DriverRecord driver;
  driver.location = {40.7, -74.0};
  driver.online_time = 0.0;
  const RideshareMarket m = build_matching({near, late}, {driver}, 50);
  EXPECT_TRUE(m.inst.demand_isolated(1));
  EXPECT_EQ(m.isolated_rides, 1u);
}

TEST(BuildMatching, NegativeEfficiencyIsExcluded) {
  RideRecord ride;
  ride.pickup = {40.7, -74.0};
  ride.dropoff = {40.7 + 2.0 / 111.195, -74.0};
  ride.request_time = 10.0;
  DriverRecord far, near;
  far.location = {40.7 - 3.0 / 111.195, -74.0};
  near.location = ride.pickup;
  const RideshareMarket m = build_matching({ride}, {far, near}, 50);
  ASSERT_EQ(m.inst.edge_count(), 1u);
  EXPECT_EQ(m.inst.edges()[0].j, 1);
  EXPECT_THROW(build_matching({ride}, {far}, 50), Error);
}

TEST(BuildMatching, MatchesExhaustiveNeighbourScan) {
  SynthParams p = SynthParams::city_default();
  p.n_rides = 300;
  p.n_drivers = 250;
  p.driver_window = 20000.0;
  const SynthData data = synth_rides(p, 4);
  for (std::size_t k : {1u, 3u, 10u}) {
    const RideshareMarket m = build_matching(data.rides, data.drivers, k);
    std::set<std::pair<int, int>> got;
    for (const MatchEdge& e : m.inst.edges()) got.insert({e.i, e.j});
    EXPECT_EQ(got, brute_pairs(data.rides, data.drivers, k)) << "k=" << k;
  }
}

TEST(BuildMatching, SerialAndParallelAgree) {
  const SynthData data = small_city(800, 700, 8);
  const RideshareMarket a = build_matching(data.rides, data.drivers, 50, Execution::Serial);
  const RideshareMarket b = build_matching(data.rides, data.drivers, 50, Execution::Parallel);
  ASSERT_EQ(a.inst.edge_count(), b.inst.edge_count());
  for (std::size_t e = 0; e < a.inst.edge_count(); ++e) {
    EXPECT_EQ(a.inst.edges()[e].i, b.inst.edges()[e].i);
    EXPECT_EQ(a.inst.edges()[e].j, b.inst.edges()[e].j);
    EXPECT_EQ(a.inst.edges()[e].v, b.inst.edges()[e].v);
  }
}

TEST(SynthRides, EmptyDeterministicAndBounded) {
  SynthParams empty = SynthParams::city_default();
  EXPECT_TRUE(synth_rides(empty, 1).rides.empty());
  const SynthData a = small_city(50, 40, 3), b = small_city(50, 40, 3);
  for (std::size_t i = 0; i < a.rides.size(); ++i) {
    EXPECT_EQ(a.rides[i].pickup.lat, b.rides[i].pickup.lat);
    EXPECT_EQ(a.rides[i].request_time, b.rides[i].request_time);
  }
  SynthParams one;
  one.clusters = {{{40.7, -74.0}, 2.0, 1.0}};
  one.n_rides = 1000;
  const SynthData c = synth_rides(one, 5);
  double worst = 0.0;
  for (std::size_t i = 0; i < c.rides.size(); i += 7) {
    for (std::size_t j = 0; j < c.rides.size(); j += 5) {
      worst = std::max(worst, haversine(c.rides[i].pickup, c.rides[j].pickup));
    }
    EXPECT_GE(c.rides[i].request_time, 0.0);
    EXPECT_LT(c.rides[i].request_time, kSecondsPerDay);
  }
  EXPECT_LE(worst, 4.0 + 1e-9);
}

TEST(RideshareCsv, RoundTrip) {
  const SynthData data = small_city(20, 15, 6);
  const auto dir = std::filesystem::temp_directory_path() / "spdebias_rideshare_csv";
  std::filesystem::create_directories(dir);
  write_rides_csv((dir / "rides.csv").string(), data.rides);
  write_drivers_csv((dir / "drivers.csv").string(), data.drivers);
  const auto rides = read_rides_csv((dir / "rides.csv").string());
  const auto drivers = read_drivers_csv((dir / "drivers.csv").string());
  ASSERT_EQ(rides.size(), data.rides.size());
  ASSERT_EQ(drivers.size(), data.drivers.size());
  for (std::size_t i = 0; i < rides.size(); ++i) {
    EXPECT_EQ(rides[i].pickup.lat, data.rides[i].pickup.lat);
    EXPECT_EQ(rides[i].dropoff.lon, data.rides[i].dropoff.lon);
    EXPECT_EQ(rides[i].request_time, data.rides[i].request_time);
  }
  EXPECT_THROW(read_drivers_csv((dir / "rides.csv").string()), Error);
  EXPECT_THROW(read_rides_csv((dir / "missing.csv").string()), Error);
}

TEST(RideshareUnitTypes, PerturbedDualsEqualLeftMarginals) {
  SynthParams p = SynthParams::city_default();
  p.n_rides = 25;
  p.n_drivers = 20;
  p.driver_window = kSecondsPerDay;
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SynthData data = synth_rides(p, seed);
    RideshareMarket m;
    try {
      m = build_matching(data.rides, data.drivers, 50);
    } catch (const Error&) {
      continue;
    }
    const int n = m.inst.n_d();
    const SolveResult plain = solve_matching(m.inst, m.d, m.s);
    EXPECT_TRUE(plain.degenerate || plain.objective == 0.0);
    const SolveResult shadow = solve_matching(m.inst, perturb_demand(m.d, 0.5 / n), m.s);
    EXPECT_FALSE(shadow.degenerate);
    const Vector left = oracle::marginal_bruteforce(m.inst, m.d, m.s, true);
    for (int i = 0; i < n; ++i) ASSERT_NEAR(shadow.a[i], left[i], 1e-8);
    ++checked;
  }
  EXPECT_GE(checked, 15);
}

TEST(RideshareUnitTypes, MoreDriversNeverLowerEfficiency) {
  const SynthData data = small_city(200, 200, 12);
  double previous = 0.0;
  for (std::size_t drivers : {50u, 100u, 150u, 200u}) {
    const std::vector<DriverRecord> subset(data.drivers.begin(), data.drivers.begin() + drivers);
    const RideshareMarket m = build_matching(data.rides, subset, 200);
    const double value = phi(m.inst, m.d, m.s);
    EXPECT_GE(value, previous - 1e-9);
    previous = value;
  }
}

TEST(RideshareExperiment, ZeroEffectHasZeroMeans) {
  RideshareConfig c;
  c.n_rides = 300;
  c.n_drivers = 300;
  c.effect_e = 0.0;
  c.replications = 20;
  const RideshareReport r = run_rideshare_experiment(c);
  EXPECT_EQ(r.true_effect, 0.0);
  std::vector<double> rct, sp;
  for (const auto& run : r.runs) {
    rct.push_back(run.rct_estimate);
    sp.push_back(run.sp_estimate);
  }
  const Moments mr = moments(rct), ms = moments(sp);
  EXPECT_NEAR(mr.mean, 0.0, 3.0 * mr.std_error);
  EXPECT_NEAR(ms.mean, 0.0, 3.0 * ms.std_error);
}

TEST(RideshareExperiment, AbundantDriversKeepBothEstimatorsClose) {
  RideshareConfig c;
  c.n_rides = 200;
  c.n_drivers = 2000;
  c.effect_e = 0.05;
  c.replications = 20;
  const RideshareReport r = run_rideshare_experiment(c);
  EXPECT_LT(std::abs(r.rct_estimate - r.true_effect), 0.1 * r.true_effect);
  EXPECT_LT(std::abs(r.sp_estimate - r.true_effect), 0.1 * r.true_effect);
}

TEST(RideshareExperiment, ScarceDriversFavourShadowPrices) {
  RideshareConfig c;
  c.n_rides = 1000;
  c.n_drivers = 1000;
  c.effect_e = 0.10;
  c.replications = 20;
  const RideshareReport r = run_rideshare_experiment(c);
  EXPECT_LT(std::abs(r.sp_estimate - r.true_effect), std::abs(r.rct_estimate - r.true_effect));
}

TEST(RideshareExperiment, SerialAndParallelAreIdentical) {
  RideshareConfig c;
  c.n_rides = 300;
  c.n_drivers = 300;
  c.replications = 8;
  const RideshareReport p = run_rideshare_experiment(c, Execution::Parallel);
  const RideshareReport s = run_rideshare_experiment(c, Execution::Serial);
  for (std::size_t k = 0; k < p.runs.size(); ++k) {
    EXPECT_EQ(p.runs[k].true_effect, s.runs[k].true_effect);
    EXPECT_EQ(p.runs[k].rct_estimate, s.runs[k].rct_estimate);
    EXPECT_EQ(p.runs[k].sp_estimate, s.runs[k].sp_estimate);
  }
}

TEST(RideshareExperiment, AntitheticPairsSwapLabels) {
  RideshareConfig c;
  c.n_rides = 200;
  c.n_drivers = 200;
  c.replications = 4;
  const RideshareReport r = run_rideshare_experiment(c);
  EXPECT_EQ(r.runs[0].treated + r.runs[1].treated, 200u);
  c.rho = 0.3;
  EXPECT_THROW(run_rideshare_experiment(c), Error);
  c.antithetic = false;
  EXPECT_NO_THROW(run_rideshare_experiment(c));
}
