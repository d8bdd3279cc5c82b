#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdebias/lp_core.hpp"
#include "spdebias/stochastic_sim.hpp"

namespace spdebias {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kSecondsPerDay = 86400.0;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

struct RideRecord {
  GeoPoint pickup;
  GeoPoint dropoff;
  double request_time = 0.0;  // seconds into the day
};

struct DriverRecord {
  GeoPoint location;
  double online_time = 0.0;
  double window = 900.0;
};

double haversine(const GeoPoint& p, const GeoPoint& q);

struct SpatialCluster {
  GeoPoint center;
  double radius_km = 2.0;
  double weight = 1.0;
};

struct SynthParams {
  std::size_t n_rides = 0;
  std::size_t n_drivers = 0;
  std::vector<SpatialCluster> clusters;
  double trip_mean_km = 6.0;  // exponential trip length on top of trip_min_km
  double trip_min_km = 1.0;
  double driver_window = 900.0;

  static SynthParams city_default();
};

struct SynthData {
  std::vector<RideRecord> rides;
  std::vector<DriverRecord> drivers;
};

/// Pickups uniform in clusters, dropoffs displaced by a random trip, drivers
/// waiting at the dropoff of an independently drawn ride; times uniform over
/// the day.
SynthData synth_rides(const SynthParams& params, std::uint64_t seed);

std::vector<RideRecord> read_rides_csv(const std::string& path);
std::vector<DriverRecord> read_drivers_csv(const std::string& path, double window = 900.0);
void write_rides_csv(const std::string& path, const std::vector<RideRecord>& rides);
void write_drivers_csv(const std::string& path, const std::vector<DriverRecord>& drivers);

struct RideshareMarket {
  MatchingInstance inst;  // one demand type per ride, one supply type per driver
  Vector d;               // all ones
  Vector s;               // all ones
  std::size_t isolated_rides = 0;
};

/// Admissible pairs: time feasible, within the k nearest (by pickup distance)
/// from either side, and with positive efficiency ride - pickup distance.
RideshareMarket build_matching(const std::vector<RideRecord>& rides,
                               const std::vector<DriverRecord>& drivers, std::size_t k,
                               Execution execution = Execution::Parallel);

struct RideshareConfig {
  std::size_t n_drivers = 2000;
  std::size_t n_rides = 2000;
  double effect_e = 0.10;
  std::size_t k = 50;
  double rho = 0.5;
  double epsilon = 0.0;  // 0 selects 1 / (2 n_d) per solve
  std::size_t replications = 20;
  bool antithetic = true;  // pair replications with complementary assignments
  std::uint64_t seed = 1;
  std::string rides_csv;    // empty: synthetic data
  std::string drivers_csv;  // empty: synthetic data
  SynthParams synth = SynthParams::city_default();
};

struct RideshareReplication {
  double true_effect = 0.0;
  double rct_estimate = 0.0;
  double sp_estimate = 0.0;
  std::size_t treated = 0;
  std::size_t control_kept = 0;
};

struct RideshareReport {
  double true_effect = 0.0;
  double rct_estimate = 0.0;
  double sp_estimate = 0.0;
  double true_std = 0.0;
  double rct_std = 0.0;
  double sp_std = 0.0;
  std::size_t n_rides = 0;
  std::size_t n_drivers = 0;
  double effect_e = 0.0;
  std::size_t replications = 0;
  std::vector<RideshareReplication> runs;
};

/// Market from the configured CSV files, or synthetic data drawn from the seed.
RideshareMarket load_rideshare_market(const RideshareConfig& config,
                                      Execution execution = Execution::Parallel);

RideshareReport run_rideshare_experiment(const RideshareConfig& config,
                                         Execution execution = Execution::Parallel);

/// Same experiment on an already built market.
RideshareReport run_rideshare_on_market(const RideshareMarket& market,
                                        const RideshareConfig& config,
                                        Execution execution = Execution::Parallel);

struct RideshareCell {
  double ratio = 0.0;  // rides per driver in the built market
  RideshareReport report;
};

/// One market per ratio (n_rides = ratio * n_drivers) and one experiment per
/// effect on it. Empty lists use the config values; CSV input ignores ratios.
std::vector<RideshareCell> run_rideshare_grid(const RideshareConfig& config, const Vector& ratios,
                                              const Vector& effects,
                                              Execution execution = Execution::Parallel);

}  // namespace spdebias
