#include "spdebias/rideshare.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <utility>

#include "spdebias/io.hpp"
#include "spdebias/parallel.hpp"
#include "spdebias/random.hpp"
#include "spdebias/stats.hpp"

namespace spdebias {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Point at great-circle distance `km` from `from` along `bearing` (radians).
GeoPoint destination(const GeoPoint& from, double km, double bearing) {
  const double delta = km / kEarthRadiusKm;
  const double phi1 = from.lat * kDeg;
  const double lam1 = from.lon * kDeg;
  const double phi2 =
      std::asin(std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(bearing));
  const double lam2 = lam1 + std::atan2(std::sin(bearing) * std::sin(delta) * std::cos(phi1),
                                        std::cos(delta) - std::sin(phi1) * std::sin(phi2));
  double lon = lam2 / kDeg;
  lon = std::fmod(lon + 540.0, 360.0) - 180.0;
  return {phi2 / kDeg, lon};
}

}  // namespace

double haversine(const GeoPoint& p, const GeoPoint& q) {
  const double dphi = (q.lat - p.lat) * kDeg;
  const double dlam = (q.lon - p.lon) * kDeg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlam / 2.0);
  const double h = s1 * s1 + std::cos(p.lat * kDeg) * std::cos(q.lat * kDeg) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

SynthParams SynthParams::city_default() {
  SynthParams params;
  params.clusters = {
      {{40.758, -73.985}, 0.9, 0.55},
      {{40.722, -74.001}, 0.6, 0.25},
      {{40.690, -73.960}, 1.2, 0.20},
  };
  return params;
}

SynthData synth_rides(const SynthParams& params, std::uint64_t seed) {
  SynthData out;
  if (params.n_rides == 0 && params.n_drivers == 0) return out;
  if (params.clusters.empty()) {
    throw Error(ErrorCode::InvalidArgument, "synthetic data needs at least one cluster");
  }
  Vector weights;
  for (const SpatialCluster& c : params.clusters) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::exponential_distribution<double> trip(1.0 / params.trip_mean_km);
  Rng rng = make_rng(seed);

  auto draw_ride = [&]() {
    const SpatialCluster& c = params.clusters[pick(rng)];
    RideRecord ride;
    const double r = c.radius_km * std::sqrt(uniform01(rng));
    ride.pickup = destination(c.center, r, 2.0 * std::numbers::pi * uniform01(rng));
    const double length = params.trip_min_km + trip(rng);
    ride.dropoff = destination(ride.pickup, length, 2.0 * std::numbers::pi * uniform01(rng));
    ride.request_time = std::floor(kSecondsPerDay * uniform01(rng));
    return ride;
  };

  out.rides.reserve(params.n_rides);
  for (std::size_t k = 0; k < params.n_rides; ++k) out.rides.push_back(draw_ride());
  out.drivers.reserve(params.n_drivers);
  for (std::size_t k = 0; k < params.n_drivers; ++k) {
    const RideRecord origin = draw_ride();
    DriverRecord driver;
    driver.location = origin.dropoff;
    driver.online_time = std::floor(kSecondsPerDay * uniform01(rng));
    driver.window = params.driver_window;
    out.drivers.push_back(driver);
  }
  return out;
}

std::vector<RideRecord> read_rides_csv(const std::string& path) {
  const CsvTable table =
      read_csv(path, {"request_time_s", "pickup_lat", "pickup_lon", "dropoff_lat", "dropoff_lon"});
  std::vector<RideRecord> rides;
  for (const auto& row : table.rows) {
    RideRecord ride;
    ride.request_time = row[0];
    ride.pickup = {row[1], row[2]};
    ride.dropoff = {row[3], row[4]};
    if (ride.request_time < 0.0 || ride.request_time >= kSecondsPerDay ||
        std::abs(ride.pickup.lat) > 90.0 || std::abs(ride.dropoff.lat) > 90.0 ||
        std::abs(ride.pickup.lon) > 180.0 || std::abs(ride.dropoff.lon) > 180.0) {
      throw Error(ErrorCode::Io, path + ": ride record out of range");
    }
    rides.push_back(ride);
  }
  return rides;
}

std::vector<DriverRecord> read_drivers_csv(const std::string& path, double window) {
  if (!(window > 0.0)) throw Error(ErrorCode::InvalidArgument, "driver window must be positive");
  const CsvTable table = read_csv(path, {"online_time_s", "lat", "lon"});
  std::vector<DriverRecord> drivers;
  for (const auto& row : table.rows) {
    DriverRecord driver;
    driver.online_time = row[0];
    driver.location = {row[1], row[2]};
    driver.window = window;
    if (driver.online_time < 0.0 || driver.online_time >= kSecondsPerDay ||
        std::abs(driver.location.lat) > 90.0 || std::abs(driver.location.lon) > 180.0) {
      throw Error(ErrorCode::Io, path + ": driver record out of range");
    }
    drivers.push_back(driver);
  }
  return drivers;
}

void write_rides_csv(const std::string& path, const std::vector<RideRecord>& rides) {
  std::ostringstream out;
  out.precision(17);
  out << "request_time_s,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon\n";
  for (const RideRecord& r : rides) {
    out << static_cast<long long>(r.request_time) << ',' << r.pickup.lat << ',' << r.pickup.lon
        << ',' << r.dropoff.lat << ',' << r.dropoff.lon << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_drivers_csv(const std::string& path, const std::vector<DriverRecord>& drivers) {
  std::ostringstream out;
  out.precision(17);
  out << "online_time_s,lat,lon\n";
  for (const DriverRecord& d : drivers) {
    out << static_cast<long long>(d.online_time) << ',' << d.location.lat << ','
        << d.location.lon << '\n';
  }
  write_file_atomic(path, out.str());
}

namespace {

bool time_feasible(const RideRecord& ride, const DriverRecord& driver) {
  return ride.request_time >= driver.online_time &&
         ride.request_time < driver.online_time + driver.window;
}

using Candidate = std::pair<double, int>;  // (pickup distance, index)

void keep_nearest(std::vector<Candidate>& c, std::size_t k) {
  if (c.size() > k) {
    std::partial_sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k), c.end());
    c.resize(k);
  }
}

}  // namespace

RideshareMarket build_matching(const std::vector<RideRecord>& rides,
                               const std::vector<DriverRecord>& drivers, std::size_t k,
                               Execution execution) {
  if (rides.empty() || drivers.empty()) {
    throw Error(ErrorCode::EmptyGraph, "rideshare market needs rides and drivers");
  }
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const bool parallel = execution == Execution::Parallel;

  std::vector<int> driver_order(drivers.size());
  std::iota(driver_order.begin(), driver_order.end(), 0);
  std::sort(driver_order.begin(), driver_order.end(), [&](int l, int r) {
    return drivers[l].online_time != drivers[r].online_time
               ? drivers[l].online_time < drivers[r].online_time
               : l < r;
  });
  std::vector<double> driver_times;
  double max_window = 0.0;
  for (int j : driver_order) {
    driver_times.push_back(drivers[j].online_time);
    max_window = std::max(max_window, drivers[j].window);
  }
  std::vector<int> ride_order(rides.size());
  std::iota(ride_order.begin(), ride_order.end(), 0);
  std::sort(ride_order.begin(), ride_order.end(), [&](int l, int r) {
    return rides[l].request_time != rides[r].request_time
               ? rides[l].request_time < rides[r].request_time
               : l < r;
  });
  std::vector<double> ride_times;
  for (int i : ride_order) ride_times.push_back(rides[i].request_time);

  // Ride side: nearest time-feasible drivers of each ride.
  std::vector<std::vector<Candidate>> ride_side(rides.size());
  for_each_index(rides.size(), parallel, [&](std::size_t i) {
    const RideRecord& ride = rides[i];
    const auto lo = std::upper_bound(driver_times.begin(), driver_times.end(),
                                     ride.request_time - max_window);
    const auto hi = std::upper_bound(driver_times.begin(), driver_times.end(), ride.request_time);
    std::vector<Candidate>& c = ride_side[i];
    for (auto it = lo; it != hi; ++it) {
      const int j = driver_order[static_cast<std::size_t>(it - driver_times.begin())];
      if (!time_feasible(ride, drivers[j])) continue;
      c.emplace_back(haversine(drivers[j].location, ride.pickup), j);
    }
    keep_nearest(c, k);
  });

  // Driver side: nearest time-feasible rides of each driver.
  std::vector<std::vector<Candidate>> driver_side(drivers.size());
  for_each_index(drivers.size(), parallel, [&](std::size_t j) {
    const DriverRecord& driver = drivers[j];
    const auto lo = std::lower_bound(ride_times.begin(), ride_times.end(), driver.online_time);
    const auto hi =
        std::lower_bound(ride_times.begin(), ride_times.end(), driver.online_time + driver.window);
    std::vector<Candidate>& c = driver_side[j];
    for (auto it = lo; it != hi; ++it) {
      const int i = ride_order[static_cast<std::size_t>(it - ride_times.begin())];
      if (!time_feasible(rides[i], driver)) continue;
      c.emplace_back(haversine(driver.location, rides[i].pickup), i);
    }
    keep_nearest(c, k);
  });

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < rides.size(); ++i) {
    for (const Candidate& c : ride_side[i]) pairs.emplace_back(static_cast<int>(i), c.second);
  }
  for (std::size_t j = 0; j < drivers.size(); ++j) {
    for (const Candidate& c : driver_side[j]) pairs.emplace_back(c.second, static_cast<int>(j));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<MatchEdge> edges;
  for (const auto& [i, j] : pairs) {
    const double ride_km = haversine(rides[i].pickup, rides[i].dropoff);
    const double pickup_km = haversine(drivers[j].location, rides[i].pickup);
    const double efficiency = ride_km - pickup_km;
    if (efficiency > 0.0) edges.push_back({i, j, efficiency});
  }
  if (edges.empty()) throw Error(ErrorCode::EmptyGraph, "no admissible ride-driver pairs");

  RideshareMarket market{MatchingInstance(static_cast<int>(rides.size()),
                                          static_cast<int>(drivers.size()), std::move(edges)),
                         Vector(rides.size(), 1.0), Vector(drivers.size(), 1.0), 0};
  for (int i = 0; i < market.inst.n_d(); ++i) {
    if (market.inst.demand_isolated(i)) ++market.isolated_rides;
  }
  return market;
}

RideshareReport run_rideshare_on_market(const RideshareMarket& market,
                                        const RideshareConfig& config, Execution execution) {
  if (!(config.effect_e > -1.0)) throw Error(ErrorCode::InvalidArgument, "effect e must be > -1");
  if (!(config.rho > 0.0 && config.rho < 1.0)) {
    throw Error(ErrorCode::OutOfRange, "rho must lie in (0, 1)");
  }
  if (config.replications < 1) throw Error(ErrorCode::InvalidArgument, "need a replication");
  if (config.antithetic && config.rho != 0.5) {
    throw Error(ErrorCode::InvalidArgument, "antithetic replications require rho = 0.5");
  }
  const MatchingInstance& inst = market.inst;
  const auto n = static_cast<std::size_t>(inst.n_d());
  const double rho = config.rho;
  // Control rides survive with probability keep, so control demand is the
  // treated demand thinned by 1 / (1 + e).
  const double keep = std::min(1.0, 1.0 / (1.0 + config.effect_e));
  const double phi_treated = phi(inst, market.d, market.s);

  RideshareReport report;
  report.n_rides = n;
  report.n_drivers = static_cast<std::size_t>(inst.n_s());
  report.effect_e = config.effect_e;
  report.replications = config.replications;
  report.runs.resize(config.replications);

  for_each_index(config.replications, execution == Execution::Parallel, [&](std::size_t r) {
    // Antithetic pairs (2m, 2m+1) share one stream; the second member swaps
    // the treatment and control labels, which keeps each replication a
    // complete randomization with fraction rho when rho = 0.5.
    const bool mirrored = config.antithetic && r % 2 == 1;
    const std::size_t stream = config.antithetic ? r / 2 : r;
    Rng rng = make_rng(child_seed(config.seed, {stream}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) {
      const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k));
      std::swap(order[k - 1], order[std::min(pick, k - 1)]);
    }
    const auto n_treated = static_cast<std::size_t>(std::llround(rho * static_cast<double>(n)));
    std::vector<bool> treated(n, mirrored);
    for (std::size_t k = 0; k < n_treated; ++k) treated[order[k]] = !mirrored;
    std::vector<bool> kept(n);
    for (std::size_t i = 0; i < n; ++i) kept[i] = uniform01(rng) < keep;

    Vector d_control(n, 0.0);
    Vector d_experiment(n, 0.0);
    std::size_t present = 0;
    RideshareReplication run;
    for (std::size_t i = 0; i < n; ++i) {
      d_control[i] = kept[i] ? 1.0 : 0.0;
      if (treated[i] || kept[i]) {
        d_experiment[i] = 1.0;
        ++present;
      }
      if (treated[i]) ++run.treated;
      if (!treated[i] && kept[i]) ++run.control_kept;
    }
    run.true_effect = phi_treated - phi(inst, d_control, market.s);

    const SolveResult exp = solve_matching(inst, d_experiment, market.s);
    const double epsilon =
        config.epsilon > 0.0 ? config.epsilon : 1.0 / (2.0 * static_cast<double>(present));
    if (!(epsilon < 1.0 / static_cast<double>(present))) {
      throw Error(ErrorCode::EpsilonOutOfRange, "epsilon must be below 1/n_d");
    }
    Vector d_perturbed = d_experiment;
    for (double& x : d_perturbed) {
      if (x > 0.0) x -= epsilon;
    }
    const SolveResult shadow = solve_matching(inst, d_perturbed, market.s);

    double rct = 0.0;
    double sp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double weight = 0.0;
      if (treated[i]) {
        weight = 1.0 / rho;
      } else if (kept[i]) {
        weight = -1.0 / (1.0 - rho);
      } else {
        continue;
      }
      double value = 0.0;
      for (std::size_t k = inst.row_begin(static_cast<int>(i));
           k < inst.row_begin(static_cast<int>(i) + 1); ++k) {
        value += exp.x[k] * inst.edges()[k].v;
      }
      rct += weight * value;
      sp += weight * shadow.a[i];
    }
    run.rct_estimate = rct;
    run.sp_estimate = sp;
    report.runs[r] = run;
  });

  std::vector<double> truth, rct, sp;
  for (const RideshareReplication& run : report.runs) {
    truth.push_back(run.true_effect);
    rct.push_back(run.rct_estimate);
    sp.push_back(run.sp_estimate);
  }
  const Moments mt = moments(truth);
  const Moments mr = moments(rct);
  const Moments ms = moments(sp);
  report.true_effect = mt.mean;
  report.rct_estimate = mr.mean;
  report.sp_estimate = ms.mean;
  report.true_std = std::sqrt(mt.variance);
  report.rct_std = std::sqrt(mr.variance);
  report.sp_std = std::sqrt(ms.variance);
  return report;
}

RideshareMarket load_rideshare_market(const RideshareConfig& config, Execution execution) {
  std::vector<RideRecord> rides;
  std::vector<DriverRecord> drivers;
  if (!config.rides_csv.empty() || !config.drivers_csv.empty()) {
    if (config.rides_csv.empty() || config.drivers_csv.empty()) {
      throw Error(ErrorCode::Config, "rides_csv and drivers_csv must be given together");
    }
    rides = read_rides_csv(config.rides_csv);
    drivers = read_drivers_csv(config.drivers_csv, config.synth.driver_window);
  } else {
    SynthParams params = config.synth;
    params.n_rides = config.n_rides;
    params.n_drivers = config.n_drivers;
    SynthData data = synth_rides(params, child_seed(config.seed, {0xDA7A}));
    rides = std::move(data.rides);
    drivers = std::move(data.drivers);
  }
  return build_matching(rides, drivers, config.k, execution);
}

RideshareReport run_rideshare_experiment(const RideshareConfig& config, Execution execution) {
  return run_rideshare_on_market(load_rideshare_market(config, execution), config, execution);
}

std::vector<RideshareCell> run_rideshare_grid(const RideshareConfig& config, const Vector& ratios,
                                              const Vector& effects, Execution execution) {
  std::vector<RideshareCell> cells;
  const bool from_csv = !config.rides_csv.empty() || !config.drivers_csv.empty();
  const Vector ratio_list = ratios.empty() || from_csv ? Vector{0.0} : ratios;
  for (double ratio : ratio_list) {
    RideshareConfig cell = config;
    if (ratio > 0.0) {
      cell.n_rides = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(config.n_drivers)));
    }
    const RideshareMarket market = load_rideshare_market(cell, execution);
    const double actual = static_cast<double>(market.inst.n_d()) /
                          static_cast<double>(std::max(market.inst.n_s(), 1));
    for (double e : effects.empty() ? Vector{config.effect_e} : effects) {
      cell.effect_e = e;
      cells.push_back({actual, run_rideshare_on_market(market, cell, execution)});
    }
  }
  return cells;
}

}  // namespace spdebias
