#include "cli.hpp"

#include <omp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "spdebias/estimators.hpp"
#include "spdebias/io.hpp"
#include "spdebias/lp_core.hpp"
#include "spdebias/market.hpp"
#include "spdebias/parallel.hpp"
#include "spdebias/random.hpp"
#include "spdebias/rideshare.hpp"
#include "spdebias/secondary.hpp"
#include "spdebias/stats.hpp"
#include "spdebias/stochastic_sim.hpp"
#include "spdebias/supply_chain.hpp"

namespace spdebias::cli {

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace

json default_config() {
  json c;
  c["seed"] = 1;
  c["threads"] = 0;
  c["rho"] = 0.5;
  c["instance"] = {{"values", json::array({json::array({2.0, 1.0, 0.5, 0.25, 0.125, 0.0625})})},
                   {"mask", nullptr}};
  c["rates"] = {{"lambda", {1.5}},
                {"beta", {4.0}},
                {"pi", {1.0, 1.0, 1.0, 1.0, 1.0, 1.0}},
                {"lambda_tilde", nullptr},
                {"p", nullptr},
                {"q", nullptr}};
  c["fluid"] = {{"profile_tol", 1e-9}};
  c["simulate"] = {
      {"taus", {10.0, 100.0, 1000.0}}, {"replications", 200}, {"estimate_gte", true}};
  c["sweep"] = {{"factors", {1.0, 10.0, 100.0, 1000.0}}};
  c["secondary"] = {{"w", nullptr},
                    {"d", nullptr},
                    {"s", nullptr},
                    {"tau", 100.0},
                    {"replications", 200}};

  const RideshareConfig rs;
  json clusters = json::array();
  for (const SpatialCluster& cl : rs.synth.clusters) {
    clusters.push_back({{"lat", cl.center.lat},
                        {"lon", cl.center.lon},
                        {"radius_km", cl.radius_km},
                        {"weight", cl.weight}});
  }
  c["rideshare"] = {{"n_drivers", rs.n_drivers},
                    {"n_rides", rs.n_rides},
                    {"ratios", {0.5, 1.0, 1.5}},
                    {"effects", {0.02, 0.05, 0.10}},
                    {"effect_e", rs.effect_e},
                    {"k", rs.k},
                    {"rho", rs.rho},
                    {"epsilon", rs.epsilon},
                    {"replications", rs.replications},
                    {"antithetic", rs.antithetic},
                    {"rides_csv", rs.rides_csv},
                    {"drivers_csv", rs.drivers_csv},
                    {"synth",
                     {{"clusters", clusters},
                      {"trip_mean_km", rs.synth.trip_mean_km},
                      {"trip_min_km", rs.synth.trip_min_km},
                      {"driver_window", rs.synth.driver_window}}}};

  const SupplyChainConfig sc;
  json betas = json::array();
  for (const Vector& b : supply_chain_beta_grid()) betas.push_back(b);
  c["supplychain"] = {{"regime", to_string(sc.regime)},
                      {"lambda", nullptr},
                      {"betas", betas},
                      {"pi", sc.pi},
                      {"rho", sc.rho},
                      {"replications", sc.replications},
                      {"network_seed", sc.network_seed}};
  return c;
}

json merge_config(const json& base, const json& user, const std::string& path) {
  if (!base.is_object() || !user.is_object()) return user;
  json out = base;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    const json& b = base.at(it.key());
    if (b.is_object() && !it.value().is_object()) {
      throw ConfigError("config key '" + key + "' must be an object");
    }
    out[it.key()] = b.is_object() ? merge_config(b, it.value(), key) : it.value();
  }
  return out;
}

std::string config_digest(const json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

// Config readers. Every failure here is a config error.

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

Vector get_vector(const json& j, const char* key) { return get<Vector>(j, key); }

Matrix to_matrix(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) throw ConfigError(std::string(what) + " must be a matrix");
  const std::size_t cols = rows[0].size();
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw ConfigError(std::string(what) + " rows must have equal length");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!rows[i][k].is_number()) throw ConfigError(std::string(what) + " entries must be numbers");
      m(i, k) = rows[i][k].get<double>();
    }
  }
  return m;
}

MatchingInstance read_instance(const json& c) {
  const json& j = c.at("instance");
  const Matrix v = to_matrix(j.at("values"), "instance.values");
  if (j.at("mask").is_null()) return MatchingInstance(v);
  const Matrix mask = to_matrix(j.at("mask"), "instance.mask");
  return MatchingInstance(v, &mask);
}

MarketRates read_rates(const json& c, const MatchingInstance& inst) {
  const json& j = c.at("rates");
  MarketRates rates;
  if (!j.at("lambda_tilde").is_null()) {
    rates = MarketRates::from_intent(get_vector(j, "lambda_tilde"), get_vector(j, "p"),
                                     get_vector(j, "q"), get_vector(j, "pi"));
  } else {
    rates.lambda = get_vector(j, "lambda");
    rates.beta = get_vector(j, "beta");
    rates.pi = get_vector(j, "pi");
  }
  rates.validate(inst);
  return rates;
}

RideshareConfig read_rideshare(const json& c) {
  const json& j = c.at("rideshare");
  RideshareConfig rs;
  rs.n_drivers = get<std::size_t>(j, "n_drivers");
  rs.n_rides = get<std::size_t>(j, "n_rides");
  rs.effect_e = get<double>(j, "effect_e");
  rs.k = get<std::size_t>(j, "k");
  rs.rho = get<double>(j, "rho");
  rs.epsilon = get<double>(j, "epsilon");
  rs.replications = get<std::size_t>(j, "replications");
  rs.antithetic = get<bool>(j, "antithetic");
  rs.seed = get<std::uint64_t>(c, "seed");
  rs.rides_csv = get<std::string>(j, "rides_csv");
  rs.drivers_csv = get<std::string>(j, "drivers_csv");
  const json& s = j.at("synth");
  rs.synth.clusters.clear();
  for (const json& cl : s.at("clusters")) {
    SpatialCluster sc;
    sc.center.lat = get<double>(cl, "lat");
    sc.center.lon = get<double>(cl, "lon");
    sc.radius_km = get<double>(cl, "radius_km");
    sc.weight = get<double>(cl, "weight");
    rs.synth.clusters.push_back(sc);
  }
  rs.synth.trip_mean_km = get<double>(s, "trip_mean_km");
  rs.synth.trip_min_km = get<double>(s, "trip_min_km");
  rs.synth.driver_window = get<double>(s, "driver_window");
  return rs;
}

std::vector<SupplyChainConfig> read_supplychain(const json& c) {
  const json& j = c.at("supplychain");
  const SupplyRegime regime = parse_regime(get<std::string>(j, "regime"));
  SupplyChainConfig base = SupplyChainConfig::for_regime(regime);
  if (!j.at("lambda").is_null()) {
    base.lambda = get_vector(j, "lambda");
  } else if (regime == SupplyRegime::Custom) {
    throw ConfigError("supplychain.lambda is required for the custom regime");
  }
  base.pi = get_vector(j, "pi");
  base.rho = get<double>(j, "rho");
  base.replications = get<std::size_t>(j, "replications");
  base.network_seed = get<std::uint64_t>(j, "network_seed");
  base.seed = get<std::uint64_t>(c, "seed");
  std::vector<SupplyChainConfig> out;
  for (const json& b : j.at("betas")) {
    SupplyChainConfig cfg = base;
    cfg.beta = b.get<Vector>();
    cfg.validate();
    out.push_back(cfg);
  }
  return out;
}

// Output helpers.

struct Context {
  json config;
  std::filesystem::path out_dir;
  Execution execution = Execution::Parallel;
  std::vector<std::string> outputs;

  void write(const std::string& name, const std::string& contents) {
    const std::filesystem::path p = out_dir / name;
    write_file_atomic(p.string(), contents);
    outputs.push_back(p.string());
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row_strings(header); }
  Csv& row(const std::vector<double>& values) {
    std::vector<std::string> s;
    for (double v : values) s.push_back(format_number(v));
    return row_strings(s);
  }
  Csv& row_strings(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) text_ += ',';
      text_ += fields[k];
    }
    text_ += '\n';
    return *this;
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json moments_json(const Moments& m) {
  return {{"n", m.n}, {"mean", number(m.mean)}, {"stderr", number(m.std_error)}};
}

json report_json(const EstimateReport& r) {
  json j;
  j["delta_true"] = number(r.delta_true);
  j["delta_rct"] = number(r.delta_rct);
  j["delta_sp"] = number(r.delta_sp);
  j["bias_rct"] = number(r.bias_rct);
  j["bias_sp"] = number(r.bias_sp);
  j["vbar"] = r.vbar;
  j["a"] = r.a;
  j["degenerate"] = r.degenerate;
  j["breakpoint_ambiguous"] = r.breakpoint_ambiguous;
  j["sign_consistent"] = r.sign_consistent;
  j["symmetric"] = r.symmetric;
  j["zero_demand_type"] = r.zero_demand_type;
  return j;
}

std::string psi_csv(const PsiProfile& profile) {
  Csv csv({"eta", "value", "slope"});
  for (std::size_t k = 0; k < profile.breakpoints.size(); ++k) {
    const double slope = k < profile.slopes.size() ? profile.slopes[k] : std::nan("");
    csv.row({profile.breakpoints[k], profile.values[k], slope});
  }
  return csv.str();
}

// Commands.

void cmd_fluid(Context& ctx) {
  const MatchingInstance inst = read_instance(ctx.config);
  const MarketRates rates = read_rates(ctx.config, inst);
  const double rho = get<double>(ctx.config, "rho");
  const double tol = get<double>(ctx.config.at("fluid"), "profile_tol");
  const EstimateReport report = bias_report(inst, rates, rho);
  const PsiProfile profile = build_psi_profile(inst, rates, tol);
  json j = report_json(report);
  j["rho"] = rho;
  ctx.write_json("report.json", j);
  ctx.write("psi.csv", psi_csv(profile));
}

void cmd_psi(Context& ctx) {
  const MatchingInstance inst = read_instance(ctx.config);
  const MarketRates rates = read_rates(ctx.config, inst);
  const double tol = get<double>(ctx.config.at("fluid"), "profile_tol");
  ctx.write("psi.csv", psi_csv(build_psi_profile(inst, rates, tol)));
}

void cmd_simulate(Context& ctx) {
  const json& j = ctx.config.at("simulate");
  SimConfig sim;
  sim.inst = read_instance(ctx.config);
  sim.rates = read_rates(ctx.config, sim.inst);
  sim.taus = get_vector(j, "taus");
  sim.rho = get<double>(ctx.config, "rho");
  sim.replications = get<std::size_t>(j, "replications");
  sim.seed = get<std::uint64_t>(ctx.config, "seed");
  sim.estimate_gte = get<bool>(j, "estimate_gte");
  const MonteCarloStats stats = monte_carlo(sim, ctx.execution);

  Csv reps({"tau", "rho", "seed", "delta_rct_raw", "delta_rct_rb", "delta_sp", "degenerate_flag"});
  for (const EstimateRecord& r : stats.records) {
    reps.row_strings({format_number(r.tau), format_number(r.rho), std::to_string(r.seed),
                      format_number(r.delta_rct_raw), format_number(r.delta_rct_rb),
                      format_number(r.delta_sp), r.degenerate ? "1" : "0"});
  }
  Csv agg({"tau", "rct_raw_mean", "rct_raw_stderr", "rct_rb_mean", "rct_rb_stderr", "sp_mean",
           "sp_stderr", "gte_mean", "gte_stderr", "phi_scaled_mean", "var_sqrt_tau_rct_rb",
           "var_sqrt_tau_sp"});
  json rows = json::array();
  for (const MonteCarloRow& r : stats.rows) {
    agg.row({r.tau, r.rct_raw.mean, r.rct_raw.std_error, r.rct_rb.mean, r.rct_rb.std_error,
             r.sp.mean, r.sp.std_error, r.gte.n ? r.gte.mean : std::nan(""),
             r.gte.n ? r.gte.std_error : std::nan(""), r.phi_scaled.mean, r.var_sqrt_tau_rct_rb,
             r.var_sqrt_tau_sp});
    rows.push_back({{"tau", r.tau},
                    {"rct_raw", moments_json(r.rct_raw)},
                    {"rct_rb", moments_json(r.rct_rb)},
                    {"sp", moments_json(r.sp)},
                    {"gte", moments_json(r.gte)},
                    {"phi_scaled", moments_json(r.phi_scaled)},
                    {"var_sqrt_tau_rct_raw", number(r.var_sqrt_tau_rct_raw)},
                    {"var_sqrt_tau_rct_rb", number(r.var_sqrt_tau_rct_rb)},
                    {"var_sqrt_tau_sp", number(r.var_sqrt_tau_sp)},
                    {"degenerate_count", r.degenerate_count}});
  }
  json summary = {{"rho", sim.rho}, {"replications", sim.replications}, {"rows", rows}};
  const EstimateReport fluid = bias_report(sim.inst, sim.rates, sim.rho);
  summary["fluid"] = report_json(fluid);
  ctx.write("replications.csv", reps.str());
  ctx.write("aggregate.csv", agg.str());
  ctx.write_json("summary.json", summary);
}

void cmd_sweep(Context& ctx) {
  const MatchingInstance inst = read_instance(ctx.config);
  const MarketRates rates = read_rates(ctx.config, inst);
  const double rho = get<double>(ctx.config, "rho");
  const Vector factors = get_vector(ctx.config.at("sweep"), "factors");
  const std::vector<ScalingRow> rows = supply_scaling_sweep(inst, rates, factors, rho);
  Csv csv({"direction", "factor", "delta_true", "delta_rct", "delta_sp", "bias_rct", "bias_sp",
           "breakpoint_ambiguous"});
  json summary = json::array();
  for (const ScalingRow& r : rows) {
    const EstimateReport& e = r.report;
    csv.row_strings({r.direction, format_number(r.factor), format_number(e.delta_true),
                     format_number(e.delta_rct), format_number(e.delta_sp),
                     format_number(e.bias_rct), format_number(e.bias_sp),
                     e.breakpoint_ambiguous ? "1" : "0"});
    json j = report_json(e);
    j["direction"] = r.direction;
    j["factor"] = r.factor;
    summary.push_back(j);
  }
  ctx.write("sweep.csv", csv.str());
  ctx.write_json("summary.json", summary);
}

void cmd_secondary(Context& ctx) {
  const json& j = ctx.config.at("secondary");
  const MatchingInstance inst = read_instance(ctx.config);
  const MarketRates rates = read_rates(ctx.config, inst);
  const double rho = get<double>(ctx.config, "rho");
  SecondaryMetric w;
  if (j.at("w").is_null()) {
    w.w.assign(inst.edge_count(), 1.0);
  } else {
    w = SecondaryMetric::from_dense(inst, to_matrix(j.at("w"), "secondary.w"));
  }
  w.validate(inst);
  const Vector d = j.at("d").is_null() ? rates.demand_at(rho) : get_vector(j, "d");
  const Vector s = j.at("s").is_null() ? rates.pi : get_vector(j, "s");

  json summary;
  summary["d"] = d;
  summary["s"] = s;
  summary["phi_w"] = number(phi_secondary(inst, w, d, s));
  summary["a_w"] = secondary_duals(inst, w, d, s).a_w;

  const double tau = get<double>(j, "tau");
  const std::size_t reps = get<std::size_t>(j, "replications");
  const std::uint64_t seed = get<std::uint64_t>(ctx.config, "seed");
  struct Row {
    double rct_w = std::nan("");
    double sp_w = std::nan("");
    std::string status = "ok";
  };
  std::vector<Row> rows(reps);
  for_each_index(reps, ctx.execution == Execution::Parallel, [&](std::size_t r) {
    const std::uint64_t rs = child_seed(seed, {r});
    try {
      const ExperimentDraw draw = draw_experiment(rates, tau, rho, child_seed(rs, {0}));
      const CountVector d_exp = draw.D_experiment();
      const Vector dd = to_real(d_exp);
      const Vector ss = to_real(draw.S);
      const SolveResult solved = solve_matching(inst, dd, ss);
      const MatchSplit split =
          split_matches(inst, solved.x, draw.D_control, d_exp, child_seed(rs, {1}));
      const SecondaryEstimates est =
          secondary_estimates(draw, split, secondary_duals(inst, w, dd, ss), inst, w);
      rows[r].rct_w = est.rct_w;
      rows[r].sp_w = est.sp_w;
    } catch (const Error& e) {
      rows[r].status = to_string(e.code());
    }
  });
  Csv csv({"tau", "rho", "seed", "rct_w", "sp_w", "status"});
  std::vector<double> rct, sp;
  for (std::size_t r = 0; r < reps; ++r) {
    csv.row_strings({format_number(tau), format_number(rho),
                     std::to_string(child_seed(seed, {r})), format_number(rows[r].rct_w),
                     format_number(rows[r].sp_w), rows[r].status});
    if (rows[r].status == "ok") {
      rct.push_back(rows[r].rct_w);
      sp.push_back(rows[r].sp_w);
    }
  }
  summary["tau"] = tau;
  summary["rct_w"] = moments_json(moments(rct));
  summary["sp_w"] = moments_json(moments(sp));
  summary["skipped"] = reps - rct.size();
  ctx.write("replications.csv", csv.str());
  ctx.write_json("summary.json", summary);
}

void cmd_rideshare(Context& ctx) {
  const RideshareConfig rs = read_rideshare(ctx.config);
  const json& j = ctx.config.at("rideshare");
  const std::vector<RideshareCell> cells =
      run_rideshare_grid(rs, get_vector(j, "ratios"), get_vector(j, "effects"), ctx.execution);
  Csv reps({"ratio", "effect_e", "replication", "true_effect", "rct_estimate", "sp_estimate",
            "treated", "control_kept"});
  Csv agg({"ratio", "effect_e", "true_mean", "true_stderr", "rct_mean", "rct_stderr",
           "sp_mean", "sp_stderr", "rct_bias_mean", "rct_bias_stderr", "sp_bias_mean",
           "sp_bias_stderr"});
  json summary = json::array();
  for (const RideshareCell& cell : cells) {
    const RideshareReport& r = cell.report;
    std::vector<double> truth, rct, sp, rct_bias, sp_bias;
    for (std::size_t k = 0; k < r.runs.size(); ++k) {
      const RideshareReplication& x = r.runs[k];
      reps.row({cell.ratio, r.effect_e, static_cast<double>(k), x.true_effect, x.rct_estimate,
                x.sp_estimate, static_cast<double>(x.treated),
                static_cast<double>(x.control_kept)});
      truth.push_back(x.true_effect);
      rct.push_back(x.rct_estimate);
      sp.push_back(x.sp_estimate);
      rct_bias.push_back(x.rct_estimate - x.true_effect);
      sp_bias.push_back(x.sp_estimate - x.true_effect);
    }
    const Moments mt = moments(truth), mr = moments(rct), ms = moments(sp);
    const Moments br = moments(rct_bias), bs = moments(sp_bias);
    agg.row({cell.ratio, r.effect_e, mt.mean, mt.std_error, mr.mean, mr.std_error, ms.mean,
             ms.std_error, br.mean, br.std_error, bs.mean, bs.std_error});
    summary.push_back({{"ratio", cell.ratio},
                       {"true_effect", number(r.true_effect)},
                       {"rct_estimate", number(r.rct_estimate)},
                       {"sp_estimate", number(r.sp_estimate)},
                       {"true_std", number(r.true_std)},
                       {"rct_std", number(r.rct_std)},
                       {"sp_std", number(r.sp_std)},
                       {"n_rides", r.n_rides},
                       {"n_drivers", r.n_drivers},
                       {"effect_e", r.effect_e},
                       {"replications", r.replications}});
  }
  ctx.write("replications.csv", reps.str());
  ctx.write("aggregate.csv", agg.str());
  ctx.write_json("summary.json", summary);
}

void cmd_supplychain(Context& ctx) {
  const std::vector<SupplyChainConfig> configs = read_supplychain(ctx.config);
  Csv reps({"beta1", "beta2", "replication", "delta_true", "delta_rct", "delta_rct_raw",
            "delta_sp", "a1", "a2"});
  Csv agg({"beta1", "beta2", "true_mean", "true_stderr", "rct_mean", "rct_stderr",
           "rct_raw_mean", "rct_raw_stderr", "sp_mean", "sp_stderr"});
  json summary = json::array();
  for (const SupplyChainConfig& cfg : configs) {
    const SupplyChainReport r = run_supply_chain_experiment(cfg, ctx.execution);
    for (std::size_t k = 0; k < r.runs.size(); ++k) {
      const SupplyChainReplication& x = r.runs[k];
      reps.row({cfg.beta[0], cfg.beta[1], static_cast<double>(k), x.delta_true, x.delta_rct,
                x.delta_rct_raw, x.delta_sp, x.a1, x.a2});
    }
    agg.row({cfg.beta[0], cfg.beta[1], r.delta_true.mean, r.delta_true.std_error,
             r.delta_rct.mean, r.delta_rct.std_error, r.delta_rct_raw.mean,
             r.delta_rct_raw.std_error, r.delta_sp.mean, r.delta_sp.std_error});
    summary.push_back({{"beta", cfg.beta},
                       {"regime", to_string(cfg.regime)},
                       {"lambda", cfg.lambda},
                       {"delta_true", number(r.delta_true.mean)},
                       {"delta_true_stderr", number(r.delta_true.std_error)},
                       {"delta_rct", number(r.delta_rct.mean)},
                       {"delta_rct_stderr", number(r.delta_rct.std_error)},
                       {"delta_rct_raw", number(r.delta_rct_raw.mean)},
                       {"delta_rct_raw_stderr", number(r.delta_rct_raw.std_error)},
                       {"delta_sp", number(r.delta_sp.mean)},
                       {"delta_sp_stderr", number(r.delta_sp.std_error)},
                       {"replications", cfg.replications}});
  }
  ctx.write("replications.csv", reps.str());
  ctx.write("aggregate.csv", agg.str());
  ctx.write_json("summary.json", summary);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Shadow-price debiasing of marketplace experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir = ".";
  bool print_config = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "root seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default, 1 = serial)");
  app.add_flag("--print-config", print_config, "print the effective config and exit");

  std::optional<double> tau;
  std::optional<std::size_t> reps;
  std::string regime;
  auto* fluid = app.add_subcommand("fluid", "fluid bias report and Psi profile");
  auto* psi = app.add_subcommand("psi", "Psi profile");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo over matching cycles");
  simulate->add_option("--tau", tau, "single scale tau");
  simulate->add_option("--reps", reps, "replications per tau");
  auto* sweep = app.add_subcommand("sweep", "supply scaling sweep");
  auto* rideshare = app.add_subcommand("rideshare", "rideshare experiment grid");
  rideshare->add_option("--reps", reps, "replications per cell");
  auto* supplychain = app.add_subcommand("supplychain", "supply chain experiment");
  supplychain->add_option("--regime", regime, "undersupply | oversupply | custom");
  supplychain->add_option("--reps", reps, "replications per beta");
  auto* secondary = app.add_subcommand("secondary", "secondary metric shadow prices");
  secondary->add_option("--reps", reps, "replications");
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  Context ctx;
  try {
    json config = default_config();
    if (!config_path.empty()) config = merge_config(config, load_config_file(config_path));
    if (seed) config["seed"] = *seed;
    if (threads) config["threads"] = *threads;
    if (tau) config["simulate"]["taus"] = {*tau};
    if (reps) {
      const char* section = command == "simulate"      ? "simulate"
                            : command == "rideshare"   ? "rideshare"
                            : command == "supplychain" ? "supplychain"
                                                       : "secondary";
      config[section]["replications"] = *reps;
    }
    if (!regime.empty()) config["supplychain"]["regime"] = regime;
    if (print_config) {
      std::cout << config.dump(2) << "\n";
      return kExitOk;
    }
    const int n_threads = get<int>(config, "threads");
    if (n_threads < 0) throw ConfigError("threads must be nonnegative");
    if (n_threads > 0) omp_set_num_threads(n_threads);
    ctx.execution = n_threads == 1 ? Execution::Serial : Execution::Parallel;
    ctx.config = std::move(config);
    ctx.out_dir = out_dir;
    std::filesystem::create_directories(ctx.out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string started = utc_now();
  try {
    if (sub == fluid) cmd_fluid(ctx);
    else if (sub == psi) cmd_psi(ctx);
    else if (sub == simulate) cmd_simulate(ctx);
    else if (sub == sweep) cmd_sweep(ctx);
    else if (sub == rideshare) cmd_rideshare(ctx);
    else if (sub == supplychain) cmd_supplychain(ctx);
    else if (sub == secondary) cmd_secondary(ctx);
    json manifest = {{"command", command},
                     {"config_digest", config_digest(ctx.config)},
                     {"seed", ctx.config.at("seed")},
                     {"tool_version", kToolVersion},
                     {"started_utc", started},
                     {"finished_utc", utc_now()},
                     {"outputs", ctx.outputs}};
    ctx.write_json("manifest.json", manifest);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    const bool config_side = e.code() == ErrorCode::Config || e.code() == ErrorCode::Io ||
                             e.code() == ErrorCode::DimensionMismatch ||
                             e.code() == ErrorCode::InvalidArgument ||
                             e.code() == ErrorCode::OutOfRange;
    std::cerr << (config_side ? "config error: " : "solver error: ") << e.what() << "\n";
    return config_side ? kExitConfig : kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace spdebias::cli
