#include "stabscope/cli.hpp"

#include "stabscope/evolution.hpp"
#include "stabscope/quasimodes.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stabscope::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char *kVersion = "0.1.0";

// Typed access to a validated config object.
class Config {
 public:
  Config(json doc, const std::string &command, const std::set<std::string> &allowed)
      : doc_(std::move(doc)), command_(command) {
    if (doc_.is_null()) doc_ = json::object();
    if (!doc_.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto &[key, value] : doc_.items()) {
      if (!allowed.count(key))
        throw ValidationError("config key '" + key + "' is not recognized by command '" + command + "'");
    }
  }

  bool has(const std::string &key) const { return doc_.contains(key); }

  double number(const std::string &key, double fallback) const {
    if (!has(key)) return fallback;
    const auto &v = doc_.at(key);
    if (!v.is_number()) throw ValidationError("config key '" + key + "' must be a number");
    return v.get<double>();
  }

  int integer(const std::string &key, int fallback) const {
    if (!has(key)) return fallback;
    const auto &v = doc_.at(key);
    if (!v.is_number_integer()) throw ValidationError("config key '" + key + "' must be an integer");
    return v.get<int>();
  }

  bool flag(const std::string &key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto &v = doc_.at(key);
    if (!v.is_boolean()) throw ValidationError("config key '" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string &key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const auto &v = doc_.at(key);
    if (!v.is_array()) throw ValidationError("config key '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto &e : v) {
      if (!e.is_number()) throw ValidationError("config key '" + key + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Vector point(const std::string &key, int dim, double fill) const {
    if (!has(key)) return Vector::Constant(dim, fill);
    const auto values = numbers(key, {});
    if (static_cast<int>(values.size()) != dim)
      throw ValidationError("config key '" + key + "' must have " + std::to_string(dim) + " entries");
    return Eigen::Map<const Vector>(values.data(), dim);
  }

  Potential potential() const {
    if (!has("potential")) return builtin_potential("harmonic", 1);
    const auto &p = doc_.at("potential");
    if (!p.is_object()) throw ValidationError("config key 'potential' must be an object");
    for (const auto &[key, value] : p.items())
      if (key != "name" && key != "dim" && key != "params")
        throw ValidationError("config key 'potential." + key + "' is not recognized");
    const std::string name = p.value("name", std::string("harmonic"));
    const int dim = p.value("dim", 1);
    return builtin_potential(name, dim, params(p));
  }

  Damping damping(int dim) const {
    if (!has("damping")) return builtin_damping("constant", dim);
    const auto &p = doc_.at("damping");
    if (!p.is_object()) throw ValidationError("config key 'damping' must be an object");
    for (const auto &[key, value] : p.items())
      if (key != "name" && key != "params")
        throw ValidationError("config key 'damping." + key + "' is not recognized");
    return builtin_damping(p.value("name", std::string("constant")), dim, params(p));
  }

  const json &doc() const { return doc_; }

 private:
  static ParamMap params(const json &p) {
    ParamMap out;
    if (!p.contains("params")) return out;
    if (!p.at("params").is_object()) throw ValidationError("'params' must be an object of numbers");
    for (const auto &[key, value] : p.at("params").items()) {
      if (!value.is_number()) throw ValidationError("parameter '" + key + "' must be a number");
      out[key] = value.get<double>();
    }
    return out;
  }

  json doc_;
  std::string command_;
};

std::uint64_t fnv1a(const std::string &text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

// Collects artifacts written under one output directory.
class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string &name) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValidationError("cannot write artifact " + p.string());
    artifacts_.push_back(name);
    return out;
  }

  void write_json(const std::string &name, const json &doc) { open(name) << doc.dump(2) << '\n'; }

  const std::vector<std::string> &artifacts() const { return artifacts_; }
  const fs::path &dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> artifacts_;
};

json vec_json(const Vector &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json params_json(const ParamMap &p) {
  json o = json::object();
  for (const auto &[k, v] : p) o[k] = v;
  return o;
}

json report_json(const ConditionReport &r) {
  json trend = json::array();
  for (const auto &[p, v] : r.trend) trend.push_back({{"param", p}, {"infimum", v}});
  json samples = json::array();
  for (const auto &s : r.samples) {
    json row = {{"param", s.param}, {"x", vec_json(s.x)}};
    if (s.direction.size() > 0) row["direction"] = vec_json(s.direction);
    row["value"] = s.value;
    samples.push_back(row);
  }
  return {{"tag", r.tag},        {"params", params_json(r.params)}, {"threshold", r.threshold},
          {"infimum", r.infimum}, {"pass", r.pass},                  {"trend", trend},
          {"samples", samples}};
}

void write_report(Output &out, const std::string &stem, const ConditionReport &r) {
  out.write_json(stem + ".json", report_json(r));
  auto csv = out.open(stem + ".csv");
  const Eigen::Index d = r.samples.empty() ? 0 : r.samples.front().x.size();
  csv << "param";
  for (Eigen::Index i = 1; i <= d; ++i) csv << ",x_" << i;
  for (Eigen::Index i = 1; i <= d; ++i) csv << ",dir_" << i;
  csv << ",value\n" << std::setprecision(17);
  for (const auto &s : r.samples) {
    csv << s.param;
    for (Eigen::Index i = 0; i < d; ++i) csv << ',' << s.x(i);
    for (Eigen::Index i = 0; i < d; ++i) csv << ',' << (s.direction.size() == d ? s.direction(i) : 0.0);
    csv << ',' << s.value << '\n';
  }
}

json quasimode_json(const QuasimodeReport &r) {
  json mass = json::array();
  for (const auto &[radius, m] : r.mass_in_ball) mass.push_back({{"radius", radius}, {"mass", m}});
  return {{"family", r.family},
          {"lambda", r.lambda},
          {"residual_ratio", r.residual_ratio},
          {"damping_pairing", r.damping_pairing},
          {"mass_in_ball", mass},
          {"grid_n", r.grid_n},
          {"grid_h", r.grid_h},
          {"extras", params_json(r.extras)}};
}

const std::set<std::string> &keys_for(const std::string &command) {
  static const std::map<std::string, std::set<std::string>> table = {
      {"flow", {"potential", "seed", "x0_space", "xi0_momentum", "T_time", "dt_time", "energy_drift_tol", "sample_every"}},
      {"conditions",
       {"potential", "damping", "seed", "T_time", "R_space", "r_grid_space", "ugcc_box_space", "ugcc_lattice",
        "ugcc_directions", "tpc_shells_space", "tpc_points", "dsc_lambdas", "dsc_samples", "turning_fraction",
        "threshold", "n_conv", "n_ray"}},
      {"dsc-limit",
       {"potential", "damping", "seed", "T_grid_time", "R_grid_space", "dsc_lambdas", "dsc_samples",
        "turning_fraction", "n_conv", "n_ray"}},
      {"quasimode", {"potential", "damping", "seed", "x0_space", "R_space", "nodes_per_radius", "mass_radii_space", "write_field"}},
      {"kinetic-sequence",
       {"potential", "damping", "seed", "n_values", "t_scale", "r_scale", "r_power", "ppw", "refine", "mass_radii_space"}},
      {"tpc-witness",
       {"potential", "damping", "seed", "n_max", "shell_growth", "angles", "max_radius_space", "nodes_per_radius",
        "eps_lambda_max"}},
      {"evolve",
       {"potential", "damping", "seed", "L_space", "N", "T_time", "dt_time", "initial_center_space",
        "initial_width_space", "initial_wavenumber", "record_every"}},
      {"probe", {"potential", "damping", "seed", "x0_space", "R_space", "T_time", "dt_time", "nodes_per_radius", "extent_radii"}},
      {"resolvent", {"potential", "damping", "seed", "lambdas", "lambda_count", "ppw", "max_iterations"}},
      {"spectrum", {"potential", "damping", "seed", "lambda_max", "count"}},
      {"suite", {"seed"}},
  };
  const auto it = table.find(command);
  if (it == table.end()) throw ValidationError("unknown command '" + command + "'");
  return it->second;
}

std::vector<double> eps_grid(double lambda_max) {
  std::vector<double> out;
  for (double l = 1.0; l <= lambda_max * (1.0 + 1e-12); l *= std::pow(10.0, 0.25)) out.push_back(l);
  return out;
}

// ---------------------------------------------------------------------------

json cmd_flow(const Config &c, Output &out) {
  const Potential pot = c.potential();
  const PhaseState s0{c.point("x0_space", pot.dim, 1.0), c.point("xi0_momentum", pot.dim, 0.0)};
  FlowOptions opts;
  opts.energy_drift_tol = c.number("energy_drift_tol", 1e-6);
  opts.sample_every = c.integer("sample_every", 1);
  const double T = c.number("T_time", 10.0);
  const double dt = c.number("dt_time", 1e-3);
  const Trajectory traj = flow_integrate(pot, s0, T, dt, opts);
  auto csv = out.open("trajectory.csv");
  write_trajectory_csv(csv, pot, traj);
  const json summary = {{"potential", pot.label}, {"p0", traj.p0}, {"max_drift", traj.max_drift},
                        {"final_x", vec_json(traj.back().x)}, {"final_xi", vec_json(traj.back().xi)}};
  out.write_json("flow.json", summary);
  return summary;
}

struct ConditionSettings {
  double T = 4.0;
  double R = 1.0;
  std::vector<double> r_grid{0.25, 0.05};
  double box = 3.0;
  int lattice = 7;
  int directions = 12;
  std::vector<double> shells{10.0, 100.0, 1000.0};
  int tpc_points = 256;
  std::vector<double> lambdas{25.0, 100.0, 400.0};
  DscOptions dsc;
  double threshold = -1.0;  // < 0: 1e-3 b_max
  QuadratureOptions quad;
};

ConditionSettings condition_settings(const Config &c, std::uint64_t seed) {
  ConditionSettings s;
  s.T = c.number("T_time", s.T);
  s.R = c.number("R_space", s.R);
  s.r_grid = c.numbers("r_grid_space", s.r_grid);
  s.box = c.number("ugcc_box_space", s.box);
  s.lattice = c.integer("ugcc_lattice", s.lattice);
  s.directions = c.integer("ugcc_directions", s.directions);
  s.shells = c.numbers("tpc_shells_space", s.shells);
  s.tpc_points = c.integer("tpc_points", s.tpc_points);
  s.lambdas = c.numbers("dsc_lambdas", s.lambdas);
  s.dsc.samples_per_lambda = c.integer("dsc_samples", s.dsc.samples_per_lambda);
  s.dsc.turning_fraction = c.number("turning_fraction", s.dsc.turning_fraction);
  s.dsc.seed = seed;
  s.threshold = c.number("threshold", s.threshold);
  s.quad.n_conv = c.integer("n_conv", s.quad.n_conv);
  s.quad.n_ray = c.integer("n_ray", s.quad.n_ray);
  require(s.T > 0.0 && s.R > 0.0, "T_time and R_space must be positive");
  for (double r : s.r_grid) require(r > 0.0, "r_grid_space entries must be positive");
  for (double l : s.lambdas) require(l >= 1.0, "dsc_lambdas entries must be >= 1");
  require(s.quad.n_ray >= 2, "n_ray must be at least 2");
  return s;
}

struct ConditionTriple {
  ConditionReport ugcc, tpc, dsc;
};

ConditionTriple run_conditions(const Potential &pot, const Damping &b, const ConditionSettings &s) {
  const double threshold = s.threshold >= 0.0 ? s.threshold : 1e-3 * b.b_max;
  const auto rays = lattice_rays(pot.dim, s.box, s.lattice, s.directions);
  ConditionTriple t;
  t.ugcc = ugcc_scan(b, s.T, s.r_grid, rays, threshold, s.quad);
  t.tpc = tpc_scan(b, pot, s.R, s.shells, s.tpc_points, threshold, s.quad);
  t.dsc = dsc_scan(b, pot, s.T, s.R, s.lambdas, threshold, s.dsc, s.quad);
  return t;
}

json condition_summary(const ConditionTriple &t) {
  return {{"UGCC", {{"infimum", t.ugcc.infimum}, {"pass", t.ugcc.pass}}},
          {"TPC", {{"infimum", t.tpc.infimum}, {"pass", t.tpc.pass}}},
          {"DSC", {{"infimum", t.dsc.infimum}, {"pass", t.dsc.pass}}},
          {"UGCC_and_TPC", t.ugcc.pass && t.tpc.pass},
          {"consistent", t.dsc.pass == (t.ugcc.pass && t.tpc.pass)}};
}

json cmd_conditions(const Config &c, Output &out, std::uint64_t seed) {
  const Potential pot = c.potential();
  const Damping b = c.damping(pot.dim);
  const ConditionSettings s = condition_settings(c, seed);
  const ConditionTriple t = run_conditions(pot, b, s);
  write_report(out, "ugcc", t.ugcc);
  write_report(out, "tpc", t.tpc);
  write_report(out, "dsc", t.dsc);
  json summary = condition_summary(t);
  out.write_json("conditions.json", summary);
  return summary;
}

json cmd_dsc_limit(const Config &c, Output &out, std::uint64_t seed) {
  const Potential pot = c.potential();
  const Damping b = c.damping(pot.dim);
  DscOptions opts;
  opts.samples_per_lambda = c.integer("dsc_samples", 100);
  opts.turning_fraction = c.number("turning_fraction", 0.2);
  opts.seed = seed;
  QuadratureOptions q;
  q.n_conv = c.integer("n_conv", 0);
  q.n_ray = c.integer("n_ray", 256);
  const auto table = dsc_limit_scan(b, pot, c.numbers("T_grid_time", {1.0, 2.0, 4.0}),
                                    c.numbers("R_grid_space", {0.5, 1.0, 2.0}),
                                    c.numbers("dsc_lambdas", {25.0, 100.0, 400.0}), opts, q);
  auto csv = out.open("dsc_limit.csv");
  csv << "T,R,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < table.Ts.size(); ++i)
    for (std::size_t j = 0; j < table.Rs.size(); ++j)
      csv << table.Ts[i] << ',' << table.Rs[j] << ',' << table.values(i, j) << '\n';
  const json summary = {{"stabilization_margin", table.margin}, {"cauchy_differences", table.cauchy}};
  out.write_json("dsc_limit.json", summary);
  return summary;
}

json cmd_quasimode(const Config &c, Output &out) {
  const Potential pot = c.potential();
  const Damping b = c.damping(pot.dim);
  const Vector x0 = c.point("x0_space", pot.dim, 20.0);
  const double R = c.number("R_space", 2.0);
  const double v = pot(x0);
  require(v >= 1.0, "quasimode: need V(x0) >= 1 so that lambda >= 1");
  const double lambda = std::sqrt(v);
  const EpsilonProfile eps = epsilon_lambda(pot, {lambda});
  const Grid grid = turning_point_grid(pot, x0, R, c.integer("nodes_per_radius", 96));
  const auto q = turning_point_bump(pot, b, x0, R, grid, eps.at(lambda), c.numbers("mass_radii_space", {1.0, 2.0, 4.0}));
  json summary = quasimode_json(q.report);
  summary["c_v"] = eps.c_v;
  out.write_json("quasimode.json", summary);
  if (c.flag("write_field", false)) {
    auto bin = out.open("field.bin");
    write_field_binary(bin, q.u);
  }
  return summary;
}

json cmd_kinetic(const Config &c, Output &out) {
  const Potential pot = c.potential();
  const Damping b = c.damping(pot.dim);
  KineticRule rule;
  rule.t_scale = c.number("t_scale", rule.t_scale);
  rule.r_scale = c.number("r_scale", rule.r_scale);
  rule.r_power = c.number("r_power", rule.r_power);
  const double ppw = c.number("ppw", 16.0);
  const double refine = c.number("refine", 1.0);
  const auto radii = c.numbers("mass_radii_space", {1.0, 2.0, 4.0});
  json reports = json::array();
  auto csv = out.open("kinetic_sequence.csv");
  csv << "n,lambda_n,quasimode_lambda,residual_ratio,damping_pairing,fourier_offset_bins\n" << std::setprecision(17);
  std::vector<double> ns = c.numbers("n_values", {4.0, 6.0, 8.0});
  for (double nd : ns) {
    const int n = static_cast<int>(nd);
    require(n == nd && n >= 1, "n_values must be positive integers");
    const auto spec = kinetic_spec(pot, n, rule);
    const auto q = kinetic_wavepacket(pot, b, spec, kinetic_grid(spec, ppw, refine), radii);
    const auto &ex = q.report.extras;
    csv << n << ',' << ex.at("lambda_n") << ',' << ex.at("quasimode_lambda") << ',' << q.report.residual_ratio
        << ',' << q.report.damping_pairing << ',' << ex.at("fourier_offset_bins_max") << '\n';
    reports.push_back(quasimode_json(q.report));
  }
  const json summary = {{"reports", reports}};
  out.write_json("kinetic_sequence.json", summary);
  return summary;
}

json cmd_tpc_witness(const Config &c, Output &out) {
  const Potential pot = c.potential();
  const Damping b = c.damping(pot.dim);
  TpcWitnessOptions opts;
  opts.n_max = c.integer("n_max", opts.n_max);
  opts.shell_growth = c.number("shell_growth", opts.shell_growth);
  opts.angles = c.integer("angles", opts.angles);
  opts.max_radius = c.number("max_radius_space", opts.max_radius);
  opts.nodes_per_radius = c.integer("nodes_per_radius", opts.nodes_per_radius);
  const EpsilonProfile eps = epsilon_lambda(pot, eps_grid(c.number("eps_lambda_max", 1e6)));
  const auto steps = tpc_violation_sequence(pot, b, eps, opts);
  auto csv = out.open("tpc_witness.csv");
  csv << "n,R,capped,ball_average,threshold,lambda,residual_ratio,damping_pairing\n" << std::setprecision(17);
  json reports = json::array();
  for (const auto &s : steps) {
    csv << s.n << ',' << s.R << ',' << s.capped << ',' << s.ball_average << ',' << s.threshold << ','
        << s.report.lambda << ',' << s.report.residual_ratio << ',' << s.report.damping_pairing << '\n';
    json r = quasimode_json(s.report);
    r["x"] = vec_json(s.x);
    reports.push_back(r);
  }
  const json summary = {{"reports", reports}};
  out.write_json("tpc_witness.json", summary);
  return summary;
}

template <typename Scalar>
json energy_outputs(Output &out, const EnergyTrace &trace) {
  auto csv = out.open("energy.csv");
  write_energy_csv(csv, trace);
  json fit_json;
  try {
    const DecayFit fit = decay_fit(trace);
    fit_json = {{"C", fit.C}, {"tau", std::isfinite(fit.tau) ? json(fit.tau) : json("inf")},
                {"residual", fit.residual}, {"window", {fit.window_start, fit.window_end}},
                {"decaying", fit.decaying}, {"truncated", fit.truncated}};
  } catch (const NumericalError &e) {
    fit_json = {{"error", e.what()}};
  }
  const json summary = {{"E0", trace.E.front()},
                        {"E_final", trace.E.back()},
                        {"balance_defect", energy_balance_defect(trace)},
                        {"decay_fit", fit_json}};
  out.write_json("evolve.json", summary);
  return summary;
}

json cmd_evolve(const Config &c, Output &out) {
  const Potential pot = c.potential();
  const Damping b = c.damping(pot.dim);
  const Grid grid = Grid::cube(pot.dim, c.number("L_space", 8.0), c.integer("N", 257));
  const Vector center = c.point("initial_center_space", pot.dim, 0.0);
  const double width = c.number("initial_width_space", 1.0);
  const double wavenumber = c.number("initial_wavenumber", 0.0);
  require(width > 0.0, "initial_width_space must be positive");
  WaveState s{RealField(grid), RealField(grid), 0.0};
  for (long k = 0; k < grid.size(); ++k) {
    const Vector x = grid.point(k) - center;
    s.u.values(k) = std::exp(-x.squaredNorm() / (2.0 * width * width)) * std::cos(wavenumber * x(0));
  }
  double dt = c.number("dt_time", 0.0);
  if (dt <= 0.0) dt = max_stable_dt(pot, grid);
  EvolveOptions opts;
  opts.record_every = c.integer("record_every", 1);
  const auto trace = evolve(pot, b, s, c.number("T_time", 10.0), dt, opts);
  return energy_outputs<double>(out, trace);
}

json cmd_probe(const Config &c, Output &out) {
  const Potential pot = c.potential();
  const Damping b = c.damping(pot.dim);
  const Vector x0 = c.point("x0_space", pot.dim, 20.0);
  const double R = c.number("R_space", 2.0);
  const double v = pot(x0);
  require(v >= 1.0, "probe: need V(x0) >= 1 so that lambda >= 1");
  const double lambda = std::sqrt(v);
  const double r = R / std::sqrt(lambda);
  const int npr = c.integer("nodes_per_radius", 32);
  const double extent = c.number("extent_radii", 4.0);
  require(extent >= 1.0, "extent_radii must be at least 1");
  // Wider grid than the bump so the evolving state stays away from the boundary.
  const double h = r / npr;
  const int half = static_cast<int>(std::ceil(extent * npr)) + 4;
  const Grid grid(std::vector<int>(pot.dim, 2 * half + 1), std::vector<double>(pot.dim, half * h), x0);
  const EpsilonProfile eps = epsilon_lambda(pot, {lambda});
  const auto q = turning_point_bump(pot, b, x0, R, grid, eps.at(lambda));
  const auto probe = quasimode_probe(pot, b, q.u, lambda, c.number("T_time", 20.0), c.number("dt_time", 0.0));
  json summary = energy_outputs<Complex>(out, probe.trace);
  summary["quasimode"] = quasimode_json(q.report);
  out.write_json("probe.json", summary);
  return summary;
}

json cmd_resolvent(const Config &c, Output &out) {
  const Potential pot = c.potential();
  if (pot.dim != 1) throw ValidationError("resolvent scan requires d = 1");
  const Damping b = c.damping(pot.dim);
  std::vector<double> lambdas = c.numbers("lambdas", {});
  if (lambdas.empty()) {
    const int count = c.integer("lambda_count", 200);
    require(count >= 1, "lambda_count must be positive");
    for (int n = 0; n < count; ++n) lambdas.push_back(std::sqrt(n + 0.5));
  }
  double lambda_max = 0.0;
  for (double l : lambdas) lambda_max = std::max(lambda_max, std::abs(l));
  ResolventOptions opts;
  opts.max_iterations = c.integer("max_iterations", opts.max_iterations);
  const Grid grid = resolvent_grid(pot, lambda_max, c.number("ppw", 16.0));
  const auto scan = resolvent_scan(pot, b, lambdas, grid, opts);
  auto csv = out.open("resolvent.csv");
  write_resolvent_csv(csv, scan);
  std::vector<double> ratios;
  for (const auto &e : scan.entries) ratios.push_back(e.ratio);
  auto sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t tenth = std::max<std::size_t>(1, ratios.size() / 10);
  const double first = *std::max_element(ratios.begin(), ratios.begin() + tenth);
  const double last = *std::max_element(ratios.end() - tenth, ratios.end());
  const json summary = {{"grid_n", scan.grid_n},
                        {"grid_h", scan.grid_h},
                        {"truncation", scan.truncation},
                        {"max", sorted.back()},
                        {"median", sorted[sorted.size() / 2]},
                        {"max_over_median", sorted.back() / sorted[sorted.size() / 2]},
                        {"first_tenth_max", first},
                        {"last_tenth_max", last}};
  out.write_json("resolvent.json", summary);
  return summary;
}

json cmd_spectrum(const Config &c, Output &out) {
  const Potential pot = c.potential();
  if (pot.dim != 1) throw ValidationError("damped spectrum requires d = 1");
  const Damping b = c.damping(pot.dim);
  const int count = c.integer("count", 40);
  const Grid grid = resolvent_grid(pot, c.number("lambda_max", std::sqrt(count + 0.5)));
  const auto spectrum = damped_spectrum_1d(pot, b, grid, count);
  auto csv = out.open("spectrum.csv");
  write_spectrum_csv(csv, spectrum);
  const json summary = {{"abscissa", spectrum.abscissa}, {"count", spectrum.eigenvalues.size()},
                        {"resolved_cutoff", spectrum.resolved_cutoff}, {"grid_n", grid.n(0)}};
  out.write_json("spectrum.json", summary);
  return summary;
}

// Canonical experiment matrix: harmonic V in 2D against the four dampings,
// plus the 1D constant-damping energy trace and spectrum.
json cmd_suite(Output &out, std::uint64_t seed) {
  const Potential pot = builtin_potential("harmonic", 2);
  const std::vector<std::pair<std::string, Damping>> pairs = {
      {"constant", builtin_damping("constant", 2)},
      {"exterior", builtin_damping("exterior", 2, {{"R0", 2.0}})},
      {"ball", builtin_damping("ball", 2, {{"R0", 1.0}})},
      {"checkerboard", builtin_damping("checkerboard", 2, {{"L", 1.0}, {"duty", 0.6}})},
  };
  ConditionSettings s;
  s.dsc.seed = seed;
  auto matrix = out.open("conditions_matrix.csv");
  matrix << "potential,damping,ugcc,tpc,dsc,ugcc_and_tpc,ugcc_infimum,tpc_infimum,dsc_infimum\n"
         << std::setprecision(17);
  json summary = json::object();
  const auto word = [](bool p) { return p ? "pass" : "fail"; };
  for (const auto &[name, b] : pairs) {
    log(LogLevel::Info, "suite: conditions for " + name);
    const ConditionTriple t = run_conditions(pot, b, s);
    write_report(out, "conditions/" + name + "/ugcc", t.ugcc);
    write_report(out, "conditions/" + name + "/tpc", t.tpc);
    write_report(out, "conditions/" + name + "/dsc", t.dsc);
    matrix << pot.label << ',' << name << ',' << word(t.ugcc.pass) << ',' << word(t.tpc.pass) << ','
           << word(t.dsc.pass) << ',' << word(t.ugcc.pass && t.tpc.pass) << ',' << t.ugcc.infimum << ','
           << t.tpc.infimum << ',' << t.dsc.infimum << '\n';
    summary[name] = condition_summary(t);
  }

  log(LogLevel::Info, "suite: energy trace and spectrum");
  const Potential pot1 = builtin_potential("harmonic", 1);
  const Damping one = builtin_damping("constant", 1);
  const Grid grid = Grid::cube(1, 8.0, 257);
  WaveState w{RealField(grid), RealField(grid), 0.0};
  for (long k = 0; k < grid.size(); ++k) {
    const double x = grid.point(k)(0) - 1.0;
    w.u.values(k) = std::exp(-0.5 * x * x);
  }
  EvolveOptions eo;
  eo.record_every = 10;
  const auto trace = evolve(pot1, one, w, 20.0, max_stable_dt(pot1, grid), eo);
  {
    auto csv = out.open("energy.csv");
    write_energy_csv(csv, trace);
  }
  const DecayFit fit = decay_fit(trace);
  const auto spectrum = damped_spectrum_1d(pot1, one, resolvent_grid(pot1, std::sqrt(20.5)), 20);
  {
    auto csv = out.open("spectrum.csv");
    write_spectrum_csv(csv, spectrum);
  }
  summary["constant_damping_1d"] = {{"tau", fit.tau}, {"abscissa", spectrum.abscissa}};
  out.write_json("suite.json", summary);
  return summary;
}

}  // namespace

const std::vector<std::string> &commands() {
  static const std::vector<std::string> list = {"flow",        "conditions", "dsc-limit", "quasimode",
                                                "kinetic-sequence", "tpc-witness", "evolve", "probe",
                                                "resolvent",   "spectrum",   "suite"};
  return list;
}

int run(const Invocation &inv) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto &allowed = keys_for(inv.command);
    json doc = json::object();
    if (!inv.config_path.empty()) {
      std::ifstream in(inv.config_path);
      if (!in) throw ValidationError("cannot read config file " + inv.config_path);
      try {
        doc = json::parse(in);
      } catch (const json::parse_error &e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
      }
    } else if (inv.command != "suite") {
      throw ValidationError("command '" + inv.command + "' requires --config");
    }
    const Config config(doc, inv.command, allowed);
    if (inv.threads < 0) throw ValidationError("--threads must be non-negative");
#ifdef _OPENMP
    if (inv.threads > 0) omp_set_num_threads(inv.threads);
#endif
    std::uint64_t seed = 0;
    if (config.has("seed")) {
      if (!config.doc().at("seed").is_number_unsigned()) throw ValidationError("config key 'seed' must be a non-negative integer");
      seed = config.doc().at("seed").get<std::uint64_t>();
    }
    if (inv.seed) seed = *inv.seed;

    Output out(inv.out_dir);
    json summary;
    const std::string &cmd = inv.command;
    if (cmd == "flow") summary = cmd_flow(config, out);
    else if (cmd == "conditions") summary = cmd_conditions(config, out, seed);
    else if (cmd == "dsc-limit") summary = cmd_dsc_limit(config, out, seed);
    else if (cmd == "quasimode") summary = cmd_quasimode(config, out);
    else if (cmd == "kinetic-sequence") summary = cmd_kinetic(config, out);
    else if (cmd == "tpc-witness") summary = cmd_tpc_witness(config, out);
    else if (cmd == "evolve") summary = cmd_evolve(config, out);
    else if (cmd == "probe") summary = cmd_probe(config, out);
    else if (cmd == "resolvent") summary = cmd_resolvent(config, out);
    else if (cmd == "spectrum") summary = cmd_spectrum(config, out);
    else summary = cmd_suite(out, seed);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream compiler;
#if defined(__clang__)
    compiler << "clang " << __clang_major__ << '.' << __clang_minor__;
#elif defined(__GNUC__)
    compiler << "gcc " << __GNUC__ << '.' << __GNUC_MINOR__;
#endif
    const json manifest = {
        {"command", cmd},
        {"config_hash", "fnv1a64:" + hex(fnv1a(config.doc().dump()))},
        {"seed", seed},
        {"threads", inv.threads},
        {"versions",
         {{"stabscope", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", compiler.str()}}},
        {"wall_time_seconds", wall},
        {"artifacts", out.artifacts()}};
    {
      std::ofstream m(out.dir() / "manifest.json", std::ios::binary);
      m << manifest.dump(2) << '\n';
    }
    std::cout << summary.dump(2) << '\n';
    return kOk;
  } catch (const ValidationError &e) {
    std::cerr << "stabscope: validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError &e) {
    std::cerr << "stabscope: numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "stabscope: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception &e) {
    std::cerr << "stabscope: error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace stabscope::cli
