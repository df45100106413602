// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only
//   acceptance --cli PATH      stabscope executable used by criteria 3 and 11

#include "stabscope/cli.hpp"
#include "stabscope/evolution.hpp"
#include "stabscope/quasimodes.hpp"

#include <CLI11.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace stabscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

PhaseState state(std::initializer_list<double> x, std::initializer_list<double> xi) {
  PhaseState s{Vector(static_cast<Eigen::Index>(x.size())), Vector(static_cast<Eigen::Index>(xi.size()))};
  Eigen::Index i = 0;
  for (double v : x) s.x(i++) = v;
  i = 0;
  for (double v : xi) s.xi(i++) = v;
  return s;
}

// 1. Harmonic closed form over T = 10 at dt = 1e-4; drift over T = 100 for every builtin.
Outcome flow_fidelity() {
  const auto harmonic = builtin_potential("harmonic", 2);
  const PhaseState s0 = state({1.0, -0.5}, {0.3, 0.8});
  const Trajectory traj = flow_integrate(harmonic, s0, 10.0, 1e-4);
  double err = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    const Vector x = s0.x * std::cos(t) + s0.xi * std::sin(t);
    const Vector xi = -s0.x * std::sin(t) + s0.xi * std::cos(t);
    err = std::max({err, (traj.states[k].x - x).cwiseAbs().maxCoeff(),
                    (traj.states[k].xi - xi).cwiseAbs().maxCoeff()});
  }
  double drift = 0.0;
  const std::vector<Potential> builtins = {
      builtin_potential("harmonic", 2), builtin_potential("power", 2, {{"s", 3.0}}),
      builtin_potential("anisotropic", 2, {{"a1", 1.0}, {"a2", 3.0}})};
  FlowOptions opts;
  opts.sample_every = 1000;
  for (const auto &pot : builtins)
    drift = std::max(drift, flow_integrate(pot, s0, 100.0, 1e-3, opts).max_drift);
  return {err <= 1e-6 && drift <= 1e-6,
          "closed-form err " + fmt(err) + " (<= 1e-6), max drift " + fmt(drift) + " (<= 1e-6)"};
}

// 2. Linearization bounds on 100 shell samples per lambda.
Outcome linearization_bounds() {
  const std::vector<double> lambdas = {25.0, 100.0, 400.0};
  const std::vector<Potential> pots = {builtin_potential("harmonic", 2),
                                       builtin_potential("power", 2, {{"s", 3.0}})};
  int total = 0, passed = 0;
  double worst_excess = -1.0;
  for (const auto &pot : pots) {
    const EpsilonProfile eps = epsilon_lambda(pot, lambdas);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      const double lambda = lambdas[i];
      const auto shell = sample_shell(pot, lambda, 100, 1000 + i);
      for (const auto &rho : shell) {
        const PhaseState rescaled{rho.x, rho.xi / lambda};
        const auto dev = linearization_deviation(pot, rescaled, 2.0, lambda, eps.at(lambda),
                                                 default_shell_dt(lambda));
        ++total;
        passed += dev.pass;
        worst_excess = std::max(worst_excess, dev.excess);
      }
    }
  }
  const double fraction = static_cast<double>(passed) / total;
  return {fraction >= 0.95 && worst_excess <= 0.05,
          "within bounds " + std::to_string(passed) + "/" + std::to_string(total) +
              " (>= 95%), worst relative excess " + fmt(std::max(worst_excess, 0.0)) + " (<= 0.05)"};
}

// 3. Condition matrix from the suite command.
Outcome condition_matrix(const std::string &cli) {
  const fs::path out = fs::temp_directory_path() / "stabscope_acceptance_c3";
  fs::remove_all(out);
  const std::string cmd = cli + " suite --out " + out.string() + " --threads 1 > /dev/null";
  if (std::system(cmd.c_str()) != 0) return {false, "suite command failed"};
  std::ifstream in(out / "conditions_matrix.csv");
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() >= 6) rows[cells[1]] = cells;
  }
  // columns: potential,damping,ugcc,tpc,dsc,ugcc_and_tpc
  const std::vector<std::string> order = {"constant", "exterior", "ball", "checkerboard"};
  const std::vector<std::string> expected = {"pass", "pass", "fail", "fail"};
  bool ok = rows.size() == 4;
  std::string dsc, both;
  for (std::size_t i = 0; i < order.size() && ok; ++i) {
    const auto &r = rows[order[i]];
    if (r.size() < 6) return {false, "missing row " + order[i]};
    dsc += r[4] + (i + 1 < order.size() ? "," : "");
    both += r[5] + (i + 1 < order.size() ? "," : "");
    ok = ok && r[4] == expected[i] && r[5] == expected[i];
  }
  ok = ok && rows["checkerboard"][2] == "pass";
  return {ok, "DSC {" + dsc + "} vs UGCC^TPC {" + both + "}, checkerboard UGCC " +
                  (rows.count("checkerboard") ? rows["checkerboard"][2] : "?")};
}

// 4. Potential-regime bumps at x0 in {20, 40, 80}, R = 2.
Outcome turning_point_quasimodes() {
  const auto pot = builtin_potential("harmonic", 1);
  const auto none = builtin_damping("constant", 1, {{"amplitude", 0.0}});
  const std::vector<double> xs = {20.0, 40.0, 80.0};
  std::vector<double> lambdas;
  for (double x : xs) lambdas.push_back(x / std::sqrt(2.0));
  const EpsilonProfile eps = epsilon_lambda(pot, lambdas);
  std::vector<double> residual, constant;
  for (double x : xs) {
    const Vector x0 = Vector::Constant(1, x);
    const double lambda = std::sqrt(pot(x0));
    const Grid grid = turning_point_grid(pot, x0, 2.0);
    const auto q = turning_point_bump(pot, none, x0, 2.0, grid, eps.at(lambda));
    residual.push_back(q.report.residual_ratio);
    constant.push_back(q.report.extras.at("measured_constant"));
  }
  const double cmin = *std::min_element(constant.begin(), constant.end());
  const double cmax = *std::max_element(constant.begin(), constant.end());
  bool monotone = true;
  for (std::size_t i = 1; i < residual.size(); ++i) monotone = monotone && residual[i] <= 1.1 * residual[i - 1];
  std::string detail = "residuals";
  for (double r : residual) detail += " " + fmt(r);
  detail += ", constants";
  for (double c : constant) detail += " " + fmt(c);
  detail += ", spread " + fmt(cmax / cmin) + " (<= 2)";
  return {cmax <= 2.0 * cmin && monotone, detail};
}

// 5. Kinetic packets along n in {4, 6, 8}.
Outcome kinetic_packets() {
  const auto pot = builtin_potential("harmonic", 2);
  const auto none = builtin_damping("constant", 2, {{"amplitude", 0.0}});
  std::vector<double> residual;
  double worst_bins = 0.0;
  for (int n : {4, 6, 8}) {
    const auto spec = kinetic_spec(pot, n);
    const auto q = kinetic_wavepacket(pot, none, spec, kinetic_grid(spec));
    residual.push_back(q.report.residual_ratio);
    worst_bins = std::max(worst_bins, q.report.extras.at("fourier_offset_bins_max"));
  }
  const bool decreasing = residual[1] < residual[0] && residual[2] < residual[1];
  return {decreasing && worst_bins <= 3.0,
          "residuals " + fmt(residual[0]) + " " + fmt(residual[1]) + " " + fmt(residual[2]) +
              ", Fourier peak offset " + fmt(worst_bins) + " bins (<= 3)"};
}

// 6. Instability witness on (harmonic, checkerboard).
Outcome instability_witness() {
  const auto pot = builtin_potential("harmonic", 2);
  const auto b = builtin_damping("checkerboard", 2, {{"L", 1.0}, {"duty", 0.6}});
  std::vector<double> lambdas;
  for (double l = 1.0; l <= 1e6; l *= std::pow(10.0, 0.25)) lambdas.push_back(l);
  const EpsilonProfile eps = epsilon_lambda(pot, lambdas);
  TpcWitnessOptions options;
  options.n_max = 6;
  const auto steps = tpc_violation_sequence(pot, b, eps, options);
  bool halving = true;
  double worst_residual = 0.0;
  std::string pairing = "pairings";
  std::string residual = "residuals";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto &r = steps[i].report;
    pairing += " " + fmt(r.damping_pairing);
    residual += " " + fmt(r.residual_ratio);
    worst_residual = std::max(worst_residual, r.residual_ratio);
    if (i > 0) halving = halving && r.damping_pairing <= 0.5 * steps[i - 1].report.damping_pairing;
  }
  return {halving && worst_residual < 0.2, pairing + "; " + residual + " (all < 0.2 required)"};
}

WaveState gaussian_state(const Grid &grid, double center, double width) {
  WaveState s{RealField(grid), RealField(grid), 0.0};
  for (long k = 0; k < grid.size(); ++k) {
    const double x = grid.point(k)(0) - center;
    s.u.values(k) = std::exp(-x * x / (2.0 * width * width));
  }
  return s;
}

// 7. Energy-balance defect under dt halving.
Outcome energy_balance() {
  const auto pot = builtin_potential("harmonic", 1);
  const auto b = builtin_damping("constant", 1);
  const Grid grid = Grid::cube(1, 8.0, 257);
  const double dt0 = 0.8 * max_stable_dt(pot, grid);
  std::vector<double> defects;
  for (int k = 0; k < 4; ++k) {
    WaveState s = gaussian_state(grid, 1.0, 1.0);
    const auto trace = evolve(pot, b, s, 2.0, dt0 / std::pow(2.0, k));
    defects.push_back(energy_balance_defect(trace));
  }
  bool ok = true;
  std::string detail = "defects";
  for (std::size_t k = 0; k < defects.size(); ++k) {
    detail += " " + fmt(defects[k]);
    if (k > 0) ok = ok && defects[k - 1] >= 3.5 * defects[k];
  }
  detail += ", ratios";
  for (std::size_t k = 1; k < defects.size(); ++k) detail += " " + fmt(defects[k - 1] / defects[k]);
  return {ok, detail + " (>= 3.5)"};
}

// 8. Constant damping decay rate.
Outcome decay_rate() {
  const auto pot = builtin_potential("harmonic", 1);
  const auto b = builtin_damping("constant", 1);
  const Grid grid = Grid::cube(1, 8.0, 257);
  WaveState s = gaussian_state(grid, 1.0, 1.0);
  EvolveOptions options;
  options.record_every = 10;
  const auto trace = evolve(pot, b, s, 20.0, 0.5 * max_stable_dt(pot, grid), options);
  const auto fit = decay_fit(trace);
  return {fit.tau >= 0.9 && fit.tau <= 1.1, "tau " + fmt(fit.tau) + " (in [0.9, 1.1])"};
}

// 9. Resolvent dichotomy on lambda_n = sqrt(n + 1/2), n < 200.
Outcome resolvent_dichotomy() {
  const auto pot = builtin_potential("harmonic", 1);
  std::vector<double> lambdas;
  for (int n = 0; n < 200; ++n) lambdas.push_back(std::sqrt(n + 0.5));
  const Grid grid = resolvent_grid(pot, lambdas.back());
  const auto scan_const = resolvent_scan(pot, builtin_damping("constant", 1), lambdas, grid);
  const auto scan_ball = resolvent_scan(pot, builtin_damping("ball", 1, {{"R0", 1.0}}), lambdas, grid);
  const auto ratios = [](const ResolventScan &s) {
    std::vector<double> r;
    for (const auto &e : s.entries) r.push_back(e.ratio);
    return r;
  };
  auto rc = ratios(scan_const);
  auto sorted = rc;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double bounded = sorted.back() / median;
  const auto rb = ratios(scan_ball);
  const std::size_t tenth = rb.size() / 10;
  const double first = *std::max_element(rb.begin(), rb.begin() + tenth);
  const double last = *std::max_element(rb.end() - tenth, rb.end());
  return {bounded <= 10.0 && last >= 10.0 * first,
          "b=1 max/median " + fmt(bounded) + " (<= 10); b=1_[-1,1] last/first tenth max " +
              fmt(last) + "/" + fmt(first) + " = " + fmt(last / first) + " (>= 10)"};
}

// 10. Companion spectrum against the separately computed P spectrum.
Outcome spectral_cross_check() {
  const auto pot = builtin_potential("harmonic", 1);
  const auto b = builtin_damping("constant", 1);
  const Grid grid = resolvent_grid(pot, std::sqrt(40.5));
  const auto spectrum = damped_spectrum_1d(pot, b, grid, 40);
  const Eigen::MatrixXd P = Eigen::MatrixXd(assemble_P_1d(pot, grid));
  const Eigen::VectorXd mu2 = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P, Eigen::EigenvaluesOnly).eigenvalues();
  double worst = 0.0;
  for (const auto &e : spectrum.eigenvalues) {
    const Complex z = e.z;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < mu2.size(); ++k) best = std::min(best, std::abs(z * z + z + mu2(k)));
    worst = std::max(worst, best);
  }
  const double abscissa = spectrum.abscissa;
  return {worst <= 1e-6 && std::abs(abscissa + 0.5) <= 0.025 && spectrum.eigenvalues.size() == 40,
          "max |z^2 + z + mu^2| " + fmt(worst) + " (<= 1e-6), abscissa " + fmt(abscissa) +
              " (-0.5 +- 5%)"};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 11. suite --threads 1 twice gives identical artifacts (manifest excluded:
// it records wall time).
Outcome reproducibility(const std::string &cli) {
  const fs::path base = fs::temp_directory_path() / "stabscope_acceptance_c11";
  fs::remove_all(base);
  for (const char *run : {"a", "b"}) {
    const std::string cmd = cli + " suite --out " + (base / run).string() + " --threads 1 > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "suite command failed"};
  }
  int files = 0, differing = 0;
  for (const auto &entry : fs::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    const fs::path other = base / "b" / fs::relative(entry.path(), base / "a");
    ++files;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  return {files > 0 && differing == 0,
          std::to_string(files) + " artifacts compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"stabscope acceptance criteria"};
  int only = 0;
  std::string cli = STABSCOPE_CLI_PATH;
  app.add_option("--criterion", only, "run a single criterion (1-11)");
  app.add_option("--cli", cli, "stabscope executable");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"flow fidelity", flow_fidelity},
      {"linearization bounds", linearization_bounds},
      {"condition-equivalence matrix", [&] { return condition_matrix(cli); }},
      {"turning-point quasimodes", turning_point_quasimodes},
      {"kinetic wave packets", kinetic_packets},
      {"instability witness", instability_witness},
      {"energy balance", energy_balance},
      {"constant-damping decay rate", decay_rate},
      {"resolvent dichotomy", resolvent_dichotomy},
      {"spectral cross-check", spectral_cross_check},
      {"reproducibility", [&] { return reproducibility(cli); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && only != static_cast<int>(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception &e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !outcome.pass;
    std::printf("criterion %zu [%s]: %s  %s  (%.1f s)\n", i + 1, criteria[i].first.c_str(),
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
