#include "stabscope/damping.hpp"

#include "stabscope/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace stabscope {

namespace {

double param_or(const ParamMap &params, const std::string &key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const ParamMap &params, const std::vector<std::string> &allowed,
                    const std::string &name) {
  for (const auto &[key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError("damping '" + name + "': unknown parameter '" + key + "'");
  }
}

double frac(double t) { return t - std::floor(t); }

void finish_report(ConditionReport &report, bool outermost_only) {
  std::map<double, double> per_param;
  for (const auto &s : report.samples) {
    auto [it, inserted] = per_param.emplace(s.param, s.value);
    if (!inserted) it->second = std::min(it->second, s.value);
  }
  report.trend.assign(per_param.begin(), per_param.end());
  if (report.trend.empty()) {
    report.infimum = 0.0;
  } else if (outermost_only) {
    report.infimum = report.trend.back().second;
  } else {
    report.infimum = report.trend.front().second;
    for (const auto &[p, v] : report.trend) report.infimum = std::min(report.infimum, v);
  }
  report.pass = report.infimum >= report.threshold;
}

// Positions x^{t_j} at the n_ray trapezoid nodes of [-t_end, t_end].
std::vector<Vector> flow_nodes(const Potential &pot, const PhaseState &rho, double t_end,
                               double dt, int n) {
  std::vector<Vector> xs;
  xs.reserve(n);
  if (t_end <= 0.0 || n == 1) {
    xs.assign(n, rho.x);
    return xs;
  }
  const double delta = 2.0 * t_end / (n - 1);
  PhaseState s = flow_to(pot, rho, -t_end, dt);
  xs.push_back(s.x);
  for (int j = 1; j < n; ++j) {
    s = flow_to(pot, s, delta, dt);
    xs.push_back(s.x);
  }
  return xs;
}

}  // namespace

Damping builtin_damping(const std::string &name, int dim, const ParamMap &params) {
  require(dim >= 1, "damping dimension must be positive");
  Damping b;
  b.dim = dim;
  b.name = name;
  b.params = params;
  const double amp = param_or(params, "amplitude", 1.0);
  if (amp < 0.0) throw ValidationError("damping '" + name + "': negative amplitude");
  b.b_max = amp;

  if (name == "constant") {
    reject_unknown(params, {"amplitude"}, name);
    b.value = [amp](const Vector &) { return amp; };
    b.label = "constant";
    return b;
  }
  if (name == "exterior") {
    reject_unknown(params, {"amplitude", "R0"}, name);
    const double r0 = param_or(params, "R0", 1.0);
    require(r0 >= 0.0, "exterior damping: R0 must be non-negative");
    const double r0sq = r0 * r0;
    b.value = [amp, r0sq](const Vector &x) { return x.squaredNorm() >= r0sq ? amp : 0.0; };
    b.label = "exterior";
    return b;
  }
  if (name == "ball") {
    std::vector<std::string> allowed{"amplitude", "R0"};
    for (int i = 0; i < dim; ++i) allowed.push_back("c" + std::to_string(i + 1));
    reject_unknown(params, allowed, name);
    const double r0 = param_or(params, "R0", 1.0);
    require(r0 >= 0.0, "ball damping: R0 must be non-negative");
    Vector center(dim);
    for (int i = 0; i < dim; ++i) center(i) = param_or(params, "c" + std::to_string(i + 1), 0.0);
    const double r0sq = r0 * r0;
    b.value = [amp, r0sq, center](const Vector &x) {
      return (x - center).squaredNorm() <= r0sq ? amp : 0.0;
    };
    b.label = "ball";
    return b;
  }
  if (name == "checkerboard" || name == "radial_shells" || name == "strip_lattice") {
    reject_unknown(params, {"amplitude", "L", "duty"}, name);
    const double period = param_or(params, "L", 1.0);
    const double duty = param_or(params, "duty", 0.5);
    require(period > 0.0, "damping '" + name + "': period L must be positive");
    require(duty > 0.0 && duty < 1.0, "damping '" + name + "': duty must lie in (0, 1)");
    b.label = name;
    if (name == "checkerboard") {
      b.value = [amp, period, duty](const Vector &x) {
        int misses = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) misses += frac(x(i) / period) >= duty;
        return misses % 2 == 0 ? amp : 0.0;
      };
    } else if (name == "radial_shells") {
      b.value = [amp, period, duty](const Vector &x) {
        return frac(x.norm() / period) < duty ? amp : 0.0;
      };
    } else {
      b.value = [amp, period, duty](const Vector &x) {
        for (Eigen::Index i = 0; i < x.size(); ++i)
          if (frac(x(i) / period) < duty) return amp;
        return 0.0;
      };
    }
    return b;
  }
  throw ValidationError("unknown damping '" + name + "'");
}

Damping scaled(const Damping &b, double alpha) {
  require(alpha >= 0.0, "scaled damping: factor must be non-negative");
  Damping out = b;
  out.b_max = alpha * b.b_max;
  out.value = [inner = b.value, alpha](const Vector &x) { return alpha * inner(x); };
  return out;
}

double mollify_at(const Damping &b, double r, const Vector &x, const QuadratureOptions &q) {
  if (!(r > 0.0)) throw ValidationError("mollify_at: radius r must be positive");
  require(x.size() == b.dim, "mollify_at: point dimension differs from damping");
  const auto ball = BallNodes::get(b.dim, q.conv_nodes(b.dim));
  const auto &nodes = ball->nodes();
  Vector y(b.dim);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < nodes.cols(); ++k) {
    y = x + r * nodes.col(k);
    sum += b(y);
  }
  return sum / static_cast<double>(nodes.cols());
}

double ray_average(const Damping &b, const Vector &x0, const Vector &nu0, double T, double r,
                   const QuadratureOptions &q) {
  if (std::abs(nu0.norm() - 1.0) > 1e-12) throw ValidationError("ray_average: direction is not a unit vector");
  require(T > 0.0, "ray_average: T must be positive");
  require(q.n_ray >= 2, "ray_average: need at least two nodes");
  std::vector<double> values(q.n_ray);
  for (int j = 0; j < q.n_ray; ++j) {
    const double t = -T + 2.0 * T * j / (q.n_ray - 1);
    values[j] = mollify_at(b, r, Vector(x0 + t * nu0), q);
  }
  return trapezoid_mean(values);
}

std::vector<RayBase> lattice_rays(int dim, double box, int lattice_n, int directions) {
  require(lattice_n >= 1, "lattice_rays: lattice size must be positive");
  const auto dirs = direction_set(dim, directions);
  std::vector<RayBase> rays;
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= lattice_n;
  for (long idx = 0; idx < total; ++idx) {
    Vector x(dim);
    long rest = idx;
    for (int i = 0; i < dim; ++i) {
      const long k = rest % lattice_n;
      rest /= lattice_n;
      x(i) = lattice_n == 1 ? 0.0 : -box + 2.0 * box * k / (lattice_n - 1);
    }
    for (const auto &u : dirs) rays.push_back({x, u});
  }
  return rays;
}

ConditionReport ugcc_scan(const Damping &b, double T, const std::vector<double> &radii,
                          const std::vector<RayBase> &rays, double threshold,
                          const QuadratureOptions &q) {
  require(!rays.empty(), "ugcc_scan: no sample rays");
  require(!radii.empty(), "ugcc_scan: empty r-grid");
  ConditionReport report;
  report.tag = "UGCC";
  report.params = {{"T_time", T}};
  report.threshold = threshold;
  const long n = static_cast<long>(rays.size() * radii.size());
  report.samples.resize(n);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) {
    const auto &ray = rays[k % rays.size()];
    const double r = radii[k / rays.size()];
    report.samples[k] = {ray.x0, ray.nu0, r, ray_average(b, ray.x0, ray.nu0, T, r, q)};
  }
  finish_report(report, false);
  return report;
}

ConditionReport tpc_scan(const Damping &b, const Potential &pot, double R,
                         const std::vector<double> &shells, int points_per_shell,
                         double threshold, const QuadratureOptions &q) {
  require(!shells.empty(), "tpc_scan: no shells");
  require(std::is_sorted(shells.begin(), shells.end()), "tpc_scan: shells must be increasing");
  require(R > 0.0, "tpc_scan: R must be positive");
  require(b.dim == pot.dim, "tpc_scan: damping and potential dimensions differ");
  ConditionReport report;
  report.tag = "TPC";
  report.params = {{"R_space", R}};
  report.threshold = threshold;
  const auto dirs = direction_set(pot.dim, points_per_shell);
  const long per = static_cast<long>(dirs.size());
  const long n = per * static_cast<long>(shells.size());
  report.samples.resize(n);
  bool degenerate = false;
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) {
    const double shell = shells[k / per];
    const Vector x = shell * dirs[k % per];
    const double v = pot(x);
    if (!(v > 0.0)) {
#pragma omp atomic write
      degenerate = true;
      continue;
    }
    report.samples[k] = {x, Vector(), shell, mollify_at(b, R / std::pow(v, 0.25), x, q)};
  }
  if (degenerate) throw NumericalError("tpc_scan: V vanishes at a sampled point away from the origin");
  finish_report(report, true);
  return report;
}

double flow_average(const Damping &b, const Potential &pot, const PhaseState &rho, double T,
                    double R, double lambda, double dt, const QuadratureOptions &q) {
  require(lambda > 0.0, "flow_average: lambda must be positive");
  require(T >= 0.0 && R > 0.0, "flow_average: need T >= 0 and R > 0");
  const double r = R / std::sqrt(lambda);
  const auto xs = flow_nodes(pot, rho, T / lambda, dt, q.n_ray);
  std::vector<double> values(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) values[j] = mollify_at(b, r, xs[j], q);
  return trapezoid_mean(values);
}

ConditionReport dsc_scan(const Damping &b, const Potential &pot, double T, double R,
                         const std::vector<double> &lambdas, double threshold,
                         const DscOptions &options, const QuadratureOptions &q) {
  require(!lambdas.empty(), "dsc_scan: empty lambda list");
  require(std::is_sorted(lambdas.begin(), lambdas.end()), "dsc_scan: lambdas must be increasing");
  require(options.samples_per_lambda >= 1, "dsc_scan: need at least one sample per lambda");
  require(b.dim == pot.dim, "dsc_scan: damping and potential dimensions differ");
  ConditionReport report;
  report.tag = "DSC";
  report.params = {{"T_time", T}, {"R_space", R}};
  report.threshold = threshold;

  std::vector<PhaseState> points;
  std::vector<double> point_lambda;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto shell = sample_shell(pot, lambdas[i], options.samples_per_lambda,
                                    options.seed + 7919ULL * i, options.turning_fraction);
    for (const auto &s : shell) {
      points.push_back(s);
      point_lambda.push_back(lambdas[i]);
    }
  }
  const long n = static_cast<long>(points.size());
  report.samples.resize(n);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) {
    const double lambda = point_lambda[k];
    const double dt = options.dt > 0.0 ? options.dt : default_shell_dt(lambda);
    report.samples[k] = {points[k].x, points[k].xi, lambda,
                         flow_average(b, pot, points[k], T, R, lambda, dt, q)};
  }
  finish_report(report, true);
  return report;
}

DscLimitTable dsc_limit_scan(const Damping &b, const Potential &pot,
                             const std::vector<double> &Ts, const std::vector<double> &Rs,
                             const std::vector<double> &lambdas, const DscOptions &options,
                             const QuadratureOptions &q) {
  require(!Ts.empty() && !Rs.empty(), "dsc_limit_scan: empty (T, R) grid");
  require(std::is_sorted(Ts.begin(), Ts.end()) && std::is_sorted(Rs.begin(), Rs.end()),
          "dsc_limit_scan: (T, R) grid must be ascending");
  DscLimitTable table;
  table.Ts = Ts;
  table.Rs = Rs;
  table.values.resize(static_cast<Eigen::Index>(Ts.size()), static_cast<Eigen::Index>(Rs.size()));
  for (std::size_t i = 0; i < Ts.size(); ++i)
    for (std::size_t j = 0; j < Rs.size(); ++j)
      table.values(i, j) = dsc_scan(b, pot, Ts[i], Rs[j], lambdas, 0.0, options, q).infimum;
  table.margin = table.values(table.values.rows() - 1, table.values.cols() - 1);
  const auto diag = std::min(table.values.rows(), table.values.cols());
  for (Eigen::Index k = 1; k < diag; ++k)
    table.cauchy.push_back(table.values(k, k) - table.values(k - 1, k - 1));
  return table;
}

MollificationTable mollification_consistency(const Damping &b, const Vector &x0,
                                             const Vector &nu0, double T, double r0,
                                             const std::vector<double> &radii,
                                             const QuadratureOptions &q) {
  require(r0 > 0.0, "mollification_consistency: r0 must be positive");
  Damping smooth = b;
  smooth.value = [b, r0, q](const Vector &x) { return mollify_at(b, r0, x, q); };
  smooth.label = b.label + "*kappa";

  MollificationTable table;
  table.reference = ray_average(b, x0, nu0, T, r0, q);
  table.radii = radii;
  table.values.resize(radii.size());
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(radii.size()); ++k)
    table.values[k] = ray_average(smooth, x0, nu0, T, radii[k], q);
  return table;
}

}  // namespace stabscope
