#include "stabscope/quasimodes.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace stabscope {

namespace {

void fill_common(QuasimodeReport &report, const Field &u, const Potential &pot, const Damping &b,
                 double lambda, const std::vector<double> &mass_radii) {
  report.lambda = lambda;
  report.residual_ratio = residual_ratio(pot, u, lambda);
  report.damping_pairing = damping_pairing(b, u);
  const Vector origin = Vector::Zero(u.grid.dim());
  for (double radius : mass_radii) report.mass_in_ball.emplace_back(radius, mass_in_ball(u, origin, radius));
  for (int a = 0; a < u.grid.dim(); ++a) {
    report.grid_n.push_back(u.grid.n(a));
    report.grid_h.push_back(u.grid.spacing(a));
  }
}

void normalize(Field &u) {
  const double norm = l2_norm(u);
  if (!(norm > 0.0)) throw NumericalError("quasimode: field vanishes on the grid (support not resolved)");
  u.values /= norm;
}

}  // namespace

double bump(const Vector &y) {
  const double s = y.squaredNorm();
  return s < 1.0 ? std::exp(-1.0 / (1.0 - s)) : 0.0;
}

RealField bump_profile(const Grid &grid, const Vector &center, double r) {
  require(r > 0.0, "bump_profile: radius must be positive");
  require(center.size() == grid.dim(), "bump_profile: center dimension differs from grid");
  RealField k = sample(grid, [&](const Vector &x) { return bump(Vector((x - center) / r)); });
  const double norm = l2_norm(k);
  if (!(norm > 0.0)) throw NumericalError("bump_profile: bump not resolved by the grid");
  k.values /= norm;
  return k;
}

Grid bump_grid(const Vector &center, double r, int nodes_per_radius) {
  require(r > 0.0, "bump_grid: radius must be positive");
  require(nodes_per_radius >= 4, "bump_grid: need at least 4 nodes per radius");
  const int d = static_cast<int>(center.size());
  const double h = r / nodes_per_radius;
  const int half = nodes_per_radius + 4;
  return Grid(std::vector<int>(d, 2 * half + 1), std::vector<double>(d, half * h), center);
}

const BumpConstants &bump_constants(int dim) {
  static std::mutex mutex;
  static std::map<int, BumpConstants> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  const int npr = dim == 1 ? 2048 : 256;
  const Vector origin = Vector::Zero(dim);
  const Grid grid = bump_grid(origin, 1.0, npr);
  const RealField k = bump_profile(grid, origin, 1.0);
  BumpConstants c;
  c.laplacian_norm = l2_norm(laplacian(k));
  RealField moment(grid), d1(grid);
  const double h = grid.spacing(0);
  for (long j = 0; j < grid.size(); ++j) {
    moment.values(j) = grid.point(j).norm() * k.values(j);
    const long i = grid.axis_index(j, 0);
    const long s = grid.stride(0);
    if (i >= 2 && i < grid.n(0) - 2)
      d1.values(j) = (k.values(j - 2 * s) - 8.0 * k.values(j - s) + 8.0 * k.values(j + s) -
                      k.values(j + 2 * s)) / (12.0 * h);
  }
  c.moment_norm = l2_norm(moment);
  c.gradient_norm = l2_norm(d1);
  return cache.emplace(dim, c).first->second;
}

Field phase_translate(const Field &f, const Vector &x0, const Vector &xi0) {
  const Grid &g = f.grid;
  const int d = g.dim();
  require(x0.size() == d && xi0.size() == d, "phase_translate: dimension mismatch");
  std::vector<long> shift(d);
  Vector snapped(d);
  for (int a = 0; a < d; ++a) {
    shift[a] = std::lround(x0(a) / g.spacing(a));
    snapped(a) = shift[a] * g.spacing(a);
  }
  Field out(g);
  const Complex global = std::exp(Complex(0.0, -0.5 * xi0.dot(snapped)));
  for (long k = 0; k < g.size(); ++k) {
    if (f.values(k) == Complex(0.0)) continue;
    long target = 0;
    for (int a = 0; a < d; ++a) {
      const long i = g.axis_index(k, a) + shift[a];
      if (i < 2 || i >= g.n(a) - 2) throw ValidationError("phase_translate: support overflow");
      target += i * g.stride(a);
    }
    out.values(target) = f.values(k);
  }
  for (long k = 0; k < g.size(); ++k) {
    if (out.values(k) == Complex(0.0)) continue;
    out.values(k) *= global * std::exp(Complex(0.0, xi0.dot(g.point(k))));
  }
  return out;
}

WavePacketSpec kinetic_spec(const Potential &pot, int n, const Vector &x, const Vector &nu,
                            double t, double r) {
  require(n >= 1, "kinetic_spec: n must be positive");
  require(x.size() == pot.dim && nu.size() == pot.dim, "kinetic_spec: dimension mismatch");
  require(std::abs(nu.norm() - 1.0) <= 1e-12, "kinetic_spec: direction must be a unit vector");
  require(t > 0.0 && r > 0.0, "kinetic_spec: t and r must be positive");
  WavePacketSpec spec;
  spec.n = n;
  spec.x = x;
  spec.nu = nu;
  spec.t = t;
  spec.r = r;
  spec.lambda = std::max((n + 1.0) * (n + 1.0) / (r * r), n * potential_sup_on_ball(pot, x, t));
  const Eigen::MatrixXd proj = nu * nu.transpose();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(pot.dim, pot.dim);
  spec.sigma = t * proj + (n + 1.0) / std::sqrt(spec.lambda) * (id - proj);
  return spec;
}

WavePacketSpec kinetic_spec(const Potential &pot, int n, const KineticRule &rule) {
  const Vector x = Vector::Zero(pot.dim);
  const Vector nu = Vector::Unit(pot.dim, 0);
  return kinetic_spec(pot, n, x, nu, rule.t_scale * n, rule.r_scale * std::pow(n, -rule.r_power));
}

int next_smooth(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int k = m;
    for (int p : {2, 3, 5})
      while (k % p == 0) k /= p;
    if (k == 1) return m;
  }
}

Grid kinetic_grid(const WavePacketSpec &spec, double ppw, double refine) {
  require(refine > 0.0, "kinetic_grid: refine must be positive");
  const int d = static_cast<int>(spec.x.size());
  const double h = 2.0 * kPi / (spec.lambda * ppw) / refine;
  std::vector<int> n(d);
  std::vector<double> half(d);
  for (int a = 0; a < d; ++a) {
    const double extent = spec.sigma.row(a).norm();
    n[a] = next_smooth(2 * (static_cast<int>(std::ceil(extent / h)) + 4) + 1);
    half[a] = 0.5 * (n[a] - 1) * h;
  }
  return Grid(n, half, spec.x);
}

QuasimodeResult kinetic_wavepacket(const Potential &pot, const Damping &b,
                                   const WavePacketSpec &spec, const Grid &grid,
                                   const std::vector<double> &mass_radii) {
  check_resolution(grid, spec.lambda);
  const int d = grid.dim();
  require(d == pot.dim, "kinetic_wavepacket: grid and potential dimensions differ");
  const Eigen::MatrixXd sigma_inv = spec.sigma.inverse();
  const double det = std::abs(spec.sigma.determinant());

  // M_n k centered at the origin, then T_{(x_n, lambda nu)} with x_n snapped.
  Vector snapped(d);
  for (int a = 0; a < d; ++a) {
    const long i = grid.nearest_index(a, spec.x(a));
    snapped(a) = grid.coordinate(a, i);
  }
  const Vector xi0 = spec.lambda * spec.nu;
  const Complex global = std::exp(Complex(0.0, -0.5 * xi0.dot(snapped)));
  Field u(grid);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < grid.size(); ++k) {
    const Vector x = grid.point(k);
    const double envelope = bump(Vector(sigma_inv * (x - snapped)));
    if (envelope == 0.0) continue;
    u.values(k) = global * std::exp(Complex(0.0, xi0.dot(x))) * (envelope / std::sqrt(det));
  }
  if (boundary_max(u, 2) != 0.0) throw ValidationError("kinetic_wavepacket: support overflow");
  normalize(u);

  QuasimodeResult result;
  result.report.family = "kinetic";
  const double qlambda = spec.lambda / std::sqrt(2.0);
  fill_common(result.report, u, pot, b, qlambda, mass_radii);
  auto &ex = result.report.extras;
  ex["n"] = spec.n;
  ex["lambda_n"] = spec.lambda;
  ex["quasimode_lambda"] = qlambda;
  ex["t_n"] = spec.t;
  ex["r_n"] = spec.r;
  ex["transverse_width"] = (spec.n + 1.0) / std::sqrt(spec.lambda);
  const Vector offset = fourier_peak_offset(u, xi0);
  for (int a = 0; a < d; ++a) ex["fourier_offset_bins_" + std::to_string(a + 1)] = offset(a);
  ex["fourier_offset_bins_max"] = offset.cwiseAbs().maxCoeff();
  result.u = std::move(u);
  return result;
}

Grid turning_point_grid(const Potential &pot, const Vector &x0, double R, int nodes_per_radius) {
  const double v = pot(x0);
  require(v >= 1.0, "turning_point_bump: need V(x0) >= 1 so that lambda >= 1");
  const double lambda = std::sqrt(v);
  return bump_grid(x0, R / std::sqrt(lambda), nodes_per_radius);
}

QuasimodeResult turning_point_bump(const Potential &pot, const Damping &b, const Vector &x0,
                                   double R, const Grid &grid, double eps_hat,
                                   const std::vector<double> &mass_radii) {
  require(x0.size() == pot.dim && grid.dim() == pot.dim, "turning_point_bump: dimension mismatch");
  const double v = pot(x0);
  require(v >= 1.0, "turning_point_bump: need V(x0) >= 1 so that lambda >= 1");
  const double lambda = std::sqrt(v);
  if (R < 1.0 || R > lambda) {
    std::ostringstream msg;
    msg << "turning_point_bump: R = " << R << " outside [1, lambda] = [1, " << lambda << "]";
    throw ValidationError(msg.str());
  }
  const double r = R / std::sqrt(lambda);
  const RealField k = bump_profile(grid, x0, r);
  Field u(grid);
  u.values = k.values.cast<Complex>();
  if (boundary_max(u, 2) != 0.0) throw ValidationError("turning_point_bump: support overflow");
  normalize(u);

  QuasimodeResult result;
  result.report.family = "turning_point";
  fill_common(result.report, u, pot, b, lambda, mass_radii);
  const auto &c = bump_constants(pot.dim);
  auto &ex = result.report.extras;
  ex["R"] = R;
  ex["r"] = r;
  ex["eps_hat"] = eps_hat;
  ex["term_inverse_R2"] = 1.0 / (R * R);
  ex["term_R_eps"] = R * eps_hat;
  ex["bound_terms"] = 1.0 / (R * R) + R * eps_hat;
  ex["C_est"] = c.laplacian_norm + c.moment_norm;
  ex["measured_constant"] = result.report.residual_ratio / ex["bound_terms"];
  result.u = std::move(u);
  return result;
}

std::vector<TpcWitnessStep> tpc_violation_sequence(const Potential &pot, const Damping &b,
                                                   const EpsilonProfile &eps,
                                                   const TpcWitnessOptions &options) {
  require(b.dim == pot.dim, "tpc_violation_sequence: damping and potential dimensions differ");
  require(options.n_max >= 1, "tpc_violation_sequence: n_max must be positive");
  require(options.shell_growth > 1.0, "tpc_violation_sequence: shell growth must exceed 1");
  require(!eps.lambdas.empty(), "tpc_violation_sequence: empty epsilon profile");
  const auto dirs = direction_set(pot.dim, options.angles);
  std::vector<TpcWitnessStep> steps;
  for (int n = 1; n <= options.n_max; ++n) {
    const double target_R = n + 1.0;
    // First sampled lambda where R_n = n + 1 satisfies R <= min{eps^{-1/2}, lambda}.
    double lambda_start = eps.lambdas.back();
    for (std::size_t i = 0; i < eps.lambdas.size(); ++i) {
      if (std::pow(eps.values[i], -0.5) >= target_R && eps.lambdas[i] >= target_R) {
        lambda_start = eps.lambdas[i];
        break;
      }
    }
    const double threshold = std::pow(2.0, -n) * b.b_max;
    TpcWitnessStep step;
    step.n = n;
    step.threshold = threshold;
    bool found = false;
    for (double shell = sublevel_radius(pot, lambda_start * lambda_start);
         shell <= options.max_radius && !found; shell *= options.shell_growth) {
      for (const auto &u : dirs) {
        const Vector x = shell * u;
        const double v = pot(x);
        if (v < 1.0) continue;
        const double lambda = std::sqrt(v);
        if (lambda < eps.lambdas.front()) continue;
        const double cap = std::min(std::pow(eps.at(lambda), -0.5), lambda);
        const double R = std::min(target_R, cap);
        if (R < 1.0) continue;
        const double avg = mollify_at(b, R / std::sqrt(lambda), x);
        if (avg <= threshold) {
          step.x = x;
          step.R = R;
          step.capped = R < target_R;
          step.ball_average = avg;
          found = true;
          break;
        }
      }
    }
    if (!found) throw ValidationError("TPC not violated in range");
    const double lambda = std::sqrt(pot(step.x));
    const Grid grid = turning_point_grid(pot, step.x, step.R, options.nodes_per_radius);
    auto result = turning_point_bump(pot, b, step.x, step.R, grid, eps.at(lambda));
    step.report = std::move(result.report);
    step.report.family = "tpc_witness";
    step.report.extras["n"] = n;
    step.report.extras["ball_average"] = step.ball_average;
    step.report.extras["threshold"] = threshold;
    step.report.extras["capped"] = step.capped ? 1.0 : 0.0;
    {
      std::ostringstream msg;
      msg << "tpc witness n=" << n << " |x|=" << step.x.norm() << " R=" << step.R
          << " residual=" << step.report.residual_ratio << " pairing=" << step.report.damping_pairing;
      log(LogLevel::Info, msg.str());
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

Vector fourier_peak_offset(const Field &u, const Vector &target) {
  const Grid &g = u.grid;
  const int d = g.dim();
  require(target.size() == d, "fourier_peak_offset: dimension mismatch");
  require(d <= 2, "fourier_peak_offset: only d <= 2 is supported");
  Eigen::FFT<double> fft;
  Eigen::VectorXcd spectrum = u.values;
  // Transform each axis in turn over the row-major layout.
  for (int a = 0; a < d; ++a) {
    const long n = g.n(a);
    const long stride = g.stride(a);
    std::vector<Complex> in(n), out(n);
    for (long base = 0; base < g.size(); ++base) {
      if (g.axis_index(base, a) != 0) continue;
      for (long i = 0; i < n; ++i) in[i] = spectrum(base + i * stride);
      fft.fwd(out, in);
      for (long i = 0; i < n; ++i) spectrum(base + i * stride) = out[i];
    }
  }
  Eigen::Index peak = 0;
  spectrum.cwiseAbs2().maxCoeff(&peak);
  Vector offset(d);
  for (int a = 0; a < d; ++a) {
    const long n = g.n(a);
    long k = g.axis_index(peak, a);
    if (k >= (n + 1) / 2) k -= n;
    const double bin = 2.0 * kPi / (n * g.spacing(a));
    offset(a) = static_cast<double>(k) - target(a) / bin;
  }
  return offset;
}

}  // namespace stabscope
