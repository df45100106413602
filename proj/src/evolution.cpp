#include "stabscope/evolution.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace stabscope {

namespace {

template <typename Scalar>
double weighted_norm2(const Grid &g, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &v,
                      const Eigen::VectorXd *b = nullptr) {
  double sum = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    const double m = g.weight(k) * std::norm(v(k));
    sum += b ? (*b)(k) * m : m;
  }
  return sum;
}

}  // namespace

template <typename Scalar>
double wave_energy(const RealField &v_pot, const BasicField<Scalar> &u, const BasicField<Scalar> &v) {
  const auto pu = apply_P(v_pot, u);
  return 0.5 * (std::real(inner(u, pu)) + weighted_norm2(v.grid, v.values));
}

double max_stable_dt(const Potential &pot, const Grid &grid, double cfl) {
  const RealField v = sample(grid, pot);
  double h = grid.spacing(0);
  for (int a = 1; a < grid.dim(); ++a) h = std::min(h, grid.spacing(a));
  return cfl * h / std::sqrt(1.0 + v.values.maxCoeff());
}

template <typename Scalar>
EnergyTrace evolve(const Potential &pot, const Damping &b, BasicWaveState<Scalar> &state,
                   double T_final, double dt, const EvolveOptions &options) {
  using Values = typename BasicField<Scalar>::Values;
  const Grid &g = state.u.grid;
  require(state.v.grid == g, "evolve: u and v live on different grids");
  require(g.dim() == pot.dim && g.dim() == b.dim, "evolve: dimension mismatch");
  require(dt > 0.0 && T_final >= dt, "evolve: need 0 < dt <= T_final");
  require(options.record_every >= 1, "evolve: record_every must be positive");
  const RealField vpot = sample(g, pot);
  const RealField bgrid = sample(g, b);
  const double dt_max = max_stable_dt(pot, g, options.cfl);
  if (dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "CFL violation: dt = " << dt << " exceeds " << options.cfl
        << " h / sqrt(1 + max V) = " << dt_max;
    throw ValidationError(msg.str());
  }
  // shrink dt slightly so the run ends exactly at T_final
  const auto steps = static_cast<long>(std::ceil(T_final / dt - 1e-9));
  dt = T_final / static_cast<double>(steps);

  const Eigen::ArrayXd half_b = 0.5 * dt * bgrid.values.array();
  const Eigen::ArrayXd damp_minus = 1.0 - half_b;
  const Eigen::ArrayXd damp_plus_inv = 1.0 / (1.0 + half_b);

  BasicField<Scalar> u = state.u;
  BasicField<Scalar> pu = apply_P(vpot, u);
  // v at -dt/2 from a backward Taylor step of u'' = -P u - b u'.
  Values v_minus = state.v.values + (0.5 * dt) * (pu.values + bgrid.values.template cast<Scalar>().cwiseProduct(state.v.values));

  EnergyTrace trace;
  trace.dt = dt;
  double work = 0.0;
  double prev_D = 0.0;
  Values v_center;
  for (long k = 0; k <= steps; ++k) {
    Values v_plus = ((damp_minus.template cast<Scalar>() * v_minus.array() - dt * pu.values.array()) *
                     damp_plus_inv.template cast<Scalar>())
                        .matrix();
    v_center = Scalar(0.5) * (v_minus + v_plus);
    const double E = 0.5 * (std::real(inner(u, pu)) + weighted_norm2(g, v_center));
    const double D = weighted_norm2(g, v_center, &bgrid.values);
    if (!std::isfinite(E)) throw NumericalError("evolve: NaN detected at step " + std::to_string(k));
    if (k > 0) work += 0.5 * dt * (prev_D + D);
    prev_D = D;
    if (k % options.record_every == 0 || k == steps) {
      trace.t.push_back(state.t + static_cast<double>(k) * dt);
      trace.E.push_back(E);
      trace.D.push_back(D);
      trace.W.push_back(work);
    }
    if (k == steps) break;
    u.values += dt * v_plus;
    pu = apply_P(vpot, u);
    v_minus = std::move(v_plus);
  }
  state.u = std::move(u);
  state.v.values = v_center;
  state.t += static_cast<double>(steps) * dt;
  return trace;
}

template double wave_energy(const RealField &, const RealField &, const RealField &);
template double wave_energy(const RealField &, const Field &, const Field &);
template EnergyTrace evolve(const Potential &, const Damping &, WaveState &, double, double,
                            const EvolveOptions &);
template EnergyTrace evolve(const Potential &, const Damping &, ComplexWaveState &, double, double,
                            const EvolveOptions &);

double energy_balance_defect(const EnergyTrace &trace) {
  require(!trace.E.empty(), "energy_balance_defect: empty trace");
  return std::abs(trace.E.back() - trace.E.front() + trace.W.back() - trace.W.front());
}

DecayFit decay_fit(const EnergyTrace &trace) {
  const std::size_t n = trace.E.size();
  require(n >= 3, "decay_fit: need at least 3 samples");
  DecayFit fit;
  const std::size_t first = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n)));
  const double e0 = trace.E.front();
  require(e0 > 0.0, "decay_fit: initial energy must be positive");
  std::size_t last = first;
  while (last < n && trace.E[last] > 1e-13 * e0) ++last;
  fit.truncated = last < n;
  if (last - first < 2) throw NumericalError("decay_fit: energy reaches the round-off floor before the fit window");
  if (fit.truncated) log(LogLevel::Warn, "decay_fit: window truncated at the round-off floor");

  Eigen::MatrixXd A(last - first, 2);
  Eigen::VectorXd y(last - first);
  for (std::size_t k = first; k < last; ++k) {
    A(k - first, 0) = 1.0;
    A(k - first, 1) = trace.t[k];
    y(k - first) = std::log(trace.E[k]);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
  fit.C = std::exp(coef(0));
  fit.window_start = trace.t[first];
  fit.window_end = trace.t[last - 1];
  fit.residual = std::sqrt((A * coef - y).squaredNorm() / static_cast<double>(y.size()));
  if (coef(1) >= -1e-12) {
    fit.tau = std::numeric_limits<double>::infinity();
    fit.decaying = false;
  } else {
    fit.tau = -1.0 / coef(1);
    fit.decaying = true;
  }
  return fit;
}

ProbeResult quasimode_probe(const Potential &pot, const Damping &b, const Field &f, double lambda,
                            double T_final, double dt) {
  require(lambda > 0.0, "quasimode_probe: lambda must be positive");
  if (dt <= 0.0) dt = max_stable_dt(pot, f.grid);
  ComplexWaveState state{f, f, 0.0};
  state.v.values = Complex(0.0, lambda) * f.values;
  ProbeResult out;
  EvolveOptions options;
  options.record_every = std::max<int>(1, static_cast<int>(std::llround(T_final / dt / 2000.0)));
  out.trace = evolve(pot, b, state, T_final, dt, options);
  out.fit = decay_fit(out.trace);
  return out;
}

Grid resolvent_grid(const Potential &pot, double lambda_max, double ppw) {
  require(pot.dim == 1, "resolvent scan requires d = 1");
  require(lambda_max > 0.0, "resolvent_grid: lambda_max must be positive");
  const double L = sublevel_radius(pot, 4.0 * lambda_max * lambda_max);
  const double h = 2.0 * kPi / (ppw * lambda_max);
  const int n = static_cast<int>(std::ceil(2.0 * L / h)) + 1;
  return Grid::cube(1, L, n);
}

Eigen::SparseMatrix<double> assemble_P_1d(const Potential &pot, const Grid &grid) {
  require(grid.dim() == 1, "assemble_P_1d: grid must be one-dimensional");
  const long n = grid.n(0);
  const double h2 = grid.spacing(0) * grid.spacing(0);
  constexpr double c[5] = {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * n);
  for (long i = 0; i < n; ++i) {
    for (int m = -2; m <= 2; ++m) {
      const long j = i + m;
      if (j < 0 || j >= n) continue;
      double value = -0.5 * c[m + 2] / h2;
      if (m == 0) value += pot(grid.point(i));
      entries.emplace_back(i, j, value);
    }
  }
  Eigen::SparseMatrix<double> P(n, n);
  P.setFromTriplets(entries.begin(), entries.end());
  return P;
}

ResolventEntry smallest_singular_value(const Eigen::SparseMatrix<Complex> &A,
                                       const ResolventOptions &options) {
  using SpMat = Eigen::SparseMatrix<Complex>;
  require(A.rows() == A.cols(), "smallest_singular_value: matrix must be square");
  const Eigen::Index n = A.rows();
  ResolventEntry out;

  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) {
    out.sigma_min = 0.0;
    out.flag = "singular";
    return out;
  }
  const SpMat Ah = A.adjoint();
  Eigen::SparseLU<SpMat> lu_h;
  lu_h.compute(Ah);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = Complex(normal(rng), normal(rng));
  x.normalize();

  double sigma = (A * x).norm();
  bool converged = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    Eigen::VectorXcd z = lu.solve(lu_h.solve(x));
    x = z / z.norm();
    const Eigen::VectorXcd ax = A * x;
    sigma = ax.norm();
    // Eigen-residual of A^* A at the Rayleigh quotient sigma^2.
    const double r = (Ah * ax - sigma * sigma * x).norm();
    if (r <= std::sqrt(options.tolerance) * sigma * sigma) {
      converged = true;
      break;
    }
  }
  out.iterations = it;
  if (converged && std::isfinite(sigma)) {
    out.sigma_min = sigma;
    out.flag = "ok";
    return out;
  }

  // Fallback: bisection on the inertia of A^* A - s I (Sylvester).
  const SpMat H = Ah * A;
  SpMat I(n, n);
  I.setIdentity();
  const auto count_below = [&](double s) -> long {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(H - Complex(s) * I);
    if (ldlt.info() != Eigen::Success) return -1;
    long negatives = 0;
    for (Eigen::Index i = 0; i < n; ++i) negatives += ldlt.vectorD()(i).real() < 0.0;
    return negatives;
  };
  double lo = 0.0;
  double hi = std::isfinite(sigma) ? sigma * sigma * (1.0 + 1e-9) : 0.0;
  if (!(hi > 0.0) || count_below(hi) < 1) {
    out.sigma_min = std::isfinite(sigma) ? sigma : 0.0;
    out.flag = "failed";
    return out;
  }
  for (int k = 0; k < 200 && hi - lo > 1e-14 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    const long c = count_below(mid);
    if (c < 0) break;
    (c >= 1 ? hi : lo) = mid;
  }
  out.sigma_min = std::sqrt(hi);
  out.flag = "bisection";
  return out;
}

ResolventScan resolvent_scan(const Potential &pot, const Damping &b,
                             const std::vector<double> &lambdas, const Grid &grid,
                             const ResolventOptions &options) {
  if (pot.dim != 1 || b.dim != 1 || grid.dim() != 1)
    throw ValidationError("resolvent scan requires d = 1");
  require(!lambdas.empty(), "resolvent_scan: empty lambda list");
  double lambda_max = 0.0;
  for (double l : lambdas) lambda_max = std::max(lambda_max, std::abs(l));
  require(lambda_max > 0.0, "resolvent_scan: lambdas must not all vanish");
  check_resolution(grid, lambda_max);

  const Eigen::SparseMatrix<Complex> P = assemble_P_1d(pot, grid).cast<Complex>();
  const RealField bgrid = sample(grid, b);
  ResolventScan scan;
  scan.grid_n = grid.n(0);
  scan.grid_h = grid.spacing(0);
  scan.truncation = grid.half_width(0);
  scan.entries.resize(lambdas.size());
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(lambdas.size()); ++k) {
    const double lambda = lambdas[k];
    Eigen::SparseMatrix<Complex> A = P;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      A.coeffRef(i, i) += Complex(-lambda * lambda, lambda * bgrid.values(i));
    ResolventEntry e = smallest_singular_value(A, options);
    e.lambda = lambda;
    e.ratio = e.sigma_min > 0.0 ? std::abs(lambda) / e.sigma_min : std::numeric_limits<double>::infinity();
    if (e.flag == "failed") log(LogLevel::Warn, "resolvent_scan: sigma_min not converged at lambda = " + std::to_string(lambda));
    scan.entries[k] = e;
  }
  return scan;
}

DampedSpectrum damped_spectrum_1d(const Potential &pot, const Damping &b, const Grid &grid,
                                  int count) {
  require(pot.dim == 1 && b.dim == 1 && grid.dim() == 1, "damped_spectrum_1d requires d = 1");
  require(count >= 1 && count <= 200, "damped_spectrum_1d: count must lie in [1, 200]");
  const Eigen::MatrixXd P = Eigen::MatrixXd(assemble_P_1d(pot, grid));
  const long n = P.rows();
  const Eigen::VectorXd bvals = sample(grid, b).values;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  companion.topRightCorner(n, n).setIdentity();
  companion.bottomLeftCorner(n, n) = -P;
  companion.bottomRightCorner(n, n).diagonal() = -bvals;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, true);
  if (solver.info() != Eigen::Success) throw NumericalError("damped_spectrum_1d: eigensolver failed");

  DampedSpectrum out;
  out.resolved_cutoff = 2.0 * kPi / (16.0 * grid.spacing(0));
  const double p_norm = P.cwiseAbs().rowwise().sum().maxCoeff();
  const Eigen::VectorXcd &values = solver.eigenvalues();
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (std::abs(values(i).imag()) <= out.resolved_cutoff) order.push_back(i);
  const auto rounded = [](double re) { return std::round(re * 1e9) / 1e9; };
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
    const double ra = rounded(values(a).real());
    const double rc = rounded(values(c).real());
    if (ra != rc) return ra > rc;
    if (std::abs(values(a)) != std::abs(values(c))) return std::abs(values(a)) < std::abs(values(c));
    return values(a).imag() > values(c).imag();
  });
  if (static_cast<int>(order.size()) > count) order.resize(count);
  if (static_cast<int>(order.size()) < count)
    log(LogLevel::Warn, "damped_spectrum_1d: fewer resolved modes than requested");

  const Eigen::MatrixXcd Pc = P.cast<Complex>();
  out.abscissa = -std::numeric_limits<double>::infinity();
  for (const Eigen::Index i : order) {
    const Complex z = values(i);
    const Eigen::VectorXcd w = solver.eigenvectors().col(i).head(n);
    Eigen::VectorXcd r = Pc * w + z * (bvals.cast<Complex>().cwiseProduct(w)) + z * z * w;
    const double scale = (p_norm + std::abs(z) * b.b_max + std::norm(z)) * w.norm();
    SpectrumEntry e;
    e.z = z;
    e.residual = scale > 0.0 ? r.norm() / scale : 0.0;
    out.eigenvalues.push_back(e);
    out.abscissa = std::max(out.abscissa, z.real());
  }
  return out;
}

void write_energy_csv(std::ostream &out, const EnergyTrace &trace) {
  out << "t,E,D\n" << std::setprecision(17);
  for (std::size_t k = 0; k < trace.t.size(); ++k)
    out << trace.t[k] << ',' << trace.E[k] << ',' << trace.D[k] << '\n';
}

void write_resolvent_csv(std::ostream &out, const ResolventScan &scan) {
  out << "lambda,sigma_min,lambda_over_sigma_min,flag\n" << std::setprecision(17);
  for (const auto &e : scan.entries)
    out << e.lambda << ',' << e.sigma_min << ',' << e.ratio << ',' << e.flag << '\n';
}

void write_spectrum_csv(std::ostream &out, const DampedSpectrum &spectrum) {
  out << "re,im,residual\n" << std::setprecision(17);
  for (const auto &e : spectrum.eigenvalues)
    out << e.z.real() << ',' << e.z.imag() << ',' << e.residual << '\n';
}

}  // namespace stabscope
