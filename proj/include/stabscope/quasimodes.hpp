#ifndef STABSCOPE_QUASIMODES_HPP
#define STABSCOPE_QUASIMODES_HPP

#include "stabscope/fields.hpp"

namespace stabscope {

/// Unnormalized bump exp(-1 / (1 - |y|^2)) on the open unit ball, 0 outside.
double bump(const Vector &y);

/// Field x -> r^{-d/2} k((x - center) / r) with k the bump normalized so the
/// discrete L2 norm of the result is 1.
RealField bump_profile(const Grid &grid, const Vector &center, double r);

/// Grid centered at `center` covering B_r(center) with `nodes_per_radius`
/// spacings per radius plus 4 empty layers on each side.
Grid bump_grid(const Vector &center, double r, int nodes_per_radius = 96);

/// Norms of the unit-scale normalized bump k in dimension d, from a fine grid.
struct BumpConstants {
  double laplacian_norm = 0.0;  // ||Delta k||
  double moment_norm = 0.0;     // || |x| k ||
  double gradient_norm = 0.0;   // ||d_1 k||
};
const BumpConstants &bump_constants(int dim);

/// T_rho0 f(x) = exp(-i xi0.x0 / 2) exp(i xi0.x) f(x - x0), with x0 snapped
/// to a whole number of grid spacings per axis. Throws when the shifted
/// support would reach the outer 2 layers.
Field phase_translate(const Field &f, const Vector &x0, const Vector &xi0);

struct QuasimodeReport {
  std::string family;
  /// Spectral parameter at which the residual is measured.
  double lambda = 0.0;
  double residual_ratio = 0.0;
  double damping_pairing = 0.0;
  std::vector<std::pair<double, double>> mass_in_ball;  // (radius about 0, mass)
  std::vector<int> grid_n;
  std::vector<double> grid_h;
  /// Family-specific numbers (bound terms, packet parameters, Fourier check).
  ParamMap extras;
};

struct WavePacketSpec {
  int n = 0;
  Vector x;
  Vector nu;
  double t = 0.0;
  double r = 0.0;
  double lambda = 0.0;
  Eigen::MatrixXd sigma;
};

/// lambda_n = max{(n+1)^2 / r_n^2, n sup_{B_{t_n}(x_n)} V} and
/// Sigma_n = t_n nu nu^T + (n+1)/sqrt(lambda_n) (I - nu nu^T).
WavePacketSpec kinetic_spec(const Potential &pot, int n, const Vector &x, const Vector &nu,
                            double t, double r);

/// Sequence rule used at desk scale: x_n = 0, nu_n = e_1, t_n = t_scale n,
/// r_n = r_scale n^{-r_power}.
struct KineticRule {
  double t_scale = 0.5;
  double r_scale = 2.0;
  double r_power = 0.5;
};
WavePacketSpec kinetic_spec(const Potential &pot, int n, const KineticRule &rule = {});

/// Axis-aligned grid holding x_n + Sigma_n B_1 plus 4 layers, spacing
/// 2 pi / (lambda_n ppw) scaled by `refine`, sizes rounded up to 5-smooth.
Grid kinetic_grid(const WavePacketSpec &spec, double ppw = 16.0, double refine = 1.0);

struct QuasimodeResult {
  Field u;
  QuasimodeReport report;
};

/// u = T_{(x_n, lambda_n nu_n)} M_n k with M_n f(x) = |det Sigma|^{-1/2} f(Sigma^{-1} x).
///
/// The momentum lambda_n nu_n gives kinetic energy lambda_n^2 / 2 under
/// P = V - Laplacian/2, so the residual is measured at lambda_n / sqrt(2)
/// (extras: quasimode_lambda). extras also carry the Fourier peak offset in
/// bins per axis.
QuasimodeResult kinetic_wavepacket(const Potential &pot, const Damping &b,
                                   const WavePacketSpec &spec, const Grid &grid,
                                   const std::vector<double> &mass_radii = {1.0, 2.0, 4.0});

/// Potential-regime bump u = r^{-d/2} k((x - x0)/r), r = R/sqrt(lambda),
/// lambda = sqrt(V(x0)). extras hold the bound terms 1/R^2 and R eps, their
/// sum, C_est = ||Delta k|| + || |x| k || and measured_constant =
/// residual / (1/R^2 + R eps).
QuasimodeResult turning_point_bump(const Potential &pot, const Damping &b, const Vector &x0,
                                   double R, const Grid &grid, double eps_hat,
                                   const std::vector<double> &mass_radii = {1.0, 2.0, 4.0});

/// Grid for turning_point_bump at (x0, R).
Grid turning_point_grid(const Potential &pot, const Vector &x0, double R,
                        int nodes_per_radius = 96);

struct TpcWitnessOptions {
  int n_max = 6;
  /// Ratio between consecutive search shells.
  double shell_growth = 1.01;
  /// Angular lattice size (ignored in 1D).
  int angles = 720;
  double max_radius = 1e8;
  int nodes_per_radius = 64;
};

struct TpcWitnessStep {
  int n = 0;
  Vector x;
  double R = 0.0;
  /// Whether R = n + 1 was capped by min{eps^{-1/2}, lambda}.
  bool capped = false;
  double ball_average = 0.0;
  double threshold = 0.0;
  QuasimodeReport report;
};

/// Instability witness: for n = 1..n_max the first point x_n (outward radial
/// sweep over shells times an angular lattice, starting where R_n = n + 1 is
/// admissible) whose TPC ball average is <= 2^{-n} b_max, and the potential
/// bump built there. Throws "TPC not violated in range" when a step finds no
/// such point.
std::vector<TpcWitnessStep> tpc_violation_sequence(const Potential &pot, const Damping &b,
                                                   const EpsilonProfile &eps,
                                                   const TpcWitnessOptions &options = {});

/// Frequency of the largest |DFT| coefficient minus `target`, in bins per axis.
Vector fourier_peak_offset(const Field &u, const Vector &target);

/// Smallest integer >= n of the form 2^a 3^b 5^c.
int next_smooth(int n);

}  // namespace stabscope

#endif  // STABSCOPE_QUASIMODES_HPP
