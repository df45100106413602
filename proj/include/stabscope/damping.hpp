#ifndef STABSCOPE_DAMPING_HPP
#define STABSCOPE_DAMPING_HPP

#include "stabscope/dynamics.hpp"

namespace stabscope {

/// Damping coefficient 0 <= b(x) <= b_max.
struct Damping {
  int dim = 1;
  std::function<double(const Vector &)> value;
  double b_max = 0.0;
  std::string label;
  std::string name;
  ParamMap params;

  double operator()(const Vector &x) const { return value(x); }
};

/// Builtin patterns, all with parameter "amplitude" (default 1):
///  - constant:      b = amplitude
///  - exterior:      indicator of |x| >= R0
///  - ball:          indicator of |x - c| <= R0, center "c1", "c2", ... (default 0)
///  - checkerboard:  period L, duty in (0, 1); with a_i = [frac(x_i / L) < duty],
///                   damped iff the number of false a_i is even. Duty 1/2 is the
///                   usual checkerboard with cell [0, L/2)^d damped.
///  - radial_shells: damped iff frac(|x| / L) < duty
///  - strip_lattice: damped iff frac(x_i / L) < duty for some axis i
Damping builtin_damping(const std::string &name, int dim, const ParamMap &params = {});

/// alpha * b.
Damping scaled(const Damping &b, double alpha);

struct QuadratureOptions {
  /// Ball nodes for b * kappa_r; 0 selects 512 d.
  int n_conv = 0;
  /// Trapezoid nodes for line and time averages.
  int n_ray = 256;

  int conv_nodes(int dim) const { return n_conv > 0 ? n_conv : 512 * dim; }
};

/// (b * kappa_r)(x): the mean of b over B_r(x).
double mollify_at(const Damping &b, double r, const Vector &x, const QuadratureOptions &q = {});

/// Trapezoid mean over t in [-T, T] of (b * kappa_r)(x0 + t nu0).
double ray_average(const Damping &b, const Vector &x0, const Vector &nu0, double T, double r,
                   const QuadratureOptions &q = {});

struct ConditionSample {
  Vector x;
  /// Ray direction (UGCC), momentum (DSC), empty (TPC).
  Vector direction;
  /// r (UGCC), shell radius (TPC), lambda (DSC).
  double param = 0.0;
  double value = 0.0;
};

struct ConditionReport {
  std::string tag;
  ParamMap params;
  std::vector<ConditionSample> samples;
  /// (param, infimum over the samples with that param), ascending in param.
  std::vector<std::pair<double, double>> trend;
  double infimum = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct RayBase {
  Vector x0;
  Vector nu0;
};

/// Lattice of lattice_n^d points in [-box, box]^d times `directions` unit
/// directions (both signs in 1D).
std::vector<RayBase> lattice_rays(int dim, double box, int lattice_n, int directions);

/// UGCC on a finite r-grid: the infimum over every (ray, r) sample. A liminf
/// over r -> 0 cannot be sampled; the trend keeps the per-r infima.
ConditionReport ugcc_scan(const Damping &b, double T, const std::vector<double> &radii,
                          const std::vector<RayBase> &rays, double threshold,
                          const QuadratureOptions &q = {});

/// TPC: averages of b over B_{R / V(x)^{1/4}}(x) for x on spheres |x| = shell.
/// The liminf proxy is the infimum over the outermost shell.
ConditionReport tpc_scan(const Damping &b, const Potential &pot, double R,
                         const std::vector<double> &shells, int points_per_shell,
                         double threshold, const QuadratureOptions &q = {});

/// <b * kappa_{R / sqrt(lambda)}>_{T / lambda}(rho): trapezoid mean over
/// t in [-T/lambda, T/lambda] along the flow started at rho (original variables).
double flow_average(const Damping &b, const Potential &pot, const PhaseState &rho, double T,
                    double R, double lambda, double dt, const QuadratureOptions &q = {});

struct DscOptions {
  int samples_per_lambda = 300;
  double turning_fraction = 0.2;
  std::uint64_t seed = 0;
  /// Step in original time; 0 selects default_shell_dt(lambda).
  double dt = 0.0;
};

/// DSC: per-lambda infima of flow_average over shell samples. The liminf
/// proxy is the infimum at the largest lambda.
ConditionReport dsc_scan(const Damping &b, const Potential &pot, double T, double R,
                         const std::vector<double> &lambdas, double threshold,
                         const DscOptions &options = {}, const QuadratureOptions &q = {});

struct DscLimitTable {
  std::vector<double> Ts;
  std::vector<double> Rs;
  /// values(i, j): DSC liminf proxy at (Ts[i], Rs[j]).
  Eigen::MatrixXd values;
  /// Value at the largest (T, R).
  double margin = 0.0;
  /// Successive differences along the diagonal (T_k, R_k).
  std::vector<double> cauchy;
};

DscLimitTable dsc_limit_scan(const Damping &b, const Potential &pot,
                             const std::vector<double> &Ts, const std::vector<double> &Rs,
                             const std::vector<double> &lambdas, const DscOptions &options = {},
                             const QuadratureOptions &q = {});

struct MollificationTable {
  /// Line mean of b * kappa_{r0}.
  double reference = 0.0;
  std::vector<double> radii;
  /// Line mean of (b * kappa_{r0}) * kappa_r for each r.
  std::vector<double> values;
};

/// Double mollification along one line: as r -> 0 the values approach the
/// line mean of b * kappa_{r0}.
MollificationTable mollification_consistency(const Damping &b, const Vector &x0,
                                             const Vector &nu0, double T, double r0,
                                             const std::vector<double> &radii,
                                             const QuadratureOptions &q = {});

}  // namespace stabscope

#endif  // STABSCOPE_DAMPING_HPP
