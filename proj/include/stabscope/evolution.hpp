#ifndef STABSCOPE_EVOLUTION_HPP
#define STABSCOPE_EVOLUTION_HPP

#include "stabscope/fields.hpp"

#include <Eigen/Sparse>

#include <iosfwd>

namespace stabscope {

/// (u, du/dt) at time t on a shared grid.
template <typename Scalar>
struct BasicWaveState {
  BasicField<Scalar> u;
  BasicField<Scalar> v;
  double t = 0.0;
};

using WaveState = BasicWaveState<double>;
using ComplexWaveState = BasicWaveState<Complex>;

struct EnergyTrace {
  std::vector<double> t;
  std::vector<double> E;
  /// D = <b dt u, dt u>.
  std::vector<double> D;
  /// Trapezoid integral of D over every step up to t_k (not only recorded ones).
  std::vector<double> W;
  double dt = 0.0;
};

struct EvolveOptions {
  double cfl = 0.5;
  /// Record every k-th step (the last step is always recorded).
  int record_every = 1;
};

/// E = (<P u, u> + ||v||^2) / 2 on the grid.
template <typename Scalar>
double wave_energy(const RealField &v_pot, const BasicField<Scalar> &u, const BasicField<Scalar> &v);

/// Leapfrog for u'' + P u + b u' = 0 with the damping term averaged over the
/// two half-step velocities:
///   v+ = ((1 - dt b/2) v- - dt P u) / (1 + dt b/2),   u <- u + dt v+.
/// Velocities live on half steps; E and D at integer steps use the mean of the
/// neighbouring half-step velocities. Requires dt <= cfl h / sqrt(1 + max V);
/// dt is reduced to T_final / ceil(T_final / dt) so the run ends at T_final.
template <typename Scalar>
EnergyTrace evolve(const Potential &pot, const Damping &b, BasicWaveState<Scalar> &state,
                   double T_final, double dt, const EvolveOptions &options = {});

/// |E(T) - E(0) + trapezoid integral of D|.
double energy_balance_defect(const EnergyTrace &trace);

struct DecayFit {
  double C = 0.0;
  double tau = 0.0;
  /// RMS deviation of log E from the fitted line.
  double residual = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  bool decaying = false;
  /// Window cut short because E reached the round-off floor.
  bool truncated = false;
};

/// Least squares of log E against t over the samples after the first 10%,
/// stopping where E / E_0 drops below 1e-13. A slope >= -1e-12 gives
/// tau = infinity and decaying = false.
DecayFit decay_fit(const EnergyTrace &trace);

struct ProbeResult {
  EnergyTrace trace;
  DecayFit fit;
};

/// Evolves U0 = (f, i lambda f) as a complex (re/im coupled) state.
ProbeResult quasimode_probe(const Potential &pot, const Damping &b, const Field &f, double lambda,
                            double T_final, double dt = 0.0);

/// Largest dt allowed by the CFL rule on `grid`.
double max_stable_dt(const Potential &pot, const Grid &grid, double cfl = 0.5);

/// 1D grid for lambda <= lambda_max: Dirichlet truncation at
/// sublevel_radius(4 lambda_max^2) and spacing 2 pi / (16 lambda_max).
Grid resolvent_grid(const Potential &pot, double lambda_max, double ppw = 16.0);

struct ResolventEntry {
  double lambda = 0.0;
  double sigma_min = 0.0;
  double ratio = 0.0;  // lambda / sigma_min
  /// "ok", "bisection" (fallback used) or "failed".
  std::string flag;
  int iterations = 0;
};

struct ResolventScan {
  std::vector<ResolventEntry> entries;
  int grid_n = 0;
  double grid_h = 0.0;
  double truncation = 0.0;
};

struct ResolventOptions {
  int max_iterations = 20000;
  double tolerance = 1e-12;
  std::uint64_t seed = 1;
};

/// Smallest singular value of the banded matrix of P - lambda^2 + i lambda b
/// for each lambda, by inverse iteration on A^* A with a Sylvester-inertia
/// bisection fallback.
ResolventScan resolvent_scan(const Potential &pot, const Damping &b,
                             const std::vector<double> &lambdas, const Grid &grid,
                             const ResolventOptions &options = {});

/// sigma_min of a square sparse complex matrix (same algorithm).
ResolventEntry smallest_singular_value(const Eigen::SparseMatrix<Complex> &A,
                                       const ResolventOptions &options = {});

/// Banded matrix of P on a 1D grid (Dirichlet zero extension).
Eigen::SparseMatrix<double> assemble_P_1d(const Potential &pot, const Grid &grid);

struct SpectrumEntry {
  Complex z;
  /// ||(P + z B + z^2) w|| / ((||P|| + |z| b_max + |z|^2) ||w||) for the
  /// eigenvector's u-block w.
  double residual = 0.0;
};

struct DampedSpectrum {
  std::vector<SpectrumEntry> eigenvalues;
  double abscissa = 0.0;
  /// Modes with |Im z| above this are discarded as unresolved.
  double resolved_cutoff = 0.0;
};

/// Eigenvalues of the 2N x 2N companion matrix [[0, I], [-P, -B]]: the
/// `count` resolved ones with largest real part (ties by |z|).
DampedSpectrum damped_spectrum_1d(const Potential &pot, const Damping &b, const Grid &grid,
                                  int count);

void write_energy_csv(std::ostream &out, const EnergyTrace &trace);
void write_resolvent_csv(std::ostream &out, const ResolventScan &scan);
void write_spectrum_csv(std::ostream &out, const DampedSpectrum &spectrum);

}  // namespace stabscope

#endif  // STABSCOPE_EVOLUTION_HPP
