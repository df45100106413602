#ifndef STABSCOPE_DYNAMICS_HPP
#define STABSCOPE_DYNAMICS_HPP

#include "stabscope/potentials.hpp"

#include <iosfwd>
#include <random>

namespace stabscope {

/// Point (x, xi) of phase space R^{2d}.
struct PhaseState {
  Vector x;
  Vector xi;
};

/// p(x, xi) = V(x) + |xi|^2 / 2.
double hamiltonian(const Potential &pot, const PhaseState &s);

struct HamiltonianField {
  Vector velocity;
  Vector force;
};

/// (dx/dt, dxi/dt) = (xi, -grad V(x)).
HamiltonianField hamiltonian_field(const Potential &pot, const PhaseState &s);

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;
  double dt = 0.0;
  double p0 = 0.0;
  /// max_k |p(state_k) - p0| / max(p0, 1) over every integrator step.
  double max_drift = 0.0;

  std::size_t size() const { return times.size(); }
  const PhaseState &back() const { return states.back(); }
};

struct FlowOptions {
  double energy_drift_tol = 1e-6;
  /// Store every k-th step (the final state is always stored).
  int sample_every = 1;
};

/// Fixed-step integration of the Hamiltonian flow over [0, T].
///
/// The scheme is the fourth-order triple-jump composition of velocity Verlet:
/// symplectic, time-reversible, and three force evaluations per step. A drift
/// above 100x the tolerance throws NumericalError.
Trajectory flow_integrate(const Potential &pot, const PhaseState &s0, double T, double dt,
                          const FlowOptions &options = {});

/// State at signed time t (negative t integrates backwards). The last step is
/// shortened so the end time is hit exactly.
PhaseState flow_to(const Potential &pot, const PhaseState &s0, double t, double dt);

/// Single integrator step of signed size h.
void flow_step(const Potential &pot, PhaseState &s, double h);

/// Rescaled flow (y_s, eta_s) = (x^{s/lambda}, xi^{s/lambda} / lambda).
///
/// `s0` holds (y, eta); it must satisfy p(y, lambda eta) = lambda^2 to 1e-9
/// relative. `dt` is the step in original time t = s / lambda.
PhaseState rescaled_flow(const Potential &pot, const PhaseState &s0, double s, double lambda,
                         double dt);

struct LinearizationDeviation {
  double dev_eta = 0.0;
  double dev_y = 0.0;
  double bound_eta = 0.0;
  double bound_y = 0.0;
  /// Largest dev/bound - 1 over the two checks (<= 0 means within bounds).
  double excess = 0.0;
  /// Worst |V(y) + lambda^2 |eta|^2 / 2 - lambda^2| / lambda^2 along the orbit.
  double energy_drift = 0.0;
  bool pass = true;
};

/// sup_{|s| <= T} of |eta_s - eta| and |y_s - (y + s eta)| against the bounds
/// (T / sqrt(lambda)) eps and (T^2 / sqrt(lambda)) eps. Suprema are taken over
/// the integrator steps.
LinearizationDeviation linearization_deviation(const Potential &pot, const PhaseState &s0,
                                               double T, double lambda, double eps_hat,
                                               double dt);

/// Default shell step 1e-3 * min(1, 1/sqrt(lambda)) in original time.
double default_shell_dt(double lambda);

/// Samples of the energy shell {p = lambda^2} in original variables.
///
/// Regular samples draw x uniformly in {V <= lambda^2} (rejection in the box of
/// radius sublevel_radius(lambda^2)) and xi uniformly on the sphere of radius
/// sqrt(2 (lambda^2 - V(x))). A fraction `turning_fraction` of the samples is
/// forced to |xi| <= 0.1 lambda, with x on the level set V = lambda^2 - |xi|^2/2
/// found by radial bisection. Deterministic in `seed`.
std::vector<PhaseState> sample_shell(const Potential &pot, double lambda, int count,
                                     std::uint64_t seed, double turning_fraction = 0.0);

/// CSV with columns t, x_1..x_d, xi_1..xi_d, p.
void write_trajectory_csv(std::ostream &out, const Potential &pot, const Trajectory &traj);

}  // namespace stabscope

#endif  // STABSCOPE_DYNAMICS_HPP
