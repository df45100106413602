#include "stabscope/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace stabscope {

namespace {

// Triple-jump weights: w1 h, w0 h, w1 h with 2 w1 + w0 = 1.
const double kCbrt2 = std::cbrt(2.0);
const double kW1 = 1.0 / (2.0 - kCbrt2);
const double kW0 = -kCbrt2 / (2.0 - kCbrt2);

void verlet(const Potential &pot, PhaseState &s, double h) {
  s.xi -= 0.5 * h * pot.gradient(s.x);
  s.x += h * s.xi;
  s.xi -= 0.5 * h * pot.gradient(s.x);
}

void check_state(const PhaseState &s) {
  require(s.x.size() == s.xi.size(), "phase state: x and xi dimensions differ");
  require(s.x.allFinite() && s.xi.allFinite(), "phase state: non-finite component");
}

}  // namespace

double hamiltonian(const Potential &pot, const PhaseState &s) {
  return pot(s.x) + 0.5 * s.xi.squaredNorm();
}

HamiltonianField hamiltonian_field(const Potential &pot, const PhaseState &s) {
  return {s.xi, -pot.gradient(s.x)};
}

void flow_step(const Potential &pot, PhaseState &s, double h) {
  verlet(pot, s, kW1 * h);
  verlet(pot, s, kW0 * h);
  verlet(pot, s, kW1 * h);
}

Trajectory flow_integrate(const Potential &pot, const PhaseState &s0, double T, double dt,
                          const FlowOptions &options) {
  check_state(s0);
  require(s0.x.size() == pot.dim, "flow_integrate: state dimension differs from potential");
  require(dt > 0.0, "flow_integrate: dt must be positive");
  require(T >= dt, "flow_integrate: T must be at least dt");
  require(options.sample_every >= 1, "flow_integrate: sample_every must be positive");

  Trajectory traj;
  traj.dt = dt;
  traj.p0 = hamiltonian(pot, s0);
  const double scale = std::max(traj.p0, 1.0);
  const auto steps = static_cast<long>(std::llround(T / dt));
  traj.times.push_back(0.0);
  traj.states.push_back(s0);

  PhaseState s = s0;
  for (long k = 1; k <= steps; ++k) {
    flow_step(pot, s, dt);
    const double drift = std::abs(hamiltonian(pot, s) - traj.p0) / scale;
    if (!std::isfinite(drift) || drift > 100.0 * options.energy_drift_tol)
      throw NumericalError("integrator unstable: reduce dt");
    traj.max_drift = std::max(traj.max_drift, drift);
    if (k % options.sample_every == 0 || k == steps) {
      traj.times.push_back(static_cast<double>(k) * dt);
      traj.states.push_back(s);
    }
  }
  if (traj.max_drift > options.energy_drift_tol) {
    std::ostringstream msg;
    msg << "flow_integrate: energy drift " << traj.max_drift << " above tolerance "
        << options.energy_drift_tol;
    log(LogLevel::Warn, msg.str());
  }
  return traj;
}

PhaseState flow_to(const Potential &pot, const PhaseState &s0, double t, double dt) {
  check_state(s0);
  require(dt > 0.0, "flow_to: dt must be positive");
  PhaseState s = s0;
  const double sign = t < 0.0 ? -1.0 : 1.0;
  const double span = std::abs(t);
  const auto steps = static_cast<long>(std::ceil(span / dt - 1e-9));
  if (steps == 0) return s;
  const double h = span / static_cast<double>(steps);
  for (long k = 0; k < steps; ++k) flow_step(pot, s, sign * h);
  return s;
}

PhaseState rescaled_flow(const Potential &pot, const PhaseState &s0, double s, double lambda,
                         double dt) {
  check_state(s0);
  require(lambda > 0.0, "rescaled_flow: lambda must be positive");
  const double level = lambda * lambda;
  const double energy = pot(s0.x) + 0.5 * level * s0.xi.squaredNorm();
  if (std::abs(energy - level) > 1e-9 * level)
    throw ValidationError("rescaled_flow: initial state is not on the shell p = lambda^2");
  const PhaseState orig{s0.x, lambda * s0.xi};
  const PhaseState end = flow_to(pot, orig, s / lambda, dt);
  return {end.x, end.xi / lambda};
}

LinearizationDeviation linearization_deviation(const Potential &pot, const PhaseState &s0,
                                               double T, double lambda, double eps_hat,
                                               double dt) {
  check_state(s0);
  require(lambda > 0.0, "linearization_deviation: lambda must be positive");
  require(T >= 0.0, "linearization_deviation: T must be non-negative");
  require(dt > 0.0, "linearization_deviation: dt must be positive");
  const double level = lambda * lambda;
  const double energy = pot(s0.x) + 0.5 * level * s0.xi.squaredNorm();
  if (std::abs(energy - level) > 1e-9 * level)
    throw ValidationError("linearization_deviation: initial state is not on the shell p = lambda^2");

  LinearizationDeviation out;
  out.bound_eta = T / std::sqrt(lambda) * eps_hat;
  out.bound_y = T * T / std::sqrt(lambda) * eps_hat;

  // Original time runs over [-T/lambda, T/lambda].
  const double t_end = T / lambda;
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  if (steps > 0) {
    const double h = t_end / static_cast<double>(steps);
    for (const double sign : {1.0, -1.0}) {
      PhaseState s{s0.x, lambda * s0.xi};
      for (long k = 1; k <= steps; ++k) {
        flow_step(pot, s, sign * h);
        const double rescaled_time = sign * static_cast<double>(k) * h * lambda;
        const Vector eta = s.xi / lambda;
        out.dev_eta = std::max(out.dev_eta, (eta - s0.xi).norm());
        out.dev_y = std::max(out.dev_y, (s.x - s0.x - rescaled_time * s0.xi).norm());
        out.energy_drift =
            std::max(out.energy_drift, std::abs(hamiltonian(pot, s) - level) / level);
      }
    }
  }
  const auto ratio = [](double dev, double bound) {
    if (bound > 0.0) return dev / bound - 1.0;
    return dev > 0.0 ? std::numeric_limits<double>::infinity() : -1.0;
  };
  out.excess = std::max(ratio(out.dev_eta, out.bound_eta), ratio(out.dev_y, out.bound_y));
  out.pass = out.dev_eta <= out.bound_eta && out.dev_y <= out.bound_y;
  return out;
}

double default_shell_dt(double lambda) {
  return 1e-3 * std::min(1.0, 1.0 / std::sqrt(lambda));
}

std::vector<PhaseState> sample_shell(const Potential &pot, double lambda, int count,
                                     std::uint64_t seed, double turning_fraction) {
  require(lambda > 0.0, "sample_shell: lambda must be positive");
  require(count >= 0, "sample_shell: count must be non-negative");
  require(turning_fraction >= 0.0 && turning_fraction <= 1.0,
          "sample_shell: turning fraction must lie in [0, 1]");
  const int d = pot.dim;
  const double level = lambda * lambda;
  const double box = sublevel_radius(pot, level);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  const auto random_direction = [&]() {
    Vector u(d);
    if (d == 1) {
      u(0) = unit(rng) < 0.5 ? -1.0 : 1.0;
      return u;
    }
    for (int i = 0; i < d; ++i) u(i) = normal(rng);
    return Vector(u / u.norm());
  };

  const int turning = static_cast<int>(std::lround(turning_fraction * count));
  std::vector<PhaseState> samples;
  samples.reserve(count);
  for (int k = 0; k < count; ++k) {
    PhaseState s;
    if (k < count - turning) {
      Vector x(d);
      for (;;) {
        for (int i = 0; i < d; ++i) x(i) = box * (2.0 * unit(rng) - 1.0);
        if (pot(x) <= level) break;
      }
      s.x = x;
      s.xi = std::sqrt(2.0 * (level - pot(x))) * random_direction();
    } else {
      // Turning-point regime: small momentum, x on the matching level set.
      const double u = unit(rng);
      const double speed = 0.1 * lambda * u * u;
      const double target = level - 0.5 * speed * speed;
      const Vector omega = random_direction();
      double lo = 0.0;
      double hi = box;
      while (pot(Vector(hi * omega)) < target) hi *= 2.0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (pot(Vector(mid * omega)) < target ? lo : hi) = mid;
      }
      s.x = lo * omega;
      s.xi = std::sqrt(std::max(2.0 * (level - pot(s.x)), 0.0)) * random_direction();
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_trajectory_csv(std::ostream &out, const Potential &pot, const Trajectory &traj) {
  const int d = pot.dim;
  out << "t";
  for (int i = 1; i <= d; ++i) out << ",x_" << i;
  for (int i = 1; i <= d; ++i) out << ",xi_" << i;
  out << ",p\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto &s = traj.states[k];
    out << traj.times[k];
    for (int i = 0; i < d; ++i) out << ',' << s.x(i);
    for (int i = 0; i < d; ++i) out << ',' << s.xi(i);
    out << ',' << hamiltonian(pot, s) << '\n';
  }
}

}  // namespace stabscope
