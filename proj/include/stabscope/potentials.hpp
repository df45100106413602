#ifndef STABSCOPE_POTENTIALS_HPP
#define STABSCOPE_POTENTIALS_HPP

#include "stabscope/common.hpp"

#include <functional>
#include <map>

namespace stabscope {

using ParamMap = std::map<std::string, double>;

/// Confining potential V >= 0 on R^d with its gradient.
///
/// Evaluators are pure: a Potential may be shared between threads.
struct Potential {
  int dim = 1;
  std::function<double(const Vector &)> value;
  std::function<Vector(const Vector &)> gradient;
  std::string label;
  /// Radius beyond which V >= 1.
  double a0 = 1.0;
  std::string name;
  ParamMap params;

  double operator()(const Vector &x) const { return value(x); }
};

/// Builtin families:
///  - harmonic:    V(x) = |x|^2 / 2
///  - power:       V(x) = (1 + |x|^2)^{s/2} - 1, exponent "s" in (0, 4)
///  - anisotropic: V(x) = sum_i a_i x_i^2 / 2, weights "a1", "a2", ... (default 1)
Potential builtin_potential(const std::string &name, int dim, const ParamMap &params = {});

/// Max relative error |fd - grad| / max(|grad|, 1) of central differences at
/// `step` over `samples` uniform points of [-box, box]^d.
double gradient_consistency_error(const Potential &pot, int samples, double box,
                                  std::uint64_t seed, double step = 1e-5);

/// Sampled growth modulus lambda -> eps(lambda) controlling |V(x) - V(x0)| on
/// balls of radius sqrt(lambda), stored for ascending lambda.
struct EpsilonProfile {
  std::vector<double> lambdas;
  std::vector<double> values;
  /// (2^{1/4} + C)^3 with C = sup |grad V| / (4 (1 + V)^{3/4}).
  double c_v = 1.0;
  double c_sup = 0.0;
  /// Trial radii A used for the largest lambda.
  std::vector<double> trial_radii;

  /// Value at the largest sampled lambda' <= lambda. Since eps is
  /// non-increasing this never underestimates the sampled profile.
  double at(double lambda) const;
};

struct EpsilonOptions {
  int directions_per_dim = 64;
  int radii_per_annulus = 200;
  int trial_radii = 64;
};

EpsilonProfile epsilon_lambda(const Potential &pot, const std::vector<double> &lambdas,
                              const EpsilonOptions &options = {});

/// Smallest radius rho with V(x) >= level for every sampled |x| >= rho.
double sublevel_radius(const Potential &pot, double level);

/// Sampled sup of V over the closed ball B_radius(center).
double potential_sup_on_ball(const Potential &pot, const Vector &center, double radius);

}  // namespace stabscope

#endif  // STABSCOPE_POTENTIALS_HPP
