#include "stabscope/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

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
      throw ValidationError("potential '" + name + "': unknown parameter '" + key + "'");
  }
}

int directions_for(int dim, int per_dim) { return dim == 1 ? 2 : per_dim * dim; }

}  // namespace

Potential builtin_potential(const std::string &name, int dim, const ParamMap &params) {
  require(dim >= 1, "potential dimension must be positive");
  Potential pot;
  pot.dim = dim;
  pot.name = name;
  pot.params = params;

  if (name == "harmonic") {
    reject_unknown(params, {}, name);
    pot.value = [](const Vector &x) { return 0.5 * x.squaredNorm(); };
    pot.gradient = [](const Vector &x) { return Vector(x); };
    pot.a0 = std::sqrt(2.0);
    pot.label = "harmonic";
    return pot;
  }

  if (name == "power") {
    reject_unknown(params, {"s"}, name);
    const double s = param_or(params, "s", 2.0);
    require(s > 0.0, "power potential: exponent s must be positive");
    if (s >= 4.0) throw ValidationError("power potential: s >= 4 violates strict sub-quarticity");
    pot.value = [s](const Vector &x) { return std::pow(1.0 + x.squaredNorm(), 0.5 * s) - 1.0; };
    pot.gradient = [s](const Vector &x) {
      return Vector(s * std::pow(1.0 + x.squaredNorm(), 0.5 * s - 1.0) * x);
    };
    pot.a0 = std::sqrt(std::pow(2.0, 2.0 / s) - 1.0);
    std::ostringstream label;
    label << "power(s=" << s << ")";
    pot.label = label.str();
    return pot;
  }

  if (name == "anisotropic") {
    std::vector<std::string> allowed;
    for (int i = 0; i < dim; ++i) allowed.push_back("a" + std::to_string(i + 1));
    reject_unknown(params, allowed, name);
    Vector weights(dim);
    for (int i = 0; i < dim; ++i) {
      weights(i) = param_or(params, "a" + std::to_string(i + 1), 1.0);
      require(weights(i) > 0.0, "anisotropic potential: weights must be positive");
    }
    pot.value = [weights](const Vector &x) {
      return 0.5 * (weights.array() * x.array().square()).sum();
    };
    pot.gradient = [weights](const Vector &x) { return Vector(weights.cwiseProduct(x)); };
    pot.a0 = std::sqrt(2.0 / weights.minCoeff());
    pot.label = "anisotropic";
    return pot;
  }

  throw ValidationError("unknown potential '" + name + "'");
}

double gradient_consistency_error(const Potential &pot, int samples, double box,
                                  std::uint64_t seed, double step) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-box, box);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    Vector x(pot.dim);
    for (int i = 0; i < pot.dim; ++i) x(i) = uniform(rng);
    const Vector g = pot.gradient(x);
    Vector fd(pot.dim);
    for (int i = 0; i < pot.dim; ++i) {
      Vector xp = x, xm = x;
      xp(i) += step;
      xm(i) -= step;
      fd(i) = (pot(xp) - pot(xm)) / (2.0 * step);
    }
    worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1.0));
  }
  return worst;
}

double EpsilonProfile::at(double lambda) const {
  require(!lambdas.empty(), "epsilon profile is empty");
  require(lambda >= lambdas.front(), "epsilon profile: lambda below sampled range");
  const auto it = std::upper_bound(lambdas.begin(), lambdas.end(), lambda);
  return values[static_cast<std::size_t>(std::distance(lambdas.begin(), it)) - 1];
}

EpsilonProfile epsilon_lambda(const Potential &pot, const std::vector<double> &lambdas,
                              const EpsilonOptions &options) {
  require(!lambdas.empty(), "epsilon_lambda: empty lambda list");
  for (double l : lambdas) require(l >= 1.0, "epsilon_lambda: every lambda must be >= 1");

  const auto dirs = direction_set(pot.dim, directions_for(pot.dim, options.directions_per_dim));
  const int per_annulus = options.radii_per_annulus;

  EpsilonProfile profile;

  // C = sup |grad V| / (4 (1 + V)^{3/4}) over [-1e3, 1e3]^d: fine uniform
  // radii up to 10, geometric beyond.
  {
    const double far = 1e3 * std::sqrt(static_cast<double>(pot.dim));
    std::vector<double> radii;
    for (int k = 0; k <= 2000; ++k) radii.push_back(10.0 * k / 2000.0);
    for (int k = 1; k <= 2000; ++k) radii.push_back(10.0 * std::pow(far / 10.0, k / 2000.0));
    double c = 0.0;
    for (double r : radii) {
      for (const auto &u : dirs) {
        const Vector x = r * u;
        c = std::max(c, pot.gradient(x).norm() / (4.0 * std::pow(1.0 + pot(x), 0.75)));
      }
    }
    profile.c_sup = c;
    profile.c_v = std::pow(std::pow(2.0, 0.25) + c, 3.0);
  }

  std::vector<double> sorted = lambdas;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  double running = std::numeric_limits<double>::infinity();
  for (double lambda : sorted) {
    const double a_max = std::max(pot.a0, lambda);
    std::vector<double> trial;
    if (a_max <= pot.a0) {
      trial.push_back(pot.a0);
    } else {
      const int n = std::max(options.trial_radii, 2);
      for (int j = 0; j < n; ++j) trial.push_back(pot.a0 * std::pow(a_max / pot.a0, j / double(n - 1)));
    }

    // Radial grid: [0, A_0], each annulus [A_j, A_{j+1}], then [A_max, 1e3 A_max].
    std::vector<double> radii;
    std::vector<std::size_t> trial_index;
    for (int k = 0; k < per_annulus; ++k) radii.push_back(trial.front() * k / per_annulus);
    for (std::size_t j = 0; j < trial.size(); ++j) {
      trial_index.push_back(radii.size());
      if (j + 1 < trial.size()) {
        for (int k = 0; k < per_annulus; ++k)
          radii.push_back(trial[j] + (trial[j + 1] - trial[j]) * k / per_annulus);
      }
    }
    for (int k = 0; k <= per_annulus; ++k)
      radii.push_back(a_max * std::pow(1e3, k / double(per_annulus)));

    std::vector<double> grad_max(radii.size(), 0.0), ratio_max(radii.size(), 0.0);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      for (const auto &u : dirs) {
        const Vector x = radii[k] * u;
        const double g = pot.gradient(x).norm();
        grad_max[k] = std::max(grad_max[k], g);
        const double v = pot(x);
        if (v > 0.0) ratio_max[k] = std::max(ratio_max[k], g / std::pow(v, 0.75));
      }
    }
    // prefix max of |grad V| (ball B_A) and suffix max of |grad V| / V^{3/4}
    for (std::size_t k = 1; k < grad_max.size(); ++k) grad_max[k] = std::max(grad_max[k], grad_max[k - 1]);
    for (std::size_t k = ratio_max.size() - 1; k-- > 0;) ratio_max[k] = std::max(ratio_max[k], ratio_max[k + 1]);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < trial.size(); ++j) {
      const std::size_t idx = trial_index[j];
      best = std::min(best, grad_max[idx] / std::pow(lambda, 1.5) + ratio_max[idx]);
    }
    running = std::min(running, profile.c_v * best);
    profile.lambdas.push_back(lambda);
    profile.values.push_back(running);
    profile.trial_radii = trial;
  }
  return profile;
}

double sublevel_radius(const Potential &pot, double level) {
  require(level > 0.0, "sublevel_radius: level must be positive");
  const auto dirs = direction_set(pot.dim, directions_for(pot.dim, 64));
  const auto radial_min = [&](double rho) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto &u : dirs) m = std::min(m, pot(Vector(rho * u)));
    return m;
  };
  if (radial_min(0.0) >= level) throw ValidationError("sublevel_radius: level too small");

  double lo = 0.0;
  double hi = 1.0;
  for (;;) {
    while (radial_min(hi) < level) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e15) throw NumericalError("sublevel_radius: potential does not look confining");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (radial_min(mid) < level ? lo : hi) = mid;
    }
    // confirm the sublevel set does not reappear further out
    double bad = -1.0;
    for (int j = 1; j <= 200; ++j) {
      const double rho = hi * (1.0 + 0.05 * j);
      if (radial_min(rho) < level) bad = rho;
    }
    if (bad < 0.0) return hi;
    lo = bad;
    hi = 2.0 * bad;
  }
}

double potential_sup_on_ball(const Potential &pot, const Vector &center, double radius) {
  require(radius >= 0.0, "potential_sup_on_ball: negative radius");
  const auto dirs = direction_set(pot.dim, directions_for(pot.dim, 64));
  double m = pot(center);
  constexpr int kRadii = 200;
  for (int k = 1; k <= kRadii; ++k) {
    const double rho = radius * k / kRadii;
    for (const auto &u : dirs) m = std::max(m, pot(Vector(center + rho * u)));
  }
  return m;
}

}  // namespace stabscope
