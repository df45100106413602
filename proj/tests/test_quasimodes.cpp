#include "stabscope/quasimodes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace stabscope;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

// Composite Simpson on [-1, 1] with analytic derivatives of exp(-1/(1-y^2)).
double simpson(const std::function<double(double)> &f, int panels = 200000) {
  const double h = 2.0 / panels;
  double s = f(-1.0) + f(1.0);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(-1.0 + i * h);
  return s * h / 3.0;
}

double k1(double y) { return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0; }
double k1_second(double y) {
  if (std::abs(y) >= 1.0) return 0.0;
  const double q = 1.0 - y * y;
  const double p1 = -2.0 * y / (q * q);
  const double p2 = -2.0 / (q * q) - 8.0 * y * y / (q * q * q);
  return (p2 + p1 * p1) * k1(y);
}
double k1_first(double y) {
  if (std::abs(y) >= 1.0) return 0.0;
  const double q = 1.0 - y * y;
  return -2.0 * y / (q * q) * k1(y);
}

}  // namespace

TEST(Quasimodes, BumpValues) {
  EXPECT_DOUBLE_EQ(bump(vec({0.0, 0.0})), std::exp(-1.0));
  EXPECT_EQ(bump(vec({1.0, 0.0})), 0.0);
  EXPECT_NEAR(bump(vec({0.6})), std::exp(-1.0 / 0.64), 1e-15);
}

TEST(Quasimodes, BumpProfileIsNormalized) {
  const Vector c = vec({3.0, -1.0});
  const Grid g = bump_grid(c, 0.5, 40);
  EXPECT_EQ(g.n(0), 2 * 44 + 1);
  const RealField k = bump_profile(g, c, 0.5);
  EXPECT_NEAR(l2_norm(k), 1.0, 1e-14);
  EXPECT_EQ(boundary_max(k, 4), 0.0);
}

TEST(Quasimodes, BumpMassFractionOnHalfBall) {
  // independent quadrature: int_{-1/2}^{1/2} k^2 / int_{-1}^{1} k^2 = 0.84926
  const double total = simpson([](double y) { return k1(y) * k1(y); });
  const double half = simpson([](double y) { return std::abs(y) <= 0.5 ? k1(y) * k1(y) : 0.0; }, 400000);
  EXPECT_NEAR(half / total, 0.84926, 1e-5);
  const Vector c = vec({0.0});
  const RealField k = bump_profile(bump_grid(c, 1.0, 256), c, 1.0);
  EXPECT_NEAR(mass_in_ball(k, c, 0.5), half / total, 1e-6);
}

TEST(Quasimodes, BumpConstantsMatchQuadrature1D) {
  const double norm2 = simpson([](double y) { return k1(y) * k1(y); });
  const double lap = std::sqrt(simpson([](double y) { return std::pow(k1_second(y), 2); }) / norm2);
  const double mom = std::sqrt(simpson([](double y) { return y * y * k1(y) * k1(y); }) / norm2);
  const double grad = std::sqrt(simpson([](double y) { return std::pow(k1_first(y), 2); }) / norm2);
  const auto &c = bump_constants(1);
  EXPECT_NEAR(c.laplacian_norm / lap, 1.0, 1e-6);
  EXPECT_NEAR(c.moment_norm / mom, 1.0, 1e-6);
  EXPECT_NEAR(c.gradient_norm / grad, 1.0, 1e-6);
}

TEST(Quasimodes, PhaseTranslate) {
  const Grid g = Grid::cube(1, 4.0, 161);  // h = 0.05
  Field f(g);
  f.values = bump_profile(g, vec({0.0}), 1.0).values.cast<Complex>();
  const Vector x0 = vec({1.0});
  const Vector xi0 = vec({3.0});
  const Field u = phase_translate(f, x0, xi0);
  const long at = g.nearest_index(0, 1.0);
  // T f(x0) = exp(i xi0 x0 / 2) f(0)
  EXPECT_NEAR(std::abs(u.values(at) - std::exp(Complex(0.0, 1.5)) * f.values(80)), 0.0, 1e-14);
  EXPECT_NEAR(l2_norm(u), l2_norm(f), 1e-14);
  EXPECT_THROW(phase_translate(f, vec({3.0}), xi0), ValidationError);
}

TEST(Quasimodes, NextSmooth) {
  EXPECT_EQ(next_smooth(1), 1);
  EXPECT_EQ(next_smooth(7), 8);
  EXPECT_EQ(next_smooth(97), 100);
  EXPECT_EQ(next_smooth(121), 125);
}

TEST(Quasimodes, FourierPeakOfPlaneWave) {
  // 64 nodes over 2L = 2*pi*(63/64): bin spacing is 2 pi / (N h) = 1
  const int n = 64;
  const double h = 2.0 * kPi / n;
  const Grid g({n}, {0.5 * (n - 1) * h}, vec({0.0}));
  Field u(g);
  for (long k = 0; k < g.size(); ++k) u.values(k) = std::exp(Complex(0.0, 7.0 * g.point(k)(0)));
  EXPECT_NEAR(fourier_peak_offset(u, vec({7.0}))(0), 0.0, 1e-12);
  EXPECT_NEAR(fourier_peak_offset(u, vec({5.0}))(0), 2.0, 1e-12);
}

TEST(Quasimodes, KineticSpecFollowsRule) {
  const auto pot = builtin_potential("harmonic", 2);
  const auto spec = kinetic_spec(pot, 4);
  // r = 2 / sqrt(4) = 1, t = 2: lambda = max(25 / 1, 4 * sup_{B_2} |x|^2/2 = 8) = 25
  EXPECT_NEAR(spec.lambda, 25.0, 1e-12);
  EXPECT_NEAR(spec.sigma(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(spec.sigma(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(spec.sigma(0, 1), 0.0, 1e-14);
  const auto far = kinetic_spec(pot, 3, vec({10.0, 0.0}), vec({0.0, 1.0}), 1.0, 1.0);
  EXPECT_NEAR(far.lambda, 3.0 * 60.5, 1e-9);
  EXPECT_THROW(kinetic_spec(pot, 3, vec({0.0, 0.0}), vec({1.0, 1.0}), 1.0, 1.0), ValidationError);
}

TEST(Quasimodes, KineticWavepacketIsLocalizedAndResolved) {
  const auto pot = builtin_potential("harmonic", 1);
  const auto spec = kinetic_spec(pot, 4);
  const auto q = kinetic_wavepacket(pot, builtin_damping("constant", 1), spec, kinetic_grid(spec));
  EXPECT_NEAR(l2_norm(q.u), 1.0, 1e-12);
  EXPECT_NEAR(q.report.damping_pairing, 1.0, 1e-14);
  EXPECT_NEAR(q.report.lambda, spec.lambda / std::sqrt(2.0), 1e-12);
  EXPECT_LE(q.report.extras.at("fourier_offset_bins_max"), 3.0);
  // support is x_n + Sigma B_1 = [-2, 2]
  EXPECT_NEAR(q.report.mass_in_ball.back().second, 1.0, 1e-12);
}

TEST(Quasimodes, TurningPointBumpBoundTerms) {
  const auto pot = builtin_potential("harmonic", 1);
  const Vector x0 = vec({40.0});
  const double lambda = std::sqrt(800.0);
  const auto grid = turning_point_grid(pot, x0, 2.0);
  const auto q = turning_point_bump(pot, builtin_damping("exterior", 1, {{"R0", 30.0}}), x0, 2.0, grid, 0.01);
  EXPECT_NEAR(q.report.lambda, lambda, 1e-12);
  EXPECT_NEAR(q.report.extras.at("r"), 2.0 / std::sqrt(lambda), 1e-14);
  EXPECT_NEAR(q.report.extras.at("bound_terms"), 0.25 + 0.02, 1e-14);
  EXPECT_DOUBLE_EQ(q.report.damping_pairing, 1.0);
  // mass sits near x0, far from the origin
  EXPECT_EQ(q.report.mass_in_ball.front().second, 0.0);
  EXPECT_THROW(turning_point_bump(pot, builtin_damping("constant", 1), x0, 50.0, grid, 0.01), ValidationError);
}

TEST(Quasimodes, WitnessNeedsAnUndampedRegion) {
  const auto pot = builtin_potential("harmonic", 2);
  const auto eps = epsilon_lambda(pot, {1.0, 10.0, 100.0, 1e3, 1e4});
  TpcWitnessOptions opts;
  opts.n_max = 1;
  opts.angles = 16;
  opts.max_radius = 1e4;
  opts.shell_growth = 1.5;
  try {
    tpc_violation_sequence(pot, builtin_damping("constant", 2), eps, opts);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError &e) {
    EXPECT_STREQ(e.what(), "TPC not violated in range");
  }
  const auto steps = tpc_violation_sequence(pot, builtin_damping("ball", 2, {{"R0", 1.0}}), eps, opts);
  ASSERT_EQ(steps.size(), 1u);
  EXPECT_EQ(steps[0].ball_average, 0.0);
  EXPECT_EQ(steps[0].report.damping_pairing, 0.0);
}
