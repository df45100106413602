#include "stabscope/fields.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace stabscope;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

}  // namespace

TEST(Grid, LayoutAndWeights) {
  const Grid g({9, 11}, {2.0, 5.0}, vec({1.0, 0.0}));
  EXPECT_EQ(g.size(), 99);
  EXPECT_EQ(g.stride(1), 1);
  EXPECT_EQ(g.stride(0), 11);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.5);
  EXPECT_DOUBLE_EQ(g.point(12)(0), -0.5);
  EXPECT_DOUBLE_EQ(g.point(12)(1), -4.0);
  double total = 0.0;
  for (long k = 0; k < g.size(); ++k) total += g.weight(k);
  EXPECT_NEAR(total, 4.0 * 10.0, 1e-12);
  EXPECT_EQ(g.nearest_index(0, 1.26), 5);
  EXPECT_THROW(Grid::cube(1, 1.0, 7), ValidationError);
}

TEST(Fields, LaplacianExactOnLowDegreePolynomials) {
  const Grid g = Grid::cube(2, 1.0, 21);
  const RealField f = sample(g, [](const Vector &x) { return x(0) * x(0) * x(1) * x(1) + std::pow(x(0), 4); });
  const RealField lap = laplacian(f);
  double worst = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    if (g.axis_index(k, 0) < 2 || g.axis_index(k, 0) > 18 || g.axis_index(k, 1) < 2 || g.axis_index(k, 1) > 18)
      continue;
    const Vector x = g.point(k);
    worst = std::max(worst, std::abs(lap.values(k) - (2 * x(1) * x(1) + 2 * x(0) * x(0) + 12 * x(0) * x(0))));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Fields, LaplacianIsFourthOrder) {
  const auto err = [](int n) {
    const Grid g = Grid::cube(1, 8.0, n);
    const RealField f = sample(g, [](const Vector &x) { return std::exp(-x(0) * x(0)); });
    const RealField lap = laplacian(f);
    double e = 0.0;
    for (long k = 0; k < g.size(); ++k) {
      const double x = g.point(k)(0);
      e = std::max(e, std::abs(lap.values(k) - (4 * x * x - 2) * std::exp(-x * x)));
    }
    return e;
  };
  EXPECT_NEAR(std::log2(err(161) / err(321)), 4.0, 0.2);
}

TEST(Fields, GaussianNormsAndInnerProducts) {
  const Grid g = Grid::cube(2, 9.0, 181);
  const RealField f = sample(g, [](const Vector &x) { return std::exp(-0.5 * x.squaredNorm()); });
  EXPECT_NEAR(l2_norm(f), std::sqrt(kPi), 1e-10);
  Field z(g), w(g);
  z.values = f.values.cast<Complex>();
  w.values = Complex(0.0, 1.0) * z.values;
  const Complex ip = inner(w, z);
  EXPECT_NEAR(ip.real(), 0.0, 1e-12);
  EXPECT_NEAR(ip.imag(), -kPi, 1e-9);
}

TEST(Fields, GroundStateOnFineGrid) {
  // ||P f - f/2|| / ||f|| on [-10, 10] with N = 2048
  const auto pot = builtin_potential("harmonic", 1);
  const RealField f = sample(Grid::cube(1, 10.0, 2048), [](const Vector &x) { return std::exp(-0.5 * x(0) * x(0)); });
  RealField r = apply_P(pot, f);
  r.values -= 0.5 * f.values;
  EXPECT_LT(l2_norm(r) / l2_norm(f), 1e-8);
}

TEST(Fields, HarmonicEigenfunctionsHaveSmallResidual) {
  const auto pot = builtin_potential("harmonic", 1);
  const Grid g = Grid::cube(1, 10.0, 401);
  const RealField ground = sample(g, [](const Vector &x) { return std::exp(-0.5 * x(0) * x(0)); });
  const RealField first = sample(g, [](const Vector &x) { return x(0) * std::exp(-0.5 * x(0) * x(0)); });
  EXPECT_LT(residual_ratio(pot, ground, std::sqrt(0.5)), 1e-6);
  EXPECT_LT(residual_ratio(pot, first, std::sqrt(1.5)), 1e-5);
  // the wrong eigenvalue leaves |1/2 - 3/2| / sqrt(3/2)
  EXPECT_NEAR(residual_ratio(pot, ground, std::sqrt(1.5)), 1.0 / std::sqrt(1.5), 1e-6);
}

TEST(Fields, DampingPairingAndMass) {
  const Grid g = Grid::cube(1, 8.0, 801);
  const RealField f = sample(g, [](const Vector &x) { return std::exp(-0.5 * x(0) * x(0)); });
  // |f|^2 = exp(-x^2): mass in [-1, 1] is erf(1)
  EXPECT_NEAR(mass_in_ball(f, vec({0.0}), 1.0), std::erf(1.0), 1e-8);
  EXPECT_NEAR(mass_in_ball(f, vec({0.0}), 0.333), std::erf(0.333), 1e-8);
  // exterior |x| >= 1 sees 1 - erf(1), up to the jump at the grid node
  const double pairing = damping_pairing(builtin_damping("exterior", 1, {{"R0", 1.0}}), f);
  EXPECT_NEAR(pairing, 1.0 - std::erf(1.0), 5e-3);
  EXPECT_DOUBLE_EQ(damping_pairing(builtin_damping("constant", 1, {{"amplitude", 2.0}}), f), 2.0);
}

TEST(Fields, MassInDiskConvergesToClosedForm) {
  // radial mass of exp(-|x|^2) in B_r is 1 - exp(-r^2); the outer axes use
  // the trapezoid rule, so the error shrinks with h
  for (double r : {0.5, 1.0, 2.0}) {
    std::vector<double> err;
    for (int n : {141, 561}) {
      const Grid g = Grid::cube(2, 7.0, n);
      const RealField f = sample(g, [](const Vector &x) { return std::exp(-0.5 * x.squaredNorm()); });
      err.push_back(std::abs(mass_in_ball(f, vec({0.0, 0.0}), r) - (1.0 - std::exp(-r * r))));
    }
    EXPECT_LT(err[1], 1e-3) << r;
    EXPECT_GT(err[0] / err[1], 4.0) << r;
  }
}

TEST(Fields, BoundaryMax) {
  const Grid g = Grid::cube(1, 1.0, 11);
  const RealField f = sample(g, [](const Vector &x) { return x(0); });
  EXPECT_DOUBLE_EQ(boundary_max(f, 1), 1.0);
  EXPECT_NEAR(boundary_max(f, 2), 1.0, 1e-15);
}

TEST(Fields, ResolutionRule) {
  const Grid g = Grid::cube(1, 1.0, 101);  // h = 0.02
  EXPECT_NO_THROW(check_resolution(g, 2 * kPi / (0.02 * 16), 16));
  EXPECT_THROW(check_resolution(g, 2 * kPi / (0.02 * 16) * 1.01, 16), ValidationError);
}

TEST(Fields, BinaryRoundTrip) {
  const Grid g({9, 12}, {1.5, 2.0}, vec({0.25, -1.0}));
  Field f(g);
  for (long k = 0; k < g.size(); ++k) f.values(k) = Complex(std::sin(0.3 * k), std::cos(0.7 * k));
  std::stringstream buf;
  write_field_binary(buf, f);
  EXPECT_EQ(buf.str().size(), 4u + 8u + 16u + 16u + 16u * 108u);
  const Field back = read_field_binary(buf);
  EXPECT_TRUE(back.grid == g);
  EXPECT_EQ(back.values, f.values);
}

TEST(Fields, CsvHeader) {
  Field f(Grid::cube(2, 1.0, 8));
  std::ostringstream out;
  write_field_csv(out, f);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "x_1,x_2,re,im");
}
