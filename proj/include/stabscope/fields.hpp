#ifndef STABSCOPE_FIELDS_HPP
#define STABSCOPE_FIELDS_HPP

#include "stabscope/damping.hpp"

#include <iosfwd>

namespace stabscope {

/// Uniform tensor grid: axis i has n[i] nodes spanning
/// [center_i - half_width_i, center_i + half_width_i]. Nodes are stored
/// row-major (last axis fastest).
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<int> n, std::vector<double> half_width, Vector center);
  /// [-L, L]^d with N nodes per axis.
  static Grid cube(int dim, double L, int N);

  int dim() const { return static_cast<int>(n_.size()); }
  int n(int axis) const { return n_[axis]; }
  double half_width(int axis) const { return half_width_[axis]; }
  const Vector &center() const { return center_; }
  double spacing(int axis) const { return 2.0 * half_width_[axis] / (n_[axis] - 1); }
  long stride(int axis) const { return stride_[axis]; }
  long size() const { return size_; }
  double coordinate(int axis, long k) const {
    return center_(axis) - half_width_[axis] + spacing(axis) * static_cast<double>(k);
  }
  /// Per-axis index of a flat node index.
  long axis_index(long flat, int axis) const { return (flat / stride_[axis]) % n_[axis]; }
  Vector point(long flat) const;
  /// Tensor trapezoid weight of a node.
  double weight(long flat) const;
  /// Index of the node nearest to `coordinate` along `axis` (unclamped).
  long nearest_index(int axis, double coordinate) const;

  bool operator==(const Grid &other) const;
  bool operator!=(const Grid &other) const { return !(*this == other); }

 private:
  std::vector<int> n_;
  std::vector<double> half_width_;
  Vector center_;
  std::vector<long> stride_;
  long size_ = 0;
};

/// Nodal values of a function on a Grid.
template <typename Scalar>
struct BasicField {
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Grid grid;
  Values values;

  BasicField() = default;
  explicit BasicField(const Grid &g) : grid(g), values(Values::Zero(g.size())) {}
  BasicField(const Grid &g, Values v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.size(), "field: value count differs from grid size");
  }
};

using Field = BasicField<Complex>;
using RealField = BasicField<double>;

/// f sampled at every node.
RealField sample(const Grid &grid, const std::function<double(const Vector &)> &f);
inline RealField sample(const Grid &grid, const Potential &pot) { return sample(grid, pot.value); }
inline RealField sample(const Grid &grid, const Damping &b) { return sample(grid, b.value); }

/// Fourth-order Laplacian with zero extension outside the grid (Dirichlet).
template <typename Scalar>
BasicField<Scalar> laplacian(const BasicField<Scalar> &f);

/// P f = V f - Laplacian f / 2 with V given by its nodal samples.
template <typename Scalar>
BasicField<Scalar> apply_P(const RealField &v, const BasicField<Scalar> &f) {
  require(v.grid == f.grid, "apply_P: grid mismatch");
  BasicField<Scalar> out = laplacian(f);
  out.values = v.values.template cast<Scalar>().cwiseProduct(f.values) - Scalar(0.5) * out.values;
  return out;
}

template <typename Scalar>
BasicField<Scalar> apply_P(const Potential &pot, const BasicField<Scalar> &f) {
  return apply_P(sample(f.grid, pot), f);
}

/// Trapezoid-weighted <f, g>, conjugate-linear in f.
template <typename Scalar>
Scalar inner(const BasicField<Scalar> &f, const BasicField<Scalar> &g) {
  require(f.grid == g.grid, "inner: grid mismatch");
  Scalar sum(0);
  for (long k = 0; k < f.grid.size(); ++k) {
    if constexpr (std::is_same_v<Scalar, Complex>)
      sum += f.grid.weight(k) * std::conj(f.values(k)) * g.values(k);
    else
      sum += f.grid.weight(k) * f.values(k) * g.values(k);
  }
  return sum;
}

template <typename Scalar>
double l2_norm(const BasicField<Scalar> &f) {
  double sum = 0.0;
  for (long k = 0; k < f.grid.size(); ++k) sum += f.grid.weight(k) * std::norm(f.values(k));
  return std::sqrt(sum);
}

/// ||P f - lambda^2 f|| / (lambda ||f||).
template <typename Scalar>
double residual_ratio(const RealField &v, const BasicField<Scalar> &f, double lambda) {
  const double norm = l2_norm(f);
  if (!(norm > 0.0)) throw ValidationError("residual_ratio: zero field");
  require(lambda > 0.0, "residual_ratio: lambda must be positive");
  BasicField<Scalar> r = apply_P(v, f);
  r.values -= Scalar(lambda * lambda) * f.values;
  return l2_norm(r) / (lambda * norm);
}

template <typename Scalar>
double residual_ratio(const Potential &pot, const BasicField<Scalar> &f, double lambda) {
  return residual_ratio(sample(f.grid, pot), f, lambda);
}

/// <f, b f> / ||f||^2.
template <typename Scalar>
double damping_pairing(const RealField &b, const BasicField<Scalar> &f) {
  require(b.grid == f.grid, "damping_pairing: grid mismatch");
  double num = 0.0;
  double den = 0.0;
  for (long k = 0; k < f.grid.size(); ++k) {
    const double m = f.grid.weight(k) * std::norm(f.values(k));
    num += b.values(k) * m;
    den += m;
  }
  if (!(den > 0.0)) throw ValidationError("damping_pairing: zero field");
  return num / den;
}

template <typename Scalar>
double damping_pairing(const Damping &b, const BasicField<Scalar> &f) {
  return damping_pairing(sample(f.grid, b), f);
}

/// Fraction of a non-negative density inside B_radius(center). Along the last
/// axis the chord is integrated exactly against the local cubic interpolant.
double density_mass_in_ball(const RealField &density, const Vector &center, double radius);

/// Fraction of |f|^2 inside B_radius(center).

template <typename Scalar>
double mass_in_ball(const BasicField<Scalar> &f, const Vector &center, double radius) {
  RealField density(f.grid);
  density.values = f.values.cwiseAbs2();
  return density_mass_in_ball(density, center, radius);
}

/// Largest |f| over the nodes with some axis index within `layers` of the edge.
template <typename Scalar>
double boundary_max(const BasicField<Scalar> &f, int layers) {
  double m = 0.0;
  for (long k = 0; k < f.grid.size(); ++k) {
    for (int a = 0; a < f.grid.dim(); ++a) {
      const long i = f.grid.axis_index(k, a);
      if (i < layers || i >= f.grid.n(a) - layers) {
        m = std::max(m, static_cast<double>(std::abs(f.values(k))));
        break;
      }
    }
  }
  return m;
}

/// Throws unless every spacing satisfies h <= 2 pi / (lambda ppw).
void check_resolution(const Grid &grid, double lambda, double ppw = 16.0);

/// CSV with node coordinates x_1..x_d then re, im.
void write_field_csv(std::ostream &out, const Field &f);

/// Binary dump, little-endian: int32 d; int32 N[d]; f64 L[d]; f64 center[d];
/// then re/im f64 pairs in row-major node order.
void write_field_binary(std::ostream &out, const Field &f);
Field read_field_binary(std::istream &in);

extern template BasicField<double> laplacian(const BasicField<double> &);
extern template BasicField<Complex> laplacian(const BasicField<Complex> &);

}  // namespace stabscope

#endif  // STABSCOPE_FIELDS_HPP
