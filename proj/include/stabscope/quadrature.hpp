#ifndef STABSCOPE_QUADRATURE_HPP
#define STABSCOPE_QUADRATURE_HPP

#include "stabscope/common.hpp"

#include <functional>
#include <memory>

namespace stabscope {

/// Equal-weight nodes filling the unit ball B_1(0) in R^d.
///
/// In 1D the nodes are cell midpoints of a uniform partition of [-1, 1]. In
/// higher dimension they are the first `count` points of the Halton sequence
/// (bases 2, 3, 5, ...) mapped to [-1, 1]^d that fall inside the ball. The set
/// depends only on (dim, count), so every average computed with it is a fixed
/// linear functional of the integrand.
class BallNodes {
 public:
  BallNodes(int dim, int count);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(nodes_.cols()); }
  /// Column k is the k-th node.
  const Eigen::MatrixXd &nodes() const { return nodes_; }

  /// Shared instance for (dim, count); thread-safe.
  static std::shared_ptr<const BallNodes> get(int dim, int count);

 private:
  int dim_;
  Eigen::MatrixXd nodes_;
};

/// Radical inverse of `index` in base `base` (van der Corput).
double radical_inverse(std::uint64_t index, int base);

/// Composite Gauss-Legendre rule on [a, b] with `panels` panels of 8 nodes.
double gauss_legendre(const std::function<double(double)> &f, double a, double b, int panels);

/// Trapezoid average (1/(b-a)) * integral over [a, b] of samples on the
/// uniform grid of values.size() points spanning [a, b].
double trapezoid_mean(const std::vector<double> &values);

}  // namespace stabscope

#endif  // STABSCOPE_QUADRATURE_HPP
