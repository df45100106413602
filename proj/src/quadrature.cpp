#include "stabscope/quadrature.hpp"

#include <array>
#include <map>
#include <mutex>

namespace stabscope {

namespace {

constexpr std::array<int, 8> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19};

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

}  // namespace

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

BallNodes::BallNodes(int dim, int count) : dim_(dim) {
  require(dim >= 1, "ball nodes: dimension must be positive");
  require(dim <= static_cast<int>(kPrimes.size()), "ball nodes: dimension too large");
  require(count >= 1, "ball nodes: count must be positive");
  nodes_.resize(dim, count);
  if (dim == 1) {
    for (int k = 0; k < count; ++k) nodes_(0, k) = -1.0 + (2.0 * k + 1.0) / count;
    return;
  }
  int filled = 0;
  for (std::uint64_t index = 1; filled < count; ++index) {
    Vector p(dim);
    for (int i = 0; i < dim; ++i) p(i) = 2.0 * radical_inverse(index, kPrimes[i]) - 1.0;
    if (p.squaredNorm() < 1.0) nodes_.col(filled++) = p;
  }
}

std::shared_ptr<const BallNodes> BallNodes::get(int dim, int count) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const BallNodes>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto &slot = cache[{dim, count}];
  if (!slot) slot = std::make_shared<const BallNodes>(dim, count);
  return slot;
}

double gauss_legendre(const std::function<double(double)> &f, double a, double b, int panels) {
  require(panels >= 1, "gauss_legendre: panels must be positive");
  const double width = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    for (std::size_t k = 0; k < kGlNodes.size(); ++k)
      sum += kGlWeights[k] * f(mid + 0.5 * width * kGlNodes[k]);
  }
  return 0.5 * width * sum;
}

double trapezoid_mean(const std::vector<double> &values) {
  require(!values.empty(), "trapezoid_mean: no samples");
  if (values.size() == 1) return values.front();
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k + 1 < values.size(); ++k) sum += values[k];
  return sum / static_cast<double>(values.size() - 1);
}

}  // namespace stabscope
