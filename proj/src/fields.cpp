#include "stabscope/fields.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace stabscope {

static_assert(std::endian::native == std::endian::little, "binary field dumps assume a little-endian host");

Grid::Grid(std::vector<int> n, std::vector<double> half_width, Vector center)
    : n_(std::move(n)), half_width_(std::move(half_width)), center_(std::move(center)) {
  require(!n_.empty(), "grid: dimension must be positive");
  require(half_width_.size() == n_.size() && center_.size() == static_cast<Eigen::Index>(n_.size()),
          "grid: per-axis sizes disagree");
  for (std::size_t a = 0; a < n_.size(); ++a) {
    if (n_[a] < 8) throw ValidationError("grid too coarse: need at least 8 points per axis");
    require(half_width_[a] > 0.0, "grid: half width must be positive");
  }
  stride_.assign(n_.size(), 1);
  for (int a = static_cast<int>(n_.size()) - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * n_[a + 1];
  size_ = stride_[0] * n_[0];
}

Grid Grid::cube(int dim, double L, int N) {
  return Grid(std::vector<int>(dim, N), std::vector<double>(dim, L), Vector::Zero(dim));
}

Vector Grid::point(long flat) const {
  Vector x(dim());
  for (int a = 0; a < dim(); ++a) x(a) = coordinate(a, axis_index(flat, a));
  return x;
}

double Grid::weight(long flat) const {
  double w = 1.0;
  for (int a = 0; a < dim(); ++a) {
    const long i = axis_index(flat, a);
    w *= (i == 0 || i == n_[a] - 1) ? 0.5 * spacing(a) : spacing(a);
  }
  return w;
}

long Grid::nearest_index(int axis, double coord) const {
  return std::lround((coord - center_(axis) + half_width_[axis]) / spacing(axis));
}

bool Grid::operator==(const Grid &other) const {
  return n_ == other.n_ && half_width_ == other.half_width_ && center_.size() == other.center_.size() &&
         center_ == other.center_;
}

RealField sample(const Grid &grid, const std::function<double(const Vector &)> &f) {
  RealField out(grid);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < grid.size(); ++k) out.values(k) = f(grid.point(k));
  return out;
}

template <typename Scalar>
BasicField<Scalar> laplacian(const BasicField<Scalar> &f) {
  constexpr std::array<double, 5> c = {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
  const Grid &g = f.grid;
  BasicField<Scalar> out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const long stride = g.stride(a);
    const long n = g.n(a);
    const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
#pragma omp parallel for schedule(static)
    for (long k = 0; k < g.size(); ++k) {
      const long i = g.axis_index(k, a);
      Scalar acc(0);
      for (int m = -2; m <= 2; ++m) {
        const long j = i + m;
        if (j < 0 || j >= n) continue;
        acc += c[m + 2] * f.values(k + m * stride);
      }
      out.values(k) += inv_h2 * acc;
    }
  }
  return out;
}

template BasicField<double> laplacian(const BasicField<double> &);
template BasicField<Complex> laplacian(const BasicField<Complex> &);

namespace {

// Integral over [lo, hi] (inside one cell [x_k, x_{k+1}]) of the cubic through
// nodes k-1..k+2 of a line; near the ends the stencil is shifted inwards.
double cubic_piece(const double *line, long stride, long n, double x0, double h, long k,
                   double lo, double hi) {
  long s = std::clamp<long>(k - 1, 0, std::max<long>(n - 4, 0));
  const int count = static_cast<int>(std::min<long>(4, n));
  constexpr double g = 0.5773502691896257645;  // 1/sqrt(3), 2-point Gauss
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double sum = 0.0;
  for (const double t : {mid - g * half, mid + g * half}) {
    const double u = (t - x0) / h;  // fractional node index
    double value = 0.0;
    for (int p = 0; p < count; ++p) {
      double basis = 1.0;
      for (int q = 0; q < count; ++q)
        if (q != p) basis *= (u - static_cast<double>(s + q)) / static_cast<double>(p - q);
      value += basis * line[(s + p) * stride];
    }
    sum += value;
  }
  return half * sum;
}

}  // namespace

double density_mass_in_ball(const RealField &density, const Vector &center, double radius) {
  const Grid &g = density.grid;
  require(center.size() == g.dim(), "mass_in_ball: center dimension differs from grid");
  require(radius >= 0.0, "mass_in_ball: negative radius");
  double total = 0.0;
  for (long k = 0; k < g.size(); ++k) total += g.weight(k) * density.values(k);
  if (!(total > 0.0)) throw ValidationError("mass_in_ball: zero field");

  const int last = g.dim() - 1;
  const long n = g.n(last);
  const double h = g.spacing(last);
  const double x0 = g.coordinate(last, 0);
  const double x_end = g.coordinate(last, n - 1);
  const long lines = g.size() / n;
  double inside = 0.0;
  for (long line = 0; line < lines; ++line) {
    const long base = line * n;
    // Weight and squared distance over the leading axes.
    double w = 1.0;
    double dist2 = 0.0;
    for (int a = 0; a < last; ++a) {
      const long i = g.axis_index(base, a);
      w *= (i == 0 || i == g.n(a) - 1) ? 0.5 * g.spacing(a) : g.spacing(a);
      const double dx = g.coordinate(a, i) - center(a);
      dist2 += dx * dx;
    }
    if (dist2 > radius * radius) continue;
    const double half_chord = std::sqrt(radius * radius - dist2);
    const double a = std::max(center(last) - half_chord, x0);
    const double b = std::min(center(last) + half_chord, x_end);
    if (a >= b) continue;
    const double *line_values = density.values.data() + base;
    double chord = 0.0;
    if (a <= x0 && b >= x_end) {
      for (long i = 0; i < n; ++i) chord += (i == 0 || i == n - 1 ? 0.5 : 1.0) * h * line_values[i];
    } else {
      const long first = std::clamp<long>(static_cast<long>(std::floor((a - x0) / h)), 0, n - 2);
      const long end = std::clamp<long>(static_cast<long>(std::floor((b - x0) / h)), 0, n - 2);
      for (long c = first; c <= end; ++c) {
        const double lo = std::max(a, x0 + h * c);
        const double hi = std::min(b, x0 + h * (c + 1));
        if (hi > lo) chord += cubic_piece(line_values, 1, n, x0, h, c, lo, hi);
      }
    }
    inside += w * chord;
  }
  return std::clamp(inside / total, 0.0, 1.0);
}

void check_resolution(const Grid &grid, double lambda, double ppw) {
  require(lambda > 0.0 && ppw > 0.0, "check_resolution: lambda and ppw must be positive");
  const double h_max = 2.0 * kPi / (lambda * ppw);
  for (int a = 0; a < grid.dim(); ++a) {
    if (grid.spacing(a) > h_max * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "resolution rule violated on axis " << a + 1 << ": spacing " << grid.spacing(a)
          << " exceeds 2 pi / (lambda ppw) = " << h_max;
      throw ValidationError(msg.str());
    }
  }
}

void write_field_csv(std::ostream &out, const Field &f) {
  const int d = f.grid.dim();
  for (int a = 1; a <= d; ++a) out << "x_" << a << ',';
  out << "re,im\n" << std::setprecision(17);
  for (long k = 0; k < f.grid.size(); ++k) {
    for (int a = 0; a < d; ++a) out << f.grid.coordinate(a, f.grid.axis_index(k, a)) << ',';
    out << f.values(k).real() << ',' << f.values(k).imag() << '\n';
  }
}

namespace {

template <typename T>
void put(std::ostream &out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream &in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw ValidationError("field binary: truncated input");
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_field_binary(std::ostream &out, const Field &f) {
  const int d = f.grid.dim();
  put<std::int32_t>(out, d);
  for (int a = 0; a < d; ++a) put<std::int32_t>(out, f.grid.n(a));
  for (int a = 0; a < d; ++a) put<double>(out, f.grid.half_width(a));
  for (int a = 0; a < d; ++a) put<double>(out, f.grid.center()(a));
  for (long k = 0; k < f.grid.size(); ++k) {
    put<double>(out, f.values(k).real());
    put<double>(out, f.values(k).imag());
  }
}

Field read_field_binary(std::istream &in) {
  const auto d = get<std::int32_t>(in);
  require(d >= 1 && d <= 8, "field binary: bad dimension");
  std::vector<int> n(d);
  std::vector<double> half(d);
  Vector center(d);
  for (auto &v : n) v = get<std::int32_t>(in);
  for (auto &v : half) v = get<double>(in);
  for (int a = 0; a < d; ++a) center(a) = get<double>(in);
  Field f(Grid(n, half, center));
  for (long k = 0; k < f.grid.size(); ++k) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    f.values(k) = Complex(re, im);
  }
  return f;
}

}  // namespace stabscope
