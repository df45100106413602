#ifndef STABSCOPE_COMMON_HPP
#define STABSCOPE_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stabscope {

using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Violated precondition or malformed input. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown (instability, NaN, non-convergence). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string &message) {
  if (!condition) throw ValidationError(message);
}

constexpr double kPi = 3.14159265358979323846;

/// Lebesgue measure of the unit ball in R^d.
double unit_ball_volume(int dim);

/// Deterministic set of unit directions: +-1 in 1D, equally spaced angles in
/// 2D, seeded random normals otherwise.
std::vector<Vector> direction_set(int dim, int count, double angle_offset = 0.0);

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity read once from STABSCOPE_LOG (error|warn|info|debug), default warn.
LogLevel log_level();
void log(LogLevel level, const std::string &message);

}  // namespace stabscope

#endif  // STABSCOPE_COMMON_HPP
