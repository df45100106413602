#include "stabscope/common.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>

namespace stabscope {

double unit_ball_volume(int dim) {
  return std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

std::vector<Vector> direction_set(int dim, int count, double angle_offset) {
  require(dim >= 1, "dimension must be positive");
  std::vector<Vector> dirs;
  if (dim == 1) {
    dirs.push_back(Vector::Constant(1, 1.0));
    dirs.push_back(Vector::Constant(1, -1.0));
    return dirs;
  }
  require(count >= 1, "direction count must be positive");
  dirs.reserve(count);
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = angle_offset + 2.0 * kPi * k / count;
      Vector v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
    return dirs;
  }
  std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(dim));
  std::normal_distribution<double> normal;
  for (int k = 0; k < count; ++k) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    dirs.push_back(v / v.norm());
  }
  return dirs;
}

LogLevel log_level() {
  static const LogLevel level = [] {
    const char *env = std::getenv("STABSCOPE_LOG");
    if (env == nullptr) return LogLevel::Warn;
    const std::string s(env);
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log(LogLevel level, const std::string &message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char *names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[stabscope:" << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace stabscope
