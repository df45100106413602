#ifndef STABSCOPE_CLI_HPP
#define STABSCOPE_CLI_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stabscope::cli {

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3 };

struct Invocation {
  std::string command;
  /// JSON config; optional for `suite` only.
  std::string config_path;
  std::string out_dir = ".";
  /// 0 keeps the OpenMP default.
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

const std::vector<std::string> &commands();

/// Validates the config, runs the command and writes its artifacts plus
/// manifest.json into out_dir. Errors are reported on stderr.
int run(const Invocation &invocation);

}  // namespace stabscope::cli

#endif  // STABSCOPE_CLI_HPP
