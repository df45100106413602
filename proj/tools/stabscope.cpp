#include "stabscope/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char **argv) {
  using namespace stabscope::cli;
  CLI::App app{"stabscope: stabilization conditions and quasimodes for damped waves"};
  app.require_subcommand(1);

  Invocation inv;
  std::uint64_t seed = 0;
  for (const auto &name : commands()) {
    auto *sub = app.add_subcommand(name);
    sub->add_option("--config", inv.config_path, "JSON experiment config");
    sub->add_option("--out", inv.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", inv.threads, "OpenMP threads (0 = default)");
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
    sub->callback([&inv, &seed, name, sub] {
      inv.command = name;
      if (sub->count("--seed") > 0) inv.seed = seed;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }
  return run(inv);
}
