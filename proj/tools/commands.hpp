#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace egoemg::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string output;
  bool verbose = false;
  /// Every resolved option as config-file text, filled in after parsing.
  std::string resolved_config;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

/// Adds every subcommand to `app`. The returned handlers read their options
/// from state owned by the closures and from `global`.
std::vector<Command> register_commands(CLI::App& app, GlobalOptions& global);

}  // namespace egoemg::cli
