#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "egoemg/container.hpp"
#include "egoemg/error.hpp"
#include "egoemg/version.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string version_text() {
  return "egoemg " + std::string(egoemg::library_version()) + " (container EGL1 v" +
         std::to_string(egoemg::kContainerVersion) + ", weights EGW1)";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EgoEMG toolkit: EMG cleaning, hand kinematics, features and evaluation", "egoemg"};
  app.set_version_flag("--version", version_text());
  app.set_config("--config", "", "Read options from a TOML/INI config file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  egoemg::cli::GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("-o,--out,--output", global.output, "Output path");
  app.add_flag("-v,--verbose", global.verbose, "Print extra diagnostics");

  const auto commands = egoemg::cli::register_commands(app, global);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    std::cerr << "run 'egoemg --help' for usage\n";
    return kExitUsage;
  }

  // Global options plus the chosen subcommand's options only.
  std::string active;
  for (const auto& cmd : commands) {
    if (cmd.app->parsed()) active = cmd.app->get_name() + ".";
  }
  std::istringstream all(app.config_to_str(true, false));
  for (std::string line; std::getline(all, line);) {
    const auto key_end = line.find('=');
    const auto dot = line.find('.');
    if (dot == std::string::npos || dot > key_end || line.compare(0, active.size(), active) == 0) {
      global.resolved_config += line + "\n";
    }
  }
  std::cerr << "# resolved config\n" << global.resolved_config;

  try {
    for (const auto& cmd : commands) {
      if (cmd.app->parsed()) cmd.run();
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const egoemg::Error& e) {
    std::cerr << "error: " << egoemg::to_string(e.kind()) << ": " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
