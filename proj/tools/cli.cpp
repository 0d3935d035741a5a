#include "cli.hpp"

#include <cstdlib>
#include <map>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "abreu/cli_io.hpp"

namespace abreu::io {

namespace {

std::string flag_name(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

std::shared_ptr<spdlog::logger> make_logger() {
  auto log = std::make_shared<spdlog::logger>("abreu", std::make_shared<spdlog::sinks::stderr_sink_st>());
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("ABREU_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    log->set_level(spdlog::level::off);
  } else if (level == "debug") {
    log->set_level(spdlog::level::debug);
  } else {
    log->set_level(spdlog::level::info);
    if (level != "info") log->warn("ABREU_LOG={} not recognised (quiet, info, debug); using info", level);
  }
  return log;
}

const std::map<std::string, std::string> kAbout = {
    {"solve-abreu", "Solve the coupled (u, w) second boundary value problem"},
    {"solve-rc", "Solve the penalised Rochet-Chone approximation at one eps"},
    {"sweep", "Solve a decreasing eps list and compare with the convexity-constrained oracle"},
    {"check-duality", "Check Legendre-dual identities on a solve-abreu output directory"},
    {"oracle-min", "Minimise the Rochet-Chone functional under discrete convexity constraints"},
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
  const auto log = make_logger();
  CLI::App app{"Second boundary value problems of singular Abreu equations and Rochet-Chone approximations"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, std::string> config_file;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  for (const std::string& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd, kAbout.at(cmd));
    sub->add_option("--config", config_file[cmd], "JSON object of config keys");
    const Json defaults = default_config(cmd);
    for (const auto& [key, def] : defaults.items()) {
      std::string& slot = flags[cmd][key];
      const std::string desc = "default: " + def.dump();
      options[cmd][key] = def.is_boolean() ? sub->add_flag(flag_name(key) + "{true}", slot, desc)
                                           : sub->add_option(flag_name(key), slot, desc);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    std::map<std::string, std::string> given;
    for (const auto& [key, opt] : options[cmd])
      if (opt->count() > 0) given[key] = flags[cmd][key];
    const Json file = config_file[cmd].empty() ? Json() : read_json(config_file[cmd]);
    const Json cfg = resolve_config(cmd, file, given);
    std::string out = cfg.at("out");
    if (out.empty() && cfg.contains("run")) out = cfg.at("run");
    log->info("{}: output in '{}'", cmd, out);
    log->debug("resolved config: {}", cfg.dump());
    const int code = run_command(cmd, cfg);
    if (code == kOk)
      log->info("{}: done", cmd);
    else
      log->error("{}: failed (exit {})", cmd, code);
    return code;
  } catch (const ConfigError& e) {
    log->error("config error: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    log->error("solver failure: {}", e.what());
    return kSolverFailure;
  }
}

}  // namespace abreu::io
