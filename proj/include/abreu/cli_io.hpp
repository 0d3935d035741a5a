#pragma once

// Run configuration, the registry of named built-in functions, text field
// files and the command runners behind the abreu_cli front end.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "abreu/abreu_system.hpp"
#include "abreu/geometry.hpp"
#include "abreu/rochet_chone.hpp"

namespace abreu::io {

using Json = nlohmann::json;

/// Invalid configuration: unknown key, malformed value or a rejected problem.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Process exit codes of the commands.
enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverFailure = 3 };

// Function specs are "name" or "name:args" with comma-separated arguments,
// each positional or key=value, e.g. "const:1", "disk:r=2,cx=1.5,cy=1.5".

/// disk(r=1, cx=0, cy=0) | square(a=1, cx=0, cy=0) | superellipse(p=4).
ConvexDomain make_domain(const std::string& spec);
/// none | box(x0, x1, y0, y1) | disk(r, cx, cy).
ConvexDomain with_inner(const ConvexDomain& d, const std::string& spec);
/// zero | const(c=1) | linear(a=0, b=0, c=0): a + b x + c y |
/// quad(a=1, cx=0, cy=0): a |x - c|^2 / 2 | exp(s=1): exp(s r^2 / 2).
PlaneFn make_plane_fn(const std::string& spec);
/// zero | const(c=0) | affine(c=0, d=0): c z + d.
F0zFn make_f0z(const std::string& spec);
/// linear: z gamma | z | none | quadratic(c=1) | tracking: (z - phi)^2.
F0Term make_f0(const std::string& spec, const PlaneFn& gamma, const PlaneFn& phi);

/// Default configuration of a command (every key it accepts).
Json default_config(const std::string& command);
const std::vector<std::string>& commands();

/// defaults <- file (JSON object) <- flags (key -> text as typed on the
/// command line). Keys must be known to the command and values must have the
/// type of the default; throws ConfigError otherwise. A "command" key in the
/// file (as in a config echo) must name the same command.
Json resolve_config(const std::string& command, const Json& file, const std::map<std::string, std::string>& flags);

/// Problem builders from a resolved config (validated on the grid).
AbreuProblem abreu_problem(const Json& cfg);
RCProblem rc_problem(const Json& cfg);

/// In-memory solves of a resolved solve-abreu / solve-rc config (no files).
AbreuSolution solve_abreu(const Json& cfg);
RCApproxRun solve_rc(const Json& cfg);

struct FieldFile {
  ScalarField field;
  /// Domain spec and inner spec of a domain grid; empty for a dual grid.
  std::string domain;
  std::string inner;
};

/// Text field file. A domain grid is described by its domain and inner specs
/// and n, so the reader rebuilds the identical grid; any other grid is stored
/// as "dualgrid nx ny xmin ymin h" with NaN marking EXTERIOR nodes. Values are
/// written in shortest round-trip form, so reading back is bit-exact.
void write_field(const std::filesystem::path& path, const ScalarField& f, const std::string& domain_spec = "",
                 const std::string& inner_spec = "none");
FieldFile read_field(const std::filesystem::path& path);

Json report_json(const SolveReport& r);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Runs a command on a resolved config, writing into cfg["out"]. Returns the
/// exit code; ConfigError is thrown for configuration problems.
int run_command(const std::string& command, const Json& cfg);

}  // namespace abreu::io
