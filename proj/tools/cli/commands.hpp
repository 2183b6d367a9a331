#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace shaperate::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,       // config syntax, unknown names, invalid problem setup
  kExitMesh = 2,         // mesh generation, topology, file parsing, contour geometry
  kExitSolver = 3,       // solver, coercivity, deformation size, preconditions
  kExitCheckFailed = 4,  // a derivative check ran but exceeded its tolerance
};

/// Raised by `verify` and `abstract` when a check exceeds its tolerance.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandContext {
  RunConfig config;
  std::filesystem::path out_dir;
  int threads = 1;
  std::ostream* log = nullptr;  // human-readable summary, may be null
};

void cmd_solve(const CommandContext& ctx);
void cmd_deriv(const CommandContext& ctx);
void cmd_jint(const CommandContext& ctx);
void cmd_grate(const CommandContext& ctx);
void cmd_verify(const CommandContext& ctx);
void cmd_abstract(const CommandContext& ctx);
void cmd_meshgen(const CommandContext& ctx);

const std::vector<std::string>& command_names();

/// Loads the config, dispatches the command, and converts failures into an
/// exit code plus one JSON error line on `err`.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::filesystem::path& out_dir, std::ostream& log, std::ostream& err);

/// Parses SHAPERATE_THREADS; unset or invalid values give 1.
int threads_from_env();

/// Writes `contents` to `path` through a temporary file and a rename.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

/// Shortest decimal form that round-trips, used for every numeric CSV cell.
std::string format_double(double v);

}  // namespace shaperate::cli
