#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace tempie {

/// Command-line misuse: missing or contradictory options, unknown tasks.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  /// synth, train, tag, predict, eval or grid-search.
  std::string command;
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> mode;
};

/// Runs one subcommand. Reports go to `out`, diagnostics to `err`. Returns
/// 0 on success, 1 on a runtime failure and 2 on a usage or config error.
int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to run_command.
int cli_main(int argc, char** argv);

}  // namespace tempie
