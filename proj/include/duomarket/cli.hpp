#ifndef DUOMARKET_CLI_HPP
#define DUOMARKET_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace duomarket::cli {

enum class Command { solve, sweep, regions, verify };

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kInputError = 1, kDegenerate = 2, kCapExceeded = 3 };

struct RunConfig {
  Command command = Command::solve;
  std::string input_path;
  /// Empty writes to the output stream.
  std::string output_path;
  /// Names: kkt, system, price, clearing.
  std::map<std::string, double> tolerances;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> betas;
  std::optional<std::string> grid;  ///< "NXxNY"
  double probe_a = 1.0;
  bool three_region = false;
  /// verify without --input: number and size of random markets.
  int batch = 100;
  int batch_users = 8;
};

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_regions(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);

int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace duomarket::cli

#endif  // DUOMARKET_CLI_HPP
