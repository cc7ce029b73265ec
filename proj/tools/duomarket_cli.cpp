#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "duomarket/cli.hpp"

int main(int argc, char** argv) {
  using duomarket::cli::Command;
  using duomarket::cli::RunConfig;

  CLI::App app{"Duopoly wireless price competition: equilibria, sweeps, region maps, verification"};
  app.require_subcommand(1);

  RunConfig config;
  std::vector<std::string> tolerances;
  std::string betas;
  std::string grid;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--input", config.input_path, "Scenario or equilibrium JSON");
    sub->add_option("--output", config.output_path, "Output file (default: stdout)");
    sub->add_option("--seed", config.seed, "Override the scenario seed");
    sub->add_option("--tol", tolerances, "NAME=VALUE tolerance override (kkt, system, price, clearing)");
  };

  auto* solve = app.add_subcommand("solve", "Solve one market and write the equilibrium as JSON");
  common(solve);
  auto* sweep = app.add_subcommand("sweep", "Duopoly vs monopoly prices over path-loss exponents (CSV)");
  common(sweep);
  sweep->add_option("--betas", betas, "Comma list or start:stop:step");
  auto* regions = app.add_subcommand("regions", "Provider preference map at the equilibrium prices (CSV)");
  common(regions);
  regions->add_option("--grid", grid, "Resolution NXxNY");
  regions->add_option("--probe-a", config.probe_a, "Willingness to pay of the probe user");
  regions->add_flag("--three-region", config.three_region, "Merge zero-demand cells into one label");
  auto* verify = app.add_subcommand("verify", "Check solvers against independent oracles");
  common(verify);
  verify->add_option("--batch", config.batch, "Random markets to check when no --input is given");
  verify->add_option("--batch-users", config.batch_users, "Users per random market");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : duomarket::cli::kInputError;
  }

  for (const auto& t : tolerances) {
    const auto eq = t.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument(t);
      config.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    } catch (const std::exception&) {
      std::cerr << R"({"error":"input","message":"--tol expects NAME=VALUE"})" << '\n';
      return duomarket::cli::kInputError;
    }
  }
  if (!betas.empty()) config.betas = betas;
  if (!grid.empty()) config.grid = grid;

  if (*solve) config.command = Command::solve;
  if (*sweep) config.command = Command::sweep;
  if (*regions) config.command = Command::regions;
  if (*verify) config.command = Command::verify;
  return duomarket::cli::run(config, std::cout, std::cerr);
}
