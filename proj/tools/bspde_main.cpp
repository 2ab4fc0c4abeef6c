#include "CLI11.hpp"

#include "bspde/run_config.hpp"
#include "bspde/runner.hpp"

#include <exception>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{
      "Spectral solver and structural auditor for backward stochastic "
      "evolution equations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string axis;
  std::vector<double> levels;

  CLI::App* solve = app.add_subcommand(
      "solve", "Run the backward induction; writes trajectory.csv and "
               "summary.txt");
  solve->add_option("config", config_path, "run configuration file")
      ->required();

  CLI::App* check = app.add_subcommand(
      "check", "Audit the configured operator; writes check_report.txt");
  check->add_option("config", config_path, "run configuration file")
      ->required();

  CLI::App* converge = app.add_subcommand(
      "converge", "Sweep one discretisation axis; writes converge.csv");
  converge->add_option("config", config_path, "run configuration file")
      ->required();
  converge->add_option("--axis", axis, "galerkin_n | steps | paths | taming_n")
      ->required();
  converge->add_option("--levels", levels, "increasing level values")
      ->required()
      ->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    const bspde::RunConfig cfg = bspde::RunConfig::from_file(config_path);
    if (solve->parsed()) return bspde::run_solve(cfg, std::cout);
    if (check->parsed()) return bspde::run_check(cfg, std::cout);
    return bspde::run_converge(cfg, axis, levels, std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
