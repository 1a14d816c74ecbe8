#pragma once

// Case-study workflows behind the command-line tool.

#include "wccopf/opf_solver.hpp"
#include "wccopf/report_io.hpp"
#include "wccopf/validation.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace wccopf {

struct RunConfig {
  std::string case_path;
  std::string wind_path;
  double penetration = 75.0;  // % of total load
  EpsilonConfig eps;
  double load_factor = 1.25;
  double limit_factor = 0.75;
  std::vector<std::pair<int, double>> caps;  // bus -> cap MW
  bool wind_reserves = true;
  SolverOptions solver;
  IntegrationOptions integration;
  std::string out_path;  // empty: stdout
  std::uint64_t seed = 1;
  std::size_t samples = 100000;
  bool report_timing = false;
};

/// "85=-45,117=-45"
std::vector<std::pair<int, double>> parse_cap_list(std::string_view text);
/// "25,50,75" or a range "start:stop:step" (inclusive).
std::vector<double> parse_number_list(std::string_view text);

/// Options file: {"tol_feas", "max_iterations", "epsilon": {"default",
/// "families": {...}, "items": {...}}, "integration": {...}, "lp": {...}}.
void apply_options_json(RunConfig& cfg, std::string_view text);

Network load_stressed_network(const RunConfig& cfg);
WindFleet load_fleet(const RunConfig& cfg, const Network& net);
Problem build_problem(const RunConfig& cfg);

int exit_code(SolveStatus s);

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
CsvTable sweep_penetration(const RunConfig& cfg, const std::vector<double>& levels, std::ostream& err);
CsvTable sweep_caps(const RunConfig& cfg, std::pair<int, int> buses, const std::vector<double>& grid,
                    std::ostream& err);
int cmd_sweep_penetration(const RunConfig& cfg, const std::vector<double>& levels, std::ostream& out,
                          std::ostream& err);
int cmd_sweep_caps(const RunConfig& cfg, std::pair<int, int> buses, const std::vector<double>& grid,
                   std::ostream& out, std::ostream& err);
/// Exit 0 when every empirical expected overload is within eps + 3 stderr, 4 otherwise.
int cmd_validate(const RunConfig& cfg, const std::string& dispatch_path, std::ostream& out, std::ostream& err);

/// Full argument parsing; used by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wccopf
