#pragma once

// WCC-OPF: master LP over x = (p, v, alpha, r_up, r_down) plus tangent cuts
// on the weighted chance constraints until the residual drops below tol.

#include "wccopf/dc_network.hpp"
#include "wccopf/lp.hpp"
#include "wccopf/wcc.hpp"
#include "wccopf/wind_model.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace wccopf {

struct Problem {
  Network net;
  WindFleet fleet;
  PtdfMatrix ptdf;
  DecisionLayout layout;
  EpsilonConfig eps;
  std::shared_ptr<const WccModel> model;
  // Per responder: energy cost only for generators; reserve costs per responder.
  Eigen::VectorXd cost_energy;  // per generator
  Eigen::VectorXd cost_up;      // per responder
  Eigen::VectorXd cost_down;    // per responder
};

Problem make_problem(Network net, WindFleet fleet, const EpsilonConfig& eps = {}, IntegrationOptions integration = {});

struct SolverOptions {
  double tol_feas = 1e-4;  // MW
  int max_iterations = 500;
  LpOptions lp;
  bool warm_start = true;
  /// Add a cut for every constraint whose value exceeds eps by more than this
  /// fraction of tol_feas.
  double cut_threshold = 1.0;
};

enum class SolveStatus { Converged, Infeasible, IterationLimit };
std::string to_string(SolveStatus s);

struct Cut {
  WccFamily family;
  std::size_t constraint = 0;  // index into the model's constraint list
  int iteration = 0;
  Eigen::VectorXd coef;        // coef . x <= rhs
  double rhs = 0.0;
};

struct CostBreakdown {
  double total = 0.0;
  double energy = 0.0;
  double reserve_generators = 0.0;
  double reserve_wind = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::IterationLimit;
  std::string message;
  Decision decision;
  CostBreakdown cost;
  int iterations = 0;
  std::array<int, kWccFamilyCount> cuts_per_family{};
  double max_violation = 0.0;  // max(value - eps) over all constraints, MW
  std::vector<double> master_objectives;
  std::vector<Cut> cuts;
  std::vector<std::string> binding_cut_families;  // on infeasibility
  double wind_scheduled = 0.0;          // sum v
  double reserves_up = 0.0;
  double reserves_down = 0.0;
  std::vector<double> expected_wasted;  // per plant: E[max(w - cap, 0)], capped plants only
  std::vector<double> withheld;         // per plant: mu - v
  double expected_curtailment = 0.0;
  double wall_seconds = 0.0;

  int total_cuts() const;
};

/// Master LP without cuts. Throws ValidationError when the structural
/// bounds cannot be met (too little capacity for the demand).
LinearProgram assemble_master(const Problem& prob);

SolveReport solve_wcc_opf(const Problem& prob, const SolverOptions& opts = {});

CostBreakdown decision_cost(const Problem& prob, const Decision& d);

/// Max over all constraints of value - eps at d.
double max_wcc_violation(const Problem& prob, const Decision& d);

}  // namespace wccopf
