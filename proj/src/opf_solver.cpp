#include "wccopf/opf_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace wccopf {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

int SolveReport::total_cuts() const { return std::accumulate(cuts_per_family.begin(), cuts_per_family.end(), 0); }

Problem make_problem(Network net, WindFleet fleet, const EpsilonConfig& eps, IntegrationOptions integration) {
  validate_network(net);
  Problem prob;
  prob.ptdf = build_ptdf(net);
  prob.layout = DecisionLayout(net, fleet);
  prob.eps = eps;
  prob.model = std::make_shared<const WccModel>(net, fleet, prob.ptdf, prob.layout, eps, integration);
  const auto& responders = prob.layout.responder_list();
  prob.cost_energy.resize(static_cast<Eigen::Index>(net.generators.size()));
  prob.cost_up = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(responders.size()));
  prob.cost_down = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(responders.size()));
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    const auto& g = net.generators[i];
    prob.cost_energy[static_cast<Eigen::Index>(i)] = g.cost;
    prob.cost_up[static_cast<Eigen::Index>(i)] = g.cost_up;
    prob.cost_down[static_cast<Eigen::Index>(i)] = g.cost_down;
  }
  prob.net = std::move(net);
  prob.fleet = std::move(fleet);
  return prob;
}

LinearProgram assemble_master(const Problem& prob) {
  const auto& L = prob.layout;
  const auto& net = prob.net;
  const auto& fleet = prob.fleet;
  const auto n = static_cast<Eigen::Index>(L.size());
  const auto& responders = L.responder_list();
  if (responders.empty()) throw ValidationError("no device can respond to wind deviations");

  LinearProgram lp(n);
  auto idx = [](std::size_t i) { return static_cast<Eigen::Index>(i); };
  double capacity = 0.0;
  for (std::size_t i = 0; i < L.generators(); ++i) {
    const auto& g = net.generators[i];
    lp.col_lower[idx(L.p(i))] = g.p_min;
    lp.col_upper[idx(L.p(i))] = g.p_max;
    lp.cost[idx(L.p(i))] = prob.cost_energy[idx(i)];
    capacity += g.p_max;
  }
  double cap_offset = 0.0;
  for (std::size_t j = 0; j < fleet.size(); ++j) {
    const auto& w = fleet.plant(j);
    if (w.mean_mw < 0.0) throw ValidationError("wind forecast must be non-negative");
    lp.col_lower[idx(L.v(j))] = 0.0;
    lp.col_upper[idx(L.v(j))] = w.mean_mw;
    capacity += w.mean_mw;
    cap_offset += w.nominal_cap_offset();
  }
  const double demand = net.total_load();
  if (capacity + cap_offset < demand) {
    throw ValidationError("demand " + std::to_string(demand) + " MW exceeds available capacity " +
                          std::to_string(capacity + cap_offset) + " MW");
  }
  for (std::size_t k = 0; k < responders.size(); ++k) {
    const auto& r = responders[k];
    double up_max = 0.0;
    double down_max = 0.0;
    if (r.kind == Responder::Kind::Generator) {
      up_max = net.generators[r.device].r_up_max;
      down_max = net.generators[r.device].r_down_max;
    } else {
      up_max = down_max = fleet.plant(r.device).mean_mw;
    }
    lp.col_lower[idx(L.alpha(k))] = 0.0;
    lp.col_upper[idx(L.alpha(k))] = 1.0;
    lp.col_lower[idx(L.r_up(k))] = 0.0;
    lp.col_upper[idx(L.r_up(k))] = up_max;
    lp.col_lower[idx(L.r_down(k))] = 0.0;
    lp.col_upper[idx(L.r_down(k))] = down_max;
    lp.cost[idx(L.r_up(k))] = prob.cost_up[idx(k)];
    lp.cost[idx(L.r_down(k))] = prob.cost_down[idx(k)];
  }

  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd row(n);
  for (std::size_t i = 0; i < L.generators(); ++i) {
    const auto& g = net.generators[i];
    row.setZero();
    row[idx(L.p(i))] = 1.0;
    row[idx(L.r_up(i))] = 1.0;
    lp.add_row(row, -inf, g.p_max);
    row.setZero();
    row[idx(L.p(i))] = 1.0;
    row[idx(L.r_down(i))] = -1.0;
    lp.add_row(row, g.p_min, inf);
  }
  for (std::size_t j : fleet.reserve_plants()) {
    row.setZero();
    row[idx(L.v(j))] = 1.0;
    row[idx(L.r_up(L.wind_responder(j)))] = 1.0;
    lp.add_row(row, -inf, fleet.plant(j).mean_mw);
  }
  row.setZero();
  for (std::size_t i = 0; i < L.generators(); ++i) row[idx(L.p(i))] = 1.0;
  for (std::size_t j = 0; j < fleet.size(); ++j) row[idx(L.v(j))] = 1.0;
  lp.add_row(row, demand - cap_offset, demand - cap_offset);
  row.setZero();
  for (std::size_t k = 0; k < responders.size(); ++k) row[idx(L.alpha(k))] = 1.0;
  lp.add_row(row, 1.0, 1.0);
  return lp;
}

CostBreakdown decision_cost(const Problem& prob, const Decision& d) {
  d.check(prob.layout);
  CostBreakdown c;
  for (std::size_t i = 0; i < d.p.size(); ++i) c.energy += prob.cost_energy[static_cast<Eigen::Index>(i)] * d.p[i];
  const auto& responders = prob.layout.responder_list();
  for (std::size_t k = 0; k < responders.size(); ++k) {
    const double r = prob.cost_up[static_cast<Eigen::Index>(k)] * d.r_up[k] +
                     prob.cost_down[static_cast<Eigen::Index>(k)] * d.r_down[k];
    if (responders[k].kind == Responder::Kind::Generator) {
      c.reserve_generators += r;
    } else {
      c.reserve_wind += r;
    }
  }
  c.total = c.energy + c.reserve_generators + c.reserve_wind;
  return c;
}

double max_wcc_violation(const Problem& prob, const Decision& d) {
  const Eigen::VectorXd x = d.flatten(prob.layout);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : prob.model->constraints()) worst = std::max(worst, prob.model->evaluate(c, x) - c.eps);
  return worst;
}

namespace {

void fill_summary(const Problem& prob, SolveReport& rep) {
  const Decision& d = rep.decision;
  rep.cost = decision_cost(prob, d);
  rep.wind_scheduled = std::accumulate(d.v.begin(), d.v.end(), 0.0);
  rep.reserves_up = std::accumulate(d.r_up.begin(), d.r_up.end(), 0.0);
  rep.reserves_down = std::accumulate(d.r_down.begin(), d.r_down.end(), 0.0);
  rep.expected_wasted.assign(prob.fleet.size(), 0.0);
  rep.withheld.assign(prob.fleet.size(), 0.0);
  rep.expected_curtailment = 0.0;
  for (std::size_t j = 0; j < prob.fleet.size(); ++j) {
    const auto& w = prob.fleet.plant(j);
    if (w.capped()) rep.expected_wasted[j] = expected_positive_part({-w.cap_mw, w.std_mw});
    rep.withheld[j] = std::max(0.0, w.mean_mw - d.v[j]);
    rep.expected_curtailment += rep.expected_wasted[j] + rep.withheld[j];
  }
}

}  // namespace

SolveReport solve_wcc_opf(const Problem& prob, const SolverOptions& opts) {
  if (!(opts.tol_feas > 0.0)) throw std::invalid_argument("feasibility tolerance must be positive");
  if (opts.max_iterations < 1) throw std::invalid_argument("iteration limit must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const WccModel& model = *prob.model;
  const auto& constraints = model.constraints();
  LinearProgram lp = assemble_master(prob);
  const Eigen::Index n = lp.cols();

  SolveReport rep;
  if (prob.fleet.deterministic()) {
    // With no uncertainty every overload is the affine offset itself.
    for (const auto& c : constraints) {
      if (c.base_grad.isZero(0.0) && c.base_const <= c.eps) continue;
      lp.add_row(c.base_grad, -std::numeric_limits<double>::infinity(), c.eps - c.base_const);
    }
  }

  LpBasis basis;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  bool have_point = false;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const LpSolution sol = solve_lp(lp, opts.lp, opts.warm_start && !basis.empty() ? &basis : nullptr);
    rep.iterations = it;
    if (sol.status != LpStatus::Optimal) {
      if (sol.status == LpStatus::Infeasible || sol.status == LpStatus::Unbounded) {
        rep.status = SolveStatus::Infeasible;
        rep.message = it == 1 && rep.cuts.empty() ? "master problem is " + to_string(sol.status)
                                                  : "master problem became infeasible after adding cuts";
        std::set<std::string> families;
        for (const auto& cut : rep.cuts) families.insert(std::string(to_string(cut.family)));
        rep.binding_cut_families.assign(families.begin(), families.end());
      } else {
        rep.status = SolveStatus::IterationLimit;
        rep.message = "LP backend stopped: " + to_string(sol.status) + " (" + sol.message + ")";
      }
      break;
    }
    basis = sol.basis;
    x = sol.x;
    have_point = true;
    rep.master_objectives.push_back(sol.objective);

    std::vector<double> values(constraints.size());
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      values[c] = model.evaluate(constraints[c], x);
      worst = std::max(worst, values[c] - constraints[c].eps);
    }
    rep.max_violation = constraints.empty() ? 0.0 : worst;
    if (rep.max_violation <= opts.tol_feas || prob.fleet.deterministic()) {
      rep.status = SolveStatus::Converged;
      break;
    }
    if (it == opts.max_iterations) {
      rep.status = SolveStatus::IterationLimit;
      rep.message = "iteration limit reached; reporting the last master solution (a lower bound)";
      break;
    }
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      const auto& con = constraints[c];
      if (values[c] - con.eps <= opts.cut_threshold * opts.tol_feas) continue;
      WccEvaluation ev = model.evaluate_with_gradient(con, x);
      const double scale = ev.gradient.cwiseAbs().maxCoeff();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(ev.gradient[j]) <= 1e-13 * scale) ev.gradient[j] = 0.0;
      }
      Cut cut{con.family, c, it, ev.gradient, con.eps - ev.value + ev.gradient.dot(x)};
      lp.add_row(cut.coef, -std::numeric_limits<double>::infinity(), cut.rhs);
      ++rep.cuts_per_family[static_cast<std::size_t>(con.family)];
      rep.cuts.push_back(std::move(cut));
    }
  }

  rep.decision = Decision::unflatten(prob.layout, x);
  if (have_point) fill_summary(prob, rep);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace wccopf
