#include "wccopf/cli.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace wccopf {
namespace {

using nlohmann::json;

double parse_double(std::string_view s, const char* what) {
  std::string t(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size()) throw ValidationError(std::string("cannot read ") + what + " from '" + t + "'");
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    out.push_back(trim(s.substr(start, end == std::string_view::npos ? s.size() - start : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

void write_output(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out_path.empty() || cfg.out_path == "-") {
    out << text;
    return;
  }
  std::ofstream f(cfg.out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + cfg.out_path);
  f << text;
}

std::vector<std::string> sweep_result_header() {
  return {"status",           "total_cost",    "generation_cost",          "reserve_cost",
          "wind_generation_mw", "total_reserves_mw", "expected_curtailment_mw", "iterations",
          "max_violation_mw", "error"};
}

std::vector<std::string> sweep_result_cells(const SolveReport& rep) {
  return {to_string(rep.status),
          format_number(rep.cost.total),
          format_number(rep.cost.energy),
          format_number(rep.cost.reserve_generators + rep.cost.reserve_wind),
          format_number(rep.wind_scheduled),
          format_number(rep.reserves_up + rep.reserves_down),
          format_number(rep.expected_curtailment),
          std::to_string(rep.iterations),
          format_number(rep.max_violation),
          rep.status == SolveStatus::Converged ? "" : rep.message};
}

std::vector<std::string> sweep_failure_cells(const std::string& what) {
  return {"error", "", "", "", "", "", "", "", "", what};
}

}  // namespace

std::vector<std::pair<int, double>> parse_cap_list(std::string_view text) {
  std::vector<std::pair<int, double>> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("cap entry '" + item + "' must look like bus=MW");
    const double bus = parse_double(std::string_view(item).substr(0, eq), "cap bus");
    if (bus != std::floor(bus)) throw ValidationError("cap bus must be an integer in '" + item + "'");
    out.emplace_back(static_cast<int>(bus), parse_double(std::string_view(item).substr(eq + 1), "cap value"));
  }
  return out;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  const std::string t = trim(text);
  if (t.empty()) return out;
  if (t.find(':') != std::string::npos) {
    const auto parts = split(t, ':');
    if (parts.size() != 3) throw ValidationError("range must be start:stop:step");
    const double a = parse_double(parts[0], "range start");
    const double b = parse_double(parts[1], "range stop");
    const double step = parse_double(parts[2], "range step");
    if (!(step > 0.0) || b < a) throw ValidationError("range needs start <= stop and a positive step");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  for (const auto& item : split(t, ',')) out.push_back(parse_double(item, "number"));
  return out;
}

void apply_options_json(RunConfig& cfg, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("options file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("options file must hold a JSON object");
  auto num = [](const json& v, const char* key) {
    if (!v.is_number()) throw ValidationError(std::string("option '") + key + "' must be a number");
    return v.get<double>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "tol_feas") {
      cfg.solver.tol_feas = num(v, "tol_feas");
    } else if (key == "max_iterations") {
      cfg.solver.max_iterations = static_cast<int>(num(v, "max_iterations"));
    } else if (key == "warm_start") {
      cfg.solver.warm_start = v.get<bool>();
    } else if (key == "epsilon") {
      if (v.is_number()) {
        cfg.eps.default_mw = v.get<double>();
        continue;
      }
      if (v.contains("default")) cfg.eps.default_mw = num(v.at("default"), "epsilon.default");
      if (v.contains("families")) {
        for (const auto& [f, e] : v.at("families").items()) cfg.eps.per_family[f] = num(e, "epsilon.families");
      }
      if (v.contains("items")) {
        for (const auto& [f, e] : v.at("items").items()) cfg.eps.per_item[f] = num(e, "epsilon.items");
      }
    } else if (key == "integration") {
      for (const auto& [k, e] : v.items()) {
        if (k == "quadrature_nodes") cfg.integration.quadrature_nodes = static_cast<int>(num(e, "quadrature_nodes"));
        else if (k == "max_quadrature_caps") cfg.integration.max_quadrature_caps = static_cast<std::size_t>(num(e, k.c_str()));
        else if (k == "qmc_points") cfg.integration.qmc_points = static_cast<std::size_t>(num(e, k.c_str()));
        else if (k == "qmc_seed") cfg.integration.qmc_seed = static_cast<std::uint64_t>(num(e, k.c_str()));
        else if (k == "max_caps") cfg.integration.max_caps = static_cast<std::size_t>(num(e, k.c_str()));
        else throw ValidationError("unknown integration option '" + k + "'");
      }
    } else if (key == "lp") {
      for (const auto& [k, e] : v.items()) {
        if (k == "max_iterations") cfg.solver.lp.max_iterations = static_cast<int>(num(e, k.c_str()));
        else if (k == "refactor_interval") cfg.solver.lp.refactor_interval = static_cast<int>(num(e, k.c_str()));
        else if (k == "primal_tol") cfg.solver.lp.primal_tol = num(e, k.c_str());
        else if (k == "dual_tol") cfg.solver.lp.dual_tol = num(e, k.c_str());
        else throw ValidationError("unknown lp option '" + k + "'");
      }
    } else if (key == "samples") {
      cfg.samples = static_cast<std::size_t>(num(v, "samples"));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(num(v, "seed"));
    } else {
      throw ValidationError("unknown option '" + key + "'");
    }
  }
}

Network load_stressed_network(const RunConfig& cfg) {
  Network net = parse_matpower_case(read_text_file(cfg.case_path));
  validate_network(net);
  return apply_stress_modifiers(net, cfg.load_factor, cfg.limit_factor);
}

WindFleet load_fleet(const RunConfig& cfg, const Network& net) {
  const WindFleetConfig wc = load_wind_config(read_text_file(cfg.wind_path), net);
  WindFleet fleet = WindFleet::from_config(wc, net);
  if (!cfg.wind_reserves) {
    for (std::size_t j = 0; j < fleet.size(); ++j) {
      if (fleet.plant(j).policy == WindPolicy::Reserve) fleet = fleet.with_policy(j, WindPolicy::MeanOnly);
    }
  }
  fleet = scale_penetration(fleet, net, cfg.penetration);
  for (const auto& [bus, cap] : cfg.caps) {
    bool found = false;
    for (std::size_t j = 0; j < fleet.size(); ++j) {
      if (fleet.plant(j).bus != bus) continue;
      fleet = fleet.with_cap(j, cap);
      found = true;
    }
    if (!found) throw ValidationError("cap bus " + std::to_string(bus) + " hosts no wind plant");
  }
  return fleet;
}

Problem build_problem(const RunConfig& cfg) {
  Network net = load_stressed_network(cfg);
  WindFleet fleet = load_fleet(cfg, net);
  return make_problem(std::move(net), std::move(fleet), cfg.eps, cfg.integration);
}

int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::Infeasible: return 2;
    case SolveStatus::IterationLimit: return 3;
  }
  return 1;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Problem prob = build_problem(cfg);
    const SolveReport rep = solve_wcc_opf(prob, cfg.solver);
    json j = solve_report_to_json(prob, rep, cfg.report_timing);
    j["config"] = {{"penetration", cfg.penetration},
                   {"epsilon", cfg.eps.default_mw},
                   {"load_factor", cfg.load_factor},
                   {"limit_factor", cfg.limit_factor},
                   {"wind_reserves", cfg.wind_reserves},
                   {"tol_feas", cfg.solver.tol_feas}};
    json caps = json::object();
    for (const auto& [bus, cap] : cfg.caps) caps[std::to_string(bus)] = cap;
    j["config"]["caps"] = caps;
    write_output(cfg, j.dump(2) + "\n", out);
    err << "solve: " << to_string(rep.status) << ", total cost " << format_number(rep.cost.total) << ", "
        << rep.iterations << " iterations, " << rep.total_cuts() << " cuts, " << format_number(rep.wall_seconds)
        << " s\n";
    return exit_code(rep.status);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

CsvTable sweep_penetration(const RunConfig& cfg, const std::vector<double>& levels, std::ostream& err) {
  CsvTable t;
  t.header = {"penetration", "wind_reserves"};
  for (auto& h : sweep_result_header()) t.header.push_back(h);
  if (levels.empty()) return t;
  const Network net = load_stressed_network(cfg);
  for (double level : levels) {
    std::vector<std::string> row = {format_number(level), cfg.wind_reserves ? "1" : "0"};
    std::vector<std::string> cells;
    try {
      RunConfig point = cfg;
      point.penetration = level;
      const Problem prob = make_problem(net, load_fleet(point, net), cfg.eps, cfg.integration);
      cells = sweep_result_cells(solve_wcc_opf(prob, cfg.solver));
    } catch (const std::exception& e) {
      cells = sweep_failure_cells(e.what());
    }
    err << "penetration " << format_number(level) << ": " << cells[0] << " " << cells[1] << "\n";
    row.insert(row.end(), cells.begin(), cells.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable sweep_caps(const RunConfig& cfg, std::pair<int, int> buses, const std::vector<double>& grid,
                    std::ostream& err) {
  CsvTable t;
  t.header = {"cap_" + std::to_string(buses.first), "cap_" + std::to_string(buses.second)};
  for (auto& h : sweep_result_header()) t.header.push_back(h);
  if (grid.empty()) return t;
  const Network net = load_stressed_network(cfg);
  for (double a : grid) {
    for (double b : grid) {
      std::vector<std::string> row = {format_number(a), format_number(b)};
      std::vector<std::string> cells;
      try {
        RunConfig point = cfg;
        point.caps.emplace_back(buses.first, a);
        point.caps.emplace_back(buses.second, b);
        const Problem prob = make_problem(net, load_fleet(point, net), cfg.eps, cfg.integration);
        cells = sweep_result_cells(solve_wcc_opf(prob, cfg.solver));
      } catch (const std::exception& e) {
        cells = sweep_failure_cells(e.what());
      }
      err << "caps (" << format_number(a) << ", " << format_number(b) << "): " << cells[0] << " " << cells[1] << "\n";
      row.insert(row.end(), cells.begin(), cells.end());
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

int cmd_sweep_penetration(const RunConfig& cfg, const std::vector<double>& levels, std::ostream& out,
                          std::ostream& err) {
  try {
    write_output(cfg, sweep_penetration(cfg, levels, err).str(), out);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep_caps(const RunConfig& cfg, std::pair<int, int> buses, const std::vector<double>& grid,
                   std::ostream& out, std::ostream& err) {
  try {
    write_output(cfg, sweep_caps(cfg, buses, grid, err).str(), out);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_validate(const RunConfig& cfg, const std::string& dispatch_path, std::ostream& out, std::ostream& err) {
  try {
    const Problem prob = build_problem(cfg);
    json dispatch;
    try {
      dispatch = json::parse(read_text_file(dispatch_path));
    } catch (const json::parse_error& e) {
      throw ValidationError("dispatch file is not valid JSON: " + std::string(e.what()));
    }
    const json& dj = dispatch.contains("decision") ? dispatch.at("decision") : dispatch;
    const Decision d = decision_from_json(dj, prob);
    const ValidationReport rep = validate_dispatch(prob, d, cfg.samples, cfg.seed);
    write_output(cfg, validation_report_to_json(rep).dump(2) + "\n", out);
    err << "validate: " << rep.failures << " of " << rep.constraints.size() << " constraints exceed eps + 3 stderr ("
        << rep.samples << " samples)\n";
    return rep.all_pass() ? 0 : 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace wccopf
