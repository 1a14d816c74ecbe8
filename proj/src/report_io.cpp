#include "wccopf/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace wccopf {
namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> read_array(const json& j, const char* key, std::size_t expected) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ValidationError(std::string("dispatch is missing the '") + key + "' array");
  }
  const auto& arr = j.at(key);
  if (arr.size() != expected) {
    throw ValidationError(std::string("dispatch '") + key + "' has " + std::to_string(arr.size()) +
                          " entries, the case needs " + std::to_string(expected));
  }
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw ValidationError(std::string("dispatch '") + key + "' holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

json decision_to_json(const Problem& prob, const Decision& d) {
  d.check(prob.layout);
  json j;
  j["p"] = d.p;
  j["v"] = d.v;
  j["alpha"] = d.alpha;
  j["r_up"] = d.r_up;
  j["r_down"] = d.r_down;
  json gens = json::array();
  for (std::size_t i = 0; i < d.p.size(); ++i) {
    gens.push_back({{"bus", prob.net.generators[i].bus},
                    {"p", d.p[i]},
                    {"alpha", d.alpha[i]},
                    {"r_up", d.r_up[i]},
                    {"r_down", d.r_down[i]}});
  }
  json wind = json::array();
  for (std::size_t j2 = 0; j2 < d.v.size(); ++j2) {
    const auto& w = prob.fleet.plant(j2);
    json entry = {{"bus", w.bus}, {"policy", std::string(to_string(w.policy))}, {"v", d.v[j2]}};
    const std::size_t k = prob.layout.wind_responder(j2);
    if (k != DecisionLayout::npos) {
      entry["alpha"] = d.alpha[k];
      entry["r_up"] = d.r_up[k];
      entry["r_down"] = d.r_down[k];
    }
    if (w.capped()) entry["cap_mw"] = number_or_null(w.cap_mw);
    wind.push_back(entry);
  }
  j["generators"] = gens;
  j["wind"] = wind;
  return j;
}

Decision decision_from_json(const json& j, const Problem& prob) {
  const auto& L = prob.layout;
  Decision d;
  d.p = read_array(j, "p", L.generators());
  d.v = read_array(j, "v", L.plants());
  d.alpha = read_array(j, "alpha", L.responders());
  d.r_up = read_array(j, "r_up", L.responders());
  d.r_down = read_array(j, "r_down", L.responders());
  d.check(L);
  return d;
}

json solve_report_to_json(const Problem& prob, const SolveReport& rep, bool include_timing) {
  json j;
  j["status"] = to_string(rep.status);
  if (!rep.message.empty()) j["message"] = rep.message;
  j["cost"] = {{"total", rep.cost.total},
               {"generation", rep.cost.energy},
               {"reserves", rep.cost.reserve_generators + rep.cost.reserve_wind},
               {"reserves_generators", rep.cost.reserve_generators},
               {"reserves_wind", rep.cost.reserve_wind}};
  j["iterations"] = rep.iterations;
  json cuts = json::object();
  for (WccFamily f : all_wcc_families()) cuts[std::string(to_string(f))] = rep.cuts_per_family[static_cast<std::size_t>(f)];
  j["cuts"] = cuts;
  j["max_violation_mw"] = rep.max_violation;
  j["master_objectives"] = rep.master_objectives;
  if (!rep.binding_cut_families.empty()) j["binding_cut_families"] = rep.binding_cut_families;
  j["totals"] = {{"wind_scheduled_mw", rep.wind_scheduled},
                 {"wind_forecast_mw", prob.fleet.total_mean()},
                 {"reserves_up_mw", rep.reserves_up},
                 {"reserves_down_mw", rep.reserves_down},
                 {"load_mw", prob.net.total_load()}};
  json curtail = json::array();
  for (std::size_t k = 0; k < rep.withheld.size(); ++k) {
    const auto& w = prob.fleet.plant(k);
    curtail.push_back({{"bus", w.bus},
                       {"policy", std::string(to_string(w.policy))},
                       {"expected_wasted_mw", rep.expected_wasted[k]},
                       {"withheld_mw", rep.withheld[k]}});
  }
  j["curtailment"] = {{"expected_total_mw", rep.expected_curtailment}, {"plants", curtail}};
  j["decision"] = decision_to_json(prob, rep.decision);
  if (include_timing) j["wall_seconds"] = rep.wall_seconds;
  return j;
}

json validation_report_to_json(const ValidationReport& rep) {
  json j;
  j["samples"] = rep.samples;
  j["seed"] = rep.seed;
  j["all_pass"] = rep.all_pass();
  j["failures"] = rep.failures;
  json cons = json::array();
  for (const auto& c : rep.constraints) {
    cons.push_back({{"family", std::string(to_string(c.family))},
                    {"id", c.id},
                    {"eps_mw", c.eps},
                    {"expected_overload_mw", c.expected_overload},
                    {"std_error_mw", c.std_error},
                    {"violation_probability", c.violation_probability},
                    {"passes", c.passes}});
  }
  j["constraints"] = cons;
  json plants = json::array();
  for (const auto& p : rep.plants) {
    plants.push_back({{"bus", p.bus},
                      {"policy", std::string(to_string(p.policy))},
                      {"wasted_mw", p.wasted},
                      {"wasted_std_error_mw", p.wasted_std_error},
                      {"withheld_mw", p.withheld}});
  }
  j["curtailment"] = {{"total_mw", rep.total_curtailment},
                      {"total_std_error_mw", rep.total_curtailment_std_error},
                      {"wasted_mw", rep.total_wasted},
                      {"withheld_mw", rep.total_withheld},
                      {"plants", plants}};
  return j;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << csv_escape(cells[i]);
    }
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

CsvTable validation_csv(const ValidationReport& rep) {
  CsvTable t;
  t.header = {"family", "id", "eps_mw", "expected_overload_mw", "std_error_mw", "violation_probability", "passes"};
  for (const auto& c : rep.constraints) {
    t.rows.push_back({std::string(to_string(c.family)), std::to_string(c.id), format_number(c.eps),
                      format_number(c.expected_overload), format_number(c.std_error),
                      format_number(c.violation_probability), c.passes ? "1" : "0"});
  }
  return t;
}

}  // namespace wccopf
