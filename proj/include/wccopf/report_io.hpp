#pragma once

// JSON and CSV serialization of dispatches and reports.

#include "wccopf/opf_solver.hpp"
#include "wccopf/validation.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace wccopf {

nlohmann::json decision_to_json(const Problem& prob, const Decision& d);
/// Reads the "p", "v", "alpha", "r_up", "r_down" arrays; throws ValidationError
/// when the sizes do not match the problem.
Decision decision_from_json(const nlohmann::json& j, const Problem& prob);

/// Wall time is left out unless asked for, so reports are byte-stable.
nlohmann::json solve_report_to_json(const Problem& prob, const SolveReport& rep, bool include_timing = false);
nlohmann::json validation_report_to_json(const ValidationReport& rep);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const;
};

std::string format_number(double v);
CsvTable validation_csv(const ValidationReport& rep);

}  // namespace wccopf
