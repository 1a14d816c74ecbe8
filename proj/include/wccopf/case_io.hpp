#pragma once

// Network and wind-fleet input models, MATPOWER case parsing and the
// stress modifiers used by the studies.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wccopf {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // p.u.
  double limit_mw = std::numeric_limits<double>::infinity();

  double susceptance() const { return 1.0 / reactance; }
  bool limited() const { return limit_mw < std::numeric_limits<double>::infinity(); }
  bool operator==(const Line&) const = default;
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double cost = 0.0;       // $/MWh
  double cost_up = 0.0;    // $/MW up-reserve
  double cost_down = 0.0;  // $/MW down-reserve
  double r_up_max = 0.0;
  double r_down_max = 0.0;
  bool operator==(const Generator&) const = default;
};

/// Transmission network with per-bus demand. Buses are kept sorted by id.
struct Network {
  double base_mva = 100.0;
  std::vector<int> buses;
  std::vector<double> load_mw;  // parallel to `buses`
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::optional<int> slack_bus;

  std::size_t bus_count() const { return buses.size(); }
  bool has_bus(int id) const;
  /// Position of bus `id` in `buses`; throws ValidationError if absent.
  std::size_t bus_index(int id) const;
  double total_load() const;
  double total_capacity() const;

  bool operator==(const Network&) const = default;
};

/// Checks the structural invariants (bus references, connectivity, limits).
void validate_network(const Network& net);

/// Parses the MATPOWER text format. Reads mpc.baseMVA, mpc.bus, mpc.branch,
/// mpc.gen, mpc.gencost and the optional mpc.reserves table
/// (cost_up cost_down r_up_max r_down_max per in-service generator).
Network parse_matpower_case(std::string_view text);

/// Emits a case that parse_matpower_case reads back to an equal Network.
std::string write_matpower_case(const Network& net);

/// Scales loads and line limits and resets generator minimum output to zero.
Network apply_stress_modifiers(const Network& net, double load_factor, double limit_factor);

enum class WindPolicy { Reserve, Cap, MeanOnly };

std::string_view to_string(WindPolicy policy);
WindPolicy wind_policy_from_string(std::string_view name);

struct WindPlantSpec {
  int bus = 0;
  double mean_mw = 0.0;
  double std_mw = 0.0;
  WindPolicy policy = WindPolicy::Reserve;
  double cap_mw = std::numeric_limits<double>::infinity();  // used when policy == Cap
};

struct WindFleetConfig {
  std::vector<WindPlantSpec> plants;
  Eigen::MatrixXd correlation;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> warnings;
};

/// Parses the JSON fleet schema and validates it against `net`.
WindFleetConfig load_wind_config(std::string_view text, const Network& net);

/// Clips negative eigenvalues of a symmetric matrix and rescales it back to a
/// unit diagonal. Returns true when the input was not already PSD.
bool repair_correlation(Eigen::MatrixXd& rho, double tolerance = 1e-10);

std::string read_text_file(const std::string& path);

}  // namespace wccopf
