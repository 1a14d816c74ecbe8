#include "wccopf/case_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace wccopf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
  int start_line = 0;
};

struct CaseTables {
  std::optional<double> base_mva;
  std::map<std::string, Table> tables;
};

std::string strip_comment(std::string_view line) {
  const auto pos = line.find('%');
  return std::string(pos == std::string_view::npos ? line : line.substr(0, pos));
}

double parse_number(const std::string& token, int line_no) {
  if (token == "Inf" || token == "inf") return kInf;
  if (token == "-Inf" || token == "-inf") return -kInf;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ParseError("invalid number '" + token + "'", line_no);
  }
  if (used != token.size()) throw ParseError("invalid number '" + token + "'", line_no);
  return value;
}

void append_row_tokens(std::string_view body, int line_no, std::vector<double>& current) {
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      current.push_back(parse_number(token, line_no));
      token.clear();
    }
  };
  for (char ch : body) {
    if (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r') {
      flush();
    } else {
      token.push_back(ch);
    }
  }
  flush();
}

CaseTables scan_case(std::string_view text) {
  CaseTables out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  Table* open = nullptr;
  std::string open_name;
  std::vector<double> current;
  int current_line = 0;

  auto finish_row = [&] {
    if (!current.empty()) {
      open->rows.push_back(current);
      open->row_lines.push_back(current_line);
      current.clear();
    }
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    if (open == nullptr) {
      const auto mpc = line.find("mpc.");
      if (mpc == std::string::npos) continue;
      const auto eq = line.find('=', mpc);
      if (eq == std::string::npos) continue;
      std::string name = line.substr(mpc + 4, eq - mpc - 4);
      name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
      std::string rhs = line.substr(eq + 1);
      const auto bracket = rhs.find('[');
      if (bracket == std::string::npos) {
        if (name == "baseMVA") {
          rhs.erase(std::remove(rhs.begin(), rhs.end(), ';'), rhs.end());
          rhs.erase(std::remove_if(rhs.begin(), rhs.end(), ::isspace), rhs.end());
          out.base_mva = parse_number(rhs, line_no);
        }
        continue;
      }
      if (out.tables.count(name) != 0) throw ParseError("duplicate table mpc." + name, line_no);
      open = &out.tables[name];
      open->start_line = line_no;
      open_name = name;
      line = rhs.substr(bracket + 1);
    }
    // Inside a numeric table: rows end at ';' or end of line, table at ']'.
    const auto close = line.find(']');
    std::string body = close == std::string::npos ? line : line.substr(0, close);
    std::size_t start = 0;
    while (true) {
      const auto semi = body.find(';', start);
      const std::string piece = body.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
      if (current.empty()) current_line = line_no;
      append_row_tokens(piece, line_no, current);
      if (semi == std::string::npos) break;
      finish_row();
      start = semi + 1;
    }
    finish_row();
    if (close != std::string::npos) {
      open = nullptr;
    }
  }
  if (open != nullptr) throw ParseError("unterminated table mpc." + open_name, line_no);
  return out;
}

const Table& require_table(const CaseTables& tables, const std::string& name) {
  const auto it = tables.tables.find(name);
  if (it == tables.tables.end()) throw ParseError("missing table mpc." + name, 0);
  if (it->second.rows.empty()) throw ParseError("empty table mpc." + name, it->second.start_line);
  return it->second;
}

double column(const Table& table, std::size_t row, std::size_t col_one_based, const std::string& name) {
  const auto& r = table.rows[row];
  if (r.size() < col_one_based) {
    throw ParseError("mpc." + name + " row has " + std::to_string(r.size()) + " columns, need " +
                         std::to_string(col_one_based),
                     table.row_lines[row]);
  }
  return r[col_one_based - 1];
}

int as_id(double value, int line_no) {
  if (std::floor(value) != value) throw ParseError("non-integer bus id", line_no);
  return static_cast<int>(value);
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool Network::has_bus(int id) const { return std::binary_search(buses.begin(), buses.end(), id); }

std::size_t Network::bus_index(int id) const {
  const auto it = std::lower_bound(buses.begin(), buses.end(), id);
  if (it == buses.end() || *it != id) throw ValidationError("unknown bus " + std::to_string(id));
  return static_cast<std::size_t>(it - buses.begin());
}

double Network::total_load() const { return std::accumulate(load_mw.begin(), load_mw.end(), 0.0); }

double Network::total_capacity() const {
  double total = 0.0;
  for (const auto& g : generators) total += g.p_max;
  return total;
}

void validate_network(const Network& net) {
  if (net.buses.empty()) throw ValidationError("network has no buses");
  if (!std::is_sorted(net.buses.begin(), net.buses.end()) ||
      std::adjacent_find(net.buses.begin(), net.buses.end()) != net.buses.end()) {
    throw ValidationError("bus ids must be unique");
  }
  if (net.load_mw.size() != net.buses.size()) throw ValidationError("load vector size mismatch");
  if (net.slack_bus && !net.has_bus(*net.slack_bus)) throw ValidationError("slack bus not in bus list");

  const std::size_t m = net.buses.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& line : net.lines) {
    if (!net.has_bus(line.from_bus) || !net.has_bus(line.to_bus)) {
      throw ValidationError("line " + std::to_string(line.from_bus) + "-" + std::to_string(line.to_bus) +
                            " references an unknown bus");
    }
    if (line.reactance == 0.0 || !std::isfinite(line.reactance)) {
      throw ValidationError("line " + std::to_string(line.from_bus) + "-" + std::to_string(line.to_bus) +
                            " has zero reactance");
    }
    if (!(line.limit_mw > 0.0)) throw ValidationError("line flow limits must be positive");
    parent[find(net.bus_index(line.from_bus))] = find(net.bus_index(line.to_bus));
  }
  for (std::size_t i = 1; i < m; ++i) {
    if (find(i) != find(0)) {
      throw ValidationError("network is disconnected (bus " + std::to_string(net.buses[i]) + ")");
    }
  }
  for (const auto& g : net.generators) {
    if (!net.has_bus(g.bus)) throw ValidationError("generator at unknown bus " + std::to_string(g.bus));
    if (!(g.p_min <= g.p_max)) throw ValidationError("generator at bus " + std::to_string(g.bus) + " has p_min > p_max");
    if (g.r_up_max < 0.0 || g.r_down_max < 0.0) throw ValidationError("reserve offer caps must be non-negative");
  }
}

Network parse_matpower_case(std::string_view text) {
  const CaseTables tables = scan_case(text);
  Network net;
  if (tables.base_mva) net.base_mva = *tables.base_mva;

  const Table& bus = require_table(tables, "bus");
  const Table& branch = require_table(tables, "branch");
  const Table& gen = require_table(tables, "gen");
  const Table& gencost = require_table(tables, "gencost");

  std::vector<std::pair<int, double>> bus_rows;
  for (std::size_t r = 0; r < bus.rows.size(); ++r) {
    const int id = as_id(column(bus, r, 1, "bus"), bus.row_lines[r]);
    const int type = static_cast<int>(column(bus, r, 2, "bus"));
    bus_rows.emplace_back(id, column(bus, r, 3, "bus"));
    if (type == 3) {
      if (net.slack_bus) throw ParseError("more than one slack bus", bus.row_lines[r]);
      net.slack_bus = id;
    }
  }
  std::sort(bus_rows.begin(), bus_rows.end());
  for (std::size_t i = 0; i < bus_rows.size(); ++i) {
    if (i > 0 && bus_rows[i].first == bus_rows[i - 1].first) {
      throw ParseError("duplicate bus id " + std::to_string(bus_rows[i].first), 0);
    }
    net.buses.push_back(bus_rows[i].first);
    net.load_mw.push_back(bus_rows[i].second);
  }

  for (std::size_t r = 0; r < branch.rows.size(); ++r) {
    const int ln = branch.row_lines[r];
    if (branch.rows[r].size() >= 11 && branch.rows[r][10] == 0.0) continue;  // out of service
    Line line;
    line.from_bus = as_id(column(branch, r, 1, "branch"), ln);
    line.to_bus = as_id(column(branch, r, 2, "branch"), ln);
    line.reactance = column(branch, r, 4, "branch");
    const double rate = column(branch, r, 6, "branch");
    line.limit_mw = rate == 0.0 ? kInf : rate;
    net.lines.push_back(line);
  }

  const Table* reserves = nullptr;
  if (auto it = tables.tables.find("reserves"); it != tables.tables.end()) reserves = &it->second;

  std::size_t in_service = 0;
  for (std::size_t r = 0; r < gen.rows.size(); ++r) {
    const int ln = gen.row_lines[r];
    const double status = column(gen, r, 8, "gen");
    if (status <= 0.0) continue;
    Generator g;
    g.bus = as_id(column(gen, r, 1, "gen"), ln);
    g.p_max = column(gen, r, 9, "gen");
    g.p_min = column(gen, r, 10, "gen");

    if (r >= gencost.rows.size()) throw ParseError("mpc.gencost has fewer rows than mpc.gen", gencost.start_line);
    const int cln = gencost.row_lines[r];
    const int model = static_cast<int>(column(gencost, r, 1, "gencost"));
    if (model != 2) throw ParseError("only polynomial gencost (model 2) is supported", cln);
    const auto ncost = static_cast<std::size_t>(column(gencost, r, 4, "gencost"));
    // Coefficients are c(n-1) ... c0; the linear term is second to last.
    g.cost = ncost >= 2 ? column(gencost, r, 4 + ncost - 1, "gencost") : 0.0;
    g.cost_up = g.cost;
    g.cost_down = g.cost;
    g.r_up_max = g.p_max;
    g.r_down_max = g.p_max;

    if (reserves != nullptr) {
      if (in_service >= reserves->rows.size()) {
        throw ParseError("mpc.reserves has fewer rows than in-service generators", reserves->start_line);
      }
      g.cost_up = column(*reserves, in_service, 1, "reserves");
      g.cost_down = column(*reserves, in_service, 2, "reserves");
      g.r_up_max = column(*reserves, in_service, 3, "reserves");
      g.r_down_max = column(*reserves, in_service, 4, "reserves");
    }
    ++in_service;
    net.generators.push_back(g);
  }

  validate_network(net);
  return net;
}

std::string write_matpower_case(const Network& net) {
  std::ostringstream out;
  out << "function mpc = wccopf_case\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << fmt(net.base_mva) << ";\n\n";
  out << "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
  out << "mpc.bus = [\n";
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const int type = net.slack_bus && *net.slack_bus == net.buses[i] ? 3 : 1;
    out << '\t' << net.buses[i] << '\t' << type << '\t' << fmt(net.load_mw[i])
        << "\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;\n";
  }
  out << "];\n\n";
  out << "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
  out << "mpc.gen = [\n";
  for (const auto& g : net.generators) {
    out << '\t' << g.bus << "\t0\t0\t0\t0\t1\t" << fmt(net.base_mva) << "\t1\t" << fmt(g.p_max) << '\t'
        << fmt(g.p_min) << ";\n";
  }
  out << "];\n\n";
  out << "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\n";
  out << "mpc.branch = [\n";
  for (const auto& l : net.lines) {
    out << '\t' << l.from_bus << '\t' << l.to_bus << "\t0\t" << fmt(l.reactance) << "\t0\t"
        << fmt(l.limited() ? l.limit_mw : 0.0) << "\t0\t0\t0\t0\t1;\n";
  }
  out << "];\n\n";
  out << "%\t2\tstartup\tshutdown\tn\tc1\tc0\n";
  out << "mpc.gencost = [\n";
  for (const auto& g : net.generators) out << "\t2\t0\t0\t2\t" << fmt(g.cost) << "\t0;\n";
  out << "];\n\n";
  out << "%\tcost_up\tcost_down\tr_up_max\tr_down_max\n";
  out << "mpc.reserves = [\n";
  for (const auto& g : net.generators) {
    out << '\t' << fmt(g.cost_up) << '\t' << fmt(g.cost_down) << '\t' << fmt(g.r_up_max) << '\t'
        << fmt(g.r_down_max) << ";\n";
  }
  out << "];\n";
  return out.str();
}

Network apply_stress_modifiers(const Network& net, double load_factor, double limit_factor) {
  if (!(load_factor > 0.0) || !(limit_factor > 0.0)) throw ValidationError("stress factors must be positive");
  Network out = net;
  for (auto& d : out.load_mw) d *= load_factor;
  for (auto& l : out.lines) l.limit_mw *= limit_factor;
  for (auto& g : out.generators) g.p_min = 0.0;
  return out;
}

std::string_view to_string(WindPolicy policy) {
  switch (policy) {
    case WindPolicy::Reserve: return "reserve";
    case WindPolicy::Cap: return "cap";
    case WindPolicy::MeanOnly: return "mean_only";
  }
  return "?";
}

WindPolicy wind_policy_from_string(std::string_view name) {
  if (name == "reserve") return WindPolicy::Reserve;
  if (name == "cap") return WindPolicy::Cap;
  if (name == "mean_only") return WindPolicy::MeanOnly;
  throw ValidationError("unknown wind policy '" + std::string(name) + "'");
}

bool repair_correlation(Eigen::MatrixXd& rho, double tolerance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho);
  if (eig.eigenvalues().minCoeff() >= -tolerance) return false;
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd fixed = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd scale = fixed.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  rho = scale.asDiagonal() * fixed * scale.asDiagonal();
  rho = 0.5 * (rho + rho.transpose()).eval();
  rho.diagonal().setOnes();
  return true;
}

WindFleetConfig load_wind_config(std::string_view text, const Network& net) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("wind config: ") + e.what(), 0);
  }
  if (!doc.contains("plants") || !doc["plants"].is_array()) throw ValidationError("wind config needs a 'plants' array");

  WindFleetConfig cfg;
  for (const auto& p : doc["plants"]) {
    WindPlantSpec spec;
    spec.bus = p.at("bus").get<int>();
    if (!net.has_bus(spec.bus)) throw ValidationError("wind plant at unknown bus " + std::to_string(spec.bus));
    spec.mean_mw = p.at("mean_mw").get<double>();
    if (p.contains("std_mw")) {
      spec.std_mw = p["std_mw"].get<double>();
    } else if (p.contains("std_fraction")) {
      spec.std_mw = p["std_fraction"].get<double>() * spec.mean_mw;
    } else if (doc.contains("std_fraction")) {
      spec.std_mw = doc["std_fraction"].get<double>() * spec.mean_mw;
    } else {
      throw ValidationError("wind plant at bus " + std::to_string(spec.bus) + " needs std_mw or std_fraction");
    }
    if (spec.mean_mw < 0.0) throw ValidationError("wind plant mean must be non-negative");
    if (!(spec.std_mw >= 0.0)) throw ValidationError("wind plant standard deviation must be non-negative");
    if (p.contains("policy")) {
      const auto& pol = p["policy"];
      spec.policy = wind_policy_from_string(pol.at("type").get<std::string>());
      if (spec.policy == WindPolicy::Cap) spec.cap_mw = pol.at("cap_mw").get<double>();
    }
    cfg.plants.push_back(spec);
  }

  const auto n = static_cast<Eigen::Index>(cfg.plants.size());
  if (doc.contains("correlation") && !doc["correlation"].is_null()) {
    const auto& rows = doc["correlation"];
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) {
      throw ValidationError("correlation must be a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    cfg.correlation.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != n) throw ValidationError("correlation row size mismatch");
      for (Eigen::Index j = 0; j < n; ++j) cfg.correlation(i, j) = rows[i][j].get<double>();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(cfg.correlation(i, i) - 1.0) > 1e-9) throw ValidationError("correlation diagonal must be 1");
      for (Eigen::Index j = 0; j < i; ++j) {
        if (std::abs(cfg.correlation(i, j) - cfg.correlation(j, i)) > 1e-9) {
          throw ValidationError("correlation matrix is not symmetric");
        }
      }
    }
    if (repair_correlation(cfg.correlation)) {
      cfg.warnings.push_back("correlation matrix was not positive semidefinite; negative eigenvalues clipped");
    }
  } else {
    cfg.correlation = Eigen::MatrixXd::Identity(n, n);
  }
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  return cfg;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace wccopf
