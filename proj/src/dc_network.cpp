#include "wccopf/dc_network.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>

namespace wccopf {

int default_reference_bus(const Network& net) {
  if (net.slack_bus) return *net.slack_bus;
  if (net.buses.empty()) throw ValidationError("network has no buses");
  return net.buses.back();
}

PtdfMatrix build_ptdf(const Network& net, int reference_bus) {
  const auto m = static_cast<Eigen::Index>(net.bus_count());
  const auto n = static_cast<Eigen::Index>(net.lines.size());
  const auto ref = static_cast<Eigen::Index>(net.bus_index(reference_bus));

  // Reduced bus index: skip the reference bus.
  auto reduced = [ref](Eigen::Index k) { return k < ref ? k : k - 1; };

  Eigen::MatrixXd b_bus = Eigen::MatrixXd::Zero(m - 1, m - 1);
  Eigen::MatrixXd b_f = Eigen::MatrixXd::Zero(n, m - 1);
  for (Eigen::Index l = 0; l < n; ++l) {
    const auto& line = net.lines[static_cast<std::size_t>(l)];
    const double b = line.susceptance();
    const auto f = static_cast<Eigen::Index>(net.bus_index(line.from_bus));
    const auto t = static_cast<Eigen::Index>(net.bus_index(line.to_bus));
    if (f == t) continue;
    if (f != ref) {
      b_bus(reduced(f), reduced(f)) += b;
      b_f(l, reduced(f)) += b;
    }
    if (t != ref) {
      b_bus(reduced(t), reduced(t)) += b;
      b_f(l, reduced(t)) -= b;
    }
    if (f != ref && t != ref) {
      b_bus(reduced(f), reduced(t)) -= b;
      b_bus(reduced(t), reduced(f)) -= b;
    }
  }

  PtdfMatrix out;
  out.reference_bus = reference_bus;
  out.M = Eigen::MatrixXd::Zero(n, m);
  if (m == 1) return out;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(b_bus);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * b_bus.diagonal().cwiseAbs().maxCoeff()) {
    throw ValidationError("reduced bus susceptance matrix is singular (disconnected network?)");
  }
  // M_red = B_f * B_bus^-1, solved as B_bus * X = B_f^T (B_bus symmetric).
  const Eigen::MatrixXd reduced_m = ldlt.solve(b_f.transpose()).transpose();
  for (Eigen::Index k = 0; k < m; ++k) {
    if (k == ref) continue;
    out.M.col(k) = reduced_m.col(reduced(k));
  }
  return out;
}

Eigen::VectorXd line_flow(const PtdfMatrix& ptdf, const Eigen::Ref<const Eigen::VectorXd>& injection) {
  if (injection.size() != ptdf.bus_count()) {
    throw std::invalid_argument("injection has " + std::to_string(injection.size()) + " entries, expected " +
                                std::to_string(ptdf.bus_count()));
  }
  return ptdf.M * injection;
}

}  // namespace wccopf
