#pragma once

#include "wccopf/case_io.hpp"

#include <Eigen/Dense>

namespace wccopf {

/// Injection-to-flow map of the DC approximation. Rows follow net.lines,
/// columns follow net.buses; MW in, MW out. The reference-bus column is zero.
struct PtdfMatrix {
  Eigen::MatrixXd M;
  int reference_bus = 0;

  Eigen::Index line_count() const { return M.rows(); }
  Eigen::Index bus_count() const { return M.cols(); }
};

/// Slack bus when the case marks one, else the highest-numbered bus.
int default_reference_bus(const Network& net);

PtdfMatrix build_ptdf(const Network& net, int reference_bus);
inline PtdfMatrix build_ptdf(const Network& net) { return build_ptdf(net, default_reference_bus(net)); }

Eigen::VectorXd line_flow(const PtdfMatrix& ptdf, const Eigen::Ref<const Eigen::VectorXd>& injection);

}  // namespace wccopf
