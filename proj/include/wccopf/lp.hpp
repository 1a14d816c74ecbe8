#pragma once

// Dense bounded dual simplex for the cutting-plane master problems:
//   min c^T x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
// Warm starts reuse a previous basis; rows appended since then start with a
// basic slack, which keeps the basis dual feasible.

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace wccopf {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, Numerical };
std::string to_string(LpStatus s);

class LinearProgram {
 public:
  explicit LinearProgram(Eigen::Index n = 0);

  Eigen::VectorXd cost;
  Eigen::VectorXd col_lower;
  Eigen::VectorXd col_upper;

  Eigen::Index cols() const { return cost.size(); }
  Eigen::Index row_count() const { return m_; }
  void add_row(const Eigen::Ref<const Eigen::VectorXd>& coef, double lower, double upper);
  auto rows() const { return storage_.topRows(m_); }
  double row_lower(Eigen::Index i) const { return lower_[static_cast<std::size_t>(i)]; }
  double row_upper(Eigen::Index i) const { return upper_[static_cast<std::size_t>(i)]; }

 private:
  Eigen::MatrixXd storage_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  Eigen::Index m_ = 0;
};

enum class VarStatus : unsigned char { Basic, AtLower, AtUpper };

struct LpFactor;

/// Status of every structural column followed by every row slack.
struct LpBasis {
  std::vector<VarStatus> status;
  // Inverse of the final basis. A warm start on the same LP with rows
  // appended extends it instead of refactoring.
  std::shared_ptr<const LpFactor> factor;
  bool empty() const { return status.empty(); }
};

struct LpOptions {
  int max_iterations = 100000;
  int refactor_interval = 64;
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  double infinite_bound = 1e8;  // artificial box for unbounded columns
};

struct LpSolution {
  LpStatus status = LpStatus::Numerical;
  Eigen::VectorXd x;
  Eigen::VectorXd row_activity;
  Eigen::VectorXd row_dual;  // y with reduced cost c - A^T y
  double objective = 0.0;
  LpBasis basis;
  int iterations = 0;
  std::string message;
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {}, const LpBasis* warm = nullptr);

}  // namespace wccopf
