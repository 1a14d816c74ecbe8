#include "wccopf/lp.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wccopf {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
    case LpStatus::Numerical: return "numerical";
  }
  return "unknown";
}

LinearProgram::LinearProgram(Eigen::Index n)
    : cost(Eigen::VectorXd::Zero(n)),
      col_lower(Eigen::VectorXd::Zero(n)),
      col_upper(Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity())),
      storage_(0, n) {}

void LinearProgram::add_row(const Eigen::Ref<const Eigen::VectorXd>& coef, double lower, double upper) {
  if (coef.size() != cols()) throw std::invalid_argument("row length does not match the column count");
  if (std::isnan(lower) || std::isnan(upper)) throw std::invalid_argument("row bound is NaN");
  if (storage_.cols() != cols()) storage_.conservativeResize(storage_.rows(), cols());
  if (m_ == storage_.rows()) storage_.conservativeResize(std::max<Eigen::Index>(16, 2 * m_), cols());
  storage_.row(m_) = coef.transpose();
  lower_.push_back(lower);
  upper_.push_back(upper);
  ++m_;
}

struct LpFactor {
  Eigen::MatrixXd A;
  Eigen::MatrixXd D;
  std::vector<Eigen::Index> s_row;
  std::vector<Eigen::Index> head;
  int since_refactor = 0;
};

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class DualSimplex {
 public:
  DualSimplex(const LinearProgram& lp, const LpOptions& opt) : opt_(opt) {
    n_ = lp.cols();
    m_ = lp.row_count();
    if (lp.col_lower.size() != n_ || lp.col_upper.size() != n_) throw std::invalid_argument("column bound size mismatch");
    A_ = lp.rows();
    const Eigen::Index total = n_ + m_;
    lower_.resize(total);
    upper_.resize(total);
    cost_ = Eigen::VectorXd::Zero(total);
    for (Eigen::Index j = 0; j < n_; ++j) {
      lower_[j] = lp.col_lower[j];
      upper_[j] = lp.col_upper[j];
      cost_[j] = lp.cost[j];
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      lower_[n_ + i] = lp.row_lower(i);
      upper_[n_ + i] = lp.row_upper(i);
    }
    for (Eigen::Index j = 0; j < total; ++j) {
      if (lower_[j] > upper_[j]) bounds_conflict_ = true;
    }
    status_.assign(static_cast<std::size_t>(total), VarStatus::AtLower);
    x_ = Eigen::VectorXd::Zero(total);
    d_ = Eigen::VectorXd::Zero(total);
  }

  LpSolution run(const LpBasis* warm) {
    LpSolution sol;
    if (bounds_conflict_) {
      sol.status = LpStatus::Infeasible;
      sol.message = "a variable or row has lower bound above upper bound";
      return sol;
    }
    bool started = false;
    if (warm && !warm->empty()) started = install_warm(*warm);
    if (!started) install_cold();

    int iter = 0;
    bool fresh = true;
    LpStatus status = LpStatus::IterationLimit;
    while (true) {
      if (since_refactor_ >= opt_.refactor_interval || !fresh_state_) {
        if (!refresh()) {
          status = LpStatus::Numerical;
          sol.message = "basis matrix became singular";
          break;
        }
        since_refactor_ = 0;
        fresh = true;
      }
      const Eigen::Index r = choose_leaving();
      if (r < 0) {
        if (!fresh) {
          // recompute x and d from the current factor before trusting optimality
          recompute();
          fresh = true;
          continue;
        }
        status = LpStatus::Optimal;
        break;
      }
      if (iter >= opt_.max_iterations) {
        status = LpStatus::IterationLimit;
        sol.message = "iteration limit reached";
        break;
      }
      const int outcome = pivot(r);
      if (outcome == kDualUnbounded) {
        if (!fresh) {
          fresh_state_ = false;
          continue;
        }
        status = LpStatus::Infeasible;
        sol.message = "dual ray found (primal infeasible)";
        break;
      }
      if (outcome == kUnstable) {
        if (!fresh) {
          fresh_state_ = false;
          continue;
        }
        status = LpStatus::Numerical;
        sol.message = "unstable pivot";
        break;
      }
      ++iter;
      ++since_refactor_;
      fresh = false;
    }

    sol.iterations = iter;
    sol.status = status;
    sol.x = x_.head(n_);
    sol.row_activity = A_ * sol.x;
    sol.objective = cost_.head(n_).dot(sol.x);
    sol.basis.status = status_;
    if (status == LpStatus::Optimal) {
      auto f = std::make_shared<LpFactor>();
      f->A = A_;
      f->D = D_.leftCols(k_);
      f->s_row = s_row_;
      f->head = head_;
      f->since_refactor = since_refactor_;
      sol.basis.factor = std::move(f);
    }
    if (status == LpStatus::Optimal) {
      sol.row_dual = dual_y();
      for (Eigen::Index j = 0; j < n_ + m_; ++j) {
        if (status_[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
        const bool artificial = (status_[static_cast<std::size_t>(j)] == VarStatus::AtLower && lower_[j] == -kInf) ||
                                (status_[static_cast<std::size_t>(j)] == VarStatus::AtUpper && upper_[j] == kInf);
        if (artificial && std::abs(d_[j]) > opt_.dual_tol) {
          sol.status = LpStatus::Unbounded;
          sol.message = "objective decreases without bound";
          break;
        }
      }
    }
    return sol;
  }

 private:
  static constexpr int kOk = 0;
  static constexpr int kDualUnbounded = 1;
  static constexpr int kUnstable = 2;

  double nonbasic_value(Eigen::Index j) const {
    if (status_[static_cast<std::size_t>(j)] == VarStatus::AtLower) {
      return lower_[j] == -kInf ? -opt_.infinite_bound : lower_[j];
    }
    return upper_[j] == kInf ? opt_.infinite_bound : upper_[j];
  }

  void install_cold() {
    head_.assign(static_cast<std::size_t>(m_), 0);
    for (Eigen::Index j = 0; j < n_; ++j) {
      VarStatus s = cost_[j] >= 0.0 ? VarStatus::AtLower : VarStatus::AtUpper;
      if (s == VarStatus::AtLower && lower_[j] == -kInf && upper_[j] < kInf) s = VarStatus::AtUpper;
      if (s == VarStatus::AtUpper && upper_[j] == kInf && lower_[j] > -kInf) s = VarStatus::AtLower;
      status_[static_cast<std::size_t>(j)] = s;
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      status_[static_cast<std::size_t>(n_ + i)] = VarStatus::Basic;
      head_[static_cast<std::size_t>(i)] = n_ + i;
    }
    fresh_state_ = false;
  }


  bool extend_factor(const LpBasis& warm) {
    const LpFactor& f = *warm.factor;
    const Eigen::Index m_old = f.A.rows();
    if (f.A.cols() != n_ || m_old > m_ || warm.status.size() != static_cast<std::size_t>(n_ + m_old)) return false;
    if (f.head.size() != static_cast<std::size_t>(m_old) || !(A_.topRows(m_old).array() == f.A.array()).all()) return false;
    status_ = warm.status;
    status_.resize(static_cast<std::size_t>(n_ + m_), VarStatus::Basic);
    head_ = f.head;
    for (Eigen::Index i = m_old; i < m_; ++i) head_.push_back(n_ + i);
    pos_.assign(static_cast<std::size_t>(n_ + m_), -1);
    std::vector<Eigen::Index> pos_j, cols_j;
    for (Eigen::Index p = 0; p < m_; ++p) {
      const Eigen::Index v = head_[static_cast<std::size_t>(p)];
      pos_[static_cast<std::size_t>(v)] = p;
      if (v < n_) {
        pos_j.push_back(p);
        cols_j.push_back(v);
      }
    }
    k_ = f.D.cols();
    if (static_cast<Eigen::Index>(pos_j.size()) != k_) return false;
    D_.resize(m_, std::min(n_, m_));
    D_.topLeftCorner(m_old, k_) = f.D;
    s_row_ = f.s_row;
    col_of_.assign(static_cast<std::size_t>(m_), -1);
    for (Eigen::Index a = 0; a < k_; ++a) col_of_[static_cast<std::size_t>(s_row_[static_cast<std::size_t>(a)])] = a;
    if (m_ > m_old && k_ > 0) {
      // a new basic slack i has B^-1 row A_{i,J} B^-1_J in the dense columns
      Eigen::MatrixXd a_new(m_ - m_old, k_), d_j(k_, k_);
      for (Eigen::Index a = 0; a < k_; ++a) {
        a_new.col(a) = A_.col(cols_j[a]).tail(m_ - m_old);
        d_j.row(a) = f.D.row(pos_j[a]);
      }
      D_.block(m_old, 0, m_ - m_old, k_).noalias() = a_new * d_j;
    }
    since_refactor_ = f.since_refactor;
    factored_ = true;
    fresh_state_ = false;
    return true;
  }

  bool install_warm(const LpBasis& warm) {
    if (warm.factor && extend_factor(warm)) return true;
    const auto total = static_cast<std::size_t>(n_ + m_);
    if (warm.status.size() < static_cast<std::size_t>(n_) || warm.status.size() > total) return false;
    status_ = warm.status;
    status_.resize(total, VarStatus::Basic);
    head_.clear();
    for (std::size_t j = 0; j < total; ++j) {
      if (status_[j] == VarStatus::Basic) head_.push_back(static_cast<Eigen::Index>(j));
    }
    if (head_.size() != static_cast<std::size_t>(m_)) {
      status_.assign(total, VarStatus::AtLower);
      return false;
    }
    fresh_state_ = false;
    if (!refactor()) {
      status_.assign(total, VarStatus::AtLower);
      return false;
    }
    factored_ = true;
    return true;
  }

  // Only the columns of B^-1 that belong to rows with a nonbasic slack (the
  // set S, |S| = basic structurals <= n) are dense. Column i of every other
  // row is -e_p, p being the position of slack i. D_ holds the dense ones.
  bool refactor() {
    std::vector<Eigen::Index> rows_s, pos_j;
    pos_.assign(static_cast<std::size_t>(n_ + m_), -1);
    for (Eigen::Index p = 0; p < m_; ++p) {
      const Eigen::Index v = head_[static_cast<std::size_t>(p)];
      pos_[static_cast<std::size_t>(v)] = p;
      if (v < n_) pos_j.push_back(p);
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (pos_[static_cast<std::size_t>(n_ + i)] < 0) rows_s.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(rows_s.size());
    if (k != static_cast<Eigen::Index>(pos_j.size())) return false;
    if (D_.rows() != m_ || D_.cols() != std::min(n_, m_)) D_.resize(m_, std::min(n_, m_));
    s_row_ = rows_s;
    col_of_.assign(static_cast<std::size_t>(m_), -1);
    for (Eigen::Index a = 0; a < k; ++a) col_of_[static_cast<std::size_t>(rows_s[a])] = a;
    k_ = k;
    if (k == 0) return true;
    Eigen::MatrixXd a_j(m_, k);
    for (Eigen::Index a = 0; a < k; ++a) a_j.col(a) = A_.col(head_[static_cast<std::size_t>(pos_j[a])]);
    Eigen::MatrixXd a_sj(k, k);
    for (Eigen::Index a = 0; a < k; ++a) a_sj.row(a) = a_j.row(rows_s[a]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_sj);
    lu.setThreshold(1e-11);
    if (!lu.isInvertible()) return false;
    const Eigen::MatrixXd inv = lu.inverse();  // rows follow pos_j, columns follow rows_s
    const Eigen::MatrixXd through = a_j * inv;
    auto dk = D_.leftCols(k);
    for (Eigen::Index p = 0; p < m_; ++p) {
      const Eigen::Index v = head_[static_cast<std::size_t>(p)];
      if (v >= n_) dk.row(p) = through.row(v - n_);
    }
    for (Eigen::Index a = 0; a < k; ++a) dk.row(pos_j[a]) = inv.row(a);
    return true;
  }

  // B^-1 b
  Eigen::VectorXd binv_times(const Eigen::VectorXd& b) const {
    Eigen::VectorXd bs(k_);
    for (Eigen::Index a = 0; a < k_; ++a) bs[a] = b[s_row_[static_cast<std::size_t>(a)]];
    Eigen::VectorXd out = D_.leftCols(k_) * bs;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index p = pos_[static_cast<std::size_t>(n_ + i)];
      if (p >= 0) out[p] -= b[i];
    }
    return out;
  }

  // row r of B^-1
  Eigen::VectorXd binv_row(Eigen::Index r) const {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(m_);
    for (Eigen::Index a = 0; a < k_; ++a) rho[s_row_[static_cast<std::size_t>(a)]] = D_(r, a);
    const Eigen::Index v = head_[static_cast<std::size_t>(r)];
    if (v >= n_) rho[v - n_] = -1.0;
    return rho;
  }

  double binv_row_norm2(Eigen::Index r) const {
    const double extra = head_[static_cast<std::size_t>(r)] >= n_ ? 1.0 : 0.0;
    return D_.row(r).head(k_).squaredNorm() + extra;
  }

  // y = B^-T c_B; slacks cost nothing so rows outside S get 0.
  Eigen::VectorXd dual_y() const {
    const Eigen::VectorXd cb = basic_costs();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
    const Eigen::VectorXd ys = D_.leftCols(k_).transpose() * cb;
    for (Eigen::Index a = 0; a < k_; ++a) y[s_row_[static_cast<std::size_t>(a)]] = ys[a];
    return y;
  }

  Eigen::VectorXd basic_costs() const {
    Eigen::VectorXd cb(m_);
    for (Eigen::Index p = 0; p < m_; ++p) cb[p] = cost_[head_[static_cast<std::size_t>(p)]];
    return cb;
  }

  void compute_primal() {
    Eigen::VectorXd xn = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (Eigen::Index j = 0; j < n_ + m_; ++j) {
      if (status_[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
      x_[j] = nonbasic_value(j);
      if (j < n_) {
        xn[j] = x_[j];
      } else {
        rhs[j - n_] += x_[j];
      }
    }
    rhs.noalias() -= A_ * xn;
    const Eigen::VectorXd xb = binv_times(rhs);
    for (Eigen::Index p = 0; p < m_; ++p) x_[head_[static_cast<std::size_t>(p)]] = xb[p];
  }

  void compute_duals() {
    const Eigen::VectorXd y = dual_y();
    const Eigen::VectorXd aty = A_.transpose() * y;
    for (Eigen::Index j = 0; j < n_; ++j) d_[j] = cost_[j] - aty[j];
    for (Eigen::Index i = 0; i < m_; ++i) d_[n_ + i] = y[i];
    for (Eigen::Index p = 0; p < m_; ++p) d_[head_[static_cast<std::size_t>(p)]] = 0.0;
  }

  // Moves nonbasic variables to the bound their reduced cost asks for.
  void restore_dual_feasibility() {
    for (Eigen::Index j = 0; j < n_ + m_; ++j) {
      auto& s = status_[static_cast<std::size_t>(j)];
      if (s == VarStatus::Basic) continue;
      if (s == VarStatus::AtLower && d_[j] < -opt_.dual_tol) s = VarStatus::AtUpper;
      else if (s == VarStatus::AtUpper && d_[j] > opt_.dual_tol) s = VarStatus::AtLower;
    }
  }

  void recompute() {
    compute_duals();
    restore_dual_feasibility();
    compute_primal();
  }

  bool refresh() {
    if (!factored_ && !refactor()) return false;
    factored_ = false;
    compute_duals();
    restore_dual_feasibility();
    compute_primal();
    fresh_state_ = true;
    return true;
  }

  double infeasibility(Eigen::Index j) const {
    const double v = x_[j];
    if (v < lower_[j]) {
      const double gap = lower_[j] - v;
      return gap > opt_.primal_tol * (1.0 + std::abs(lower_[j])) ? gap : 0.0;
    }
    if (v > upper_[j]) {
      const double gap = v - upper_[j];
      return gap > opt_.primal_tol * (1.0 + std::abs(upper_[j])) ? gap : 0.0;
    }
    return 0.0;
  }

  Eigen::Index choose_leaving() const {
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index p = 0; p < m_; ++p) {
      const double inf = infeasibility(head_[static_cast<std::size_t>(p)]);
      if (inf <= 0.0) continue;
      // Scale by the row norm of B^-1 (cheap dual steepest-edge proxy).
      const double score = inf * inf / std::max(1e-12, binv_row_norm2(p));
      if (score > best_score) {
        best_score = score;
        best = p;
      }
    }
    return best;
  }

  int pivot(Eigen::Index r) {
    const Eigen::Index leave = head_[static_cast<std::size_t>(r)];
    const bool to_lower = x_[leave] < lower_[leave];
    const double bound = to_lower ? lower_[leave] : upper_[leave];
    const double delta = x_[leave] - bound;
    const double sgn = delta > 0.0 ? 1.0 : -1.0;
    const Eigen::VectorXd rho = binv_row(r);
    const Eigen::VectorXd alpha_struct = A_.transpose() * rho;
    auto alpha_of = [&](Eigen::Index j) { return j < n_ ? alpha_struct[j] : -rho[j - n_]; };

    double row_scale = 1.0;
    for (Eigen::Index j = 0; j < n_ + m_; ++j) {
      if (status_[static_cast<std::size_t>(j)] != VarStatus::Basic) row_scale = std::max(row_scale, std::abs(alpha_of(j)));
    }
    const double ptol = opt_.pivot_tol * row_scale;

    // Harris two-pass ratio test.
    double t_max = kInf;
    for (Eigen::Index j = 0; j < n_ + m_; ++j) {
      const auto s = status_[static_cast<std::size_t>(j)];
      if (s == VarStatus::Basic || lower_[j] == upper_[j]) continue;
      const double a = sgn * alpha_of(j);
      if (s == VarStatus::AtLower && a > ptol) t_max = std::min(t_max, (d_[j] + opt_.dual_tol) / a);
      else if (s == VarStatus::AtUpper && a < -ptol) t_max = std::min(t_max, (d_[j] - opt_.dual_tol) / a);
    }
    if (t_max == kInf) return kDualUnbounded;
    Eigen::Index q = -1;
    double best = 0.0;
    for (Eigen::Index j = 0; j < n_ + m_; ++j) {
      const auto s = status_[static_cast<std::size_t>(j)];
      if (s == VarStatus::Basic || lower_[j] == upper_[j]) continue;
      const double a = sgn * alpha_of(j);
      const bool eligible = (s == VarStatus::AtLower && a > ptol) || (s == VarStatus::AtUpper && a < -ptol);
      if (!eligible || d_[j] / a > t_max) continue;
      if (std::abs(a) > best) {
        best = std::abs(a);
        q = j;
      }
    }
    if (q < 0) return kDualUnbounded;
    const double alpha_rq = alpha_of(q);
    const double t = std::max(0.0, d_[q] / (sgn * alpha_rq));
    const double theta = sgn * t;

    Eigen::VectorXd w;
    if (q < n_) {
      w = binv_times(A_.col(q));
    } else {
      // slack q - n_ is nonbasic, so its row is in S
      w = -D_.col(col_of_[static_cast<std::size_t>(q - n_)]).head(m_);
    }
    if (std::abs(w[r] - alpha_rq) > 1e-7 * (1.0 + std::abs(alpha_rq))) return kUnstable;

    const double step = delta / alpha_rq;
    for (Eigen::Index p = 0; p < m_; ++p) x_[head_[static_cast<std::size_t>(p)]] -= step * w[p];
    x_[q] += step;
    x_[leave] = bound;

    for (Eigen::Index j = 0; j < n_ + m_; ++j) {
      if (status_[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
      d_[j] -= theta * alpha_of(j);
    }
    d_[leave] = -theta;
    d_[q] = 0.0;

    status_[static_cast<std::size_t>(leave)] = to_lower ? VarStatus::AtLower : VarStatus::AtUpper;
    status_[static_cast<std::size_t>(q)] = VarStatus::Basic;
    head_[static_cast<std::size_t>(r)] = q;
    pos_[static_cast<std::size_t>(leave)] = -1;
    pos_[static_cast<std::size_t>(q)] = r;

    auto dk = D_.leftCols(k_);
    const Eigen::RowVectorXd pr = dk.row(r) / alpha_rq;
    dk.noalias() -= w * pr;
    dk.row(r) = pr;
    if (q >= n_) drop_dense_column(q - n_);
    if (leave >= n_) {
      const Eigen::Index i = leave - n_;
      D_.col(k_) = w / alpha_rq;
      D_(r, k_) = -1.0 / alpha_rq;
      col_of_[static_cast<std::size_t>(i)] = k_;
      s_row_.push_back(i);
      ++k_;
    }
    return kOk;
  }

  void drop_dense_column(Eigen::Index row) {
    const Eigen::Index c = col_of_[static_cast<std::size_t>(row)];
    const Eigen::Index last = k_ - 1;
    if (c != last) {
      D_.col(c) = D_.col(last);
      const Eigen::Index moved = s_row_[static_cast<std::size_t>(last)];
      s_row_[static_cast<std::size_t>(c)] = moved;
      col_of_[static_cast<std::size_t>(moved)] = c;
    }
    s_row_.pop_back();
    col_of_[static_cast<std::size_t>(row)] = -1;
    --k_;
  }

  LpOptions opt_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  Eigen::MatrixXd A_;
  Eigen::VectorXd lower_, upper_, cost_;
  std::vector<VarStatus> status_;
  std::vector<Eigen::Index> head_;
  Eigen::VectorXd x_, d_;
  Eigen::MatrixXd D_;                  // dense columns of B^-1, one per row in S
  Eigen::Index k_ = 0;
  std::vector<Eigen::Index> s_row_;    // column -> row
  std::vector<Eigen::Index> col_of_;   // row -> column or -1
  std::vector<Eigen::Index> pos_;      // variable -> basis position or -1
  int since_refactor_ = 0;
  bool factored_ = false;              // refactor() already ran for the current basis
  bool bounds_conflict_ = false;
  bool fresh_state_ = false;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options, const LpBasis* warm) {
  DualSimplex simplex(lp, options);
  return simplex.run(warm);
}

}  // namespace wccopf
