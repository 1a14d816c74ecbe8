#pragma once

// Weighted chance constraints as overload maps
//   y(x, w) = offset(x) + sum_j coef_j(x) * d_j(w_j)
// with offset affine in x and coef_j(x) = plant_coef_j + shared_grad . x.
// d_j is the controlled deviation of plant j (capped or raw).

#include "wccopf/dc_network.hpp"
#include "wccopf/stochastics.hpp"
#include "wccopf/wind_model.hpp"

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace wccopf {

enum class WccFamily {
  GenUpReserve,
  GenDownReserve,
  WindUpReserve,
  WindDownReserve,
  WindReserveAvailability,
  LineUpper,
  LineLower,
};
inline constexpr std::size_t kWccFamilyCount = 7;

std::string_view to_string(WccFamily f);
WccFamily wcc_family_from_string(std::string_view name);
const std::vector<WccFamily>& all_wcc_families();

/// Risk limits: one default, optional per-family values and per-item values
/// keyed "family:id" (id = generator, plant or line position, 0-based).
struct EpsilonConfig {
  double default_mw = 0.1;
  std::map<std::string, double> per_family;
  std::map<std::string, double> per_item;

  double lookup(WccFamily f, std::size_t id) const;
};

struct WccConstraint {
  WccFamily family = WccFamily::LineUpper;
  std::size_t id = 0;  // generator, plant or line position
  double eps = 0.1;
  double base_const = 0.0;
  Eigen::VectorXd base_grad;    // d offset / dx
  Eigen::VectorXd plant_coef;   // per plant
  Eigen::VectorXd shared_grad;  // d coef_j / dx, same for every plant
  bool uses_caps = false;

  std::string label() const;
  double offset(const Eigen::Ref<const Eigen::VectorXd>& x) const { return base_const + base_grad.dot(x); }
  Eigen::VectorXd coefficients(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

std::vector<WccConstraint> build_constraints(const Network& net, const WindFleet& fleet, const PtdfMatrix& ptdf,
                                             const DecisionLayout& layout, const EpsilonConfig& eps);

struct WccEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;  // over the flat decision vector
};

/// Evaluation context: constraint list plus the fleet law.
class WccModel {
 public:
  WccModel(const Network& net, const WindFleet& fleet, const PtdfMatrix& ptdf, const DecisionLayout& layout,
           const EpsilonConfig& eps, IntegrationOptions options = {});

  const std::vector<WccConstraint>& constraints() const { return constraints_; }
  std::size_t size() const { return constraints_.size(); }
  const Eigen::MatrixXd& covariance() const { return covariance_; }

  /// Expected overload E[max(y(x, w), 0)] in MW.
  double evaluate(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double evaluate(const WccConstraint& c, const Decision& d) const { return evaluate(c, d.flatten(layout_)); }
  /// Value and (sub)gradient.
  WccEvaluation evaluate_with_gradient(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return evaluate_with_gradient(c, x).gradient;
  }

  /// Mean and std of y when it is Gaussian (no capped plant enters).
  GaussianScalar gaussian_overload(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// The region-explicit form of y at x, in raw w coordinates.
  PiecewiseAffineOverload piecewise_overload(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  DecisionLayout layout_;
  std::vector<WccConstraint> constraints_;
  Eigen::MatrixXd covariance_;
  std::vector<std::size_t> cap_plants_;
  std::vector<double> caps_;
  std::shared_ptr<const CappedGaussianIntegrator> integrator_;
};

}  // namespace wccopf
