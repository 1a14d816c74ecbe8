#pragma once

// Stochastic wind fleet, the decision vector layout, and the controlled
// device outputs under the AGC / reserve / output-cap policies.

#include "wccopf/case_io.hpp"

#include <Eigen/Dense>

#include <vector>

namespace wccopf {

struct WindPlant {
  int bus = 0;
  std::size_t bus_index = 0;
  double mean_mw = 0.0;
  double std_mw = 0.0;
  WindPolicy policy = WindPolicy::Reserve;
  double cap_mw = std::numeric_limits<double>::infinity();

  bool capped() const { return policy == WindPolicy::Cap; }
  /// min(0, cap): output offset of a capped plant at the forecast point.
  double nominal_cap_offset() const { return capped() ? std::min(0.0, cap_mw) : 0.0; }
  /// Deviation delivered by the plant relative to the omega = 0 realization.
  double controlled_deviation(double omega) const {
    return capped() ? std::min(omega, cap_mw) - std::min(0.0, cap_mw) : omega;
  }
};

class WindFleet {
 public:
  WindFleet() = default;
  WindFleet(std::vector<WindPlant> plants, Eigen::MatrixXd correlation);

  static WindFleet from_config(const WindFleetConfig& cfg, const Network& net);

  std::size_t size() const { return plants_.size(); }
  const std::vector<WindPlant>& plants() const { return plants_; }
  const WindPlant& plant(std::size_t j) const { return plants_[j]; }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  /// Sigma = D rho D with D = diag(std).
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  /// Factor with covariance() = factor() * factor()^T.
  const Eigen::MatrixXd& factor() const { return factor_; }

  const std::vector<std::size_t>& reserve_plants() const { return reserve_; }
  const std::vector<std::size_t>& capped_plants() const { return capped_; }
  double total_mean() const;
  bool deterministic() const;

  /// Copy with the given plant set to a fixed cap (removes it from R).
  WindFleet with_cap(std::size_t plant, double cap_mw) const;
  WindFleet with_policy(std::size_t plant, WindPolicy policy) const;
  WindFleet with_scaled_output(double factor) const;

 private:
  void rebuild();

  std::vector<WindPlant> plants_;
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;
  std::vector<std::size_t> reserve_;
  std::vector<std::size_t> capped_;
};

/// Scales forecast means and deviations so that forecasted wind equals
/// `percent` of total system load.
WindFleet scale_penetration(const WindFleet& fleet, const Network& net, double percent);

/// AGC responder: a conventional generator or a reserve-capable wind plant.
struct Responder {
  enum class Kind { Generator, Wind };
  Kind kind = Kind::Generator;
  std::size_t device = 0;  // generator index or plant index
  std::size_t bus_index = 0;
};

/// Position of each decision block in the flat optimization vector
/// x = (p, v, alpha, r_up, r_down); alpha and reserves are per responder.
class DecisionLayout {
 public:
  DecisionLayout() = default;
  DecisionLayout(const Network& net, const WindFleet& fleet);

  std::size_t generators() const { return n_gen_; }
  std::size_t plants() const { return n_wind_; }
  std::size_t responders() const { return responders_.size(); }
  std::size_t size() const { return n_gen_ + n_wind_ + 3 * responders_.size(); }

  std::size_t p(std::size_t i) const { return i; }
  std::size_t v(std::size_t j) const { return n_gen_ + j; }
  std::size_t alpha(std::size_t k) const { return n_gen_ + n_wind_ + k; }
  std::size_t r_up(std::size_t k) const { return n_gen_ + n_wind_ + responders_.size() + k; }
  std::size_t r_down(std::size_t k) const { return n_gen_ + n_wind_ + 2 * responders_.size() + k; }

  const std::vector<Responder>& responder_list() const { return responders_; }
  /// Responder slot of plant j, or npos when the plant does not respond.
  std::size_t wind_responder(std::size_t j) const { return wind_slot_[j]; }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t n_gen_ = 0;
  std::size_t n_wind_ = 0;
  std::vector<Responder> responders_;
  std::vector<std::size_t> wind_slot_;
};

struct Decision {
  std::vector<double> p;
  std::vector<double> v;
  std::vector<double> alpha;
  std::vector<double> r_up;
  std::vector<double> r_down;

  Eigen::VectorXd flatten(const DecisionLayout& layout) const;
  static Decision unflatten(const DecisionLayout& layout, const Eigen::Ref<const Eigen::VectorXd>& x);
  /// Throws std::invalid_argument on dimension mismatch or non-finite entries.
  void check(const DecisionLayout& layout) const;
};

/// Omega-tilde: total controlled deviation relative to the omega = 0 point.
double total_deviation(const WindFleet& fleet, const Eigen::Ref<const Eigen::VectorXd>& omega);

/// Delivered wind output per plant for fluctuation `omega`.
Eigen::VectorXd controlled_output(const WindFleet& fleet, const DecisionLayout& layout, const Decision& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& omega);

/// Conventional generator outputs p_i - alpha_i * omega_tilde.
Eigen::VectorXd responder_output(const DecisionLayout& layout, const Decision& x, double omega_tilde);

/// Per-bus net injection (generation + wind - load) for fluctuation `omega`.
Eigen::VectorXd bus_injection(const Network& net, const WindFleet& fleet, const DecisionLayout& layout,
                              const Decision& x, const Eigen::Ref<const Eigen::VectorXd>& omega);

}  // namespace wccopf
