#include "wccopf/wind_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wccopf {

WindFleet::WindFleet(std::vector<WindPlant> plants, Eigen::MatrixXd correlation)
    : plants_(std::move(plants)), correlation_(std::move(correlation)) {
  const auto n = static_cast<Eigen::Index>(plants_.size());
  if (correlation_.rows() != n || correlation_.cols() != n) {
    throw ValidationError("correlation matrix does not match the number of plants");
  }
  rebuild();
}

WindFleet WindFleet::from_config(const WindFleetConfig& cfg, const Network& net) {
  std::vector<WindPlant> plants;
  plants.reserve(cfg.plants.size());
  for (const auto& spec : cfg.plants) {
    WindPlant p;
    p.bus = spec.bus;
    p.bus_index = net.bus_index(spec.bus);
    p.mean_mw = spec.mean_mw;
    p.std_mw = spec.std_mw;
    p.policy = spec.policy;
    p.cap_mw = spec.cap_mw;
    plants.push_back(p);
  }
  return WindFleet(std::move(plants), cfg.correlation);
}

void WindFleet::rebuild() {
  reserve_.clear();
  capped_.clear();
  Eigen::VectorXd sd(static_cast<Eigen::Index>(plants_.size()));
  for (std::size_t j = 0; j < plants_.size(); ++j) {
    const auto& p = plants_[j];
    if (!(p.std_mw >= 0.0)) throw ValidationError("wind standard deviation must be non-negative");
    if (p.policy == WindPolicy::Reserve) reserve_.push_back(j);
    if (p.policy == WindPolicy::Cap) {
      if (std::isnan(p.cap_mw)) throw ValidationError("cap threshold is NaN");
      capped_.push_back(j);
    }
    sd(static_cast<Eigen::Index>(j)) = p.std_mw;
  }
  covariance_ = sd.asDiagonal() * correlation_ * sd.asDiagonal();
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  if (plants_.empty()) {
    factor_.resize(0, 0);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_);
  const double scale = std::max(1.0, covariance_.diagonal().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) throw ValidationError("wind covariance is not PSD");
  factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

double WindFleet::total_mean() const {
  return std::accumulate(plants_.begin(), plants_.end(), 0.0,
                         [](double acc, const WindPlant& p) { return acc + p.mean_mw; });
}

bool WindFleet::deterministic() const {
  for (const auto& p : plants_) {
    if (p.std_mw > 0.0) return false;
  }
  return true;
}

WindFleet WindFleet::with_cap(std::size_t plant, double cap_mw) const {
  WindFleet out = *this;
  out.plants_.at(plant).policy = WindPolicy::Cap;
  out.plants_.at(plant).cap_mw = cap_mw;
  out.rebuild();
  return out;
}

WindFleet WindFleet::with_policy(std::size_t plant, WindPolicy policy) const {
  WindFleet out = *this;
  out.plants_.at(plant).policy = policy;
  out.rebuild();
  return out;
}

WindFleet WindFleet::with_scaled_output(double factor) const {
  WindFleet out = *this;
  for (auto& p : out.plants_) {
    p.mean_mw *= factor;
    p.std_mw *= factor;
  }
  out.rebuild();
  return out;
}

WindFleet scale_penetration(const WindFleet& fleet, const Network& net, double percent) {
  if (!(percent > 0.0)) throw ValidationError("penetration must be positive");
  const double total = fleet.total_mean();
  if (!(total > 0.0)) throw ValidationError("total wind forecast is zero");
  return fleet.with_scaled_output(net.total_load() / total * percent / 100.0);
}

DecisionLayout::DecisionLayout(const Network& net, const WindFleet& fleet)
    : n_gen_(net.generators.size()), n_wind_(fleet.size()), wind_slot_(fleet.size(), npos) {
  for (std::size_t i = 0; i < n_gen_; ++i) {
    responders_.push_back({Responder::Kind::Generator, i, net.bus_index(net.generators[i].bus)});
  }
  for (std::size_t j : fleet.reserve_plants()) {
    wind_slot_[j] = responders_.size();
    responders_.push_back({Responder::Kind::Wind, j, fleet.plant(j).bus_index});
  }
}

Eigen::VectorXd Decision::flatten(const DecisionLayout& layout) const {
  check(layout);
  Eigen::VectorXd x(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t i = 0; i < p.size(); ++i) x[layout.p(i)] = p[i];
  for (std::size_t j = 0; j < v.size(); ++j) x[layout.v(j)] = v[j];
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    x[layout.alpha(k)] = alpha[k];
    x[layout.r_up(k)] = r_up[k];
    x[layout.r_down(k)] = r_down[k];
  }
  return x;
}

Decision Decision::unflatten(const DecisionLayout& layout, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != layout.size()) throw std::invalid_argument("decision vector size mismatch");
  Decision d;
  for (std::size_t i = 0; i < layout.generators(); ++i) d.p.push_back(x[layout.p(i)]);
  for (std::size_t j = 0; j < layout.plants(); ++j) d.v.push_back(x[layout.v(j)]);
  for (std::size_t k = 0; k < layout.responders(); ++k) {
    d.alpha.push_back(x[layout.alpha(k)]);
    d.r_up.push_back(x[layout.r_up(k)]);
    d.r_down.push_back(x[layout.r_down(k)]);
  }
  return d;
}

void Decision::check(const DecisionLayout& layout) const {
  if (p.size() != layout.generators() || v.size() != layout.plants() || alpha.size() != layout.responders() ||
      r_up.size() != layout.responders() || r_down.size() != layout.responders()) {
    throw std::invalid_argument("decision dimensions do not match the network and fleet");
  }
  auto finite = [](const std::vector<double>& xs) {
    for (double x : xs) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(p) || !finite(v) || !finite(alpha) || !finite(r_up) || !finite(r_down)) {
    throw std::invalid_argument("decision has non-finite entries");
  }
}

double total_deviation(const WindFleet& fleet, const Eigen::Ref<const Eigen::VectorXd>& omega) {
  if (static_cast<std::size_t>(omega.size()) != fleet.size()) throw std::invalid_argument("omega size mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < fleet.size(); ++j) total += fleet.plant(j).controlled_deviation(omega[j]);
  return total;
}

Eigen::VectorXd controlled_output(const WindFleet& fleet, const DecisionLayout& layout, const Decision& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& omega) {
  const double omega_tilde = total_deviation(fleet, omega);
  Eigen::VectorXd out(static_cast<Eigen::Index>(fleet.size()));
  for (std::size_t j = 0; j < fleet.size(); ++j) {
    const auto& plant = fleet.plant(j);
    switch (plant.policy) {
      case WindPolicy::Reserve:
        out[j] = x.v[j] - x.alpha[layout.wind_responder(j)] * omega_tilde + omega[j];
        break;
      case WindPolicy::Cap:
        out[j] = x.v[j] + std::min(omega[j], plant.cap_mw);
        break;
      case WindPolicy::MeanOnly:
        out[j] = x.v[j] + omega[j];
        break;
    }
  }
  return out;
}

Eigen::VectorXd responder_output(const DecisionLayout& layout, const Decision& x, double omega_tilde) {
  const double sum = std::accumulate(x.alpha.begin(), x.alpha.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("participation factors sum to " + std::to_string(sum) + ", expected 1");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(layout.generators()));
  for (std::size_t i = 0; i < layout.generators(); ++i) out[i] = x.p[i] - x.alpha[i] * omega_tilde;
  return out;
}

Eigen::VectorXd bus_injection(const Network& net, const WindFleet& fleet, const DecisionLayout& layout,
                              const Decision& x, const Eigen::Ref<const Eigen::VectorXd>& omega) {
  const auto m = static_cast<Eigen::Index>(net.bus_count());
  Eigen::VectorXd inj = -Eigen::Map<const Eigen::VectorXd>(net.load_mw.data(), m);
  const Eigen::VectorXd wind = controlled_output(fleet, layout, x, omega);
  const Eigen::VectorXd gen = responder_output(layout, x, total_deviation(fleet, omega));
  for (std::size_t i = 0; i < layout.generators(); ++i) inj[layout.responder_list()[i].bus_index] += gen[i];
  for (std::size_t j = 0; j < fleet.size(); ++j) inj[fleet.plant(j).bus_index] += wind[j];
  return inj;
}

}  // namespace wccopf
