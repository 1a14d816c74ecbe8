#include "wccopf/wcc.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace wccopf {
namespace {

constexpr std::array<std::string_view, kWccFamilyCount> kFamilyNames = {
    "gen-up-reserve",   "gen-down-reserve", "wind-up-reserve", "wind-down-reserve",
    "wind-reserve-availability", "line-upper", "line-lower",
};

// Below this std the overload is treated as deterministic.
constexpr double kDegenerateStd = 1e-9;

Eigen::VectorXd unit(std::size_t n, std::size_t i, double value = 1.0) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  e[static_cast<Eigen::Index>(i)] = value;
  return e;
}

}  // namespace

std::string_view to_string(WccFamily f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

WccFamily wcc_family_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (kFamilyNames[i] == name) return static_cast<WccFamily>(i);
  }
  throw std::invalid_argument("unknown constraint family '" + std::string(name) + "'");
}

const std::vector<WccFamily>& all_wcc_families() {
  static const std::vector<WccFamily> families = {
      WccFamily::GenUpReserve,  WccFamily::GenDownReserve,          WccFamily::WindUpReserve,
      WccFamily::WindDownReserve, WccFamily::WindReserveAvailability, WccFamily::LineUpper,
      WccFamily::LineLower,
  };
  return families;
}

double EpsilonConfig::lookup(WccFamily f, std::size_t id) const {
  const std::string family(to_string(f));
  if (auto it = per_item.find(family + ":" + std::to_string(id)); it != per_item.end()) return it->second;
  if (auto it = per_family.find(family); it != per_family.end()) return it->second;
  return default_mw;
}

std::string WccConstraint::label() const { return std::string(to_string(family)) + ":" + std::to_string(id); }

Eigen::VectorXd WccConstraint::coefficients(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return plant_coef.array() + shared_grad.dot(x);
}

std::vector<WccConstraint> build_constraints(const Network& net, const WindFleet& fleet, const PtdfMatrix& ptdf,
                                             const DecisionLayout& layout, const EpsilonConfig& eps) {
  for (const auto& [key, value] : eps.per_family) {
    (void)wcc_family_from_string(key);
    if (!(value > 0.0)) throw ValidationError("risk limit for " + key + " must be positive");
  }
  for (const auto& [key, value] : eps.per_item) {
    const auto colon = key.rfind(':');
    if (colon == std::string::npos) throw ValidationError("risk limit key '" + key + "' must be family:id");
    (void)wcc_family_from_string(key.substr(0, colon));
    if (!(value > 0.0)) throw ValidationError("risk limit for " + key + " must be positive");
  }
  if (!(eps.default_mw > 0.0)) throw ValidationError("risk limit must be positive");
  if (ptdf.line_count() != static_cast<Eigen::Index>(net.lines.size()) ||
      ptdf.bus_count() != static_cast<Eigen::Index>(net.bus_count())) {
    throw std::invalid_argument("PTDF does not match the network");
  }

  const std::size_t n = layout.size();
  const auto n_wind = static_cast<Eigen::Index>(fleet.size());
  const bool has_caps = !fleet.capped_plants().empty();
  std::vector<WccConstraint> out;

  auto make = [&](WccFamily family, std::size_t id) {
    WccConstraint c;
    c.family = family;
    c.id = id;
    c.eps = eps.lookup(family, id);
    c.base_grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    c.plant_coef = Eigen::VectorXd::Zero(n_wind);
    c.shared_grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    return c;
  };

  const auto& responders = layout.responder_list();
  for (int direction = 0; direction < 2; ++direction) {
    for (std::size_t k = 0; k < responders.size(); ++k) {
      const bool gen = responders[k].kind == Responder::Kind::Generator;
      const WccFamily family = direction == 0 ? (gen ? WccFamily::GenUpReserve : WccFamily::WindUpReserve)
                                              : (gen ? WccFamily::GenDownReserve : WccFamily::WindDownReserve);
      WccConstraint c = make(family, responders[k].device);
      if (direction == 0) {
        // y = -alpha_k * Omega - r_up_k
        c.base_grad = unit(n, layout.r_up(k), -1.0);
        c.shared_grad = unit(n, layout.alpha(k), -1.0);
      } else {
        // y = alpha_k * Omega - r_down_k
        c.base_grad = unit(n, layout.r_down(k), -1.0);
        c.shared_grad = unit(n, layout.alpha(k), 1.0);
      }
      c.uses_caps = has_caps;
      out.push_back(std::move(c));
    }
  }

  for (std::size_t j : fleet.reserve_plants()) {
    // y = r_down - v_j - w_j
    WccConstraint c = make(WccFamily::WindReserveAvailability, j);
    const std::size_t k = layout.wind_responder(j);
    c.base_grad[static_cast<Eigen::Index>(layout.r_down(k))] = 1.0;
    c.base_grad[static_cast<Eigen::Index>(layout.v(j))] = -1.0;
    c.plant_coef[static_cast<Eigen::Index>(j)] = -1.0;
    out.push_back(std::move(c));
  }

  const Eigen::VectorXd load = Eigen::Map<const Eigen::VectorXd>(net.load_mw.data(), static_cast<Eigen::Index>(net.bus_count()));
  std::vector<WccConstraint> upper, lower;
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const Line& line = net.lines[l];
    if (!line.limited()) continue;
    const auto row = ptdf.M.row(static_cast<Eigen::Index>(l));
    WccConstraint c = make(WccFamily::LineUpper, l);
    double nominal = -row.dot(load);
    for (std::size_t i = 0; i < layout.generators(); ++i) {
      c.base_grad[static_cast<Eigen::Index>(layout.p(i))] = row[static_cast<Eigen::Index>(responders[i].bus_index)];
    }
    for (std::size_t j = 0; j < fleet.size(); ++j) {
      const auto& plant = fleet.plant(j);
      const double m = row[static_cast<Eigen::Index>(plant.bus_index)];
      c.base_grad[static_cast<Eigen::Index>(layout.v(j))] = m;
      c.plant_coef[static_cast<Eigen::Index>(j)] = m;
      nominal += m * plant.nominal_cap_offset();
    }
    for (std::size_t k = 0; k < responders.size(); ++k) {
      c.shared_grad[static_cast<Eigen::Index>(layout.alpha(k))] = -row[static_cast<Eigen::Index>(responders[k].bus_index)];
    }
    c.uses_caps = has_caps;
    c.base_const = nominal - line.limit_mw;

    WccConstraint d = c;
    d.family = WccFamily::LineLower;
    d.eps = eps.lookup(WccFamily::LineLower, l);
    d.base_const = -line.limit_mw - nominal;
    d.base_grad = -c.base_grad;
    d.plant_coef = -c.plant_coef;
    d.shared_grad = -c.shared_grad;
    upper.push_back(std::move(c));
    lower.push_back(std::move(d));
  }
  for (auto& c : upper) out.push_back(std::move(c));
  for (auto& c : lower) out.push_back(std::move(c));
  return out;
}

WccModel::WccModel(const Network& net, const WindFleet& fleet, const PtdfMatrix& ptdf, const DecisionLayout& layout,
                   const EpsilonConfig& eps, IntegrationOptions options)
    : layout_(layout), constraints_(build_constraints(net, fleet, ptdf, layout, eps)), covariance_(fleet.covariance()) {
  for (std::size_t j : fleet.capped_plants()) {
    cap_plants_.push_back(j);
    caps_.push_back(fleet.plant(j).cap_mw);
  }
  if (!cap_plants_.empty()) {
    integrator_ = std::make_shared<const CappedGaussianIntegrator>(covariance_, cap_plants_, caps_, options);
  }
}

GaussianScalar WccModel::gaussian_overload(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd a = c.coefficients(x);
  return {c.offset(x), std::sqrt(std::max(0.0, a.dot(covariance_ * a)))};
}

PiecewiseAffineOverload WccModel::piecewise_overload(const WccConstraint& c,
                                                     const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const CappedAffineOverload y{c.offset(x), c.coefficients(x)};
  if (!c.uses_caps) return PiecewiseAffineOverload::affine(y.offset, y.coef);
  return PiecewiseAffineOverload::from_capped(y, cap_plants_, caps_);
}

double WccModel::evaluate(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != layout_.size()) throw std::invalid_argument("decision vector size mismatch");
  if (c.uses_caps && integrator_) return integrator_->evaluate({c.offset(x), c.coefficients(x)}).value;
  return expected_positive_part(gaussian_overload(c, x));
}

WccEvaluation WccModel::evaluate_with_gradient(const WccConstraint& c, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != layout_.size()) throw std::invalid_argument("decision vector size mismatch");
  WccEvaluation out;
  const double offset = c.offset(x);
  const Eigen::VectorXd a = c.coefficients(x);
  if (c.uses_caps && integrator_) {
    const auto r = integrator_->evaluate({offset, a});
    out.value = r.value;
    out.gradient = r.d_offset * c.base_grad + r.d_coef.sum() * c.shared_grad;
    return out;
  }
  const Eigen::VectorXd sa = covariance_ * a;
  const double std = std::sqrt(std::max(0.0, a.dot(sa)));
  if (std < kDegenerateStd) {
    // Deterministic overload; 1{y > 0} * dy/dx is a valid subgradient.
    out.value = std::max(offset, 0.0);
    out.gradient = offset > 0.0 ? c.base_grad : Eigen::VectorXd::Zero(c.base_grad.size());
    return out;
  }
  const GaussianScalar g{offset, std};
  const auto d = expected_positive_part_partials(g);
  out.value = expected_positive_part(g);
  out.gradient = d.d_mean * c.base_grad + (d.d_std * sa.sum() / std) * c.shared_grad;
  return out;
}

}  // namespace wccopf
