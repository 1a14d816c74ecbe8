#include "wccopf/stochastics.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wccopf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
// Standard normal mass beyond this many deviations is below 1e-19.
constexpr double kTruncation = 9.0;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// E[V; V > a, Z > b] for standard bivariate normal (V, Z) with correlation rho.
double tallis(double a, double b, double rho) {
  const double r = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  double out = 0.0;
  if (std::isfinite(a)) out += std_normal_pdf(a) * (std::isfinite(b) ? std_normal_sf((b - rho * a) / r) : (b < 0 ? 1.0 : 0.0));
  if (std::isfinite(b)) out += rho * std_normal_pdf(b) * (std::isfinite(a) ? std_normal_sf((a - rho * b) / r) : (a < 0 ? 1.0 : 0.0));
  return out;
}

}  // namespace

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }
double std_normal_sf(double z) { return 0.5 * std::erfc(z * std::numbers::sqrt2 / 2.0); }

double std_normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bivariate_normal_upper(double h, double k, double r) {
  // Drezner-Wesolowsky / Genz BVNU.
  if (h == kInf || k == kInf) return 0.0;
  if (h == -kInf) return k == -kInf ? 1.0 : std_normal_sf(k);
  if (k == -kInf) return std_normal_sf(h);
  if (r >= 1.0) return std_normal_sf(std::max(h, k));
  if (r <= -1.0) return std::max(0.0, std_normal_sf(h) - std_normal_cdf(-k));
  if (r == 0.0) return std_normal_sf(h) * std_normal_sf(k);

  static constexpr std::array<double, 3> w6 = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
  static constexpr std::array<double, 3> x6 = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
  static constexpr std::array<double, 6> w12 = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                                0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
  static constexpr std::array<double, 6> x12 = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                                0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
  static constexpr std::array<double, 10> w20 = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                                                 0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                                                 0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                                                 0.1527533871307259};
  static constexpr std::array<double, 10> x20 = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                                 0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                                 0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                                 0.07652652113349733};
  const double* w = nullptr;
  const double* x = nullptr;
  std::size_t lg = 0;
  const double ar = std::abs(r);
  if (ar < 0.3) {
    w = w6.data(); x = x6.data(); lg = 3;
  } else if (ar < 0.75) {
    w = w12.data(); x = x12.data(); lg = 6;
  } else {
    w = w20.data(); x = x20.data(); lg = 10;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (ar < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (std::size_t i = 0; i < lg; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sign * x[i]));
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / kTwoPi + std_normal_sf(h) * std_normal_sf(k);
    return std::clamp(bvn, 0.0, 1.0);
  }

  double kk = k;
  if (r < 0.0) {
    kk = -k;
    hk = -hk;
  }
  const double as = 1.0 - r * r;
  double a = std::sqrt(as);
  const double bs = (h - kk) * (h - kk);
  const double c = (4.0 - hk) / 8.0;
  const double d = (12.0 - hk) / 80.0;
  double asr = -0.5 * (bs / as + hk);
  if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
  if (hk > -100.0) {
    const double b = std::sqrt(bs);
    const double sp = std::sqrt(kTwoPi) * std_normal_cdf(-b / a);
    bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
  }
  a *= 0.5;
  double sum = 0.0;
  for (std::size_t i = 0; i < lg; ++i) {
    for (double sign : {-1.0, 1.0}) {
      const double xs = std::pow(a * (1.0 + sign * x[i]), 2);
      const double asr_i = -0.5 * (bs / xs + hk);
      if (asr_i <= -100.0) continue;
      const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
      const double rs = std::sqrt(1.0 - xs);
      const double ep = std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
      sum += w[i] * std::exp(asr_i) * (sp - ep);
    }
  }
  bvn = (a * sum - bvn) / kTwoPi;
  if (r > 0.0) {
    bvn += std_normal_sf(std::max(h, kk));
  } else if (h >= kk) {
    bvn = -bvn;
  } else {
    const double span = h < 0.0 ? std_normal_cdf(kk) - std_normal_cdf(h) : std_normal_sf(h) - std_normal_sf(kk);
    bvn = span - bvn;
  }
  return std::clamp(bvn, 0.0, 1.0);
}

double expected_positive_part(GaussianScalar g) {
  if (g.std < 0.0) throw std::domain_error("negative standard deviation");
  if (g.std == 0.0) return std::max(g.mean, 0.0);
  const double z = g.mean / g.std;
  // written as mean + s*(phi - z*sf) above zero so the result never rounds below the mean
  if (z > 0.0) return g.mean + g.std * std::max(std_normal_pdf(z) - z * std_normal_sf(z), 0.0);
  return g.mean * std_normal_cdf(z) + g.std * std_normal_pdf(z);
}

EppPartials expected_positive_part_partials(GaussianScalar g) {
  if (!(g.std > 0.0)) throw std::domain_error("expected_positive_part gradient needs a positive standard deviation");
  const double z = g.mean / g.std;
  return {std_normal_cdf(z), std_normal_pdf(z)};
}

Eigen::VectorXd expected_positive_part_gradient(GaussianScalar g, const Eigen::Ref<const Eigen::VectorXd>& dmean_dx,
                                                const Eigen::Ref<const Eigen::VectorXd>& dstd_dx) {
  if (dmean_dx.size() != dstd_dx.size()) throw std::invalid_argument("gradient size mismatch");
  const EppPartials d = expected_positive_part_partials(g);
  return d.d_mean * dmean_dx + d.d_std * dstd_dx;
}

BandExpectation band_expected_positive_part(double mean, double loading, double noise, double lo, double hi) {
  BandExpectation out;
  if (!(lo < hi)) return out;
  const double tau = std::hypot(loading, noise);
  if (tau == 0.0 || noise <= 1e-12 * tau) {
    // y = mean + loading * Z on the band; integrate the positive piece directly.
    double l = lo;
    double u = hi;
    if (loading > 0.0) {
      l = std::max(lo, -mean / loading);
    } else if (loading < 0.0) {
      u = std::min(hi, -mean / loading);
    } else if (mean <= 0.0) {
      return out;
    }
    if (!(l < u)) return out;
    const double mass = std_normal_cdf(u) - std_normal_cdf(l);
    const double first = (std::isfinite(l) ? std_normal_pdf(l) : 0.0) - (std::isfinite(u) ? std_normal_pdf(u) : 0.0);
    out.value = mean * mass + loading * first;
    out.d_mean = mass;
    out.d_loading = first;
    return out;
  }

  const double rho = loading / tau;
  const double k = mean / tau;
  const double a = -k;
  const double prob = bivariate_normal_upper(a, lo, rho) - bivariate_normal_upper(a, hi, rho);
  const double first_v = tallis(a, lo, rho) - tallis(a, hi, rho);
  out.value = mean * prob + tau * first_v;
  out.d_mean = prob;
  out.d_loading = tallis(lo, a, rho) - tallis(hi, a, rho);
  // E[E; y > 0, Z in band] with E the independent noise coordinate.
  const double z0 = -mean * loading / (tau * tau);
  const double spread = tau / noise;
  const double upper = std::isfinite(hi) ? std_normal_cdf((hi - z0) * spread) : 1.0;
  const double lower = std::isfinite(lo) ? std_normal_cdf((lo - z0) * spread) : 0.0;
  out.d_noise = std_normal_pdf(k) * (noise / tau) * (upper - lower);
  out.value = std::max(out.value, 0.0);
  return out;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("quadrature order must be positive");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = -z;
    nodes[static_cast<std::size_t>(n - 1 - i)] = z;
    const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    weights[static_cast<std::size_t>(i)] = wt;
    weights[static_cast<std::size_t>(n - 1 - i)] = wt;
  }
}

// ---------------------------------------------------------------------------
// Piecewise-affine overloads

std::size_t PiecewiseAffineOverload::region_of(const Eigen::Ref<const Eigen::VectorXd>& omega) const {
  std::size_t b = 0;
  for (std::size_t k = 0; k < cap_plants.size(); ++k) {
    if (omega[static_cast<Eigen::Index>(cap_plants[k])] > caps[k]) b |= std::size_t{1} << k;
  }
  return b;
}

double PiecewiseAffineOverload::value_at(const Eigen::Ref<const Eigen::VectorXd>& omega) const {
  const auto& r = regions[region_of(omega)];
  return r.constant + r.coef.dot(omega);
}

void PiecewiseAffineOverload::check_continuity(double tolerance) const {
  const std::size_t K = cap_plants.size();
  if (caps.size() != K || regions.size() != (std::size_t{1} << K)) {
    throw std::invalid_argument("piecewise overload needs 2^K regions");
  }
  for (std::size_t b = 0; b < regions.size(); ++b) {
    for (std::size_t k = 0; k < K; ++k) {
      if ((b >> k) & 1U) continue;
      if (!std::isfinite(caps[k])) continue;
      const auto& lower = regions[b];
      const auto& upper = regions[b | (std::size_t{1} << k)];
      const auto idx = static_cast<Eigen::Index>(cap_plants[k]);
      double scale = 1.0 + std::abs(lower.constant) + std::abs(upper.constant);
      for (Eigen::Index j = 0; j < lower.coef.size(); ++j) {
        if (j == idx) continue;
        if (std::abs(lower.coef[j] - upper.coef[j]) > tolerance * (1.0 + std::abs(lower.coef[j]))) {
          throw std::invalid_argument("piecewise overload regions disagree on a shared boundary");
        }
      }
      const double at_lower = lower.constant + lower.coef[idx] * caps[k];
      const double at_upper = upper.constant + upper.coef[idx] * caps[k];
      scale += std::abs(lower.coef[idx] * caps[k]) + std::abs(upper.coef[idx] * caps[k]);
      if (std::abs(at_lower - at_upper) > tolerance * scale) {
        throw std::invalid_argument("piecewise overload regions disagree on a shared boundary");
      }
    }
  }
}

PiecewiseAffineOverload PiecewiseAffineOverload::from_capped(const CappedAffineOverload& y,
                                                             const std::vector<std::size_t>& cap_plants,
                                                             const std::vector<double>& caps) {
  if (cap_plants.size() != caps.size()) throw std::invalid_argument("cap list size mismatch");
  PiecewiseAffineOverload o;
  o.cap_plants = cap_plants;
  o.caps = caps;
  const std::size_t K = cap_plants.size();
  o.regions.resize(std::size_t{1} << K);
  for (std::size_t b = 0; b < o.regions.size(); ++b) {
    AffineRegion r{y.offset, y.coef};
    bool empty = false;
    for (std::size_t k = 0; k < K; ++k) {
      const auto idx = static_cast<Eigen::Index>(cap_plants[k]);
      const double a = y.coef[idx];
      const double cap = caps[k];
      const bool above = (b >> k) & 1U;
      if ((above && cap == kInf) || (!above && cap == -kInf)) {
        empty = true;
        continue;
      }
      if (above) {
        r.coef[idx] = 0.0;
        r.constant += a * std::max(cap, 0.0);
      } else {
        r.constant -= a * std::min(cap, 0.0);
      }
    }
    if (empty) {
      r.constant = 0.0;
      r.coef.setZero();
    }
    o.regions[b] = std::move(r);
  }
  return o;
}

PiecewiseAffineOverload PiecewiseAffineOverload::affine(double constant, Eigen::VectorXd coef) {
  PiecewiseAffineOverload o;
  o.regions.push_back({constant, std::move(coef)});
  return o;
}

// ---------------------------------------------------------------------------
// Capped integrator

CappedGaussianIntegrator::CappedGaussianIntegrator(const Eigen::MatrixXd& covariance,
                                                   std::vector<std::size_t> cap_plants, std::vector<double> caps,
                                                   IntegrationOptions options)
    : dim_(static_cast<std::size_t>(covariance.rows())), options_(options) {
  if (cap_plants.size() != caps.size()) throw std::invalid_argument("cap list size mismatch");
  if (cap_plants.size() > options_.max_caps) {
    throw std::invalid_argument("too many capped plants (" + std::to_string(cap_plants.size()) + " > " +
                                std::to_string(options_.max_caps) + ")");
  }
  // A capped plant without variance never crosses its cap; it is handled as
  // a zero-variance free coordinate.
  for (std::size_t k = 0; k < cap_plants.size(); ++k) {
    const auto idx = static_cast<Eigen::Index>(cap_plants[k]);
    if (cap_plants[k] >= dim_) throw std::invalid_argument("cap plant index out of range");
    if (covariance(idx, idx) > 0.0) {
      cap_plants_.push_back(cap_plants[k]);
      caps_.push_back(caps[k]);
    }
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    if (std::find(cap_plants_.begin(), cap_plants_.end(), j) == cap_plants_.end()) free_plants_.push_back(j);
  }
  const auto K = static_cast<Eigen::Index>(cap_plants_.size());
  const auto U = static_cast<Eigen::Index>(free_plants_.size());
  Eigen::MatrixXd s_cc(K, K), s_uc(U, K), s_uu(U, U);
  for (Eigen::Index a = 0; a < K; ++a) {
    for (Eigen::Index b = 0; b < K; ++b) s_cc(a, b) = covariance(cap_plants_[a], cap_plants_[b]);
    for (Eigen::Index u = 0; u < U; ++u) s_uc(u, a) = covariance(free_plants_[u], cap_plants_[a]);
  }
  for (Eigen::Index u = 0; u < U; ++u) {
    for (Eigen::Index v = 0; v < U; ++v) s_uu(u, v) = covariance(free_plants_[u], free_plants_[v]);
  }
  if (K > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(s_cc);
    if (llt.info() != Eigen::Success ||
        llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-9 * std::sqrt(s_cc.diagonal().maxCoeff())) {
      throw std::invalid_argument("covariance of the capped plants is singular");
    }
    chol_caps_ = llt.matrixL();
    regression_ = llt.solve(s_uc.transpose()).transpose();
    conditional_ = s_uu - regression_ * s_uc.transpose();
    conditional_ = 0.5 * (conditional_ + conditional_.transpose()).eval();
  } else {
    regression_.resize(U, 0);
    conditional_ = s_uu;
  }

  if (uses_quadrature()) {
    gauss_legendre(options_.quadrature_nodes, gl_nodes_, gl_weights_);
  } else {
    const std::size_t n = options_.qmc_points;
    boost::random::sobol sobol(static_cast<std::size_t>(K));
    const CounterRng shift_rng(options_.qmc_seed);
    std::vector<double> shift(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) shift[static_cast<std::size_t>(k)] = shift_rng.uniform(0, static_cast<std::uint64_t>(k));
    qmc_points_.resize(K, static_cast<Eigen::Index>(n));
    Eigen::VectorXd z(K);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double raw = static_cast<double>(sobol() >> 11) * 0x1.0p-53;
        double u = raw + shift[static_cast<std::size_t>(k)];
        u -= std::floor(u);
        u = std::clamp(u, 0x1.0p-60, 1.0 - 0x1.0p-53);
        z[k] = std_normal_quantile(u);
      }
      qmc_points_.col(static_cast<Eigen::Index>(i)) = chol_caps_ * z;
    }
  }
}

double CappedGaussianIntegrator::region_lower(std::size_t k, std::size_t region) const {
  return ((region >> k) & 1U) ? caps_[k] : -kInf;
}

double CappedGaussianIntegrator::region_upper(std::size_t k, std::size_t region) const {
  return ((region >> k) & 1U) ? kInf : caps_[k];
}

CappedGaussianIntegrator::RegionTerm CappedGaussianIntegrator::integrate_region(std::size_t region, double constant,
                                                                                const Eigen::VectorXd& gamma,
                                                                                double noise) const {
  const std::size_t K = cap_plants_.size();
  RegionTerm out;
  out.d_gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  if (K == 0) {
    if (noise > 0.0) {
      out.value = expected_positive_part({constant, noise});
      const auto d = expected_positive_part_partials({constant, noise});
      out.d_const = d.d_mean;
      out.d_noise = d.d_std;
    } else {
      out.value = std::max(constant, 0.0);
      out.d_const = constant > 0.0 ? 1.0 : 0.0;
    }
    return out;
  }
  if (K == 1) {
    const double l11 = chol_caps_(0, 0);
    const auto term = band_expected_positive_part(constant, gamma[0] * l11, noise, region_lower(0, region) / l11,
                                                  region_upper(0, region) / l11);
    out.value = term.value;
    out.d_const = term.d_mean;
    out.d_gamma[0] = term.d_loading * l11;
    out.d_noise = term.d_noise;
    return out;
  }
  // K == 2: Gauss-Legendre over the first whitened coordinate, closed form
  // over the second.
  const double l11 = chol_caps_(0, 0);
  const double l21 = chol_caps_(1, 0);
  const double l22 = chol_caps_(1, 1);
  const double lo1 = std::max(region_lower(0, region) / l11, -kTruncation);
  const double hi1 = std::min(region_upper(0, region) / l11, kTruncation);
  if (!(lo1 < hi1)) return out;
  const double lo2 = region_lower(1, region);
  const double hi2 = region_upper(1, region);
  const double slope = gamma[0] * l11 + gamma[1] * l21;
  const double loading = gamma[1] * l22;
  if (!std::isfinite(lo2) && !std::isfinite(hi2)) {
    // second coordinate unrestricted: it folds into the noise exactly
    const double tau = std::hypot(loading, noise);
    const auto term = band_expected_positive_part(constant, slope, tau, region_lower(0, region) / l11,
                                                  region_upper(0, region) / l11);
    out.value = term.value;
    out.d_const = term.d_mean;
    out.d_gamma[0] = term.d_loading * l11;
    out.d_gamma[1] = term.d_loading * l21;
    if (tau > 0.0) {
      // d tau / d loading = loading / tau, d tau / d noise = noise / tau
      out.d_gamma[1] += term.d_noise * loading / tau * l22;
      out.d_noise = term.d_noise * noise / tau;
    }
    return out;
  }
  // The integrand is smooth in z1 except near points where the zero line of
  // y crosses a band edge, or y's z1 trend crosses zero; there it is a kink
  // smoothed over a width set by the remaining spread. Split at each such
  // point and grade the pieces down to that width.
  std::vector<double> cuts = {lo1, hi1};
  auto add_cut = [&](double num, double den, double spread) {
    if (den == 0.0) return;
    const double z = -num / den;
    const double w = spread / std::abs(den);
    // wide transitions are already resolved by one rule
    const bool grade = w > 0.0 && w < 0.25;
    for (double k : {0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0, 64.0, -64.0}) {
      const double c = z + k * w;
      if (c > lo1 && c < hi1 && (k == 0.0 || grade)) cuts.push_back(c);
    }
  };
  add_cut(constant, slope, std::hypot(loading, noise));
  if (std::isfinite(lo2)) add_cut(constant + loading * lo2 / l22, slope - loading * l21 / l22, noise);
  if (std::isfinite(hi2)) add_cut(constant + loading * hi2 / l22, slope - loading * l21 / l22, noise);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
    const double half = 0.5 * (cuts[piece + 1] - cuts[piece]);
    const double mid = 0.5 * (cuts[piece + 1] + cuts[piece]);
    if (!(half > 0.0)) continue;
    for (std::size_t i = 0; i < gl_nodes_.size(); ++i) {
      const double z1 = mid + half * gl_nodes_[i];
      const double w = half * gl_weights_[i] * std_normal_pdf(z1);
      const double mean = constant + slope * z1;
      const double blo = std::isfinite(lo2) ? (lo2 - l21 * z1) / l22 : -kInf;
      const double bhi = std::isfinite(hi2) ? (hi2 - l21 * z1) / l22 : kInf;
      const auto term = band_expected_positive_part(mean, loading, noise, blo, bhi);
      out.value += w * term.value;
      out.d_const += w * term.d_mean;
      out.d_gamma[0] += w * term.d_mean * l11 * z1;
      out.d_gamma[1] += w * (term.d_mean * l21 * z1 + term.d_loading * l22);
      out.d_noise += w * term.d_noise;
    }
  }
  return out;
}

CappedGaussianIntegrator::Result CappedGaussianIntegrator::evaluate(const CappedAffineOverload& y) const {
  if (static_cast<std::size_t>(y.coef.size()) != dim_) throw std::invalid_argument("overload coefficient size mismatch");
  const std::size_t K = cap_plants_.size();
  const auto U = static_cast<Eigen::Index>(free_plants_.size());
  Eigen::VectorXd a_u(U);
  for (Eigen::Index u = 0; u < U; ++u) a_u[u] = y.coef[static_cast<Eigen::Index>(free_plants_[u])];
  const Eigen::VectorXd s_a = conditional_ * a_u;
  const double noise = std::sqrt(std::max(0.0, a_u.dot(s_a)));
  const Eigen::VectorXd t = regression_.transpose() * a_u;

  Result res;
  res.d_coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  Eigen::VectorXd d_t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  double d_noise = 0.0;

  if (uses_quadrature()) {
    for (std::size_t region = 0; region < (std::size_t{1} << K); ++region) {
      bool empty = false;
      double constant = y.offset;
      Eigen::VectorXd gamma = t;
      std::vector<double> kappa(K, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const double cap = caps_[k];
        const double a = y.coef[static_cast<Eigen::Index>(cap_plants_[k])];
        if ((region >> k) & 1U) {
          if (cap == kInf) empty = true;
          kappa[k] = std::max(cap, 0.0);
        } else {
          if (cap == -kInf) empty = true;
          kappa[k] = -std::min(cap, 0.0);
          gamma[static_cast<Eigen::Index>(k)] += a;
        }
      }
      if (empty) continue;
      for (std::size_t k = 0; k < K; ++k) constant += y.coef[static_cast<Eigen::Index>(cap_plants_[k])] * kappa[k];
      const RegionTerm term = integrate_region(region, constant, gamma, noise);
      res.value += term.value;
      res.d_offset += term.d_const;
      for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const auto idx = static_cast<Eigen::Index>(cap_plants_[k]);
        res.d_coef[idx] += term.d_const * kappa[k];
        if (!((region >> k) & 1U)) res.d_coef[idx] += term.d_gamma[kk];
        d_t[kk] += term.d_gamma[kk];
      }
      d_noise += term.d_noise;
    }
  } else {
    const auto n = qmc_points_.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double mean = y.offset;
      for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const double omega = qmc_points_(kk, i);
        const double capped = std::min(omega, caps_[k]) - std::min(0.0, caps_[k]);
        mean += t[kk] * omega + y.coef[static_cast<Eigen::Index>(cap_plants_[k])] * capped;
      }
      double phi_cdf = 0.0;
      double phi_pdf = 0.0;
      if (noise > 0.0) {
        const double z = mean / noise;
        phi_cdf = std_normal_cdf(z);
        phi_pdf = std_normal_pdf(z);
        res.value += inv_n * (mean * phi_cdf + noise * phi_pdf);
      } else {
        phi_cdf = mean > 0.0 ? 1.0 : 0.0;
        res.value += inv_n * std::max(mean, 0.0);
      }
      res.d_offset += inv_n * phi_cdf;
      for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const double omega = qmc_points_(kk, i);
        const double capped = std::min(omega, caps_[k]) - std::min(0.0, caps_[k]);
        res.d_coef[static_cast<Eigen::Index>(cap_plants_[k])] += inv_n * phi_cdf * capped;
        d_t[kk] += inv_n * phi_cdf * omega;
      }
      d_noise += inv_n * phi_pdf;
    }
  }

  Eigen::VectorXd d_au = regression_ * d_t;
  if (noise > 0.0) d_au += (d_noise / noise) * s_a;
  for (Eigen::Index u = 0; u < U; ++u) res.d_coef[static_cast<Eigen::Index>(free_plants_[u])] += d_au[u];
  return res;
}

double CappedGaussianIntegrator::value(const PiecewiseAffineOverload& o) const {
  const std::size_t k_all = o.cap_plants.size();
  if (o.regions.size() != (std::size_t{1} << k_all)) throw std::invalid_argument("piecewise overload needs 2^K regions");
  o.check_continuity();
  // Bit position of each active cap in the overload's region index; frozen
  // (zero-variance) caps contribute a fixed bit.
  std::vector<std::size_t> position(cap_plants_.size());
  std::size_t frozen_bits = 0;
  for (std::size_t k = 0; k < k_all; ++k) {
    const auto it = std::find(cap_plants_.begin(), cap_plants_.end(), o.cap_plants[k]);
    if (it == cap_plants_.end()) {
      if (0.0 > o.caps[k]) frozen_bits |= std::size_t{1} << k;
    } else {
      const auto a = static_cast<std::size_t>(it - cap_plants_.begin());
      position[a] = k;
    }
  }
  for (std::size_t a = 0; a < cap_plants_.size(); ++a) {
    if (o.cap_plants[position[a]] != cap_plants_[a] || o.caps[position[a]] != caps_[a]) {
      throw std::invalid_argument("overload caps do not match integrator");
    }
  }

  const std::size_t K = cap_plants_.size();
  const auto U = static_cast<Eigen::Index>(free_plants_.size());
  auto full_index = [&](std::size_t active) {
    std::size_t b = frozen_bits;
    for (std::size_t a = 0; a < K; ++a) {
      if ((active >> a) & 1U) b |= std::size_t{1} << position[a];
    }
    return b;
  };
  struct Form {
    double constant;
    Eigen::VectorXd gamma;
    double noise;
  };
  std::vector<Form> forms;
  for (std::size_t active = 0; active < (std::size_t{1} << K); ++active) {
    const auto& r = o.regions[full_index(active)];
    if (static_cast<std::size_t>(r.coef.size()) != dim_) throw std::invalid_argument("region coefficient size mismatch");
    Eigen::VectorXd a_u(U);
    for (Eigen::Index u = 0; u < U; ++u) a_u[u] = r.coef[static_cast<Eigen::Index>(free_plants_[u])];
    Eigen::VectorXd gamma = regression_.transpose() * a_u;
    for (std::size_t a = 0; a < K; ++a) gamma[static_cast<Eigen::Index>(a)] += r.coef[static_cast<Eigen::Index>(cap_plants_[a])];
    forms.push_back({r.constant, gamma, std::sqrt(std::max(0.0, a_u.dot(conditional_ * a_u)))});
  }

  double total = 0.0;
  if (uses_quadrature()) {
    for (std::size_t active = 0; active < forms.size(); ++active) {
      bool empty = false;
      for (std::size_t a = 0; a < K; ++a) {
        if (!(region_lower(a, active) < region_upper(a, active))) empty = true;
      }
      if (empty) continue;
      total += integrate_region(active, forms[active].constant, forms[active].gamma, forms[active].noise).value;
    }
    return total;
  }
  const auto n = qmc_points_.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t active = 0;
    for (std::size_t a = 0; a < K; ++a) {
      if (qmc_points_(static_cast<Eigen::Index>(a), i) > caps_[a]) active |= std::size_t{1} << a;
    }
    const Form& f = forms[active];
    const double mean = f.constant + f.gamma.dot(qmc_points_.col(i));
    total += expected_positive_part({mean, f.noise});
  }
  return total / static_cast<double>(n);
}

double capped_wcc_value(const PiecewiseAffineOverload& o, const Eigen::MatrixXd& covariance,
                        const IntegrationOptions& options) {
  if (o.cap_plants.empty()) throw std::invalid_argument("capped_wcc_value needs at least one capped plant");
  CappedGaussianIntegrator integrator(covariance, o.cap_plants, o.caps, options);
  return integrator.value(o);
}

// ---------------------------------------------------------------------------
// Sampling

std::uint64_t CounterRng::bits(std::uint64_t index, std::uint64_t lane) const {
  return splitmix(seed_ ^ splitmix(index ^ splitmix(lane + 0x632BE59BD9B4E019ULL)));
}

double CounterRng::uniform(std::uint64_t index, std::uint64_t lane) const {
  return (static_cast<double>(bits(index, lane) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index, std::uint64_t lane) const {
  return std_normal_quantile(uniform(index, lane));
}

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
  if (cov.size() == 0) return cov;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("covariance must be symmetric");
  }
  // LLT can "succeed" on a numerically singular matrix with pivots at rounding
  // level; those directions would carry sqrt(eps) noise, so go through eig.
  const double dmax = cov.diagonal().cwiseAbs().maxCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    const Eigen::MatrixXd l = llt.matrixL();
    if (l.diagonal().cwiseAbs2().minCoeff() > 1e-10 * dmax) return l;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double scale = std::max(1.0, dmax);
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) throw std::invalid_argument("covariance is not PSD");
  const double lmax = eig.eigenvalues().maxCoeff();
  Eigen::VectorXd lam = eig.eigenvalues();
  for (auto& v : lam) v = v > 1e-13 * static_cast<double>(cov.rows()) * lmax ? std::sqrt(v) : 0.0;
  return eig.eigenvectors() * lam.asDiagonal();
}

Eigen::MatrixXd sample_mvn(const Eigen::MatrixXd& cov, std::size_t n, std::uint64_t seed) {
  const Eigen::MatrixXd factor = covariance_factor(cov);
  const auto d = factor.rows();
  const CounterRng rng(seed);
  Eigen::MatrixXd z(d, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) z(k, static_cast<Eigen::Index>(i)) = rng.normal(i, static_cast<std::uint64_t>(k));
  }
  return factor * z;
}

McEstimate mc_expected_overload(const PiecewiseAffineOverload& o, const Eigen::MatrixXd& cov, std::size_t n_samples,
                                std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("need at least two samples");
  const Eigen::MatrixXd factor = covariance_factor(cov);
  const auto d = factor.rows();
  const CounterRng rng(seed);
  Eigen::VectorXd z(d), omega(d);
  // Welford accumulation in sample order.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) z[k] = rng.normal(i, static_cast<std::uint64_t>(k));
    omega.noalias() = factor * z;
    const double y = std::max(o.value_at(omega), 0.0);
    const double delta = y - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (y - mean);
  }
  const double var = m2 / static_cast<double>(n_samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_samples))};
}

}  // namespace wccopf
