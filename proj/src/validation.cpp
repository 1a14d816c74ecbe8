#include "wccopf/validation.hpp"

#include "wccopf/stochastics.hpp"

#include <cmath>
#include <stdexcept>

namespace wccopf {
namespace {

// Streaming mean / M2 merged batch by batch (Chan et al.).
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double positive = 0.0;

  void merge(double bn, double bmean, double bm2, double bpos) {
    if (bn == 0.0) return;
    const double total = n + bn;
    const double delta = bmean - mean;
    mean += delta * bn / total;
    m2 += bm2 + delta * delta * n * bn / total;
    n = total;
    positive += bpos;
  }
  double std_error() const { return n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0; }
};

void merge_row(Moments& acc, const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  const auto b = static_cast<double>(y.size());
  if (b == 0.0) return;
  const double mean = y.mean();
  const double m2 = (y.array() - mean).square().sum();
  const double pos = static_cast<double>((y.array() > 0.0).count());
  acc.merge(b, mean, m2, pos);
}

}  // namespace

ValidationReport validate_dispatch(const Problem& prob, const Decision& x, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("validation needs at least two samples");
  x.check(prob.layout);
  const auto& fleet = prob.fleet;
  const auto& layout = prob.layout;
  const auto& constraints = prob.model->constraints();
  const auto n_wind = static_cast<Eigen::Index>(fleet.size());
  const auto n_bus = static_cast<Eigen::Index>(prob.net.bus_count());
  const auto n_gen = static_cast<Eigen::Index>(layout.generators());
  const Eigen::MatrixXd factor = n_wind > 0 ? covariance_factor(fleet.covariance()) : Eigen::MatrixXd();
  const CounterRng rng(seed);

  std::vector<Moments> acc(constraints.size());
  std::vector<Moments> wasted(fleet.size());
  Moments total;

  constexpr std::size_t kBatch = 4096;
  Eigen::MatrixXd z(n_wind, static_cast<Eigen::Index>(kBatch));
  Eigen::MatrixXd inj(n_bus, static_cast<Eigen::Index>(kBatch));
  Eigen::MatrixXd wind_out(n_wind, static_cast<Eigen::Index>(kBatch));
  Eigen::MatrixXd gen_out(n_gen, static_cast<Eigen::Index>(kBatch));
  Eigen::RowVectorXd y(static_cast<Eigen::Index>(kBatch));

  for (std::size_t start = 0; start < n_samples; start += kBatch) {
    const auto b = static_cast<Eigen::Index>(std::min(kBatch, n_samples - start));
    for (Eigen::Index s = 0; s < b; ++s) {
      for (Eigen::Index k = 0; k < n_wind; ++k) z(k, s) = rng.normal(start + static_cast<std::size_t>(s), static_cast<std::uint64_t>(k));
    }
    const Eigen::MatrixXd omega = n_wind > 0 ? Eigen::MatrixXd(factor * z.leftCols(b)) : Eigen::MatrixXd(0, b);
    for (Eigen::Index s = 0; s < b; ++s) {
      const auto w = omega.col(s);
      const double omega_tilde = total_deviation(fleet, w);
      wind_out.col(s) = controlled_output(fleet, layout, x, w);
      gen_out.col(s) = responder_output(layout, x, omega_tilde);
      inj.col(s) = bus_injection(prob.net, fleet, layout, x, w);
    }
    const Eigen::MatrixXd flows = prob.ptdf.M * inj.leftCols(b);

    for (std::size_t c = 0; c < constraints.size(); ++c) {
      const auto& con = constraints[c];
      auto yb = y.head(b);
      switch (con.family) {
        case WccFamily::GenUpReserve:
        case WccFamily::GenDownReserve: {
          const auto i = static_cast<Eigen::Index>(con.id);
          const auto deployed = (gen_out.row(i).head(b).array() - x.p[con.id]).matrix();
          if (con.family == WccFamily::GenUpReserve) {
            yb = (deployed.array() - x.r_up[con.id]).matrix();
          } else {
            yb = (-deployed.array() - x.r_down[con.id]).matrix();
          }
          break;
        }
        case WccFamily::WindUpReserve:
        case WccFamily::WindDownReserve: {
          const auto j = static_cast<Eigen::Index>(con.id);
          const std::size_t k = layout.wind_responder(con.id);
          const Eigen::RowVectorXd deployed = wind_out.row(j).head(b).array() - x.v[con.id] - omega.row(j).array();
          if (con.family == WccFamily::WindUpReserve) {
            yb = (deployed.array() - x.r_up[k]).matrix();
          } else {
            yb = (-deployed.array() - x.r_down[k]).matrix();
          }
          break;
        }
        case WccFamily::WindReserveAvailability: {
          const auto j = static_cast<Eigen::Index>(con.id);
          const std::size_t k = layout.wind_responder(con.id);
          yb = (x.r_down[k] - x.v[con.id] - omega.row(j).array()).matrix();
          break;
        }
        case WccFamily::LineUpper:
        case WccFamily::LineLower: {
          const auto l = static_cast<Eigen::Index>(con.id);
          const double limit = prob.net.lines[con.id].limit_mw;
          if (con.family == WccFamily::LineUpper) {
            yb = (flows.row(l).array() - limit).matrix();
          } else {
            yb = (-limit - flows.row(l).array()).matrix();
          }
          break;
        }
      }
      const double pos = static_cast<double>((yb.array() > 0.0).count());
      const Eigen::RowVectorXd over = yb.array().max(0.0);
      const double mean = over.mean();
      acc[c].merge(static_cast<double>(b), mean, (over.array() - mean).square().sum(), pos);
    }

    Eigen::RowVectorXd curtailed = Eigen::RowVectorXd::Zero(b);
    for (std::size_t j = 0; j < fleet.size(); ++j) {
      if (!fleet.plant(j).capped()) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      const Eigen::RowVectorXd waste = (x.v[j] + omega.row(jj).array()) - wind_out.row(jj).head(b).array();
      merge_row(wasted[j], waste);
      curtailed += waste;
    }
    merge_row(total, curtailed);
  }

  ValidationReport rep;
  rep.samples = n_samples;
  rep.seed = seed;
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    const auto& con = constraints[c];
    ConstraintCheck chk;
    chk.family = con.family;
    chk.id = con.id;
    chk.eps = con.eps;
    chk.expected_overload = acc[c].mean;
    chk.std_error = acc[c].std_error();
    chk.violation_probability = acc[c].positive / acc[c].n;
    chk.passes = chk.expected_overload <= chk.eps + 3.0 * chk.std_error;
    if (!chk.passes) ++rep.failures;
    rep.constraints.push_back(chk);
  }
  for (std::size_t j = 0; j < fleet.size(); ++j) {
    const auto& w = fleet.plant(j);
    PlantCurtailment pc;
    pc.bus = w.bus;
    pc.policy = w.policy;
    pc.wasted = wasted[j].mean;
    pc.wasted_std_error = wasted[j].std_error();
    pc.withheld = std::max(0.0, w.mean_mw - x.v[j]);
    rep.total_wasted += pc.wasted;
    rep.total_withheld += pc.withheld;
    rep.plants.push_back(pc);
  }
  rep.total_curtailment = rep.total_wasted + rep.total_withheld;
  rep.total_curtailment_std_error = total.std_error();
  return rep;
}

CappedMoments capped_output_moments(double sigma, double cap) {
  if (!(sigma > 0.0)) throw std::domain_error("capped_output_moments needs a positive standard deviation");
  if (std::isnan(cap) || cap == -std::numeric_limits<double>::infinity()) {
    throw std::domain_error("cap must be a number above -infinity");
  }
  if (cap == std::numeric_limits<double>::infinity()) return {0.0, sigma, 0.0};
  const double t = cap / sigma;
  const double pdf = std_normal_pdf(t);
  const double cdf = std_normal_cdf(t);
  const double sf = std_normal_sf(t);
  CappedMoments m;
  m.mean = -sigma * pdf + cap * sf;
  const double second = sigma * sigma * (cdf - t * pdf) + cap * cap * sf;
  m.std = std::sqrt(std::max(0.0, second - m.mean * m.mean));
  m.curtailment = expected_positive_part({-cap, sigma});
  return m;
}

}  // namespace wccopf
