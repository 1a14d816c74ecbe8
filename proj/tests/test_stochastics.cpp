#include "wccopf/stochastics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace wccopf;

namespace {

long double phi_ld(long double z) { return std::exp(-0.5L * z * z) / std::sqrt(2.0L * std::numbers::pi_v<long double>); }
long double cdf_ld(long double z) { return 0.5L * std::erfc(-z / std::sqrt(2.0L)); }

// Plackett: dP/dr = phi2(h, k; r), integrated from r = 0 by Simpson.
double bvn_oracle(double h, double k, double r) {
  const int n = 4000;
  auto f = [&](double rho) {
    const double s = 1.0 - rho * rho;
    return std::exp(-(h * h - 2 * rho * h * k + k * k) / (2 * s)) / (2 * std::numbers::pi * std::sqrt(s));
  };
  double acc = f(0) + f(r);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(r * i / n);
  return static_cast<double>((1 - cdf_ld(h)) * (1 - cdf_ld(k))) + acc * r / (3.0 * n);
}

// E[(m + l Z + n E)^+ ; lo < Z < hi] by Simpson over z.
double band_oracle(double m, double l, double noise, double lo, double hi) {
  lo = std::max(lo, -12.0);
  hi = std::min(hi, 12.0);
  if (!(lo < hi)) return 0.0;
  const int n = 20000;
  auto f = [&](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi) * expected_positive_part({m + l * z, noise}); };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + (hi - lo) * i / n);
  return acc * (hi - lo) / (3.0 * n);
}

Eigen::MatrixXd random_cov(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  Eigen::MatrixXd s = a * a.transpose() / d + 0.2 * Eigen::MatrixXd::Identity(d, d);
  std::uniform_real_distribution<double> u(3.0, 30.0);
  Eigen::VectorXd scale(d);
  for (auto& v : scale) v = u(rng) / std::sqrt(2.0);
  return scale.asDiagonal() * s * scale.asDiagonal();
}

}  // namespace

TEST(Normal, ReferenceValues) {
  EXPECT_DOUBLE_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_pdf(0.0), 0.3989422804014327, 1e-16);
  EXPECT_NEAR(std_normal_cdf(1.959964), 0.975, 1e-6);
  EXPECT_NEAR(std_normal_quantile(0.975), 1.959963984540054, 1e-12);
}

TEST(Normal, AbsoluteErrorOverRange) {
  for (double z = -8.0; z <= 8.0; z += 0.01) {
    EXPECT_NEAR(std_normal_cdf(z), static_cast<double>(cdf_ld(z)), 1e-12) << z;
    EXPECT_NEAR(std_normal_pdf(z), static_cast<double>(phi_ld(z)), 1e-12) << z;
    const double sf = static_cast<double>(1.0L - cdf_ld(z));
    EXPECT_NEAR(std_normal_sf(z), sf, 1e-12) << z;
  }
  // upper tail keeps relative accuracy
  EXPECT_NEAR(std_normal_sf(10.0) / 7.619853024160527e-24, 1.0, 1e-10);
}

TEST(Normal, QuantileInverts) {
  for (double p : {1e-15, 1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-10}) {
    EXPECT_NEAR(std_normal_cdf(std_normal_quantile(p)), p, 1e-12 * std::max(1.0, p) + 1e-3 * p) << p;
  }
}

TEST(Bivariate, AgainstPlackettIntegral) {
  const double cases[][3] = {{0, 0, 0}, {0, 0, 0.5}, {1, -0.5, 0.3}, {-1.2, 0.7, -0.8}, {2, 2, 0.9}, {-2, -1, 0.95},
                             {0.3, 1.7, -0.4}, {1.5, -1.5, -0.99}};
  for (const auto& c : cases) {
    EXPECT_NEAR(bivariate_normal_upper(c[0], c[1], c[2]), bvn_oracle(c[0], c[1], c[2]), 1e-9)
        << c[0] << " " << c[1] << " " << c[2];
  }
  EXPECT_NEAR(bivariate_normal_upper(0, 0, 0.5), 1.0 / 3.0, 1e-12);  // 1/4 + asin(r) / (2 pi)
  EXPECT_DOUBLE_EQ(bivariate_normal_upper(-std::numeric_limits<double>::infinity(), 0.4, 0.3), std_normal_sf(0.4));
}

TEST(ExpectedPositivePart, Examples) {
  EXPECT_NEAR(expected_positive_part({0.0, 1.0}), 0.3989422804014327, 1e-15);
  EXPECT_DOUBLE_EQ(expected_positive_part({5.0, 0.0}), 5.0);
  EXPECT_DOUBLE_EQ(expected_positive_part({-5.0, 0.0}), 0.0);
  EXPECT_NEAR(expected_positive_part({5.0, 1e-12}), 5.0, 1e-12);
  EXPECT_NEAR(expected_positive_part({0.0, 10.0}), 3.989422804014327, 1e-12);
}

TEST(ExpectedPositivePart, MonteCarloOracle) {
  const GaussianScalar g{-1.0, 2.0};
  const auto o = PiecewiseAffineOverload::affine(g.mean, Eigen::VectorXd::Constant(1, 1.0));
  const McEstimate mc = mc_expected_overload(o, Eigen::MatrixXd::Constant(1, 1, g.std * g.std), 10000000, 17);
  EXPECT_LE(std::abs(mc.mean - expected_positive_part(g)), 3.0 * mc.std_error);
}

TEST(ExpectedPositivePart, ShapeProperties) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> m(-20.0, 20.0), s(0.01, 15.0), u(0.0, 1.0);
  for (int t = 0; t < 5000; ++t) {
    const GaussianScalar a{m(rng), s(rng)}, b{m(rng), s(rng)};
    const double va = expected_positive_part(a);
    EXPECT_GE(va, std::max(a.mean, 0.0));
    // rounding-level ties allowed where the curve is flat
    EXPECT_GE(expected_positive_part({a.mean + 0.1, a.std}), va * (1 - 1e-15));
    EXPECT_GE(expected_positive_part({a.mean, a.std + 0.1}), va * (1 - 1e-15));
    const double lam = u(rng);
    const double chord = lam * va + (1 - lam) * expected_positive_part(b);
    EXPECT_LE(expected_positive_part({lam * a.mean + (1 - lam) * b.mean, lam * a.std + (1 - lam) * b.std}),
              chord + 1e-12);
  }
}

TEST(ExpectedPositivePart, PartialsAndGradient) {
  EXPECT_DOUBLE_EQ(expected_positive_part_partials({0.0, 3.0}).d_mean, 0.5);
  const auto far = expected_positive_part_partials({60.0, 1.0});
  EXPECT_NEAR(far.d_mean, 1.0, 1e-15);
  EXPECT_NEAR(far.d_std, 0.0, 1e-15);
  EXPECT_THROW(expected_positive_part_partials({1.0, 0.0}), std::domain_error);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> m(-5.0, 5.0), s(0.2, 5.0);
  const double h = 1e-6;
  for (int t = 0; t < 200; ++t) {
    const GaussianScalar g{m(rng), s(rng)};
    const auto d = expected_positive_part_partials(g);
    const double fm = (expected_positive_part({g.mean + h, g.std}) - expected_positive_part({g.mean - h, g.std})) / (2 * h);
    const double fs = (expected_positive_part({g.mean, g.std + h}) - expected_positive_part({g.mean, g.std - h})) / (2 * h);
    EXPECT_NEAR(d.d_mean, fm, 1e-5 * std::max(1e-3, std::abs(fm)));
    EXPECT_NEAR(d.d_std, fs, 1e-5 * std::max(1e-3, std::abs(fs)));
  }
  Eigen::Vector2d dm(1.0, -2.0), ds(0.5, 0.0);
  const auto d = expected_positive_part_partials({0.3, 1.2});
  EXPECT_TRUE(expected_positive_part_gradient({0.3, 1.2}, dm, ds).isApprox(d.d_mean * dm + d.d_std * ds));
}

TEST(BandExpectation, AgainstSimpson) {
  const double inf = std::numeric_limits<double>::infinity();
  const double cases[][5] = {{0.5, 1.0, 0.7, -0.3, 1.2}, {-2.0, 3.0, 0.5, -inf, 0.4}, {1.0, -2.0, 1.5, 0.2, inf},
                             {-1.0, 0.8, 0.0, -1.0, 2.5},  {0.0, 0.0, 2.0, -0.5, 0.5},  {3.0, 1.0, 0.0, -inf, inf},
                             {-0.4, 2.0, 0.3, -inf, inf}};
  for (const auto& c : cases) {
    const auto b = band_expected_positive_part(c[0], c[1], c[2], c[3], c[4]);
    EXPECT_NEAR(b.value, band_oracle(c[0], c[1], c[2], c[3], c[4]), 1e-9) << c[0] << " " << c[1] << " " << c[2];
    const double h = 1e-6;
    auto at = [&](double dm, double dl, double dn) {
      return band_expected_positive_part(c[0] + dm, c[1] + dl, c[2] + dn, c[3], c[4]).value;
    };
    EXPECT_NEAR(b.d_mean, (at(h, 0, 0) - at(-h, 0, 0)) / (2 * h), 1e-6);
    EXPECT_NEAR(b.d_loading, (at(0, h, 0) - at(0, -h, 0)) / (2 * h), 1e-6);
    if (c[2] > 0) EXPECT_NEAR(b.d_noise, (at(0, 0, h) - at(0, 0, -h)) / (2 * h), 1e-6);
  }
}

TEST(GaussLegendre, ExactForDegree2nMinus1) {
  std::vector<double> x, w;
  gauss_legendre(8, x, w);
  for (int deg = 0; deg <= 15; ++deg) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], deg);
    EXPECT_NEAR(s, deg % 2 ? 0.0 : 2.0 / (deg + 1), 1e-14) << deg;
  }
}

TEST(PiecewiseAffine, RegionsAndContinuity) {
  CappedAffineOverload y{2.0, Eigen::Vector3d(1.0, -0.5, 2.0)};
  const auto o = PiecewiseAffineOverload::from_capped(y, {0, 2}, {1.5, -1.0});
  ASSERT_EQ(o.regions.size(), 4u);
  EXPECT_NO_THROW(o.check_continuity());
  Eigen::Vector3d w(3.0, 0.4, -2.0);
  EXPECT_EQ(o.region_of(w), 1u);  // first cap exceeded, second not
  // direct evaluation of offset + sum coef_j d_j(w_j)
  const double direct = 2.0 + 1.0 * (1.5 - 0.0) - 0.5 * 0.4 + 2.0 * (-2.0 - (-1.0));
  EXPECT_NEAR(o.value_at(w), direct, 1e-14);

  auto broken = o;
  broken.regions[3].constant += 1e-3;
  EXPECT_THROW(broken.check_continuity(), std::invalid_argument);
}

TEST(CappedValue, UncappedLimit) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd cov = random_cov(rng, 3);
  CappedAffineOverload y{-4.0, Eigen::Vector3d(0.6, -0.3, 0.9)};
  const double sigma = std::sqrt(y.coef.dot(cov * y.coef));
  const double plain = expected_positive_part({y.offset, sigma});
  for (std::vector<std::size_t> caps : {std::vector<std::size_t>{1}, std::vector<std::size_t>{0, 2}}) {
    std::vector<double> far(caps.size(), 1e6);
    const double v = capped_wcc_value(PiecewiseAffineOverload::from_capped(y, caps, far), cov);
    EXPECT_NEAR(v, plain, 1e-6 * plain);
    std::vector<double> inf(caps.size(), std::numeric_limits<double>::infinity());
    EXPECT_NEAR(capped_wcc_value(PiecewiseAffineOverload::from_capped(y, caps, inf), cov), plain, 1e-6 * plain);
  }
}

// Two capped plants and nothing else: no conditional noise, so the inner
// closed form has a kink in z1 that the quadrature must split at.
TEST(CappedValue, UncappedLimitWithoutFreeNoise) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::vector<double> open(2, std::numeric_limits<double>::infinity());
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd cov = random_cov(rng, 2);
    CappedAffineOverload y{0.0, Eigen::Vector2d(n(rng), 0.1 * n(rng))};
    const double sigma = std::sqrt(y.coef.dot(cov * y.coef));
    y.offset = sigma * n(rng);
    const double plain = expected_positive_part({y.offset, sigma});
    EXPECT_NEAR(capped_wcc_value(PiecewiseAffineOverload::from_capped(y, {0, 1}, open), cov), plain, 1e-6 * plain)
        << "instance " << t;
    // gradient of E[(c + a^T w)^+]: Phi(z) and phi(z) Sigma a / sigma
    const auto r = CappedGaussianIntegrator(cov, {0, 1}, open).evaluate(y);
    const double z = y.offset / sigma;
    EXPECT_NEAR(r.d_offset, std_normal_cdf(z), 1e-9);
    EXPECT_TRUE(r.d_coef.isApprox(std_normal_pdf(z) * cov * y.coef / sigma, 1e-8)) << "instance " << t;
  }
}

TEST(CappedValue, AlwaysBindingCap) {
  // y = c + a1 min(w1, cap) + a2 w2 with cap 12 sd below the mean: the
  // capped coordinate is frozen at cap.
  Eigen::Matrix2d cov;
  cov << 25.0, 6.0, 6.0, 16.0;
  const double cap = -60.0;
  PiecewiseAffineOverload o;
  o.cap_plants = {0};
  o.caps = {cap};
  o.regions = {{1.0, Eigen::Vector2d(0.5, 1.0)}, {1.0 + 0.5 * cap, Eigen::Vector2d(0.0, 1.0)}};
  const double expected = expected_positive_part({1.0 + 0.5 * cap, 4.0});
  EXPECT_NEAR(capped_wcc_value(o, cov), expected, 1e-9 * expected + 1e-15);
}

TEST(CappedValue, QuadratureAgainstMonteCarlo) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 6; ++t) {
    const int d = 4;
    const Eigen::MatrixXd cov = random_cov(rng, d);
    CappedAffineOverload y;
    y.coef.resize(d);
    for (auto& c : y.coef) c = n(rng);
    const double sigma = std::sqrt(y.coef.dot(cov * y.coef));
    y.offset = sigma * 0.8 * n(rng);
    const std::size_t K = 1 + t % 2;
    std::vector<std::size_t> plants = {1, 3};
    plants.resize(K);
    std::vector<double> caps;
    for (auto j : plants) caps.push_back(std::sqrt(cov(j, j)) * 1.2 * n(rng));
    const auto o = PiecewiseAffineOverload::from_capped(y, plants, caps);
    const double q = capped_wcc_value(o, cov);
    const McEstimate mc = mc_expected_overload(o, cov, 1000000, 100 + t);
    EXPECT_LE(std::abs(q - mc.mean), 4.0 * mc.std_error) << "instance " << t;
  }
}

TEST(CappedValue, HundredRandomInstances) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 5);
  for (int t = 0; t < 100; ++t) {
    const int d = dim(rng);
    const Eigen::MatrixXd cov = random_cov(rng, d);
    CappedAffineOverload y;
    y.coef.resize(d);
    for (auto& c : y.coef) c = n(rng);
    y.offset = 0.8 * std::sqrt(y.coef.dot(cov * y.coef)) * n(rng);
    std::vector<std::size_t> plants = {0, static_cast<std::size_t>(d - 1)};
    plants.resize(1 + t % 2);
    std::vector<double> caps;
    for (auto j : plants) caps.push_back(1.5 * std::sqrt(cov(j, j)) * n(rng));
    const auto o = PiecewiseAffineOverload::from_capped(y, plants, caps);
    const McEstimate mc = mc_expected_overload(o, cov, 200000, 500 + t);
    // 1e-6 MW floor: tails no sample reaches give se = 0
    EXPECT_LE(std::abs(capped_wcc_value(o, cov) - mc.mean), 4.0 * mc.std_error + 1e-6) << "instance " << t;
  }
}

TEST(CappedValue, QmcPathAgainstMonteCarlo) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::MatrixXd cov = random_cov(rng, 5);
  CappedAffineOverload y{2.0, Eigen::VectorXd(5)};
  for (auto& c : y.coef) c = n(rng);
  const std::vector<std::size_t> plants = {0, 1, 3};
  std::vector<double> caps = {0.0, -5.0, 4.0};
  const auto o = PiecewiseAffineOverload::from_capped(y, plants, caps);
  const CappedGaussianIntegrator integ(cov, plants, caps);
  EXPECT_FALSE(integ.uses_quadrature());
  const McEstimate mc = mc_expected_overload(o, cov, 1000000, 5);
  EXPECT_LE(std::abs(integ.value(o) - mc.mean), 4.0 * mc.std_error + 2e-3 * mc.mean);
}

// With d = min(w, cap) - min(0, cap) and positive coefficients, the value
// falls as a negative cap rises towards 0 and rises with a positive cap.
TEST(CappedValue, MonotoneInCapOnEachSide) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd cov = random_cov(rng, 3);
  CappedAffineOverload y{-1.0, Eigen::Vector3d(0.8, 0.4, -0.2)};
  for (std::size_t K : {1u, 2u}) {
    std::vector<std::size_t> plants = {0, 1};
    plants.resize(K);
    auto at = [&](double cap) {
      return capped_wcc_value(PiecewiseAffineOverload::from_capped(y, plants, std::vector<double>(K, cap)), cov);
    };
    for (double cap = -40.0; cap < 0.0; cap += 5.0) EXPECT_GE(at(cap) + 1e-12, at(cap + 5.0)) << "cap " << cap;
    for (double cap = 0.0; cap < 40.0; cap += 5.0) EXPECT_LE(at(cap), at(cap + 5.0) + 1e-12) << "cap " << cap;
  }
}

TEST(CappedIntegrator, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(30);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t K : {1u, 2u}) {
    const Eigen::MatrixXd cov = random_cov(rng, 4);
    std::vector<std::size_t> plants = {2, 0};
    plants.resize(K);
    std::vector<double> caps = {-3.0, 5.0};
    caps.resize(K);
    const CappedGaussianIntegrator integ(cov, plants, caps);
    CappedAffineOverload y{1.5, Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng))};
    const auto r = integ.evaluate(y);
    EXPECT_NEAR(r.value, capped_wcc_value(PiecewiseAffineOverload::from_capped(y, plants, caps), cov), 1e-10);
    const double h = 1e-5;
    auto at = [&](const CappedAffineOverload& z) { return integ.evaluate(z).value; };
    CappedAffineOverload up = y, dn = y;
    up.offset += h;
    dn.offset -= h;
    EXPECT_NEAR(r.d_offset, (at(up) - at(dn)) / (2 * h), 1e-6);
    for (Eigen::Index j = 0; j < 4; ++j) {
      up = y;
      dn = y;
      up.coef[j] += h;
      dn.coef[j] -= h;
      const double fd = (at(up) - at(dn)) / (2 * h);
      EXPECT_NEAR(r.d_coef[j], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "K " << K << " coef " << j;
    }
  }
}

TEST(CappedIntegrator, Errors) {
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  const CappedGaussianIntegrator integ(cov, {0}, {1.0});
  EXPECT_THROW(integ.evaluate({0.0, Eigen::Vector3d::Ones()}), std::invalid_argument);
  Eigen::Matrix2d singular;
  singular << 1.0, 1.0, 1.0, 1.0;
  EXPECT_THROW(CappedGaussianIntegrator(singular, {0, 1}, {0.0, 0.0}), std::invalid_argument);
  IntegrationOptions small;
  small.max_caps = 1;
  EXPECT_THROW(CappedGaussianIntegrator(cov, {0, 1}, {0.0, 0.0}, small), std::invalid_argument);
}

TEST(MonteCarlo, Basics) {
  const Eigen::Matrix2d cov = Eigen::Matrix2d::Identity() * 4.0;
  const auto never = PiecewiseAffineOverload::affine(-1.0, Eigen::Vector2d::Zero());
  const McEstimate zero = mc_expected_overload(never, cov, 1000, 1);
  EXPECT_EQ(zero.mean, 0.0);
  EXPECT_EQ(zero.std_error, 0.0);

  const auto lin = PiecewiseAffineOverload::affine(0.5, Eigen::Vector2d(1.0, -2.0));
  const McEstimate a = mc_expected_overload(lin, cov, 200000, 42);
  const McEstimate b = mc_expected_overload(lin, cov, 200000, 42);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_LE(std::abs(a.mean - expected_positive_part({0.5, std::sqrt(20.0)})), 3.0 * a.std_error);
  EXPECT_NE(mc_expected_overload(lin, cov, 200000, 43).mean, a.mean);
}

TEST(Sampling, IdentityCovariance) {
  const Eigen::MatrixXd w = sample_mvn(Eigen::MatrixXd::Identity(3, 3), 1000000, 7);
  const Eigen::MatrixXd c = w * w.transpose() / static_cast<double>(w.cols());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) EXPECT_LT(std::abs(c(i, j)), 0.01);
  }
}

TEST(Sampling, CorrelatedPair) {
  Eigen::Matrix2d cov;
  cov << 4.0, 0.8 * 2 * 3, 0.8 * 2 * 3, 9.0;
  const Eigen::MatrixXd w = sample_mvn(cov, 1000000, 8);
  const Eigen::MatrixXd c = w * w.transpose() / static_cast<double>(w.cols());
  const double r = c(0, 1) / std::sqrt(c(0, 0) * c(1, 1));
  EXPECT_GE(r, 0.79);
  EXPECT_LE(r, 0.81);
  EXPECT_LE((c - cov).norm() / cov.norm(), 0.01);
}

TEST(Sampling, RankOneOnALine) {
  Eigen::Vector3d u(1.0, -2.0, 0.5);
  const Eigen::MatrixXd w = sample_mvn(u * u.transpose(), 1000, 2);
  for (Eigen::Index s = 0; s < w.cols(); ++s) {
    const double t = w(0, s);
    EXPECT_NEAR((w.col(s) - t * u).norm(), 0.0, 1e-9 * (1.0 + std::abs(t)));
  }
}

TEST(Sampling, ErrorsAndDeterminism) {
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(covariance_factor(bad), std::invalid_argument);
  EXPECT_THROW(sample_mvn(bad, 10, 1), std::invalid_argument);
  EXPECT_TRUE(sample_mvn(Eigen::Matrix2d::Identity(), 50, 3).isApprox(sample_mvn(Eigen::Matrix2d::Identity(), 50, 3), 0.0));

  const CounterRng rng(99);
  const double late = rng.normal(1000, 2);
  double sum = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) sum += rng.uniform(i, 0);
  EXPECT_EQ(rng.normal(1000, 2), late);  // no hidden state
  EXPECT_NEAR(sum / 1000, 0.5, 0.05);
}
