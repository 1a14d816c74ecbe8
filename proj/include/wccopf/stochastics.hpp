#pragma once

// Gaussian kernels behind the weighted chance constraints: normal
// distribution functions, the expected positive part of a Gaussian, the
// piecewise-affine expectation induced by output caps, and deterministic
// correlated sampling.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace wccopf {

double std_normal_pdf(double z);
double std_normal_cdf(double z);
/// Upper tail 1 - Phi(z), accurate for large z.
double std_normal_sf(double z);
double std_normal_quantile(double p);

/// P(X > h, Y > k) for standard bivariate normal (X, Y) with correlation r.
double bivariate_normal_upper(double h, double k, double r);

struct GaussianScalar {
  double mean = 0.0;
  double std = 0.0;
};

/// E[max(y, 0)] for y ~ N(mean, std^2).
double expected_positive_part(GaussianScalar g);

struct EppPartials {
  double d_mean = 0.0;  // Phi(mean / std)
  double d_std = 0.0;   // phi(mean / std)
};
/// Partials of expected_positive_part; throws std::domain_error for std == 0.
EppPartials expected_positive_part_partials(GaussianScalar g);
Eigen::VectorXd expected_positive_part_gradient(GaussianScalar g, const Eigen::Ref<const Eigen::VectorXd>& dmean_dx,
                                                const Eigen::Ref<const Eigen::VectorXd>& dstd_dx);

/// Overload y(w) = offset + sum_j coef_j * d_j(w_j), where d_j is the
/// controlled deviation: min(w_j, cap_j) - min(0, cap_j) for capped plants,
/// w_j otherwise.
struct CappedAffineOverload {
  double offset = 0.0;
  Eigen::VectorXd coef;
};

/// y restricted to one sign pattern of the capped coordinates:
/// y_b(w) = constant + coef^T w, valid where w_{i_k} <= cap_k iff bit k of b is 0.
struct AffineRegion {
  double constant = 0.0;
  Eigen::VectorXd coef;
};

struct PiecewiseAffineOverload {
  std::vector<std::size_t> cap_plants;  // i_1 ... i_K
  std::vector<double> caps;             // thresholds in MW
  std::vector<AffineRegion> regions;    // 2^K entries, indexed by bit pattern

  std::size_t cap_count() const { return cap_plants.size(); }
  std::size_t region_of(const Eigen::Ref<const Eigen::VectorXd>& omega) const;
  double value_at(const Eigen::Ref<const Eigen::VectorXd>& omega) const;
  /// Throws std::invalid_argument when adjacent regions disagree on a shared face.
  void check_continuity(double tolerance = 1e-8) const;

  static PiecewiseAffineOverload from_capped(const CappedAffineOverload& y, const std::vector<std::size_t>& cap_plants,
                                             const std::vector<double>& caps);
  static PiecewiseAffineOverload affine(double constant, Eigen::VectorXd coef);
};

struct IntegrationOptions {
  int quadrature_nodes = 64;        // per numerically integrated coordinate
  std::size_t max_quadrature_caps = 2;
  std::size_t qmc_points = 1u << 16;
  std::uint64_t qmc_seed = 20151001;
  std::size_t max_caps = 10;
};

/// Expectation of the positive part of an affine Gaussian overload
/// restricted to a band of one standard normal coordinate:
/// E[(mean + loading * Z + noise * E)^+ ; lo < Z < hi], Z, E iid N(0,1).
struct BandExpectation {
  double value = 0.0;
  double d_mean = 0.0;
  double d_loading = 0.0;
  double d_noise = 0.0;
};
BandExpectation band_expected_positive_part(double mean, double loading, double noise, double lo, double hi);

/// Per-fleet integration state for overloads that depend on capped plants.
/// The capped coordinates are integrated region by region; the remaining
/// (uncapped) coordinates enter analytically through their conditional
/// Gaussian law.
class CappedGaussianIntegrator {
 public:
  CappedGaussianIntegrator(const Eigen::MatrixXd& covariance, std::vector<std::size_t> cap_plants,
                           std::vector<double> caps, IntegrationOptions options = {});

  struct Result {
    double value = 0.0;
    double d_offset = 0.0;
    Eigen::VectorXd d_coef;  // per plant
  };

  /// Value and partials with respect to offset and per-plant coefficients.
  Result evaluate(const CappedAffineOverload& y) const;
  /// Value for explicitly given region forms.
  double value(const PiecewiseAffineOverload& o) const;

  std::size_t dimension() const { return dim_; }
  const std::vector<std::size_t>& cap_plants() const { return cap_plants_; }
  bool uses_quadrature() const { return cap_plants_.size() <= options_.max_quadrature_caps; }

 private:
  struct RegionTerm {
    double value = 0.0;
    double d_const = 0.0;
    Eigen::VectorXd d_gamma;  // per capped coordinate
    double d_noise = 0.0;
  };
  RegionTerm integrate_region(std::size_t region, double constant, const Eigen::VectorXd& gamma, double noise) const;
  double region_lower(std::size_t k, std::size_t region) const;
  double region_upper(std::size_t k, std::size_t region) const;

  std::size_t dim_ = 0;
  IntegrationOptions options_;
  std::vector<std::size_t> cap_plants_;
  std::vector<double> caps_;
  std::vector<std::size_t> free_plants_;
  Eigen::MatrixXd chol_caps_;     // lower Cholesky factor of Sigma_CC
  Eigen::MatrixXd regression_;    // Sigma_UC Sigma_CC^-1
  Eigen::MatrixXd conditional_;   // Sigma_UU - Sigma_UC Sigma_CC^-1 Sigma_CU
  std::vector<double> gl_nodes_;
  std::vector<double> gl_weights_;
  Eigen::MatrixXd qmc_points_;    // K x N capped deviations w_C (K > 2 path)
};

double capped_wcc_value(const PiecewiseAffineOverload& o, const Eigen::MatrixXd& covariance,
                        const IntegrationOptions& options = {});

/// Deterministic counter-based stream: the value for (index, lane) depends
/// only on the seed, never on evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t bits(std::uint64_t index, std::uint64_t lane) const;
  double uniform(std::uint64_t index, std::uint64_t lane) const;  // (0, 1)
  double normal(std::uint64_t index, std::uint64_t lane) const;

 private:
  std::uint64_t seed_;
};

/// Factor F with F F^T = cov (Cholesky when definite, eigen-factor when
/// semidefinite). Throws ValidationError-like std::invalid_argument if cov
/// is not PSD.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov);

/// n samples of N(0, cov) as columns of a dim x n matrix.
Eigen::MatrixXd sample_mvn(const Eigen::MatrixXd& cov, std::size_t n, std::uint64_t seed);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sample average of max(y(w), 0) with w ~ N(0, cov) drawn from the counter stream.
McEstimate mc_expected_overload(const PiecewiseAffineOverload& o, const Eigen::MatrixXd& cov, std::size_t n_samples,
                                std::uint64_t seed);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace wccopf
