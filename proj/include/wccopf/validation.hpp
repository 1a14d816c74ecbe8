#pragma once

// Out-of-sample Monte-Carlo check of a dispatch and the closed-form
// moments of a capped plant's output.

#include "wccopf/opf_solver.hpp"

#include <cstdint>
#include <vector>

namespace wccopf {

struct ConstraintCheck {
  WccFamily family = WccFamily::LineUpper;
  std::size_t id = 0;
  double eps = 0.0;
  double expected_overload = 0.0;  // MW
  double std_error = 0.0;
  double violation_probability = 0.0;  // P(y > 0), diagnostic only
  bool passes = true;                  // expected_overload <= eps + 3 * std_error
};

struct PlantCurtailment {
  int bus = 0;
  WindPolicy policy = WindPolicy::Reserve;
  double wasted = 0.0;  // E[(v + w) - delivered] from the cap
  double wasted_std_error = 0.0;
  double withheld = 0.0;  // mu - v, held back for reserves or by the dispatch
};

struct ValidationReport {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<ConstraintCheck> constraints;
  std::vector<PlantCurtailment> plants;
  double total_wasted = 0.0;
  double total_withheld = 0.0;
  double total_curtailment = 0.0;
  double total_curtailment_std_error = 0.0;
  std::size_t failures = 0;

  bool all_pass() const { return failures == 0; }
};

/// Replays w -> controlled wind output, AGC response and DC line flows for
/// n_samples draws of the fleet law and accumulates max(y, 0) per constraint.
ValidationReport validate_dispatch(const Problem& prob, const Decision& x, std::size_t n_samples = 100000,
                                   std::uint64_t seed = 1);

struct CappedMoments {
  double mean = 0.0;         // E[min(w, cap)]
  double std = 0.0;          // sd of min(w, cap)
  double curtailment = 0.0;  // E[max(w - cap, 0)]
};

/// Moments of min(w, cap) for w ~ N(0, sigma^2), sigma > 0.
CappedMoments capped_output_moments(double sigma, double cap);

}  // namespace wccopf
