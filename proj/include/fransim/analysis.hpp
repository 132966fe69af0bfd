#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "fransim/montecarlo.hpp"

namespace fransim {

struct FringeFit {
  double amplitude = 0.0;   // A >= 0 by convention; phase0 absorbs the sign
  double offset = 0.0;      // B in counts = B + A cos(phase + phase0)
  double phase0_rad = 0.0;
  double amplitude_sigma = 0.0;
  double offset_sigma = 0.0;
  double phase0_sigma = 0.0;
  double amplitude_offset_covariance = 0.0;
  double chi_square = 0.0;  // weighted residual sum
  std::size_t degrees_of_freedom = 0;
};

// Weighted least squares of counts = B + A cos(phase + phase0), linearized
// as B + C cos(phase) + S sin(phase), with Poisson weights (variance floored
// at one count). Requires at least four points spanning more than half a
// turn (std::invalid_argument) and a non-degenerate design
// (std::runtime_error otherwise). The reported sigmas come from the absolute
// Poisson covariance, not from residual rescaling.
FringeFit fit_fringe(const FringeScan& scan);

// Expected accidental counts per phase point (dark counts plus double-pair
// emission), phase independent: gates x (p_dark + p_doublepair) x window
// fraction.
double noise_floor(const ScenarioSpec& scenario);

struct VisibilityResult {
  double raw_amplitude = 0.0;
  double offset = 0.0;
  double fitted_phase0_rad = 0.0;
  double noise_floor = 0.0;
  double net_visibility = 0.0;
  double net_visibility_sigma = 0.0;
  bool clipped = false;  // set when A/(B-N) exceeded 1 and was clipped down
  std::optional<double> transmittance_ratio;
};

// V_net = A / (B - floor), first-order error propagation over the fit
// covariance plus an optional uncertainty on the floor itself. Throws
// std::domain_error when the offset does not clear the floor.
VisibilityResult net_visibility(const FringeFit& fit,
                                double noise_floor_counts,
                                double noise_floor_sigma = 0.0);

struct TransmittanceCheck {
  double ratio = 0.0;  // fitted fringe maxima (B + A), sample over reference
  double ratio_sigma = 0.0;
  double expected = 0.0;    // transmittance the sample channel is configured for
  bool compatible = false;  // |ratio - expected| <= 2 ratio_sigma
};

// Both scans must share the phase grid and gates per point
// (std::domain_error otherwise).
TransmittanceCheck transmittance_check(const FringeScan& reference,
                                       const FringeScan& sample,
                                       double expected_transmittance);

struct ExperimentSummary {
  std::string label;
  std::string engine;
  std::string scenario_hash;
  VisibilityResult reference;
  VisibilityResult sample;
  TransmittanceCheck transmittance;
};

// Deterministic JSON rendering: sorted keys, schema_version field, trailing
// newline.
std::string summary_to_json(const ExperimentSummary& summary);

}  // namespace fransim
