#pragma once

#include <string>

namespace fransim {

// Photon-pair source: narrow CW pump, non-degenerate signal/idler pair.
// Wavelengths are vacuum values in nm, spectral widths are FWHM in nm.
struct SourceSpec {
  double pump_wavelength_nm = 532.0;
  double pump_coherence_length_m = 1000.0;
  double signal_center_nm = 810.0;
  double signal_width_nm = 2.0;
  double idler_center_nm = 1550.0;
  double idler_width_nm = 7.0;
  // Probability that a pair is emitted into the relevant mode pair within
  // one gate. Scales rates only; fringe shape and visibility do not depend
  // on it.
  double pair_probability_per_gate = 0.01;
  // Allowed relative violation of 1/ls + 1/li = 1/lp.
  double energy_match_rel_tol = 1e-2;

  void validate() const;  // throws std::invalid_argument
};

// One unbalanced Mach-Zehnder analyzer. The long arm exceeds the short one
// by imbalance_length_m of optical path; phase_rad is the tunable phase
// picked up in the long arm.
struct InterferometerSpec {
  double imbalance_length_m = 1.0;
  double phase_rad = 0.0;
  // Residual interference contrast of this analyzer (alignment, wavefront
  // overlap). The two analyzers' values multiply into the fringe contrast.
  double intrinsic_visibility = 1.0;
  char monitored_output = 'a';  // 'a' or 'b'; which exit port the detector sees

  double imbalance_time_s() const;
  void validate() const;
};

// Single-photon coherence time tau = lambda^2 / (c * dlambda) for a photon
// of the given center wavelength and FWHM bandwidth, and the matching
// coherence length c * tau. Throws std::domain_error on non-positive input.
double coherence_time_s(double center_nm, double width_fwhm_nm);
double coherence_length_m(double center_nm, double width_fwhm_nm);

// Per-pair probabilities of the three coincidence-time peaks, both photons
// leaving the monitored outputs of their analyzers:
//   left   : signal took the long arm, idler the short one (dt = -imbalance)
//   center : short-short and long-long, indistinguishable when the pump
//            coherence covers the imbalance, so their amplitudes interfere
//   right  : signal short, idler long (dt = +imbalance)
// phase_sum_rad is the sum of the two analyzer phases (plus pi when the
// monitored output parities differ). Averaged over phase the three peaks
// carry 1/16 + 1/8 + 1/16 = 1/4: one of the four exit-port combinations.
struct FransonPeaks {
  double left = 0.0;
  double center = 0.0;
  double right = 0.0;
  double total() const { return left + center + right; }
};

FransonPeaks franson_peak_probabilities(double phase_sum_rad,
                                        double intrinsic_visibility);

// Checks that a source/analyzer combination actually sits in the regime
// where the center peak interferes in the phase sum:
//  (a) pump coherence length well beyond the arm imbalance,
//  (b) imbalance time well beyond both single-photon coherence times
//      (no single-photon fringe survives),
//  (c) the two imbalances agree to within the alignment tolerance.
struct RegimeCheckConfig {
  double pump_margin_factor = 10.0;
  double resolve_margin_factor = 10.0;
  // 0 means: use the smaller of the two single-photon coherence times.
  double match_tolerance_s = 0.0;
};

struct RegimeFlag {
  bool pass = false;
  double value = 0.0;      // the quantity that was checked
  double threshold = 0.0;  // the limit it was held against
  std::string detail;
};

struct RegimeReport {
  RegimeFlag pump_coherence;
  RegimeFlag photon_resolution;
  RegimeFlag imbalance_match;

  bool all_pass() const;
  std::string summary() const;
};

RegimeReport franson_regime_check(const SourceSpec& source,
                                  const InterferometerSpec& signal_analyzer,
                                  const InterferometerSpec& idler_analyzer,
                                  const RegimeCheckConfig& config = {});

}  // namespace fransim
