#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fransim/core_model.hpp"
#include "fransim/units.hpp"
#include "oracles.hpp"

using namespace fransim;

namespace {

SourceSpec reference_source() {
  SourceSpec s;
  s.pump_wavelength_nm = 532.0;
  s.pump_coherence_length_m = 1000.0;
  s.signal_center_nm = 810.0;
  s.signal_width_nm = 2.0;
  s.idler_center_nm = 1550.0;
  s.idler_width_nm = 7.0;
  s.pair_probability_per_gate = 0.01;
  return s;
}

}  // namespace

TEST_CASE("coherence time and length follow lambda^2 / (c dlambda)") {
  // 810 nm with 2 nm bandwidth: about 1.09 ps, about 0.33 mm.
  const double tau = coherence_time_s(810.0, 2.0);
  CHECK(s_to_ps(tau) > 1.05);
  CHECK(s_to_ps(tau) < 1.15);
  const double len = coherence_length_m(810.0, 2.0);
  CHECK(len > 0.32e-3);
  CHECK(len < 0.35e-3);

  // 1550 nm with 7 nm bandwidth, hand-evaluated:
  // (1550e-9)^2 / (2.99792458e8 * 7e-9) = 1.144841e-12 s.
  CHECK(coherence_time_s(1550.0, 7.0) ==
        doctest::Approx(1.144841e-12).epsilon(1e-4));

  // Degenerate algebra check: bandwidth equal to the wavelength collapses
  // the formula to lambda / c.
  CHECK(coherence_time_s(1000.0, 1000.0) ==
        doctest::Approx(nm_to_m(1000.0) / kSpeedOfLight).epsilon(1e-12));

  CHECK_THROWS_AS(coherence_time_s(0.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(coherence_time_s(810.0, -1.0), std::domain_error);
  CHECK_THROWS_AS(coherence_length_m(810.0, 0.0), std::domain_error);
}

TEST_CASE("franson peaks match brute-force path enumeration") {
  const double pi = std::numbers::pi;
  for (double contrast : {0.0, 0.37, 0.93, 1.0}) {
    for (int k = 0; k < 64; ++k) {
      const double phase_a = 2.0 * pi * k / 64.0 - pi;
      const double phase_b = 0.7 * k;  // arbitrary second analyzer phase

      // Matching output parities: the library phase sum is just the sum.
      const auto oracle = oracles::franson_path_enumeration(
          phase_a, phase_b, 'a', 'a', contrast);
      const auto peaks =
          franson_peak_probabilities(phase_a + phase_b, contrast);
      CHECK(peaks.left == doctest::Approx(oracle.left).epsilon(1e-12));
      CHECK(peaks.center == doctest::Approx(oracle.center).epsilon(1e-12));
      CHECK(peaks.right == doctest::Approx(oracle.right).epsilon(1e-12));

      // Opposite parities flip the fringe, i.e. shift the phase sum by pi.
      const auto oracle_ab = oracles::franson_path_enumeration(
          phase_a, phase_b, 'a', 'b', contrast);
      const auto peaks_ab =
          franson_peak_probabilities(phase_a + phase_b + pi, contrast);
      CHECK(peaks_ab.center ==
            doctest::Approx(oracle_ab.center).epsilon(1e-12));
      CHECK(peaks_ab.left == doctest::Approx(oracle_ab.left).epsilon(1e-12));
    }
  }
}

TEST_CASE("franson peaks at the reference points") {
  const double pi = std::numbers::pi;

  const auto constructive = franson_peak_probabilities(0.0, 1.0);
  CHECK(constructive.left == doctest::Approx(1.0 / 16.0));
  CHECK(constructive.center == doctest::Approx(0.25));
  CHECK(constructive.right == doctest::Approx(1.0 / 16.0));

  const auto destructive = franson_peak_probabilities(pi, 1.0);
  CHECK(std::abs(destructive.center) < 1e-15);

  // Zero contrast: flat center peak at 1/8 everywhere.
  for (int k = 0; k < 8; ++k) {
    CHECK(franson_peak_probabilities(0.9 * k, 0.0).center ==
          doctest::Approx(0.125));
  }
}

TEST_CASE("franson peak properties hold on a phase grid") {
  const double pi = std::numbers::pi;
  double center_sum = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double phase = 2.0 * pi * k / 64.0;
    const auto p = franson_peak_probabilities(phase, 0.93);
    CHECK(p.left == doctest::Approx(1.0 / 16.0));
    CHECK(p.right == doctest::Approx(1.0 / 16.0));
    CHECK(p.center >= 0.0);
    CHECK(p.center <= 0.25);

    // Complementary phases share the same incoherent background.
    const auto q = franson_peak_probabilities(phase + pi, 0.93);
    CHECK(p.center + q.center == doctest::Approx(0.25).epsilon(1e-12));
    center_sum += p.center;
  }
  // Phase-averaged: 1/16 : 1/8 : 1/16, one quarter of all pairs in total.
  CHECK(center_sum / 64.0 == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("franson peaks reject out-of-domain arguments") {
  CHECK_THROWS_AS(franson_peak_probabilities(0.0, -0.1), std::domain_error);
  CHECK_THROWS_AS(franson_peak_probabilities(0.0, 1.1), std::domain_error);
  CHECK_THROWS_AS(franson_peak_probabilities(std::nan(""), 1.0),
                  std::domain_error);
}

TEST_CASE("source validation enforces energy conservation") {
  SourceSpec good = reference_source();
  CHECK_NOTHROW(good.validate());

  // The second sample pair of the same pump also balances.
  SourceSpec alt = reference_source();
  alt.signal_center_nm = 820.0;
  alt.idler_center_nm = 1515.0;
  CHECK_NOTHROW(alt.validate());

  SourceSpec bad = reference_source();
  bad.signal_center_nm = 700.0;  // 1/700 + 1/1550 misses 1/532 by ~10%
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  SourceSpec negative = reference_source();
  negative.signal_width_nm = -2.0;
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);

  SourceSpec too_bright = reference_source();
  too_bright.pair_probability_per_gate = 1.0;
  CHECK_THROWS_AS(too_bright.validate(), std::invalid_argument);
}

TEST_CASE("interferometer spec basics") {
  InterferometerSpec itf;
  itf.imbalance_length_m = 1.0;
  CHECK_NOTHROW(itf.validate());
  // 1 m of extra path is 3.34 ns of extra travel time.
  CHECK(s_to_ns(itf.imbalance_time_s()) == doctest::Approx(3.3356).epsilon(1e-3));

  InterferometerSpec zero = itf;
  zero.imbalance_length_m = 0.0;
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);

  InterferometerSpec contrast = itf;
  contrast.intrinsic_visibility = 1.2;
  CHECK_THROWS_AS(contrast.validate(), std::invalid_argument);

  InterferometerSpec port = itf;
  port.monitored_output = 'c';
  CHECK_THROWS_AS(port.validate(), std::invalid_argument);
}

TEST_CASE("regime check accepts the reference configuration") {
  InterferometerSpec itf;
  itf.imbalance_length_m = 1.0;
  const auto report = franson_regime_check(reference_source(), itf, itf);
  CHECK(report.pump_coherence.pass);
  CHECK(report.photon_resolution.pass);
  CHECK(report.imbalance_match.pass);
  CHECK(report.all_pass());

  // Margins implied by the configuration: 1 km of pump coherence against
  // 1 m of imbalance, 3.34 ns of imbalance against ~1.1 ps photons.
  CHECK(report.pump_coherence.value == doctest::Approx(1000.0));
  CHECK(report.photon_resolution.value ==
        doctest::Approx(3.3356e-9).epsilon(1e-3));
  CHECK(report.imbalance_match.value == doctest::Approx(0.0));
}

TEST_CASE("regime check flags a short pump coherence") {
  SourceSpec source = reference_source();
  source.pump_coherence_length_m = 0.5;
  InterferometerSpec itf;
  const auto report = franson_regime_check(source, itf, itf);
  CHECK_FALSE(report.pump_coherence.pass);
  CHECK(report.photon_resolution.pass);
  CHECK(report.imbalance_match.pass);
  CHECK_FALSE(report.all_pass());
  CHECK(report.summary().find("FAIL") != std::string::npos);
}

TEST_CASE("regime check flags mismatched imbalances") {
  InterferometerSpec signal_itf;
  signal_itf.imbalance_length_m = 1.0;
  InterferometerSpec idler_itf;
  idler_itf.imbalance_length_m = 1.1;
  const auto report =
      franson_regime_check(reference_source(), signal_itf, idler_itf);
  CHECK(report.pump_coherence.pass);
  CHECK(report.photon_resolution.pass);
  CHECK_FALSE(report.imbalance_match.pass);
  // 10 cm of mismatch is 0.33 ns, far beyond the ~1.1 ps tolerance.
  CHECK(s_to_ns(report.imbalance_match.value) ==
        doctest::Approx(0.3336).epsilon(1e-3));

  // An explicit, generous tolerance turns the same setup acceptable.
  RegimeCheckConfig loose;
  loose.match_tolerance_s = 1e-9;
  const auto relaxed =
      franson_regime_check(reference_source(), signal_itf, idler_itf, loose);
  CHECK(relaxed.imbalance_match.pass);
}
