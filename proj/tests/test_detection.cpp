#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fransim/core_model.hpp"
#include "fransim/detection.hpp"
#include "fransim/units.hpp"

using namespace fransim;

namespace {

DetectorSpec perfect_gated() {
  DetectorSpec spec;
  spec.kind = DetectorKind::gated;
  spec.efficiency = 1.0;
  spec.dark_count_probability_per_gate = 0.0;
  spec.gate_width_ns = 2.5;
  return spec;
}

PairGateModel franson_model(double phase_rad, double contrast) {
  const FransonPeaks peaks = franson_peak_probabilities(phase_rad, contrast);
  PairGateModel model;
  model.pair_delivery_probability = 1.0;
  model.p_left = peaks.left;
  model.p_center = peaks.center;
  model.p_right = peaks.right;
  return model;
}

struct PeakTally {
  std::uint64_t left = 0;
  std::uint64_t center = 0;
  std::uint64_t right = 0;
};

PeakTally tally_true_pairs(const std::vector<GateOutcome>& records) {
  PeakTally tally;
  for (const GateOutcome& record : records) {
    if (!record.pair_coincidence) {
      continue;
    }
    if (record.pair_dt_s < -1e-12) {
      ++tally.left;
    } else if (record.pair_dt_s > 1e-12) {
      ++tally.right;
    } else {
      ++tally.center;
    }
  }
  return tally;
}

std::vector<GateOutcome> run_gates(const PairGateModel& model,
                                   const DetectorSpec& det_signal,
                                   const DetectorSpec& det_idler,
                                   double t_signal,
                                   double t_idler,
                                   std::uint64_t gates,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GateOutcome> records;
  records.reserve(gates);
  for (std::uint64_t g = 0; g < gates; ++g) {
    records.push_back(simulate_gate_outcomes(model, det_signal, det_idler, t_signal, t_idler, rng));
  }
  return records;
}

bool within_sigma(double observed, double expected_probability, double trials, double n_sigma) {
  const double mean = trials * expected_probability;
  const double sigma = std::sqrt(trials * expected_probability * (1.0 - expected_probability));
  return std::abs(observed - mean) <= n_sigma * sigma;
}

}  // namespace

TEST_CASE("detector spec validation") {
  DetectorSpec spec = perfect_gated();
  CHECK_NOTHROW(spec.validate());

  DetectorSpec zero_eff = spec;
  zero_eff.efficiency = 0.0;
  CHECK_THROWS_AS(zero_eff.validate(), std::invalid_argument);

  DetectorSpec over_eff = spec;
  over_eff.efficiency = 1.1;
  CHECK_THROWS_AS(over_eff.validate(), std::invalid_argument);

  DetectorSpec dark_one = spec;
  dark_one.dark_count_probability_per_gate = 1.0;
  CHECK_THROWS_AS(dark_one.validate(), std::invalid_argument);

  DetectorSpec gateless = spec;
  gateless.gate_width_ns = 0.0;
  CHECK_THROWS_AS(gateless.validate(), std::invalid_argument);

  DetectorSpec trigger = si_apd_default();
  CHECK_NOTHROW(trigger.validate());
  CHECK(trigger.kind == DetectorKind::free_running);
  CHECK(trigger.efficiency == doctest::Approx(0.4));

  DetectorSpec gated = ingaas_apd_default();
  CHECK_NOTHROW(gated.validate());
  CHECK(gated.dark_count_probability_per_gate == doctest::Approx(3.5e-5));
  CHECK(gated.gate_width_ns == doctest::Approx(2.5));
}

TEST_CASE("pair gate model validation") {
  PairGateModel model = franson_model(0.0, 1.0);
  CHECK_NOTHROW(model.validate());

  PairGateModel bad_delivery = model;
  bad_delivery.pair_delivery_probability = 1.5;
  CHECK_THROWS_AS(bad_delivery.validate(), std::invalid_argument);

  PairGateModel heavy_peaks = model;
  heavy_peaks.p_center = 0.5;
  CHECK_THROWS_AS(heavy_peaks.validate(), std::invalid_argument);

  PairGateModel negative_peak = model;
  negative_peak.p_left = -0.01;
  CHECK_THROWS_AS(negative_peak.validate(), std::invalid_argument);

  PairGateModel bad_jitter = model;
  bad_jitter.timing_jitter_sigma_s = -1e-12;
  CHECK_THROWS_AS(bad_jitter.validate(), std::invalid_argument);

  PairGateModel bad_double = model;
  bad_double.doublepair_probability = 1.0;
  CHECK_THROWS_AS(bad_double.validate(), std::invalid_argument);
}

TEST_CASE("conditional firing statistics reproduce the three peak probabilities") {
  // Delivered pair, unit efficiency, no noise: coincidence rates must match
  // (1/16, 1/4, 1/16) at phase 0 with full contrast, within 5 sigma.
  const PairGateModel model = franson_model(0.0, 1.0);
  const DetectorSpec det = perfect_gated();
  const std::uint64_t gates = 1000000;
  const auto records = run_gates(model, det, det, 1.0, 1.0, gates, 20260814);

  const PeakTally tally = tally_true_pairs(records);
  const double trials = static_cast<double>(gates);
  CHECK(within_sigma(static_cast<double>(tally.left), 1.0 / 16.0, trials, 5.0));
  CHECK(within_sigma(static_cast<double>(tally.center), 1.0 / 4.0, trials, 5.0));
  CHECK(within_sigma(static_cast<double>(tally.right), 1.0 / 16.0, trials, 5.0));

  // Signal-side marginal firing rate is 1/2 for unit transmittance.
  std::uint64_t signal_fires = 0;
  for (const GateOutcome& record : records) {
    if (record.signal_fired) {
      ++signal_fires;
    }
  }
  CHECK(within_sigma(static_cast<double>(signal_fires), 0.5, trials, 5.0));
}

TEST_CASE("zero signal transmittance leaves only dark counts") {
  PairGateModel model = franson_model(0.0, 1.0);
  DetectorSpec det_signal = perfect_gated();
  DetectorSpec det_idler = perfect_gated();
  det_idler.dark_count_probability_per_gate = 3.5e-5;
  const std::uint64_t gates = 1000000;
  const auto records = run_gates(model, det_signal, det_idler, 0.0, 1.0, gates, 7);

  std::uint64_t dark = 0;
  for (const GateOutcome& record : records) {
    CHECK_FALSE(record.signal_fired);
    CHECK_FALSE(record.pair_coincidence);
    CHECK_FALSE(record.doublepair_coincidence);
    if (record.dark_coincidence) {
      // Accidentals are confined to the gate span.
      CHECK(std::abs(record.dark_dt_s) <= ns_to_s(1.25));
      ++dark;
    }
  }
  CHECK(within_sigma(static_cast<double>(dark), 3.5e-5, static_cast<double>(gates), 5.0));
}

TEST_CASE("dark counts alone give the configured accidental rate and a flat distribution") {
  PairGateModel model;  // pair term off
  model.pair_delivery_probability = 0.0;
  DetectorSpec det_idler = perfect_gated();
  det_idler.dark_count_probability_per_gate = 3.5e-5;
  const DetectorSpec det_signal = perfect_gated();
  const std::uint64_t gates = 10000000;
  const auto records = run_gates(model, det_signal, det_idler, 1.0, 1.0, gates, 99);

  std::vector<double> dts;
  for (const GateOutcome& record : records) {
    CHECK_FALSE(record.pair_coincidence);
    CHECK_FALSE(record.doublepair_coincidence);
    if (record.dark_coincidence) {
      dts.push_back(s_to_ps(record.dark_dt_s));
    }
  }
  CHECK(within_sigma(static_cast<double>(dts.size()), 3.5e-5, static_cast<double>(gates), 5.0));

  // Chi-square uniformity over 10 bins spanning the gate; the 0.999 quantile
  // for 9 degrees of freedom is 27.88.
  const double span = 2500.0;
  std::vector<double> bin_counts(10, 0.0);
  for (const double dt : dts) {
    auto bin = static_cast<std::size_t>((dt + span / 2.0) / (span / 10.0));
    if (bin >= bin_counts.size()) {
      bin = bin_counts.size() - 1;
    }
    bin_counts[bin] += 1.0;
  }
  const double expected = static_cast<double>(dts.size()) / 10.0;
  double chi_square = 0.0;
  for (const double observed : bin_counts) {
    chi_square += (observed - expected) * (observed - expected) / expected;
  }
  CHECK(chi_square < 27.88);
}

TEST_CASE("double pair accidentals are uniform uncorrelated coincidences") {
  PairGateModel model;
  model.pair_delivery_probability = 0.0;
  model.doublepair_probability = 1e-3;
  const DetectorSpec det = perfect_gated();
  const std::uint64_t gates = 1000000;
  const auto records = run_gates(model, det, det, 1.0, 1.0, gates, 3);

  std::uint64_t doubles = 0;
  for (const GateOutcome& record : records) {
    CHECK_FALSE(record.pair_coincidence);
    CHECK_FALSE(record.dark_coincidence);
    if (record.doublepair_coincidence) {
      CHECK(std::abs(record.doublepair_dt_s) <= ns_to_s(1.25));
      ++doubles;
    }
  }
  CHECK(within_sigma(static_cast<double>(doubles), 1e-3, static_cast<double>(gates), 5.0));
}

TEST_CASE("accidentals are drawn independently of the pair term") {
  PairGateModel model = franson_model(0.0, 1.0);
  model.doublepair_probability = 0.3;
  DetectorSpec det_idler = perfect_gated();
  det_idler.dark_count_probability_per_gate = 0.5;
  const std::uint64_t gates = 200000;
  const auto records = run_gates(model, perfect_gated(), det_idler, 1.0, 1.0, gates, 11);

  std::uint64_t dark = 0;
  std::uint64_t doubles = 0;
  std::uint64_t pairs = 0;
  std::uint64_t multi_event_gates = 0;
  for (const GateOutcome& record : records) {
    CHECK(record.idler_fired == record.any_coincidence());
    if (record.pair_coincidence) {
      ++pairs;
    }
    if (record.doublepair_coincidence) {
      ++doubles;
    }
    if (record.dark_coincidence) {
      ++dark;
    }
    if (record.coincidence_count() > 1) {
      ++multi_event_gates;
    }
  }
  // Each rate matches its own probability regardless of the other processes,
  // so the expectation stays exactly additive.
  const double trials = static_cast<double>(gates);
  CHECK(within_sigma(static_cast<double>(pairs), 3.0 / 8.0, trials, 5.0));
  CHECK(within_sigma(static_cast<double>(doubles), 0.3, trials, 5.0));
  CHECK(within_sigma(static_cast<double>(dark), 0.5, trials, 5.0));
  CHECK(multi_event_gates > 0);
}

TEST_CASE("pair timing jitter smears the central peak") {
  PairGateModel model = franson_model(0.0, 1.0);
  model.timing_jitter_sigma_s = ps_to_s(100.0);
  const DetectorSpec det = perfect_gated();
  const auto records = run_gates(model, det, det, 1.0, 1.0, 200000, 5);

  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t n = 0;
  for (const GateOutcome& record : records) {
    if (record.pair_coincidence && std::abs(record.pair_dt_s) < ns_to_s(1.0)) {
      const double dt = s_to_ps(record.pair_dt_s);
      sum += dt;
      sum_sq += dt * dt;
      ++n;
    }
  }
  REQUIRE(n > 10000);
  const double mean = sum / static_cast<double>(n);
  const double stddev = std::sqrt(sum_sq / static_cast<double>(n) - mean * mean);
  CHECK(std::abs(mean) < 5.0);
  CHECK(stddev > 90.0);
  CHECK(stddev < 110.0);
}

TEST_CASE("ten raw draws are consumed per gate regardless of branch") {
  const PairGateModel model = franson_model(0.3, 0.9);
  const DetectorSpec det = perfect_gated();

  std::mt19937_64 used(424242);
  (void)simulate_gate_outcomes(model, det, det, 1.0, 1.0, used);
  std::mt19937_64 skipped(424242);
  skipped.discard(10);
  CHECK(used() == skipped());

  // Same contract when the pair term is off and nothing fires.
  PairGateModel empty;
  empty.pair_delivery_probability = 0.0;
  std::mt19937_64 used_empty(17);
  (void)simulate_gate_outcomes(empty, det, det, 1.0, 1.0, used_empty);
  std::mt19937_64 skipped_empty(17);
  skipped_empty.discard(10);
  CHECK(used_empty() == skipped_empty());
}

TEST_CASE("gate simulation is deterministic in the seed") {
  const PairGateModel model = franson_model(1.1, 0.93);
  DetectorSpec det_idler = perfect_gated();
  det_idler.dark_count_probability_per_gate = 1e-4;
  const auto first = run_gates(model, perfect_gated(), det_idler, 0.8, 0.6, 50000, 2024);
  const auto second = run_gates(model, perfect_gated(), det_idler, 0.8, 0.6, 50000, 2024);
  const auto other = run_gates(model, perfect_gated(), det_idler, 0.8, 0.6, 50000, 2025);

  REQUIRE(first.size() == second.size());
  bool identical = true;
  for (std::size_t i = 0; i < first.size(); ++i) {
    identical = identical && first[i].pair_coincidence == second[i].pair_coincidence &&
                first[i].pair_dt_s == second[i].pair_dt_s &&
                first[i].doublepair_coincidence == second[i].doublepair_coincidence &&
                first[i].dark_coincidence == second[i].dark_coincidence &&
                first[i].dark_dt_s == second[i].dark_dt_s &&
                first[i].signal_fired == second[i].signal_fired &&
                first[i].idler_fired == second[i].idler_fired;
  }
  CHECK(identical);

  bool any_difference = false;
  for (std::size_t i = 0; i < first.size(); ++i) {
    any_difference = any_difference || first[i].pair_coincidence != other[i].pair_coincidence ||
                     first[i].pair_dt_s != other[i].pair_dt_s;
  }
  CHECK(any_difference);
}

TEST_CASE("histogram construction and validation") {
  CHECK_THROWS_AS(make_histogram(0.0, -1000.0, 1000.0), std::domain_error);
  CHECK_THROWS_AS(make_histogram(-5.0, -1000.0, 1000.0), std::domain_error);
  CHECK_THROWS_AS(make_histogram(100.0, 1000.0, -1000.0), std::invalid_argument);
  CHECK_THROWS_AS(make_histogram(300.0, -1000.0, 1000.0), std::invalid_argument);

  CoincidenceHistogram histogram = make_histogram(100.0, -1000.0, 1000.0);
  CHECK(histogram.bin_count() == 20);
  CHECK(histogram.bin_center_ps(0) == doctest::Approx(-950.0));
  CHECK(histogram.bin_center_ps(19) == doctest::Approx(950.0));

  histogram.add(-1000.0);
  histogram.add(999.999);
  histogram.add(0.0);
  histogram.add(1000.0);   // at max: dropped
  histogram.add(-1000.1);  // below min: dropped
  CHECK(histogram.recorded() == 3);
  CHECK(histogram.dropped == 2);
  CHECK(histogram.counts[0] == 1);
  CHECK(histogram.counts[10] == 1);
  CHECK(histogram.counts[19] == 1);
}

TEST_CASE("empty record set builds an all-zero histogram") {
  const std::vector<GateOutcome> none;
  const CoincidenceHistogram histogram = build_histogram(none, 100.0, -5000.0, 5000.0);
  CHECK(histogram.recorded() == 0);
  CHECK(histogram.dropped == 0);
  CHECK(histogram.total_gates == 0);
  for (const std::uint64_t c : histogram.counts) {
    CHECK(c == 0);
  }
}

TEST_CASE("three-peak records produce three disjoint clusters") {
  const PairGateModel model = franson_model(0.0, 1.0);
  const DetectorSpec det = perfect_gated();
  const auto records = run_gates(model, det, det, 1.0, 1.0, 100000, 31415);
  const CoincidenceHistogram histogram = build_histogram(records, 100.0, -5000.0, 5000.0);

  CHECK(histogram.total_gates == 100000);
  CHECK(histogram.recorded() <= histogram.total_gates);
  CHECK(histogram.dropped == 0);

  // Occupied bins cluster around -3336, 0, +3336 ps; everything between is empty.
  std::uint64_t left_mass = 0;
  std::uint64_t center_mass = 0;
  std::uint64_t right_mass = 0;
  std::uint64_t stray = 0;
  for (std::size_t i = 0; i < histogram.bin_count(); ++i) {
    const double center = histogram.bin_center_ps(i);
    if (std::abs(center + 3335.6) < 200.0) {
      left_mass += histogram.counts[i];
    } else if (std::abs(center) < 200.0) {
      center_mass += histogram.counts[i];
    } else if (std::abs(center - 3335.6) < 200.0) {
      right_mass += histogram.counts[i];
    } else {
      stray += histogram.counts[i];
    }
  }
  CHECK(stray == 0);
  CHECK(left_mass > 0);
  CHECK(center_mass > 0);
  CHECK(right_mass > 0);
  // At phase 0 with full contrast the cluster masses follow 1/16 : 1/4 : 1/16.
  CHECK(within_sigma(static_cast<double>(left_mass), 1.0 / 16.0, 100000.0, 5.0));
  CHECK(within_sigma(static_cast<double>(center_mass), 1.0 / 4.0, 100000.0, 5.0));
  CHECK(within_sigma(static_cast<double>(right_mass), 1.0 / 16.0, 100000.0, 5.0));
}

TEST_CASE("phase-averaged cluster masses follow the 1:2:1 ratio") {
  const DetectorSpec det = perfect_gated();
  const std::uint64_t gates_per_phase = 62500;
  const int phase_count = 16;
  CoincidenceHistogram merged = make_histogram(100.0, -5000.0, 5000.0);
  for (int k = 0; k < phase_count; ++k) {
    const double phase = 2.0 * std::numbers::pi * k / phase_count;
    const auto records = run_gates(franson_model(phase, 1.0), det, det, 1.0, 1.0,
                                   gates_per_phase, 1000 + static_cast<std::uint64_t>(k));
    merged.merge(build_histogram(records, 100.0, -5000.0, 5000.0));
  }
  CHECK(merged.total_gates == gates_per_phase * phase_count);

  std::uint64_t left_mass = 0;
  std::uint64_t center_mass = 0;
  std::uint64_t right_mass = 0;
  for (std::size_t i = 0; i < merged.bin_count(); ++i) {
    const double center = merged.bin_center_ps(i);
    if (center < -1000.0) {
      left_mass += merged.counts[i];
    } else if (center > 1000.0) {
      right_mass += merged.counts[i];
    } else {
      center_mass += merged.counts[i];
    }
  }
  const double trials = static_cast<double>(merged.total_gates);
  CHECK(within_sigma(static_cast<double>(left_mass), 1.0 / 16.0, trials, 5.0));
  CHECK(within_sigma(static_cast<double>(center_mass), 1.0 / 8.0, trials, 5.0));
  CHECK(within_sigma(static_cast<double>(right_mass), 1.0 / 16.0, trials, 5.0));
}

TEST_CASE("histogram merge requires identical binning") {
  CoincidenceHistogram a = make_histogram(100.0, -5000.0, 5000.0);
  const CoincidenceHistogram b = make_histogram(50.0, -5000.0, 5000.0);
  CHECK_THROWS_AS(a.merge(b), std::invalid_argument);
}

TEST_CASE("out-of-range records are dropped and tallied") {
  const PairGateModel model = franson_model(0.0, 1.0);
  const DetectorSpec det = perfect_gated();
  const auto records = run_gates(model, det, det, 1.0, 1.0, 50000, 8);
  // Narrow range keeps only the central peak; both side peaks get dropped.
  const CoincidenceHistogram histogram = build_histogram(records, 100.0, -1000.0, 1000.0);

  const PeakTally tally = tally_true_pairs(records);
  CHECK(histogram.recorded() == tally.center);
  CHECK(histogram.dropped == tally.left + tally.right);
}

TEST_CASE("window counts partition the histogram exactly") {
  const PairGateModel model = franson_model(0.0, 1.0);
  const DetectorSpec det = perfect_gated();
  const auto records = run_gates(model, det, det, 1.0, 1.0, 100000, 13);
  const CoincidenceHistogram histogram = build_histogram(records, 100.0, -5000.0, 5000.0);
  const PeakTally tally = tally_true_pairs(records);

  WindowSelection window;
  window.center_ps = 0.0;
  window.half_width_ps = 1000.0;
  const WindowCounts central = window_counts(histogram, window, 3335.6);
  CHECK(central.in_window == tally.center);
  CHECK(central.out_window == tally.left + tally.right);
  CHECK(central.in_window + central.out_window == histogram.recorded());
  CHECK(central.warning.empty());

  WindowSelection wide;
  wide.center_ps = 0.0;
  wide.half_width_ps = 5000.0;
  const WindowCounts all = window_counts(histogram, wide, 3335.6);
  CHECK(all.in_window == histogram.recorded());
  CHECK(all.out_window == 0);
  CHECK_FALSE(all.warning.empty());

  WindowSelection outside;
  outside.center_ps = 4500.0;
  outside.half_width_ps = 1000.0;
  CHECK_THROWS_AS(window_counts(histogram, outside), std::invalid_argument);

  WindowSelection degenerate;
  degenerate.half_width_ps = 0.0;
  CHECK_THROWS_AS(window_counts(histogram, degenerate), std::invalid_argument);
}

TEST_CASE("time tag export writes one row per gate") {
  std::vector<GateOutcome> records(3);
  records[0].signal_fired = true;
  records[0].idler_fired = true;
  records[0].pair_coincidence = true;
  records[0].pair_dt_s = 0.0;
  records[1] = GateOutcome{};
  records[2].idler_fired = true;
  records[2].dark_coincidence = true;
  records[2].dark_dt_s = -500.0e-12;

  std::ostringstream out;
  write_time_tags_csv(records, out);
  CHECK(out.str() ==
        "gate_index,dt_ps,detectorA,detectorB\n"
        "0,0,1,1\n"
        "1,,0,0\n"
        "2,-500.00000000000006,0,1\n");

  // A gate carrying both a pair event and an accidental repeats its index.
  GateOutcome busy;
  busy.signal_fired = true;
  busy.idler_fired = true;
  busy.pair_coincidence = true;
  busy.pair_dt_s = 0.0;
  busy.dark_coincidence = true;
  busy.dark_dt_s = 0.0;
  CHECK(busy.coincidence_count() == 2);
  std::ostringstream multi;
  write_time_tags_csv(std::vector<GateOutcome>{busy}, multi);
  CHECK(multi.str() ==
        "gate_index,dt_ps,detectorA,detectorB\n"
        "0,0,1,1\n"
        "0,0,1,1\n");
}

TEST_CASE("histogram export writes bin centers and counts") {
  CoincidenceHistogram histogram = make_histogram(100.0, -100.0, 100.0);
  histogram.add(10.0);
  histogram.add(20.0);

  std::ostringstream out;
  write_histogram_csv(histogram, out);
  CHECK(out.str() ==
        "bin_center_ps,count\n"
        "-50,0\n"
        "50,2\n");
}

TEST_CASE("idler detector must be gated") {
  const PairGateModel model = franson_model(0.0, 1.0);
  DetectorSpec free_idler = perfect_gated();
  free_idler.kind = DetectorKind::free_running;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(
      simulate_gate_outcomes(model, perfect_gated(), free_idler, 1.0, 1.0, rng),
      std::invalid_argument);

  std::mt19937_64 rng2(1);
  CHECK_THROWS_AS(
      simulate_gate_outcomes(model, perfect_gated(), perfect_gated(), 1.5, 1.0, rng2),
      std::invalid_argument);
}
