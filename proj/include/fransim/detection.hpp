#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fransim {

// Which physical process produced a recorded coincidence. Diagnostic only:
// analysis code must never branch on it.
enum class EventProvenance { true_pair, double_pair, dark_count };

enum class DetectorKind { free_running, gated };

struct DetectorSpec {
  DetectorKind kind = DetectorKind::gated;
  double efficiency = 1.0;                       // detection probability per arriving photon
  double dark_count_probability_per_gate = 0.0;  // probability per opened gate
  double gate_width_ns = 2.5;                    // ns, required > 0 for gated kind

  void validate() const;
};

// Conventional defaults for the two detector roles. Efficiencies are free
// configuration parameters; they rescale count rates, never visibilities.
DetectorSpec si_apd_default();      // free-running trigger detector, 40% efficiency
DetectorSpec ingaas_apd_default();  // gated detector, 10% efficiency, 3.5e-5 dark per 2.5 ns gate

// Per-gate description of the two-photon state arriving at the analyzers.
// The three peak probabilities are conditional on a delivered pair and are
// normally filled from franson_peak_probabilities(); their sum is the chance
// that both photons exit at the monitored ports and must not exceed 1/2.
struct PairGateModel {
  double pair_delivery_probability = 0.0;            // probability a pair occupies the gate
  double p_left = 1.0 / 16.0;                        // conditional, time difference -side_separation
  double p_center = 1.0 / 8.0;                       // conditional, time difference 0
  double p_right = 1.0 / 16.0;                       // conditional, time difference +side_separation
  double side_separation_s = 3.3356409519815204e-9;  // s, analyzer imbalance time
  double timing_jitter_sigma_s = 0.0;                // s, Gaussian smear on recorded pair timing
  double doublepair_probability = 0.0;               // per-gate accidental coincidence probability

  void validate() const;
};

// One recorded time-difference event within a gate. A gate can carry up to
// three: a true-pair coincidence plus the two accidental kinds, which are
// statistically independent of the pair term by construction so that
// expected rates stay exactly additive.
struct GateEvent {
  double dt_s = 0.0;  // s, recorded time difference
  EventProvenance provenance = EventProvenance::dark_count;
};

struct GateOutcome {
  bool signal_fired = false;
  bool idler_fired = false;
  bool pair_coincidence = false;
  bool doublepair_coincidence = false;
  bool dark_coincidence = false;
  double pair_dt_s = 0.0;        // s, one of the three peaks plus optional jitter
  double doublepair_dt_s = 0.0;  // s, uniform over the gate span
  double dark_dt_s = 0.0;        // s, uniform over the gate span

  int coincidence_count() const;
  bool any_coincidence() const;
  // The gate's events in fixed order (pair, double pair, dark), at most three.
  std::vector<GateEvent> events() const;
};

// Simulates one detection gate. The gate clock stands in for the trigger
// click that opened the gate, so idler-side accidentals (dark counts,
// uncorrelated double pairs) record a time difference uniform over the gate
// span without needing a simulated signal click. True-pair coincidences
// require both detectors to fire and land on one of the three peaks. The
// three event kinds are drawn independently: a real gated detector would
// collapse same-gate events, but that correction is below 1e-3 at the rates
// this model targets and would make the accidental floor phase-dependent.
// Consumes exactly ten raw draws from the generator on every call so that
// independently seeded sub-streams and paired runs stay aligned draw-for-draw.
GateOutcome simulate_gate_outcomes(const PairGateModel& model,
                                   const DetectorSpec& detector_signal,
                                   const DetectorSpec& detector_idler,
                                   double channel_t_signal,
                                   double channel_t_idler,
                                   std::mt19937_64& rng);

struct CoincidenceHistogram {
  double bin_width_ps = 100.0;
  double min_ps = -5000.0;
  double max_ps = 5000.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total_gates = 0;  // maintained by build_histogram/merge; add() only bins
  std::uint64_t dropped = 0;      // records whose time difference fell outside the range

  std::size_t bin_count() const { return counts.size(); }
  double bin_center_ps(std::size_t index) const;
  std::uint64_t recorded() const;
  void add(double dt_ps);
  void merge(const CoincidenceHistogram& other);
};

CoincidenceHistogram make_histogram(double bin_width_ps, double min_ps, double max_ps);

CoincidenceHistogram build_histogram(std::span<const GateOutcome> records,
                                     double bin_width_ps,
                                     double min_ps,
                                     double max_ps);

struct WindowSelection {
  double center_ps = 0.0;
  double half_width_ps = 1000.0;

  void validate() const;
};

struct WindowCounts {
  std::uint64_t in_window = 0;
  std::uint64_t out_window = 0;
  std::string warning;  // non-empty when the window touches a side peak
};

// Partitions recorded counts by bin center; in_window + out_window equals
// recorded(), with dropped records tallied separately by the histogram.
// Passing side_peak_offset_ps > 0 enables the side-peak overlap warning;
// the selection is still performed.
WindowCounts window_counts(const CoincidenceHistogram& histogram,
                           const WindowSelection& window,
                           double side_peak_offset_ps = 0.0);

// CSV export, one row per gate: "gate_index,dt_ps,detectorA,detectorB".
// dt_ps is left empty for gates without a coincidence.
void write_time_tags_csv(std::span<const GateOutcome> records, std::ostream& out);

// CSV export: "bin_center_ps,count".
void write_histogram_csv(const CoincidenceHistogram& histogram, std::ostream& out);

}  // namespace fransim
