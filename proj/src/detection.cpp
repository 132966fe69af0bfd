#include "fransim/detection.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "fransim/units.hpp"

namespace fransim {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

// One raw 64-bit draw mapped to [0, 1) with 53-bit resolution. Used instead
// of a distribution object so the ten-draws-per-gate contract holds exactly.
double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(double u_radius, double u_angle) {
  const double r = std::sqrt(-2.0 * std::log(1.0 - u_radius));
  return r * std::cos(2.0 * std::numbers::pi * u_angle);
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

void DetectorSpec::validate() const {
  require(efficiency > 0.0 && efficiency <= 1.0, "detector efficiency must lie in (0, 1]");
  require(dark_count_probability_per_gate >= 0.0 && dark_count_probability_per_gate < 1.0,
          "dark count probability per gate must lie in [0, 1)");
  if (kind == DetectorKind::gated) {
    require(gate_width_ns > 0.0, "gate width must be positive for a gated detector");
  }
  require(gate_width_ns >= 0.0, "gate width must be non-negative");
}

DetectorSpec si_apd_default() {
  DetectorSpec spec;
  spec.kind = DetectorKind::free_running;
  spec.efficiency = 0.4;
  spec.dark_count_probability_per_gate = 0.0;
  spec.gate_width_ns = 0.0;
  return spec;
}

DetectorSpec ingaas_apd_default() {
  DetectorSpec spec;
  spec.kind = DetectorKind::gated;
  spec.efficiency = 0.1;
  spec.dark_count_probability_per_gate = 3.5e-5;
  spec.gate_width_ns = 2.5;
  return spec;
}

void PairGateModel::validate() const {
  require(pair_delivery_probability >= 0.0 && pair_delivery_probability <= 1.0,
          "pair delivery probability must lie in [0, 1]");
  require(p_left >= 0.0 && p_center >= 0.0 && p_right >= 0.0,
          "peak probabilities must be non-negative");
  require(p_left + p_center + p_right <= 0.5 + 1e-12,
          "peak probabilities may sum to at most 1/2 (both-monitored-port budget)");
  require(side_separation_s >= 0.0, "side peak separation must be non-negative");
  require(timing_jitter_sigma_s >= 0.0, "timing jitter sigma must be non-negative");
  require(doublepair_probability >= 0.0 && doublepair_probability < 1.0,
          "double pair probability must lie in [0, 1)");
}

GateOutcome simulate_gate_outcomes(const PairGateModel& model,
                                   const DetectorSpec& detector_signal,
                                   const DetectorSpec& detector_idler,
                                   double channel_t_signal,
                                   double channel_t_idler,
                                   std::mt19937_64& rng) {
  // Fixed draw layout; every slot is consumed before any branching.
  const double u_pair = u01(rng);
  const double u_port = u01(rng);
  const double u_fire_signal = u01(rng);
  const double u_fire_idler = u01(rng);
  const double u_dark = u01(rng);
  const double u_dark_time = u01(rng);
  const double u_double = u01(rng);
  const double u_double_time = u01(rng);
  const double u_jitter_radius = u01(rng);
  const double u_jitter_angle = u01(rng);

  require(detector_idler.kind == DetectorKind::gated,
          "the idler-side detector must be gated");
  require(channel_t_signal >= 0.0 && channel_t_signal <= 1.0 && channel_t_idler >= 0.0 &&
              channel_t_idler <= 1.0,
          "channel transmittances must lie in [0, 1]");

  GateOutcome out;
  const double gate_span_s = ns_to_s(detector_idler.gate_width_ns);
  const double survive_signal = channel_t_signal * detector_signal.efficiency;
  const double survive_idler = channel_t_idler * detector_idler.efficiency;

  if (u_pair < model.pair_delivery_probability) {
    const double p_both = model.p_left + model.p_center + model.p_right;
    // Cumulative port/timing outcome for the delivered pair. Each photon
    // reaches its monitored port with marginal probability 1/2, so the
    // single-sided remainders are (1/2 - p_both) each and the probability
    // that both photons leave through the unmonitored ports equals p_both.
    int peak = -1;  // 0 left, 1 center, 2 right
    bool signal_at_port = false;
    bool idler_at_port = false;
    if (u_port < model.p_left) {
      peak = 0;
      signal_at_port = idler_at_port = true;
    } else if (u_port < model.p_left + model.p_center) {
      peak = 1;
      signal_at_port = idler_at_port = true;
    } else if (u_port < p_both) {
      peak = 2;
      signal_at_port = idler_at_port = true;
    } else if (u_port < 0.5) {
      signal_at_port = true;
    } else if (u_port < 1.0 - p_both) {
      // Lone idler photon: with no trigger click there is no gate for it, so
      // it never registers directly; that population enters only through the
      // double-pair accidental term.
      idler_at_port = true;
    }

    out.signal_fired = signal_at_port && u_fire_signal < survive_signal;
    const bool idler_detected = idler_at_port && u_fire_idler < survive_idler;
    if (peak >= 0 && out.signal_fired && idler_detected) {
      out.idler_fired = true;
      out.pair_coincidence = true;
      out.pair_dt_s = static_cast<double>(peak - 1) * model.side_separation_s;
      if (model.timing_jitter_sigma_s > 0.0) {
        out.pair_dt_s +=
            model.timing_jitter_sigma_s * standard_normal(u_jitter_radius, u_jitter_angle);
      }
    }
  }

  // Accidentals reference the gate clock, so their time difference is uniform
  // over the gate span. They are drawn independently of the pair term.
  if (u_double < model.doublepair_probability) {
    out.idler_fired = true;
    out.doublepair_coincidence = true;
    out.doublepair_dt_s = (u_double_time - 0.5) * gate_span_s;
  }
  if (u_dark < detector_idler.dark_count_probability_per_gate) {
    out.idler_fired = true;
    out.dark_coincidence = true;
    out.dark_dt_s = (u_dark_time - 0.5) * gate_span_s;
  }
  return out;
}

int GateOutcome::coincidence_count() const {
  return (pair_coincidence ? 1 : 0) + (doublepair_coincidence ? 1 : 0) +
         (dark_coincidence ? 1 : 0);
}

bool GateOutcome::any_coincidence() const {
  return pair_coincidence || doublepair_coincidence || dark_coincidence;
}

std::vector<GateEvent> GateOutcome::events() const {
  std::vector<GateEvent> list;
  if (pair_coincidence) {
    list.push_back({pair_dt_s, EventProvenance::true_pair});
  }
  if (doublepair_coincidence) {
    list.push_back({doublepair_dt_s, EventProvenance::double_pair});
  }
  if (dark_coincidence) {
    list.push_back({dark_dt_s, EventProvenance::dark_count});
  }
  return list;
}

double CoincidenceHistogram::bin_center_ps(std::size_t index) const {
  return min_ps + (static_cast<double>(index) + 0.5) * bin_width_ps;
}

std::uint64_t CoincidenceHistogram::recorded() const {
  std::uint64_t total = 0;
  for (const std::uint64_t c : counts) {
    total += c;
  }
  return total;
}

void CoincidenceHistogram::add(double dt_ps) {
  if (dt_ps < min_ps || dt_ps >= max_ps) {
    ++dropped;
    return;
  }
  auto index = static_cast<std::size_t>((dt_ps - min_ps) / bin_width_ps);
  if (index >= counts.size()) {
    index = counts.size() - 1;
  }
  ++counts[index];
}

void CoincidenceHistogram::merge(const CoincidenceHistogram& other) {
  require(bin_width_ps == other.bin_width_ps && min_ps == other.min_ps && max_ps == other.max_ps,
          "histograms must share binning to merge");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] += other.counts[i];
  }
  total_gates += other.total_gates;
  dropped += other.dropped;
}

CoincidenceHistogram make_histogram(double bin_width_ps, double min_ps, double max_ps) {
  if (!(bin_width_ps > 0.0)) {
    throw std::domain_error("histogram bin width must be positive");
  }
  require(max_ps > min_ps, "histogram range must be non-empty");
  const double bins = (max_ps - min_ps) / bin_width_ps;
  const double rounded = std::round(bins);
  require(rounded >= 1.0 && std::abs(bins - rounded) < 1e-9 * rounded,
          "bin width must divide the histogram range evenly");
  CoincidenceHistogram histogram;
  histogram.bin_width_ps = bin_width_ps;
  histogram.min_ps = min_ps;
  histogram.max_ps = max_ps;
  histogram.counts.assign(static_cast<std::size_t>(rounded), 0);
  return histogram;
}

CoincidenceHistogram build_histogram(std::span<const GateOutcome> records,
                                     double bin_width_ps,
                                     double min_ps,
                                     double max_ps) {
  CoincidenceHistogram histogram = make_histogram(bin_width_ps, min_ps, max_ps);
  histogram.total_gates = records.size();
  for (const GateOutcome& record : records) {
    if (record.pair_coincidence) {
      histogram.add(s_to_ps(record.pair_dt_s));
    }
    if (record.doublepair_coincidence) {
      histogram.add(s_to_ps(record.doublepair_dt_s));
    }
    if (record.dark_coincidence) {
      histogram.add(s_to_ps(record.dark_dt_s));
    }
  }
  return histogram;
}

void WindowSelection::validate() const {
  require(std::isfinite(center_ps), "window center must be finite");
  require(std::isfinite(half_width_ps) && half_width_ps > 0.0,
          "window half width must be positive");
}

WindowCounts window_counts(const CoincidenceHistogram& histogram,
                           const WindowSelection& window,
                           double side_peak_offset_ps) {
  window.validate();
  const double low = window.center_ps - window.half_width_ps;
  const double high = window.center_ps + window.half_width_ps;
  require(low >= histogram.min_ps - 1e-9 && high <= histogram.max_ps + 1e-9,
          "window must lie within the histogram range");

  WindowCounts result;
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    const double center = histogram.bin_center_ps(i);
    if (center >= low && center <= high) {
      result.in_window += histogram.counts[i];
    } else {
      result.out_window += histogram.counts[i];
    }
  }
  if (side_peak_offset_ps > 0.0) {
    const bool touches_right = side_peak_offset_ps >= low && side_peak_offset_ps <= high;
    const bool touches_left = -side_peak_offset_ps >= low && -side_peak_offset_ps <= high;
    if (touches_left || touches_right) {
      result.warning = "window overlaps a side peak at +/-" +
                       format_double(side_peak_offset_ps) + " ps";
    }
  }
  return result;
}

void write_time_tags_csv(std::span<const GateOutcome> records, std::ostream& out) {
  out << "gate_index,dt_ps,detectorA,detectorB\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const GateOutcome& record = records[i];
    const std::string suffix = std::string(",") + (record.signal_fired ? "1" : "0") + ',' +
                               (record.idler_fired ? "1" : "0") + '\n';
    if (!record.any_coincidence()) {
      out << i << ',' << suffix;
      continue;
    }
    // One row per recorded event; the gate index repeats when a gate carries
    // both a pair coincidence and an accidental.
    for (const GateEvent& event : record.events()) {
      out << i << ',' << format_double(s_to_ps(event.dt_s)) << suffix;
    }
  }
}

void write_histogram_csv(const CoincidenceHistogram& histogram, std::ostream& out) {
  out << "bin_center_ps,count\n";
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    out << format_double(histogram.bin_center_ps(i)) << ',' << histogram.counts[i] << '\n';
  }
}

}  // namespace fransim
