#include "fransim/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <thread>

#include "fransim/units.hpp"

namespace fransim {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// Probability that a peak centered at mean_s (with optional Gaussian smear)
// lands inside the window [low_s, high_s].
double peak_capture(double mean_s, double sigma_s, double low_s, double high_s) {
  if (sigma_s <= 0.0) {
    return (mean_s >= low_s && mean_s <= high_s) ? 1.0 : 0.0;
  }
  const double scale = sigma_s * std::numbers::sqrt2;
  return 0.5 * (std::erf((high_s - mean_s) / scale) - std::erf((low_s - mean_s) / scale));
}

void append_channel(std::string& text, const std::string& prefix, const ChannelSpec& channel) {
  text += prefix + ".kind=" + to_string(channel.kind) + '\n';
  text += prefix + ".base_insertion_loss_db=" + format_double(channel.base_insertion_loss_db) + '\n';
  text += prefix + ".polarization_dependence_bound_db=" +
          format_double(channel.polarization_dependence_bound_db) + '\n';
  text += prefix + ".polarization_angle_rad=" + format_double(channel.polarization_angle_rad) + '\n';
  if (channel.hole_array.has_value()) {
    const HoleArraySpec& array = *channel.hole_array;
    text += prefix + ".array.period_nm=" + format_double(array.period_nm) + '\n';
    text += prefix + ".array.hole_diameter_nm=" + format_double(array.hole_diameter_nm) + '\n';
    text += prefix + ".array.film_thickness_nm=" + format_double(array.film_thickness_nm) + '\n';
    text += prefix + ".array.substrate_index=" + format_double(array.substrate_index) + '\n';
    text += prefix + ".array.substrate_thickness_mm=" +
            format_double(array.substrate_thickness_mm) + '\n';
    text += prefix + ".array.array_extent_um=" + format_double(array.array_extent_um) + '\n';
    text += prefix + ".array.beam_diameter_um=" + format_double(array.beam_diameter_um) + '\n';
    text += prefix + ".array.fp_modulation_depth=" + format_double(array.fp_modulation_depth) + '\n';
    text += prefix + ".array.direct_transmission_floor=" +
            format_double(array.direct_transmission_floor) + '\n';
    for (const PermittivityTable::Entry& entry : array.metal.entries()) {
      text += prefix + ".array.metal=" + format_double(entry.wavelength_nm) + ',' +
              format_double(entry.permittivity.real()) + ',' +
              format_double(entry.permittivity.imag()) + '\n';
    }
    for (const FanoResonance& resonance : array.resonances) {
      text += prefix + ".array.resonance=" + resonance.order.label() + ',' +
              format_double(resonance.q) + ',' + format_double(resonance.gamma_nm) + ',' +
              format_double(resonance.peak_transmittance) + '\n';
    }
  }
  if (channel.lrspp.has_value()) {
    const LrsppWaveguideSpec& guide = *channel.lrspp;
    text += prefix + ".lrspp.stripe_length_cm=" + format_double(guide.stripe_length_cm) + '\n';
    text += prefix + ".lrspp.stripe_width_um=" + format_double(guide.stripe_width_um) + '\n';
    text += prefix + ".lrspp.stripe_thickness_nm=" + format_double(guide.stripe_thickness_nm) + '\n';
    text += prefix + ".lrspp.cladding_index=" + format_double(guide.cladding_index) + '\n';
    text += prefix + ".lrspp.propagation_loss_db_per_cm=" +
            format_double(guide.propagation_loss_db_per_cm) + '\n';
    text += prefix + ".lrspp.coupling_loss_per_facet_db=" +
            format_double(guide.coupling_loss_per_facet_db) + '\n';
  }
}

void append_interferometer(std::string& text,
                           const std::string& prefix,
                           const InterferometerSpec& itf) {
  text += prefix + ".imbalance_length_m=" + format_double(itf.imbalance_length_m) + '\n';
  text += prefix + ".phase_rad=" + format_double(itf.phase_rad) + '\n';
  text += prefix + ".intrinsic_visibility=" + format_double(itf.intrinsic_visibility) + '\n';
  text += prefix + ".monitored_output=" + std::string(1, itf.monitored_output) + '\n';
}

void append_detector(std::string& text, const std::string& prefix, const DetectorSpec& detector) {
  text += prefix + ".kind=" +
          std::string(detector.kind == DetectorKind::gated ? "gated" : "free_running") + '\n';
  text += prefix + ".efficiency=" + format_double(detector.efficiency) + '\n';
  text += prefix + ".dark_count_probability_per_gate=" +
          format_double(detector.dark_count_probability_per_gate) + '\n';
  text += prefix + ".gate_width_ns=" + format_double(detector.gate_width_ns) + '\n';
}

struct PointResult {
  double coincidences = 0.0;
  CoincidenceHistogram histogram;
};

}  // namespace

std::vector<double> default_phase_grid(std::size_t count) {
  require(count >= 1, "phase grid needs at least one point");
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
  }
  return grid;
}

std::vector<std::string> ScenarioSpec::validate() const {
  source.validate();
  channel_signal.validate();
  channel_idler.validate();
  itf_signal.validate();
  itf_idler.validate();
  detector_signal.validate();
  detector_idler.validate();
  window.validate();

  require(detector_idler.kind == DetectorKind::gated, "the idler-side detector must be gated");
  require(!phase_points_rad.empty(), "at least one phase point is required");
  for (const double phase : phase_points_rad) {
    require(std::isfinite(phase), "phase points must be finite");
  }
  require(gates_per_point > 0, "gates per point must be positive");
  require(source.pair_probability_per_gate <= 0.25,
          "pair probability per gate must not exceed 0.25: the monitored-port "
          "bookkeeping delivers pairs at four times that rate");
  require(timing_jitter_sigma_s >= 0.0, "timing jitter must be non-negative");

  const double min_imbalance_ps =
      s_to_ps(std::min(itf_signal.imbalance_time_s(), itf_idler.imbalance_time_s()));
  require(window.half_width_ps < min_imbalance_ps / 2.0,
          "coincidence window must stay below half the analyzer imbalance time "
          "so that the side peaks are excluded");

  std::vector<std::string> warnings;
  const int elements = (channel_signal.kind != ChannelKind::identity ? 1 : 0) +
                       (channel_idler.kind != ChannelKind::identity ? 1 : 0);
  if (elements != 1) {
    warnings.push_back("protocol expects exactly one channel to carry a sample element; "
                       "this scenario has " +
                       std::to_string(elements));
  }
  return warnings;
}

ScenarioSpec reference_of(const ScenarioSpec& scenario) {
  ScenarioSpec reference = scenario;
  reference.label = scenario.label + "-reference";
  reference.channel_signal = strip_element(scenario.channel_signal);
  reference.channel_idler = strip_element(scenario.channel_idler);
  return reference;
}

GatePhysics gate_physics(const ScenarioSpec& scenario) {
  GatePhysics gp;
  gp.t_signal = channel_transmittance(scenario.channel_signal, scenario.source.signal_center_nm);
  gp.t_idler = channel_transmittance(scenario.channel_idler, scenario.source.idler_center_nm);
  gp.survive_signal = gp.t_signal * scenario.detector_signal.efficiency;
  gp.survive_idler = gp.t_idler * scenario.detector_idler.efficiency;

  const double mu = scenario.source.pair_probability_per_gate;
  gp.pair_delivery_probability = 4.0 * mu;
  gp.p_dark = scenario.detector_idler.dark_count_probability_per_gate;
  gp.p_doublepair = mu * mu * gp.survive_signal * gp.survive_idler;

  gp.contrast =
      scenario.itf_signal.intrinsic_visibility * scenario.itf_idler.intrinsic_visibility;
  const bool parity_flip =
      scenario.itf_signal.monitored_output != scenario.itf_idler.monitored_output;
  gp.phase_offset_rad = scenario.itf_signal.phase_rad + scenario.itf_idler.phase_rad +
                        (parity_flip ? std::numbers::pi : 0.0);
  gp.side_separation_s =
      0.5 * (scenario.itf_signal.imbalance_time_s() + scenario.itf_idler.imbalance_time_s());

  const double low_s = ps_to_s(scenario.window.center_ps - scenario.window.half_width_ps);
  const double high_s = ps_to_s(scenario.window.center_ps + scenario.window.half_width_ps);
  const double half_gate_s = 0.5 * ns_to_s(scenario.detector_idler.gate_width_ns);
  const double overlap =
      std::max(0.0, std::min(high_s, half_gate_s) - std::max(low_s, -half_gate_s));
  gp.window_fraction = overlap / (2.0 * half_gate_s);
  gp.capture_center = peak_capture(0.0, scenario.timing_jitter_sigma_s, low_s, high_s);
  gp.capture_left =
      peak_capture(-gp.side_separation_s, scenario.timing_jitter_sigma_s, low_s, high_s);
  gp.capture_right =
      peak_capture(gp.side_separation_s, scenario.timing_jitter_sigma_s, low_s, high_s);
  return gp;
}

std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t stream_index) {
  // splitmix64 of the index-shifted seed; cheap, well mixed, and stable.
  std::uint64_t z = base_seed + (stream_index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

FringeScan run_scan(const ScenarioSpec& scenario,
                    unsigned thread_count,
                    CoincidenceHistogram* histogram) {
  scenario.validate();
  const RegimeReport report = franson_regime_check(scenario.source, scenario.itf_signal,
                                                   scenario.itf_idler, scenario.regime);
  if (!report.all_pass()) {
    throw RegimeRefusal("scenario '" + scenario.label + "' fails the interference-regime check",
                        report);
  }

  const GatePhysics gp = gate_physics(scenario);
  const double low_s = ps_to_s(scenario.window.center_ps - scenario.window.half_width_ps);
  const double high_s = ps_to_s(scenario.window.center_ps + scenario.window.half_width_ps);

  const std::size_t point_count = scenario.phase_points_rad.size();
  std::vector<PointResult> results(point_count);

  const auto run_point = [&](std::size_t k) {
    const double phase = scenario.phase_points_rad[k];
    const FransonPeaks peaks =
        franson_peak_probabilities(phase + gp.phase_offset_rad, gp.contrast);
    PairGateModel model;
    model.pair_delivery_probability = gp.pair_delivery_probability;
    model.p_left = peaks.left;
    model.p_center = peaks.center;
    model.p_right = peaks.right;
    model.side_separation_s = gp.side_separation_s;
    model.timing_jitter_sigma_s = scenario.timing_jitter_sigma_s;
    model.doublepair_probability = gp.p_doublepair;
    model.validate();

    PointResult result;
    if (histogram != nullptr) {
      result.histogram = make_histogram(histogram->bin_width_ps, histogram->min_ps,
                                        histogram->max_ps);
      result.histogram.total_gates = scenario.gates_per_point;
    }
    std::mt19937_64 rng(stream_seed(scenario.seed, k));
    std::uint64_t in_window = 0;
    for (std::uint64_t gate = 0; gate < scenario.gates_per_point; ++gate) {
      const GateOutcome outcome = simulate_gate_outcomes(
          model, scenario.detector_signal, scenario.detector_idler, gp.t_signal, gp.t_idler, rng);
      if (outcome.pair_coincidence) {
        if (outcome.pair_dt_s >= low_s && outcome.pair_dt_s <= high_s) {
          ++in_window;
        }
        if (histogram != nullptr) {
          result.histogram.add(s_to_ps(outcome.pair_dt_s));
        }
      }
      if (outcome.doublepair_coincidence) {
        if (outcome.doublepair_dt_s >= low_s && outcome.doublepair_dt_s <= high_s) {
          ++in_window;
        }
        if (histogram != nullptr) {
          result.histogram.add(s_to_ps(outcome.doublepair_dt_s));
        }
      }
      if (outcome.dark_coincidence) {
        if (outcome.dark_dt_s >= low_s && outcome.dark_dt_s <= high_s) {
          ++in_window;
        }
        if (histogram != nullptr) {
          result.histogram.add(s_to_ps(outcome.dark_dt_s));
        }
      }
    }
    result.coincidences = static_cast<double>(in_window);
    return result;
  };

  const unsigned workers = std::max(1u, thread_count);
  if (workers <= 1 || point_count <= 1) {
    for (std::size_t k = 0; k < point_count; ++k) {
      results[k] = run_point(k);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t pool_size = std::min<std::size_t>(workers, point_count);
    pool.reserve(pool_size);
    for (std::size_t w = 0; w < pool_size; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t k = next.fetch_add(1);
          if (k >= point_count) {
            return;
          }
          results[k] = run_point(k);
        }
      });
    }
    for (std::thread& worker : pool) {
      worker.join();
    }
  }

  FringeScan scan;
  scan.label = scenario.label;
  scan.engine = "montecarlo";
  scan.seed = scenario.seed;
  scan.scenario_hash = scenario_hash_hex(scenario);
  scan.points.resize(point_count);
  for (std::size_t k = 0; k < point_count; ++k) {
    scan.points[k].phase_rad = scenario.phase_points_rad[k];
    scan.points[k].coincidences = results[k].coincidences;
    scan.points[k].gates = scenario.gates_per_point;
    if (histogram != nullptr) {
      histogram->merge(results[k].histogram);
    }
  }
  return scan;
}

FringeScan run_analytic(const ScenarioSpec& scenario) {
  scenario.validate();
  const RegimeReport report = franson_regime_check(scenario.source, scenario.itf_signal,
                                                   scenario.itf_idler, scenario.regime);
  if (!report.all_pass()) {
    throw RegimeRefusal("scenario '" + scenario.label + "' fails the interference-regime check",
                        report);
  }

  const GatePhysics gp = gate_physics(scenario);
  const double gates = static_cast<double>(scenario.gates_per_point);
  const double pair_scale =
      gp.pair_delivery_probability * gp.survive_signal * gp.survive_idler;
  const double floor_per_gate = (gp.p_dark + gp.p_doublepair) * gp.window_fraction;

  FringeScan scan;
  scan.label = scenario.label;
  scan.engine = "analytic";
  scan.seed = scenario.seed;
  scan.scenario_hash = scenario_hash_hex(scenario);
  scan.points.resize(scenario.phase_points_rad.size());
  for (std::size_t k = 0; k < scan.points.size(); ++k) {
    const double phase = scenario.phase_points_rad[k];
    const FransonPeaks peaks =
        franson_peak_probabilities(phase + gp.phase_offset_rad, gp.contrast);
    const double pair_in_window = pair_scale * (peaks.left * gp.capture_left +
                                                peaks.center * gp.capture_center +
                                                peaks.right * gp.capture_right);
    scan.points[k].phase_rad = phase;
    scan.points[k].coincidences = gates * (pair_in_window + floor_per_gate);
    scan.points[k].gates = scenario.gates_per_point;
  }
  return scan;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string scenario_canonical_string(const ScenarioSpec& scenario) {
  std::string text;
  text.reserve(2048);
  text += "label=" + scenario.label + '\n';
  text += "source.pump_wavelength_nm=" + format_double(scenario.source.pump_wavelength_nm) + '\n';
  text += "source.pump_coherence_length_m=" +
          format_double(scenario.source.pump_coherence_length_m) + '\n';
  text += "source.signal_center_nm=" + format_double(scenario.source.signal_center_nm) + '\n';
  text += "source.signal_width_nm=" + format_double(scenario.source.signal_width_nm) + '\n';
  text += "source.idler_center_nm=" + format_double(scenario.source.idler_center_nm) + '\n';
  text += "source.idler_width_nm=" + format_double(scenario.source.idler_width_nm) + '\n';
  text += "source.pair_probability_per_gate=" +
          format_double(scenario.source.pair_probability_per_gate) + '\n';
  text += "source.energy_match_rel_tol=" + format_double(scenario.source.energy_match_rel_tol) +
          '\n';
  append_channel(text, "channel_signal", scenario.channel_signal);
  append_channel(text, "channel_idler", scenario.channel_idler);
  append_interferometer(text, "itf_signal", scenario.itf_signal);
  append_interferometer(text, "itf_idler", scenario.itf_idler);
  append_detector(text, "detector_signal", scenario.detector_signal);
  append_detector(text, "detector_idler", scenario.detector_idler);
  text += "window.center_ps=" + format_double(scenario.window.center_ps) + '\n';
  text += "window.half_width_ps=" + format_double(scenario.window.half_width_ps) + '\n';
  text += "regime.pump_margin_factor=" + format_double(scenario.regime.pump_margin_factor) + '\n';
  text += "regime.resolve_margin_factor=" + format_double(scenario.regime.resolve_margin_factor) +
          '\n';
  text += "regime.match_tolerance_s=" + format_double(scenario.regime.match_tolerance_s) + '\n';
  text += "phase_points_rad=";
  for (std::size_t k = 0; k < scenario.phase_points_rad.size(); ++k) {
    if (k > 0) {
      text += ',';
    }
    text += format_double(scenario.phase_points_rad[k]);
  }
  text += '\n';
  text += "gates_per_point=" + std::to_string(scenario.gates_per_point) + '\n';
  text += "seed=" + std::to_string(scenario.seed) + '\n';
  text += "timing_jitter_sigma_s=" + format_double(scenario.timing_jitter_sigma_s) + '\n';
  return text;
}

std::string scenario_hash_hex(const ScenarioSpec& scenario) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016" PRIx64,
                fnv1a64(scenario_canonical_string(scenario)));
  return buffer;
}

void write_fringe_csv(const FringeScan& scan, std::ostream& out) {
  out << "phase_rad,coincidences,gates\n";
  for (const FringePoint& point : scan.points) {
    out << format_double(point.phase_rad) << ',' << format_double(point.coincidences) << ','
        << point.gates << '\n';
  }
}

}  // namespace fransim
