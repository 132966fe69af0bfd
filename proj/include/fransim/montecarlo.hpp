#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fransim/core_model.hpp"
#include "fransim/detection.hpp"
#include "fransim/plasmonic.hpp"

namespace fransim {

// Equally spaced phases over one full turn, starting at zero.
std::vector<double> default_phase_grid(std::size_t count = 16);

struct ScenarioSpec {
  std::string label = "unnamed";
  SourceSpec source;
  ChannelSpec channel_signal;
  ChannelSpec channel_idler;
  InterferometerSpec itf_signal;
  InterferometerSpec itf_idler;
  DetectorSpec detector_signal = si_apd_default();
  DetectorSpec detector_idler = ingaas_apd_default();
  WindowSelection window;
  RegimeCheckConfig regime;
  std::vector<double> phase_points_rad = default_phase_grid();
  std::uint64_t gates_per_point = 1000000;
  std::uint64_t seed = 1;
  double timing_jitter_sigma_s = 0.0;  // s, recorded pair timing smear

  // Throws std::invalid_argument on hard configuration errors and returns
  // soft protocol warnings (e.g. both channels carrying sample elements).
  std::vector<std::string> validate() const;
};

// Same scenario with the sample elements removed from both channels; fixed
// per-channel losses, the seed, and all source/analyzer settings stay put so
// the two runs share their random draws point for point.
ScenarioSpec reference_of(const ScenarioSpec& scenario);

// Per-gate constants shared by the sampling and expectation engines.
//
// The simulation tracks one monitored output per analyzer; a produced pair
// lands on that port combination with average probability 1/4, so the
// delivered-pair probability handed to the gate simulation is 4x the source
// pair probability. This keeps the three conditional peak probabilities at
// their textbook normalization while the expected coincidence rate stays
// proportional to the source pair probability itself.
struct GatePhysics {
  double t_signal = 1.0;  // channel transmittance at the signal wavelength
  double t_idler = 1.0;
  double survive_signal = 1.0;  // transmittance times detector efficiency
  double survive_idler = 1.0;
  double pair_delivery_probability = 0.0;  // 4 x pair probability per gate
  double p_dark = 0.0;                     // idler dark counts per gate
  double p_doublepair = 0.0;               // mu^2 x survive_signal x survive_idler
  double contrast = 1.0;                   // product of analyzer intrinsic visibilities
  double phase_offset_rad = 0.0;  // static analyzer phases plus monitored-port parity
  double side_separation_s = 0.0;  // s, mean analyzer imbalance time
  double window_fraction = 0.0;    // window capture of gate-uniform accidentals
  double capture_center = 0.0;     // window capture of the central peak (jitter aware)
  double capture_left = 0.0;
  double capture_right = 0.0;
};

GatePhysics gate_physics(const ScenarioSpec& scenario);

struct FringePoint {
  double phase_rad = 0.0;
  double coincidences = 0.0;  // in-window events; expectation for the analytic engine
  std::uint64_t gates = 0;
};

struct FringeScan {
  std::string label;
  std::string engine;  // "montecarlo" or "analytic"
  std::uint64_t seed = 0;
  std::string scenario_hash;  // 16 hex digits
  std::vector<FringePoint> points;
};

// Thrown when a scenario fails the interference-regime check.
class RegimeRefusal : public std::runtime_error {
 public:
  RegimeRefusal(const std::string& message, RegimeReport report_in)
      : std::runtime_error(message), report(std::move(report_in)) {}

  RegimeReport report;
};

// Samples gates_per_point gates at every phase point and records in-window
// coincidence counts. Deterministic in the scenario seed, independent of
// thread_count: point k always consumes its own sub-stream. When histogram
// is non-null it must be freshly made and receives every recorded event
// (windowed or not) merged across points in phase order.
FringeScan run_scan(const ScenarioSpec& scenario,
                    unsigned thread_count = 1,
                    CoincidenceHistogram* histogram = nullptr);

// Closed-form expectation of run_scan, exactly sinusoidal in the scanned
// phase: gates x [delivery x survive products x (peak capture terms) +
// (dark + double pair) x window fraction].
FringeScan run_analytic(const ScenarioSpec& scenario);

// Deterministic sub-stream seed for one unit of work; depends only on the
// base seed and the stream index so paired scenario runs stay aligned.
std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t stream_index);

std::uint64_t fnv1a64(std::string_view text);

// Canonical key=value rendering of every physics-relevant scenario field,
// used for run hashing and round-trip identity checks.
std::string scenario_canonical_string(const ScenarioSpec& scenario);

std::string scenario_hash_hex(const ScenarioSpec& scenario);

// CSV export: "phase_rad,coincidences,gates".
void write_fringe_csv(const FringeScan& scan, std::ostream& out);

}  // namespace fransim
