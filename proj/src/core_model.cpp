#include "fransim/core_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fransim/units.hpp"

namespace fransim {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::string flag_line(const char* name, const RegimeFlag& flag) {
  std::ostringstream os;
  os << "  [" << (flag.pass ? "ok" : "FAIL") << "] " << name << ": "
     << flag.detail;
  return os.str();
}

}  // namespace

void SourceSpec::validate() const {
  require(pump_wavelength_nm > 0.0, "source: pump wavelength must be positive");
  require(signal_center_nm > 0.0, "source: signal wavelength must be positive");
  require(idler_center_nm > 0.0, "source: idler wavelength must be positive");
  require(signal_width_nm > 0.0, "source: signal bandwidth must be positive");
  require(idler_width_nm > 0.0, "source: idler bandwidth must be positive");
  require(pump_coherence_length_m > 0.0,
          "source: pump coherence length must be positive");
  require(pair_probability_per_gate >= 0.0 && pair_probability_per_gate < 1.0,
          "source: pair probability per gate must lie in [0, 1)");

  // Energy conservation for the pair: 1/ls + 1/li = 1/lp.
  const double inv_pump = 1.0 / pump_wavelength_nm;
  const double inv_pair = 1.0 / signal_center_nm + 1.0 / idler_center_nm;
  const double rel_err = std::abs(inv_pair - inv_pump) / inv_pump;
  if (rel_err > energy_match_rel_tol) {
    std::ostringstream os;
    os << "source: signal/idler wavelengths violate energy conservation: "
       << "1/" << signal_center_nm << " + 1/" << idler_center_nm
       << " differs from 1/" << pump_wavelength_nm << " by a relative "
       << rel_err << " (allowed " << energy_match_rel_tol << ")";
    throw std::invalid_argument(os.str());
  }
}

double InterferometerSpec::imbalance_time_s() const {
  return imbalance_length_m / kSpeedOfLight;
}

void InterferometerSpec::validate() const {
  require(imbalance_length_m > 0.0,
          "interferometer: arm imbalance must be positive");
  require(std::isfinite(phase_rad), "interferometer: phase must be finite");
  require(intrinsic_visibility >= 0.0 && intrinsic_visibility <= 1.0,
          "interferometer: intrinsic visibility must lie in [0, 1]");
  require(monitored_output == 'a' || monitored_output == 'b',
          "interferometer: monitored output must be 'a' or 'b'");
}

double coherence_time_s(double center_nm, double width_fwhm_nm) {
  if (!(center_nm > 0.0) || !(width_fwhm_nm > 0.0)) {
    throw std::domain_error(
        "coherence_time: wavelength and bandwidth must be positive");
  }
  const double lambda = nm_to_m(center_nm);
  const double dlambda = nm_to_m(width_fwhm_nm);
  return lambda * lambda / (kSpeedOfLight * dlambda);
}

double coherence_length_m(double center_nm, double width_fwhm_nm) {
  return kSpeedOfLight * coherence_time_s(center_nm, width_fwhm_nm);
}

FransonPeaks franson_peak_probabilities(double phase_sum_rad,
                                        double intrinsic_visibility) {
  if (!std::isfinite(phase_sum_rad)) {
    throw std::domain_error("franson peaks: phase must be finite");
  }
  if (!(intrinsic_visibility >= 0.0 && intrinsic_visibility <= 1.0)) {
    throw std::domain_error("franson peaks: visibility must lie in [0, 1]");
  }
  // Each two-photon path amplitude carries 1/4 (two 50/50 couplers per
  // photon). The side paths are time-distinguishable, the short-short and
  // long-long ones add coherently with the configured residual contrast.
  FransonPeaks peaks;
  peaks.left = 1.0 / 16.0;
  peaks.right = 1.0 / 16.0;
  peaks.center =
      (1.0 + intrinsic_visibility * std::cos(phase_sum_rad)) / 8.0;
  return peaks;
}

bool RegimeReport::all_pass() const {
  return pump_coherence.pass && photon_resolution.pass && imbalance_match.pass;
}

std::string RegimeReport::summary() const {
  std::ostringstream os;
  os << (all_pass() ? "franson regime: ok" : "franson regime: NOT satisfied")
     << "\n"
     << flag_line("pump coherence vs imbalance", pump_coherence) << "\n"
     << flag_line("imbalance vs photon coherence", photon_resolution) << "\n"
     << flag_line("analyzer imbalance match", imbalance_match);
  return os.str();
}

RegimeReport franson_regime_check(const SourceSpec& source,
                                  const InterferometerSpec& signal_analyzer,
                                  const InterferometerSpec& idler_analyzer,
                                  const RegimeCheckConfig& config) {
  source.validate();
  signal_analyzer.validate();
  idler_analyzer.validate();

  RegimeReport report;

  // (a) the pump must stay coherent across the imbalance, otherwise the
  // short-short and long-long pair paths become distinguishable.
  const double imbalance_m = std::max(signal_analyzer.imbalance_length_m,
                                      idler_analyzer.imbalance_length_m);
  {
    RegimeFlag& f = report.pump_coherence;
    f.value = source.pump_coherence_length_m;
    f.threshold = config.pump_margin_factor * imbalance_m;
    f.pass = f.value >= f.threshold;
    std::ostringstream os;
    os << "pump coherence length " << f.value << " m vs "
       << config.pump_margin_factor << " x " << imbalance_m << " m imbalance";
    f.detail = os.str();
  }

  // (b) the imbalance must exceed both single-photon coherence times, so
  // that no single photon interferes with itself in one analyzer.
  const double tau_signal =
      coherence_time_s(source.signal_center_nm, source.signal_width_nm);
  const double tau_idler =
      coherence_time_s(source.idler_center_nm, source.idler_width_nm);
  const double tau_max = std::max(tau_signal, tau_idler);
  const double imbalance_time = std::min(signal_analyzer.imbalance_time_s(),
                                         idler_analyzer.imbalance_time_s());
  {
    RegimeFlag& f = report.photon_resolution;
    f.value = imbalance_time;
    f.threshold = config.resolve_margin_factor * tau_max;
    f.pass = f.value >= f.threshold;
    std::ostringstream os;
    os << "imbalance time " << s_to_ps(f.value) << " ps vs "
       << config.resolve_margin_factor << " x " << s_to_ps(tau_max)
       << " ps photon coherence";
    f.detail = os.str();
  }

  // (c) the two analyzers must agree to within the photon coherence time,
  // otherwise the long-long and short-short amplitudes no longer overlap.
  {
    RegimeFlag& f = report.imbalance_match;
    const double tolerance = config.match_tolerance_s > 0.0
                                 ? config.match_tolerance_s
                                 : std::min(tau_signal, tau_idler);
    f.value = std::abs(signal_analyzer.imbalance_time_s() -
                       idler_analyzer.imbalance_time_s());
    f.threshold = tolerance;
    f.pass = f.value <= f.threshold;
    std::ostringstream os;
    os << "imbalance offset " << s_to_ps(f.value) << " ps vs tolerance "
       << s_to_ps(tolerance) << " ps";
    f.detail = os.str();
  }

  return report;
}

}  // namespace fransim
