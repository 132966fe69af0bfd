#include "fransim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace fransim {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

FringeFit fit_fringe(const FringeScan& scan) {
  const std::size_t n = scan.points.size();
  require(n >= 4, "fringe fit needs at least four phase points");

  double min_phase = scan.points.front().phase_rad;
  double max_phase = min_phase;
  for (const FringePoint& point : scan.points) {
    require(std::isfinite(point.phase_rad) && std::isfinite(point.coincidences),
            "fringe fit needs finite phases and counts");
    min_phase = std::min(min_phase, point.phase_rad);
    max_phase = std::max(max_phase, point.phase_rad);
  }
  require(max_phase - min_phase > kPi,
          "fringe fit needs phases spanning more than half a turn");

  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const FringePoint& point : scan.points) {
    const double weight = 1.0 / std::max(point.coincidences, 1.0);
    const Eigen::Vector3d x(1.0, std::cos(point.phase_rad),
                            std::sin(point.phase_rad));
    normal += weight * x * x.transpose();
    rhs += weight * point.coincidences * x;
  }

  const Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
  if (!lu.isInvertible()) {
    throw std::runtime_error("fringe fit design is rank deficient");
  }
  const Eigen::Vector3d beta = lu.solve(rhs);
  const Eigen::Matrix3d cov = lu.inverse();

  const double b = beta(0);
  const double c = beta(1);
  const double s = beta(2);
  const double amplitude = std::hypot(c, s);

  FringeFit fit;
  fit.offset = b;
  fit.amplitude = amplitude;
  fit.phase0_rad = (amplitude > 0.0) ? std::atan2(-s, c) : 0.0;
  fit.offset_sigma = std::sqrt(cov(0, 0));
  if (amplitude > 0.0) {
    const double var_a = (c * c * cov(1, 1) + s * s * cov(2, 2) +
                          2.0 * c * s * cov(1, 2)) /
                         (amplitude * amplitude);
    const double var_p = (s * s * cov(1, 1) + c * c * cov(2, 2) -
                          2.0 * c * s * cov(1, 2)) /
                         (amplitude * amplitude * amplitude * amplitude);
    fit.amplitude_sigma = std::sqrt(std::max(var_a, 0.0));
    fit.phase0_sigma = std::sqrt(std::max(var_p, 0.0));
    fit.amplitude_offset_covariance =
        (c * cov(0, 1) + s * cov(0, 2)) / amplitude;
  } else {
    // Degenerate direction: report the isotropic scale instead.
    fit.amplitude_sigma = std::sqrt(cov(1, 1) + cov(2, 2));
    fit.phase0_sigma = kPi;
    fit.amplitude_offset_covariance = 0.0;
  }

  double chi_square = 0.0;
  for (const FringePoint& point : scan.points) {
    const double weight = 1.0 / std::max(point.coincidences, 1.0);
    const double model = b + c * std::cos(point.phase_rad) +
                         s * std::sin(point.phase_rad);
    const double residual = point.coincidences - model;
    chi_square += weight * residual * residual;
  }
  fit.chi_square = chi_square;
  fit.degrees_of_freedom = n - 3;
  return fit;
}

double noise_floor(const ScenarioSpec& scenario) {
  const GatePhysics physics = gate_physics(scenario);
  return static_cast<double>(scenario.gates_per_point) *
         (physics.p_dark + physics.p_doublepair) * physics.window_fraction;
}

VisibilityResult net_visibility(const FringeFit& fit,
                                double noise_floor_counts,
                                double noise_floor_sigma) {
  if (!(noise_floor_counts >= 0.0)) {
    throw std::invalid_argument("noise floor must be non-negative");
  }
  if (!(noise_floor_sigma >= 0.0)) {
    throw std::invalid_argument("noise floor sigma must be non-negative");
  }
  const double denominator = fit.offset - noise_floor_counts;
  if (!(denominator > 0.0)) {
    throw std::domain_error(
        "degenerate signal: fitted offset does not clear the noise floor");
  }

  VisibilityResult result;
  result.raw_amplitude = fit.amplitude;
  result.offset = fit.offset;
  result.fitted_phase0_rad = fit.phase0_rad;
  result.noise_floor = noise_floor_counts;

  const double visibility = fit.amplitude / denominator;
  const double var =
      (fit.amplitude_sigma * fit.amplitude_sigma +
       visibility * visibility *
           (fit.offset_sigma * fit.offset_sigma +
            noise_floor_sigma * noise_floor_sigma) -
       2.0 * visibility * fit.amplitude_offset_covariance) /
      (denominator * denominator);
  result.net_visibility_sigma = std::sqrt(std::max(var, 0.0));
  if (visibility > 1.0) {
    result.net_visibility = 1.0;
    result.clipped = true;
  } else {
    result.net_visibility = visibility;
    result.clipped = false;
  }
  return result;
}

TransmittanceCheck transmittance_check(const FringeScan& reference,
                                       const FringeScan& sample,
                                       double expected_transmittance) {
  if (reference.points.size() != sample.points.size()) {
    throw std::domain_error("scans have different phase grids");
  }
  for (std::size_t i = 0; i < reference.points.size(); ++i) {
    if (reference.points[i].phase_rad != sample.points[i].phase_rad) {
      throw std::domain_error("scans have different phase grids");
    }
    if (reference.points[i].gates != sample.points[i].gates) {
      throw std::domain_error("scans have different gates per point");
    }
  }
  if (!(expected_transmittance > 0.0)) {
    throw std::invalid_argument("expected transmittance must be positive");
  }

  const FringeFit fit_reference = fit_fringe(reference);
  const FringeFit fit_sample = fit_fringe(sample);

  const double max_reference = fit_reference.offset + fit_reference.amplitude;
  const double max_sample = fit_sample.offset + fit_sample.amplitude;
  if (!(max_reference > 0.0)) {
    throw std::domain_error("reference fringe maximum is not positive");
  }

  const double var_max_reference =
      fit_reference.offset_sigma * fit_reference.offset_sigma +
      fit_reference.amplitude_sigma * fit_reference.amplitude_sigma +
      2.0 * fit_reference.amplitude_offset_covariance;
  const double var_max_sample =
      fit_sample.offset_sigma * fit_sample.offset_sigma +
      fit_sample.amplitude_sigma * fit_sample.amplitude_sigma +
      2.0 * fit_sample.amplitude_offset_covariance;

  TransmittanceCheck check;
  check.ratio = max_sample / max_reference;
  const double rel_var =
      std::max(var_max_sample, 0.0) / (max_sample * max_sample) +
      std::max(var_max_reference, 0.0) / (max_reference * max_reference);
  check.ratio_sigma = std::abs(check.ratio) * std::sqrt(rel_var);
  check.expected = expected_transmittance;
  check.compatible =
      std::abs(check.ratio - expected_transmittance) <= 2.0 * check.ratio_sigma;
  return check;
}

namespace {

nlohmann::json visibility_to_json(const VisibilityResult& visibility) {
  nlohmann::json j;
  j["raw_amplitude"] = visibility.raw_amplitude;
  j["offset"] = visibility.offset;
  j["fitted_phase0_rad"] = visibility.fitted_phase0_rad;
  j["noise_floor"] = visibility.noise_floor;
  j["net_visibility"] = visibility.net_visibility;
  j["net_visibility_sigma"] = visibility.net_visibility_sigma;
  j["clipped"] = visibility.clipped;
  if (visibility.transmittance_ratio.has_value()) {
    j["transmittance_ratio"] = *visibility.transmittance_ratio;
  }
  return j;
}

}  // namespace

std::string summary_to_json(const ExperimentSummary& summary) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["label"] = summary.label;
  j["engine"] = summary.engine;
  j["scenario_hash"] = summary.scenario_hash;
  j["reference"] = visibility_to_json(summary.reference);
  j["sample"] = visibility_to_json(summary.sample);
  j["transmittance"]["ratio"] = summary.transmittance.ratio;
  j["transmittance"]["ratio_sigma"] = summary.transmittance.ratio_sigma;
  j["transmittance"]["expected"] = summary.transmittance.expected;
  j["transmittance"]["compatible"] = summary.transmittance.compatible;
  return j.dump(2) + "\n";
}

}  // namespace fransim
