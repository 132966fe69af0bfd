#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fransim/analysis.hpp"
#include "fransim/core_model.hpp"
#include "fransim/montecarlo.hpp"
#include "fransim/plasmonic.hpp"
#include "fransim/scenario_io.hpp"

namespace {

using namespace fransim;

// Exit codes, stable for scripting:
//   0 success, 1 usage error, 2 configuration error,
//   3 interference-regime refusal, 4 runtime error.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRegime = 3;
constexpr int kExitRuntime = 4;

struct RunOptions {
  std::string scenario_path;
  std::string engine = "montecarlo";
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::uint64_t gates = 0;
  std::size_t phases = 0;
  unsigned threads = 1;
  bool seed_set = false;
  bool gates_set = false;
  bool phases_set = false;
  bool export_fringes = true;
  bool export_summary = true;
  bool export_histogram = false;
  bool export_spectrum = false;
};

struct SpectrumOptions {
  std::string scenario_path;
  std::string out_dir = ".";
  double lambda_min_nm = 0.0;
  double lambda_max_nm = 0.0;
  double lambda_step_nm = 0.25;
};

struct ValidateOptions {
  std::string scenario_path;
};

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
  std::printf("wrote %s\n", path.string().c_str());
}

template <typename Writer>
void write_with(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  writer(out);
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
  std::printf("wrote %s\n", path.string().c_str());
}

// The channel carrying the sample element, its operating wavelength, and the
// expected element-only transmittance ratio relative to the stripped
// reference (bench losses cancel).
double expected_transmittance_ratio(const ScenarioSpec& scenario) {
  const GatePhysics sample = gate_physics(scenario);
  const GatePhysics reference = gate_physics(reference_of(scenario));
  return (sample.t_signal * sample.t_idler) /
         (reference.t_signal * reference.t_idler);
}

const HoleArraySpec* find_hole_array(const ScenarioSpec& scenario,
                                     double* wavelength_nm) {
  if (scenario.channel_signal.hole_array) {
    *wavelength_nm = scenario.source.signal_center_nm;
    return &*scenario.channel_signal.hole_array;
  }
  if (scenario.channel_idler.hole_array) {
    *wavelength_nm = scenario.source.idler_center_nm;
    return &*scenario.channel_idler.hole_array;
  }
  return nullptr;
}

ScenarioSpec load_with_overrides(const RunOptions& options,
                                 std::vector<std::string>* warnings) {
  ScenarioSpec scenario = load_scenario(options.scenario_path);
  if (options.seed_set) {
    scenario.seed = options.seed;
  }
  if (options.gates_set) {
    scenario.gates_per_point = options.gates;
  }
  if (options.phases_set) {
    scenario.phase_points_rad = default_phase_grid(options.phases);
  }
  *warnings = scenario.validate();
  return scenario;
}

void print_summary_block(const ExperimentSummary& summary,
                         std::uint64_t seed) {
  std::printf("scenario %s [%s], seed %llu, hash %s\n", summary.label.c_str(),
              summary.engine.c_str(),
              static_cast<unsigned long long>(seed),
              summary.scenario_hash.c_str());
  const char* ref_clip = summary.reference.clipped ? " (clipped)" : "";
  const char* sample_clip = summary.sample.clipped ? " (clipped)" : "";
  std::printf("  reference visibility          %.4f +- %.4f%s\n",
              summary.reference.net_visibility,
              summary.reference.net_visibility_sigma, ref_clip);
  std::printf("  plasmon-assisted visibility   %.4f +- %.4f%s\n",
              summary.sample.net_visibility,
              summary.sample.net_visibility_sigma, sample_clip);
  std::printf("  transmittance ratio           %.4f +- %.4f (expected %.4f, %s)\n",
              summary.transmittance.ratio, summary.transmittance.ratio_sigma,
              summary.transmittance.expected,
              summary.transmittance.compatible ? "compatible at 2 sigma"
                                               : "NOT within 2 sigma");
}

struct EngineArtifacts {
  FringeScan sample;
  FringeScan reference;
  ExperimentSummary summary;
};

EngineArtifacts run_engine(const ScenarioSpec& scenario,
                           const ScenarioSpec& reference_spec,
                           const std::string& engine,
                           const RunOptions& options,
                           CoincidenceHistogram* histogram) {
  EngineArtifacts artifacts;
  if (engine == "montecarlo") {
    artifacts.sample = run_scan(scenario, options.threads, histogram);
    artifacts.reference = run_scan(reference_spec, options.threads);
  } else {
    artifacts.sample = run_analytic(scenario);
    artifacts.reference = run_analytic(reference_spec);
  }
  artifacts.summary.label = scenario.label;
  artifacts.summary.engine = engine;
  artifacts.summary.scenario_hash = artifacts.sample.scenario_hash;
  artifacts.summary.reference = net_visibility(
      fit_fringe(artifacts.reference), noise_floor(reference_spec));
  artifacts.summary.sample =
      net_visibility(fit_fringe(artifacts.sample), noise_floor(scenario));
  artifacts.summary.transmittance =
      transmittance_check(artifacts.reference, artifacts.sample,
                          expected_transmittance_ratio(scenario));
  artifacts.summary.sample.transmittance_ratio =
      artifacts.summary.transmittance.ratio;
  return artifacts;
}

void export_engine_artifacts(const EngineArtifacts& artifacts,
                             const ScenarioSpec& scenario,
                             const ScenarioSpec& reference_spec,
                             const std::filesystem::path& out_dir,
                             const RunOptions& options) {
  const std::string stem = scenario.label + "_" + artifacts.summary.engine;
  if (options.export_fringes) {
    write_with(out_dir / (stem + "_sample_fringes.csv"),
               [&](std::ostream& out) { write_fringe_csv(artifacts.sample, out); });
    write_with(out_dir / (stem + "_reference_fringes.csv"),
               [&](std::ostream& out) {
                 write_fringe_csv(artifacts.reference, out);
               });
    write_text_file(out_dir / (stem + "_sample_fringes.json"),
                    fringe_to_json(artifacts.sample, scenario));
    write_text_file(out_dir / (stem + "_reference_fringes.json"),
                    fringe_to_json(artifacts.reference, reference_spec));
  }
  if (options.export_summary) {
    write_text_file(out_dir / (stem + "_summary.json"),
                    summary_to_json(artifacts.summary));
  }
}

int cmd_run(const RunOptions& options) {
  std::vector<std::string> warnings;
  const ScenarioSpec scenario = load_with_overrides(options, &warnings);
  for (const std::string& warning : warnings) {
    std::fprintf(stderr, "warning: %s\n", warning.c_str());
  }
  const ScenarioSpec reference_spec = reference_of(scenario);

  const std::filesystem::path out_dir(options.out_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> engines;
  if (options.engine == "both") {
    engines = {"analytic", "montecarlo"};
  } else {
    engines = {options.engine};
  }

  CoincidenceHistogram histogram = make_histogram(100.0, -5000.0, 5000.0);
  const bool want_histogram = options.export_histogram;

  std::vector<EngineArtifacts> results;
  for (const std::string& engine : engines) {
    CoincidenceHistogram* sink =
        (want_histogram && engine == "montecarlo") ? &histogram : nullptr;
    results.push_back(
        run_engine(scenario, reference_spec, engine, options, sink));
    print_summary_block(results.back().summary, scenario.seed);
    export_engine_artifacts(results.back(), scenario, reference_spec, out_dir,
                            options);
  }

  if (want_histogram) {
    if (options.engine == "analytic") {
      std::fprintf(stderr,
                   "warning: histogram export needs the montecarlo engine\n");
    } else {
      write_with(out_dir / (scenario.label + "_montecarlo_histogram.csv"),
                 [&](std::ostream& out) {
                   write_histogram_csv(histogram, out);
                 });
    }
  }

  if (options.export_spectrum) {
    double wavelength = 0.0;
    const HoleArraySpec* array = find_hole_array(scenario, &wavelength);
    if (!array) {
      std::fprintf(stderr,
                   "warning: spectrum export needs a hole-array channel\n");
    } else {
      std::vector<double> grid;
      for (double w = wavelength - 150.0; w <= wavelength + 150.0; w += 0.25) {
        grid.push_back(w);
      }
      const TransmittanceSpectrum spectrum = transmittance_spectrum(*array, grid);
      const std::string path =
          (out_dir / (scenario.label + "_spectrum.csv")).string();
      write_spectrum_csv(path, spectrum);
      std::printf("wrote %s\n", path.c_str());
    }
  }

  if (options.engine == "both") {
    // The two engines must agree point by point within Poisson scatter.
    double max_z = 0.0;
    for (std::size_t k = 0; k < results[0].sample.points.size(); ++k) {
      const double analytic = results[0].sample.points[k].coincidences;
      const double sampled = results[1].sample.points[k].coincidences;
      const double z =
          std::abs(sampled - analytic) / std::sqrt(std::max(analytic, 1.0));
      max_z = std::max(max_z, z);
    }
    for (std::size_t k = 0; k < results[0].reference.points.size(); ++k) {
      const double analytic = results[0].reference.points[k].coincidences;
      const double sampled = results[1].reference.points[k].coincidences;
      const double z =
          std::abs(sampled - analytic) / std::sqrt(std::max(analytic, 1.0));
      max_z = std::max(max_z, z);
    }
    const bool agree = max_z < 5.0;
    std::printf("engine agreement: max |z| = %.2f across %zu points (%s)\n",
                max_z, 2 * results[0].sample.points.size(),
                agree ? "ok" : "DISAGREEMENT");
    if (!agree) {
      return kExitRuntime;
    }
  }
  return kExitOk;
}

int cmd_spectrum(const SpectrumOptions& options) {
  const ScenarioSpec scenario = load_scenario(options.scenario_path);
  double wavelength = 0.0;
  const HoleArraySpec* array = find_hole_array(scenario, &wavelength);
  if (!array) {
    throw std::invalid_argument(
        "scenario has no hole-array channel to evaluate");
  }
  double lo = options.lambda_min_nm;
  double hi = options.lambda_max_nm;
  if (lo <= 0.0 && hi <= 0.0) {
    lo = wavelength - 150.0;
    hi = wavelength + 150.0;
  }
  if (!(lo > 0.0) || !(hi > lo)) {
    throw std::invalid_argument("spectrum range must satisfy 0 < min < max");
  }
  if (!(options.lambda_step_nm > 0.0)) {
    throw std::invalid_argument("spectrum step must be positive");
  }
  std::vector<double> grid;
  for (double w = lo; w <= hi; w += options.lambda_step_nm) {
    grid.push_back(w);
  }

  for (const FanoResonance& fano : array->resonances) {
    const double resonance = sp_resonance_wavelength_nm(*array, fano.order);
    std::printf("resonance %s at %.3f nm\n", fano.order.label().c_str(),
                resonance);
  }
  std::printf("substrate etalon ripple period at %.1f nm: %.5f nm\n",
              wavelength,
              fabry_perot_ripple_period_nm(wavelength, array->substrate_index,
                                           array->substrate_thickness_mm));

  const TransmittanceSpectrum spectrum = transmittance_spectrum(*array, grid);
  for (const std::string& warning : spectrum.warnings) {
    std::fprintf(stderr, "warning: %s\n", warning.c_str());
  }
  const std::filesystem::path out_dir(options.out_dir);
  std::filesystem::create_directories(out_dir);
  const std::string path =
      (out_dir / (scenario.label + "_spectrum.csv")).string();
  write_spectrum_csv(path, spectrum);
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int cmd_validate(const ValidateOptions& options) {
  const ScenarioSpec scenario = load_scenario(options.scenario_path);
  std::printf("scenario %s, hash %s\n", scenario.label.c_str(),
              scenario_hash_hex(scenario).c_str());
  const std::vector<std::string> warnings = scenario.validate();
  for (const std::string& warning : warnings) {
    std::printf("warning: %s\n", warning.c_str());
  }
  const RegimeReport report = franson_regime_check(
      scenario.source, scenario.itf_signal, scenario.itf_idler,
      scenario.regime);
  const std::string summary = report.summary();
  std::printf("%s", summary.c_str());
  if (summary.empty() || summary.back() != '\n') {
    std::printf("\n");
  }
  if (!report.all_pass()) {
    std::printf("verdict: REFUSE (outside the two-photon interference regime)\n");
    return kExitRegime;
  }
  std::printf("verdict: ok\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Energy-time entanglement over plasmonic channels: Franson fringe "
      "simulator"};
  app.require_subcommand(1);

  RunOptions run_options;
  CLI::App* run = app.add_subcommand(
      "run", "Simulate fringe scans and fit visibilities");
  run->add_option("--scenario", run_options.scenario_path,
                  "scenario file (.scn)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--engine", run_options.engine,
                  "engine: analytic, montecarlo, or both")
      ->check(CLI::IsMember({"analytic", "montecarlo", "both"}));
  run->add_option("--out", run_options.out_dir, "output directory");
  run->add_option("--seed", run_options.seed, "override the scenario seed");
  run->add_option("--gates", run_options.gates,
                  "override gates per phase point")
      ->check(CLI::PositiveNumber);
  run->add_option("--phases", run_options.phases,
                  "override the phase-point count")
      ->check(CLI::PositiveNumber);
  run->add_option("--threads", run_options.threads, "worker thread count")
      ->check(CLI::Range(1u, 64u));
  run->add_flag("--export-histogram", run_options.export_histogram,
                "also write the coincidence-time histogram CSV");
  run->add_flag("--export-spectrum", run_options.export_spectrum,
                "also write the hole-array transmittance spectrum CSV");
  run->add_flag("!--no-fringes", run_options.export_fringes,
                "skip fringe CSV/JSON artifacts");
  run->add_flag("!--no-summary", run_options.export_summary,
                "skip the summary JSON artifact");

  SpectrumOptions spectrum_options;
  CLI::App* spectrum = app.add_subcommand(
      "spectrum", "Write a hole-array transmittance spectrum CSV");
  spectrum->add_option("--scenario", spectrum_options.scenario_path,
                       "scenario file (.scn)")
      ->required()
      ->check(CLI::ExistingFile);
  spectrum->add_option("--out", spectrum_options.out_dir, "output directory");
  spectrum->add_option("--lambda-min", spectrum_options.lambda_min_nm,
                       "grid start (nm)");
  spectrum->add_option("--lambda-max", spectrum_options.lambda_max_nm,
                       "grid end (nm)");
  spectrum->add_option("--lambda-step", spectrum_options.lambda_step_nm,
                       "grid step (nm)");

  ValidateOptions validate_options;
  CLI::App* validate = app.add_subcommand(
      "validate", "Check scenario invariants and the interference regime");
  validate->add_option("--scenario", validate_options.scenario_path,
                       "scenario file (.scn)")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? kExitOk : kExitUsage;
  }

  run_options.seed_set = run->count("--seed") > 0;
  run_options.gates_set = run->count("--gates") > 0;
  run_options.phases_set = run->count("--phases") > 0;

  try {
    if (run->parsed()) {
      return cmd_run(run_options);
    }
    if (spectrum->parsed()) {
      return cmd_spectrum(spectrum_options);
    }
    if (validate->parsed()) {
      return cmd_validate(validate_options);
    }
  } catch (const RegimeRefusal& refusal) {
    std::fprintf(stderr, "interference regime refusal: %s\n%s\n",
                 refusal.what(), refusal.report.summary().c_str());
    return kExitRegime;
  } catch (const ScenarioParseError& error) {
    std::fprintf(stderr, "configuration error: %s\n", error.what());
    return kExitConfig;
  } catch (const std::invalid_argument& error) {
    std::fprintf(stderr, "configuration error: %s\n", error.what());
    return kExitConfig;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
