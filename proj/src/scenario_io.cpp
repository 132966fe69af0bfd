#include "fransim/scenario_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "fransim/units.hpp"

namespace fransim {

namespace {

[[noreturn]] void fail(const std::string& context, int line,
                       const std::string& message) {
  std::ostringstream os;
  os << context;
  if (line > 0) {
    os << ":" << line;
  }
  os << ": " << message;
  throw ScenarioParseError(os.str());
}

std::string trim(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
    ++begin;
  }
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(text[end - 1]))) {
    --end;
  }
  return text.substr(begin, end - begin);
}

bool valid_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Flat key/value store with file order and per-key line numbers. Every key
// must be consumed by the interpretation pass; leftovers are reported as
// unknown keys so typos never silently fall back to defaults.
struct RawScenario {
  struct Value {
    std::string text;
    int line = 0;
    mutable bool used = false;
  };

  std::string path;
  std::vector<std::string> order;
  std::map<std::string, Value> values;

  const Value* find(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) {
      return nullptr;
    }
    it->second.used = true;
    return &it->second;
  }
};

RawScenario parse_raw(std::istream& in, const std::string& context) {
  RawScenario raw;
  raw.path = context;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(context, line_no, "unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        fail(context, line_no, "empty section name");
      }
      for (char c : section) {
        if (!valid_key_char(c) && c != '.') {
          fail(context, line_no,
               std::string("bad character '") + c + "' in section name");
        }
      }
      if (section.front() == '.' || section.back() == '.' ||
          section.find("..") != std::string::npos) {
        fail(context, line_no, "malformed section name '" + section + "'");
      }
      continue;
    }
    const std::size_t equals = line.find('=');
    if (equals == std::string::npos) {
      fail(context, line_no, "expected 'key = value' or '[section]'");
    }
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    if (key.empty()) {
      fail(context, line_no, "missing key before '='");
    }
    for (char c : key) {
      if (!valid_key_char(c)) {
        fail(context, line_no,
             std::string("bad character '") + c + "' in key '" + key + "'");
      }
    }
    if (value.empty()) {
      fail(context, line_no, "empty value for key '" + key + "'");
    }
    const std::string full_key = section.empty() ? key : section + "." + key;
    const auto [it, inserted] =
        raw.values.emplace(full_key, RawScenario::Value{value, line_no});
    if (!inserted) {
      std::ostringstream os;
      os << "duplicate key '" << full_key << "' (first set at line "
         << it->second.line << ")";
      fail(context, line_no, os.str());
    }
    raw.order.push_back(full_key);
  }
  return raw;
}

double parse_double(const RawScenario& raw, const RawScenario::Value& value,
                    const std::string& key) {
  char* end = nullptr;
  const double parsed = std::strtod(value.text.c_str(), &end);
  if (end == value.text.c_str() || *end != '\0' || !std::isfinite(parsed)) {
    fail(raw.path, value.line,
         "expected a finite number for '" + key + "', got '" + value.text + "'");
  }
  return parsed;
}

double get_double(const RawScenario& raw, const std::string& key,
                  double fallback) {
  const RawScenario::Value* value = raw.find(key);
  return value ? parse_double(raw, *value, key) : fallback;
}

std::uint64_t get_uint(const RawScenario& raw, const std::string& key,
                       std::uint64_t fallback) {
  const RawScenario::Value* value = raw.find(key);
  if (!value) {
    return fallback;
  }
  char* end = nullptr;
  const unsigned long long parsed =
      std::strtoull(value->text.c_str(), &end, 10);
  if (end == value->text.c_str() || *end != '\0' ||
      value->text.front() == '-') {
    fail(raw.path, value->line,
         "expected a non-negative integer for '" + key + "', got '" +
             value->text + "'");
  }
  return static_cast<std::uint64_t>(parsed);
}

std::string get_string(const RawScenario& raw, const std::string& key,
                       const std::string& fallback) {
  const RawScenario::Value* value = raw.find(key);
  return value ? value->text : fallback;
}

char get_port(const RawScenario& raw, const std::string& key, char fallback) {
  const RawScenario::Value* value = raw.find(key);
  if (!value) {
    return fallback;
  }
  if (value->text != "a" && value->text != "b") {
    fail(raw.path, value->line,
         "expected 'a' or 'b' for '" + key + "', got '" + value->text + "'");
  }
  return value->text.front();
}

void read_source(const RawScenario& raw, SourceSpec& source) {
  source.pump_wavelength_nm =
      get_double(raw, "source.pump_wavelength_nm", source.pump_wavelength_nm);
  source.pump_coherence_length_m = get_double(
      raw, "source.pump_coherence_length_m", source.pump_coherence_length_m);
  source.signal_center_nm =
      get_double(raw, "source.signal_center_nm", source.signal_center_nm);
  source.signal_width_nm =
      get_double(raw, "source.signal_width_nm", source.signal_width_nm);
  source.idler_center_nm =
      get_double(raw, "source.idler_center_nm", source.idler_center_nm);
  source.idler_width_nm =
      get_double(raw, "source.idler_width_nm", source.idler_width_nm);
  source.pair_probability_per_gate =
      get_double(raw, "source.pair_probability_per_gate",
                 source.pair_probability_per_gate);
  source.energy_match_rel_tol = get_double(raw, "source.energy_match_rel_tol",
                                           source.energy_match_rel_tol);
}

void read_interferometer(const RawScenario& raw, const std::string& section,
                         InterferometerSpec& itf) {
  itf.imbalance_length_m =
      get_double(raw, section + ".imbalance_length_m", itf.imbalance_length_m);
  itf.phase_rad = get_double(raw, section + ".phase_rad", itf.phase_rad);
  itf.intrinsic_visibility = get_double(raw, section + ".intrinsic_visibility",
                                        itf.intrinsic_visibility);
  itf.monitored_output =
      get_port(raw, section + ".monitored_output", itf.monitored_output);
}

void read_detector(const RawScenario& raw, const std::string& section,
                   DetectorSpec& detector) {
  const RawScenario::Value* kind = raw.find(section + ".kind");
  if (kind) {
    if (kind->text == "free_running") {
      detector.kind = DetectorKind::free_running;
    } else if (kind->text == "gated") {
      detector.kind = DetectorKind::gated;
    } else {
      fail(raw.path, kind->line,
           "expected 'free_running' or 'gated' for '" + section + ".kind'");
    }
  }
  detector.efficiency =
      get_double(raw, section + ".efficiency", detector.efficiency);
  detector.dark_count_probability_per_gate =
      get_double(raw, section + ".dark_count_probability_per_gate",
                 detector.dark_count_probability_per_gate);
  detector.gate_width_ns =
      get_double(raw, section + ".gate_width_ns", detector.gate_width_ns);
}

PermittivityTable read_permittivity(const RawScenario& raw,
                                    const RawScenario::Value& value,
                                    const std::filesystem::path& base_dir) {
  if (value.text == "default_gold") {
    return PermittivityTable::default_gold();
  }
  if (value.text.rfind("fixed:", 0) == 0) {
    double re = 0.0;
    double im = 0.0;
    if (std::sscanf(value.text.c_str() + 6, "%lf,%lf", &re, &im) != 2) {
      fail(raw.path, value.line,
           "cannot parse '" + value.text + "' as fixed:re,im");
    }
    // A single entry acts as a dispersionless constant; the anchor
    // wavelength is arbitrary.
    return PermittivityTable(
        std::vector<PermittivityTable::Entry>{{1000.0, {re, im}}});
  }
  std::filesystem::path table_path(value.text);
  if (table_path.is_relative()) {
    table_path = base_dir / table_path;
  }
  try {
    return PermittivityTable::load_file(table_path.string());
  } catch (const std::exception& error) {
    fail(raw.path, value.line, error.what());
  }
}

HoleArraySpec read_hole_array(const RawScenario& raw,
                              const std::string& section,
                              const std::filesystem::path& base_dir) {
  HoleArraySpec array;
  array.period_nm = get_double(raw, section + ".period_nm", array.period_nm);
  array.hole_diameter_nm =
      get_double(raw, section + ".hole_diameter_nm", array.hole_diameter_nm);
  array.film_thickness_nm =
      get_double(raw, section + ".film_thickness_nm", array.film_thickness_nm);
  array.substrate_index =
      get_double(raw, section + ".substrate_index", array.substrate_index);
  array.substrate_thickness_mm = get_double(
      raw, section + ".substrate_thickness_mm", array.substrate_thickness_mm);
  array.array_extent_um =
      get_double(raw, section + ".array_extent_um", array.array_extent_um);
  array.beam_diameter_um =
      get_double(raw, section + ".beam_diameter_um", array.beam_diameter_um);
  array.fp_modulation_depth = get_double(raw, section + ".fp_modulation_depth",
                                         array.fp_modulation_depth);
  array.direct_transmission_floor =
      get_double(raw, section + ".direct_transmission_floor",
                 array.direct_transmission_floor);

  const RawScenario::Value* table = raw.find(section + ".permittivity");
  if (table) {
    array.metal = read_permittivity(raw, *table, base_dir);
  } else {
    array.metal = PermittivityTable::default_gold();
  }

  // Resonances live in named subsections, kept in file order.
  const std::string prefix = section + ".resonance.";
  std::vector<std::string> names;
  for (const std::string& key : raw.order) {
    if (key.rfind(prefix, 0) != 0) {
      continue;
    }
    const std::size_t dot = key.find('.', prefix.size());
    if (dot == std::string::npos) {
      continue;  // leaves an unused key behind, reported as unknown
    }
    const std::string name = key.substr(prefix.size(), dot - prefix.size());
    bool seen = false;
    for (const std::string& existing : names) {
      seen = seen || existing == name;
    }
    if (!seen) {
      names.push_back(name);
    }
  }
  for (const std::string& name : names) {
    const std::string base = prefix + name;
    FanoResonance fano;
    fano.order.i = static_cast<int>(
        get_double(raw, base + ".order_i", static_cast<double>(fano.order.i)));
    fano.order.j = static_cast<int>(
        get_double(raw, base + ".order_j", static_cast<double>(fano.order.j)));
    fano.q = get_double(raw, base + ".q", fano.q);
    const RawScenario::Value* gamma = raw.find(base + ".gamma_nm");
    if (gamma && gamma->text != "auto") {
      fano.gamma_nm = parse_double(raw, *gamma, base + ".gamma_nm");
    }
    fano.peak_transmittance =
        get_double(raw, base + ".peak_transmittance", fano.peak_transmittance);
    array.resonances.push_back(fano);
  }
  return array;
}

LrsppWaveguideSpec read_lrspp(const RawScenario& raw,
                              const std::string& section) {
  LrsppWaveguideSpec stripe;
  stripe.stripe_length_cm =
      get_double(raw, section + ".stripe_length_cm", stripe.stripe_length_cm);
  stripe.stripe_width_um =
      get_double(raw, section + ".stripe_width_um", stripe.stripe_width_um);
  stripe.stripe_thickness_nm = get_double(raw, section + ".stripe_thickness_nm",
                                          stripe.stripe_thickness_nm);
  stripe.cladding_index =
      get_double(raw, section + ".cladding_index", stripe.cladding_index);
  stripe.propagation_loss_db_per_cm =
      get_double(raw, section + ".propagation_loss_db_per_cm",
                 stripe.propagation_loss_db_per_cm);
  stripe.coupling_loss_per_facet_db =
      get_double(raw, section + ".coupling_loss_per_facet_db",
                 stripe.coupling_loss_per_facet_db);
  return stripe;
}

bool section_present(const RawScenario& raw, const std::string& section) {
  const std::string prefix = section + ".";
  for (const std::string& key : raw.order) {
    if (key.rfind(prefix, 0) == 0) {
      return true;
    }
  }
  return false;
}

void read_channel(const RawScenario& raw, const std::string& section,
                  const std::filesystem::path& base_dir, ChannelSpec& channel) {
  const RawScenario::Value* kind = raw.find(section + ".kind");
  if (kind) {
    try {
      channel.kind = channel_kind_from_string(kind->text);
    } catch (const std::exception& error) {
      fail(raw.path, kind->line, error.what());
    }
  }
  channel.base_insertion_loss_db = get_double(
      raw, section + ".base_insertion_loss_db", channel.base_insertion_loss_db);
  channel.polarization_dependence_bound_db =
      get_double(raw, section + ".polarization_dependence_bound_db",
                 channel.polarization_dependence_bound_db);
  channel.polarization_angle_rad =
      get_double(raw, section + ".polarization_angle_rad",
                 channel.polarization_angle_rad);
  if (section_present(raw, section + ".hole_array")) {
    channel.hole_array = read_hole_array(raw, section + ".hole_array", base_dir);
  }
  if (section_present(raw, section + ".lrspp")) {
    channel.lrspp = read_lrspp(raw, section + ".lrspp");
  }
}

ScenarioSpec interpret(const RawScenario& raw,
                       const std::filesystem::path& base_dir) {
  ScenarioSpec scenario;
  scenario.label = get_string(raw, "label", scenario.label);
  scenario.gates_per_point =
      get_uint(raw, "gates_per_point", scenario.gates_per_point);
  scenario.seed = get_uint(raw, "seed", scenario.seed);
  scenario.timing_jitter_sigma_s =
      ps_to_s(get_double(raw, "timing_jitter_sigma_ps",
                         s_to_ps(scenario.timing_jitter_sigma_s)));
  const std::uint64_t phase_points =
      get_uint(raw, "phase_points", scenario.phase_points_rad.size());
  if (phase_points == 0) {
    const RawScenario::Value* value = raw.find("phase_points");
    fail(raw.path, value ? value->line : 0, "phase_points must be positive");
  }
  scenario.phase_points_rad =
      default_phase_grid(static_cast<std::size_t>(phase_points));

  read_source(raw, scenario.source);
  read_interferometer(raw, "interferometer_signal", scenario.itf_signal);
  read_interferometer(raw, "interferometer_idler", scenario.itf_idler);
  read_detector(raw, "detector_signal", scenario.detector_signal);
  read_detector(raw, "detector_idler", scenario.detector_idler);
  read_channel(raw, "channel_signal", base_dir, scenario.channel_signal);
  read_channel(raw, "channel_idler", base_dir, scenario.channel_idler);

  scenario.window.center_ps =
      get_double(raw, "window.center_ps", scenario.window.center_ps);
  scenario.window.half_width_ps =
      get_double(raw, "window.half_width_ps", scenario.window.half_width_ps);

  scenario.regime.pump_margin_factor = get_double(
      raw, "regime.pump_margin_factor", scenario.regime.pump_margin_factor);
  scenario.regime.resolve_margin_factor =
      get_double(raw, "regime.resolve_margin_factor",
                 scenario.regime.resolve_margin_factor);
  scenario.regime.match_tolerance_s = ps_to_s(get_double(
      raw, "regime.match_tolerance_ps", s_to_ps(scenario.regime.match_tolerance_s)));

  for (const std::string& key : raw.order) {
    const auto it = raw.values.find(key);
    if (!it->second.used) {
      fail(raw.path, it->second.line, "unknown key '" + key + "'");
    }
  }
  return scenario;
}

}  // namespace

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioParseError("cannot open scenario file " + path);
  }
  const RawScenario raw = parse_raw(in, path);
  return interpret(raw, std::filesystem::path(path).parent_path());
}

namespace {

nlohmann::json source_json(const SourceSpec& source) {
  nlohmann::json j;
  j["pump_wavelength_nm"] = source.pump_wavelength_nm;
  j["pump_coherence_length_m"] = source.pump_coherence_length_m;
  j["signal_center_nm"] = source.signal_center_nm;
  j["signal_width_nm"] = source.signal_width_nm;
  j["idler_center_nm"] = source.idler_center_nm;
  j["idler_width_nm"] = source.idler_width_nm;
  j["pair_probability_per_gate"] = source.pair_probability_per_gate;
  j["energy_match_rel_tol"] = source.energy_match_rel_tol;
  return j;
}

nlohmann::json interferometer_json(const InterferometerSpec& itf) {
  nlohmann::json j;
  j["imbalance_length_m"] = itf.imbalance_length_m;
  j["phase_rad"] = itf.phase_rad;
  j["intrinsic_visibility"] = itf.intrinsic_visibility;
  j["monitored_output"] = std::string(1, itf.monitored_output);
  return j;
}

nlohmann::json detector_json(const DetectorSpec& detector) {
  nlohmann::json j;
  j["kind"] = detector.kind == DetectorKind::gated ? "gated" : "free_running";
  j["efficiency"] = detector.efficiency;
  j["dark_count_probability_per_gate"] =
      detector.dark_count_probability_per_gate;
  j["gate_width_ns"] = detector.gate_width_ns;
  return j;
}

nlohmann::json channel_json(const ChannelSpec& channel) {
  nlohmann::json j;
  j["kind"] = to_string(channel.kind);
  j["base_insertion_loss_db"] = channel.base_insertion_loss_db;
  j["polarization_dependence_bound_db"] =
      channel.polarization_dependence_bound_db;
  j["polarization_angle_rad"] = channel.polarization_angle_rad;
  if (channel.hole_array) {
    const HoleArraySpec& array = *channel.hole_array;
    nlohmann::json a;
    a["period_nm"] = array.period_nm;
    a["hole_diameter_nm"] = array.hole_diameter_nm;
    a["film_thickness_nm"] = array.film_thickness_nm;
    a["substrate_index"] = array.substrate_index;
    a["substrate_thickness_mm"] = array.substrate_thickness_mm;
    a["array_extent_um"] = array.array_extent_um;
    a["beam_diameter_um"] = array.beam_diameter_um;
    a["fp_modulation_depth"] = array.fp_modulation_depth;
    a["direct_transmission_floor"] = array.direct_transmission_floor;
    a["metal"] = nlohmann::json::array();
    for (const PermittivityTable::Entry& entry : array.metal.entries()) {
      a["metal"].push_back({entry.wavelength_nm, entry.permittivity.real(),
                            entry.permittivity.imag()});
    }
    a["resonances"] = nlohmann::json::array();
    for (const FanoResonance& fano : array.resonances) {
      nlohmann::json r;
      r["order_i"] = fano.order.i;
      r["order_j"] = fano.order.j;
      r["q"] = fano.q;
      r["gamma_nm"] = fano.gamma_nm;
      r["peak_transmittance"] = fano.peak_transmittance;
      a["resonances"].push_back(r);
    }
    j["hole_array"] = a;
  }
  if (channel.lrspp) {
    const LrsppWaveguideSpec& stripe = *channel.lrspp;
    nlohmann::json s;
    s["stripe_length_cm"] = stripe.stripe_length_cm;
    s["stripe_width_um"] = stripe.stripe_width_um;
    s["stripe_thickness_nm"] = stripe.stripe_thickness_nm;
    s["cladding_index"] = stripe.cladding_index;
    s["propagation_loss_db_per_cm"] = stripe.propagation_loss_db_per_cm;
    s["coupling_loss_per_facet_db"] = stripe.coupling_loss_per_facet_db;
    j["lrspp"] = s;
  }
  return j;
}

nlohmann::json scenario_json_object(const ScenarioSpec& scenario) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["label"] = scenario.label;
  j["gates_per_point"] = scenario.gates_per_point;
  j["seed"] = scenario.seed;
  j["timing_jitter_sigma_s"] = scenario.timing_jitter_sigma_s;
  j["phase_points_rad"] = scenario.phase_points_rad;
  j["source"] = source_json(scenario.source);
  j["interferometer_signal"] = interferometer_json(scenario.itf_signal);
  j["interferometer_idler"] = interferometer_json(scenario.itf_idler);
  j["detector_signal"] = detector_json(scenario.detector_signal);
  j["detector_idler"] = detector_json(scenario.detector_idler);
  j["channel_signal"] = channel_json(scenario.channel_signal);
  j["channel_idler"] = channel_json(scenario.channel_idler);
  j["window"]["center_ps"] = scenario.window.center_ps;
  j["window"]["half_width_ps"] = scenario.window.half_width_ps;
  j["regime"]["pump_margin_factor"] = scenario.regime.pump_margin_factor;
  j["regime"]["resolve_margin_factor"] = scenario.regime.resolve_margin_factor;
  j["regime"]["match_tolerance_s"] = scenario.regime.match_tolerance_s;
  return j;
}

void source_from_json(const nlohmann::json& j, SourceSpec& source) {
  source.pump_wavelength_nm = j.at("pump_wavelength_nm").get<double>();
  source.pump_coherence_length_m =
      j.at("pump_coherence_length_m").get<double>();
  source.signal_center_nm = j.at("signal_center_nm").get<double>();
  source.signal_width_nm = j.at("signal_width_nm").get<double>();
  source.idler_center_nm = j.at("idler_center_nm").get<double>();
  source.idler_width_nm = j.at("idler_width_nm").get<double>();
  source.pair_probability_per_gate =
      j.at("pair_probability_per_gate").get<double>();
  source.energy_match_rel_tol = j.at("energy_match_rel_tol").get<double>();
}

void interferometer_from_json(const nlohmann::json& j,
                              InterferometerSpec& itf) {
  itf.imbalance_length_m = j.at("imbalance_length_m").get<double>();
  itf.phase_rad = j.at("phase_rad").get<double>();
  itf.intrinsic_visibility = j.at("intrinsic_visibility").get<double>();
  const std::string port = j.at("monitored_output").get<std::string>();
  if (port != "a" && port != "b") {
    throw ScenarioParseError("monitored_output must be 'a' or 'b', got '" +
                             port + "'");
  }
  itf.monitored_output = port.front();
}

void detector_from_json(const nlohmann::json& j, DetectorSpec& detector) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gated") {
    detector.kind = DetectorKind::gated;
  } else if (kind == "free_running") {
    detector.kind = DetectorKind::free_running;
  } else {
    throw ScenarioParseError("unknown detector kind '" + kind + "'");
  }
  detector.efficiency = j.at("efficiency").get<double>();
  detector.dark_count_probability_per_gate =
      j.at("dark_count_probability_per_gate").get<double>();
  detector.gate_width_ns = j.at("gate_width_ns").get<double>();
}

void channel_from_json(const nlohmann::json& j, ChannelSpec& channel) {
  channel.kind = channel_kind_from_string(j.at("kind").get<std::string>());
  channel.base_insertion_loss_db = j.at("base_insertion_loss_db").get<double>();
  channel.polarization_dependence_bound_db =
      j.at("polarization_dependence_bound_db").get<double>();
  channel.polarization_angle_rad =
      j.at("polarization_angle_rad").get<double>();
  if (j.contains("hole_array")) {
    const nlohmann::json& a = j.at("hole_array");
    HoleArraySpec array;
    array.period_nm = a.at("period_nm").get<double>();
    array.hole_diameter_nm = a.at("hole_diameter_nm").get<double>();
    array.film_thickness_nm = a.at("film_thickness_nm").get<double>();
    array.substrate_index = a.at("substrate_index").get<double>();
    array.substrate_thickness_mm = a.at("substrate_thickness_mm").get<double>();
    array.array_extent_um = a.at("array_extent_um").get<double>();
    array.beam_diameter_um = a.at("beam_diameter_um").get<double>();
    array.fp_modulation_depth = a.at("fp_modulation_depth").get<double>();
    array.direct_transmission_floor =
        a.at("direct_transmission_floor").get<double>();
    std::vector<PermittivityTable::Entry> entries;
    for (const nlohmann::json& row : a.at("metal")) {
      if (!row.is_array() || row.size() != 3) {
        throw ScenarioParseError(
            "metal entries must be [wavelength_nm, re, im] triples");
      }
      entries.push_back({row[0].get<double>(),
                         {row[1].get<double>(), row[2].get<double>()}});
    }
    array.metal = PermittivityTable(std::move(entries));
    for (const nlohmann::json& r : a.at("resonances")) {
      FanoResonance fano;
      fano.order.i = r.at("order_i").get<int>();
      fano.order.j = r.at("order_j").get<int>();
      fano.q = r.at("q").get<double>();
      fano.gamma_nm = r.at("gamma_nm").get<double>();
      fano.peak_transmittance = r.at("peak_transmittance").get<double>();
      array.resonances.push_back(fano);
    }
    channel.hole_array = std::move(array);
  }
  if (j.contains("lrspp")) {
    const nlohmann::json& s = j.at("lrspp");
    LrsppWaveguideSpec stripe;
    stripe.stripe_length_cm = s.at("stripe_length_cm").get<double>();
    stripe.stripe_width_um = s.at("stripe_width_um").get<double>();
    stripe.stripe_thickness_nm = s.at("stripe_thickness_nm").get<double>();
    stripe.cladding_index = s.at("cladding_index").get<double>();
    stripe.propagation_loss_db_per_cm =
        s.at("propagation_loss_db_per_cm").get<double>();
    stripe.coupling_loss_per_facet_db =
        s.at("coupling_loss_per_facet_db").get<double>();
    channel.lrspp = stripe;
  }
}

}  // namespace

std::string scenario_to_json(const ScenarioSpec& scenario) {
  return scenario_json_object(scenario).dump(2) + "\n";
}

ScenarioSpec scenario_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    ScenarioSpec scenario;
    scenario.label = j.at("label").get<std::string>();
    scenario.gates_per_point = j.at("gates_per_point").get<std::uint64_t>();
    scenario.seed = j.at("seed").get<std::uint64_t>();
    scenario.timing_jitter_sigma_s =
        j.at("timing_jitter_sigma_s").get<double>();
    scenario.phase_points_rad =
        j.at("phase_points_rad").get<std::vector<double>>();
    source_from_json(j.at("source"), scenario.source);
    interferometer_from_json(j.at("interferometer_signal"),
                             scenario.itf_signal);
    interferometer_from_json(j.at("interferometer_idler"), scenario.itf_idler);
    detector_from_json(j.at("detector_signal"), scenario.detector_signal);
    detector_from_json(j.at("detector_idler"), scenario.detector_idler);
    channel_from_json(j.at("channel_signal"), scenario.channel_signal);
    channel_from_json(j.at("channel_idler"), scenario.channel_idler);
    scenario.window.center_ps = j.at("window").at("center_ps").get<double>();
    scenario.window.half_width_ps =
        j.at("window").at("half_width_ps").get<double>();
    scenario.regime.pump_margin_factor =
        j.at("regime").at("pump_margin_factor").get<double>();
    scenario.regime.resolve_margin_factor =
        j.at("regime").at("resolve_margin_factor").get<double>();
    scenario.regime.match_tolerance_s =
        j.at("regime").at("match_tolerance_s").get<double>();
    return scenario;
  } catch (const nlohmann::json::exception& error) {
    throw ScenarioParseError(std::string("scenario JSON: ") + error.what());
  }
}

std::string fringe_to_json(const FringeScan& scan,
                           const ScenarioSpec& scenario) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["label"] = scan.label;
  j["engine"] = scan.engine;
  j["seed"] = scan.seed;
  j["scenario_hash"] = scan.scenario_hash;
  j["points"] = nlohmann::json::array();
  for (const FringePoint& point : scan.points) {
    nlohmann::json p;
    p["phase_rad"] = point.phase_rad;
    p["coincidences"] = point.coincidences;
    p["gates"] = point.gates;
    j["points"].push_back(p);
  }
  j["scenario"] = scenario_json_object(scenario);
  return j.dump(2) + "\n";
}

}  // namespace fransim
