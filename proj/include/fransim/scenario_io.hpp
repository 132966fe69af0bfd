#pragma once

#include <stdexcept>
#include <string>

#include "fransim/montecarlo.hpp"

namespace fransim {

// Raised for unreadable or malformed scenario text; the message carries
// file and line context where available.
class ScenarioParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loads a scenario from an INI-style text file:
//
//   # comment
//   label = eot_810
//   [source]
//   pump_wavelength_nm = 532
//   [channel_idler.hole_array]
//   permittivity = gold.tsv          # or default_gold, or fixed:re,im
//   [channel_idler.hole_array.resonance.main]
//   order_i = 1
//
// Keys carry their units in the name. Unknown or duplicate keys are errors
// with line diagnostics. Relative permittivity-table paths resolve against
// the scenario file's directory. The result is not validated here; callers
// run ScenarioSpec::validate to get hard errors and protocol warnings.
ScenarioSpec load_scenario(const std::string& path);

// Self-contained JSON rendering: resolved permittivity entries are embedded,
// so no file references remain. Deterministic (sorted keys, round-trip safe
// number formatting, trailing newline).
std::string scenario_to_json(const ScenarioSpec& scenario);

// Inverse of scenario_to_json; throws ScenarioParseError on malformed input.
ScenarioSpec scenario_from_json(const std::string& text);

// Fringe scan export with the generating scenario echoed alongside.
std::string fringe_to_json(const FringeScan& scan, const ScenarioSpec& scenario);

}  // namespace fransim
