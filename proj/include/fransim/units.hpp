#pragma once

#include <cmath>

namespace fransim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, vacuum

// Loss <-> transmittance with the usual power convention T = 10^(-dB/10).
inline double db_to_transmittance(double loss_db) {
  return std::pow(10.0, -loss_db / 10.0);
}

inline double transmittance_to_db(double transmittance) {
  return -10.0 * std::log10(transmittance);
}

// Internal computations run in SI (seconds, meters). Config files and
// exported artifacts carry the unit in the field name instead.
inline constexpr double nm_to_m(double nm) { return nm * 1e-9; }
inline constexpr double um_to_m(double um) { return um * 1e-6; }
inline constexpr double mm_to_m(double mm) { return mm * 1e-3; }
inline constexpr double ps_to_s(double ps) { return ps * 1e-12; }
inline constexpr double ns_to_s(double ns) { return ns * 1e-9; }
inline constexpr double s_to_ps(double s) { return s * 1e12; }
inline constexpr double s_to_ns(double s) { return s * 1e9; }

}  // namespace fransim
