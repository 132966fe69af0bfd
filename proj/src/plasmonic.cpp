#include "fransim/plasmonic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fransim/units.hpp"

namespace fransim {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Unit-height Fano profile in the reduced detuning eps = 2(l - l0)/gamma.
// The raw lineshape (q+eps)^2/(1+eps^2) tops out at 1+q^2, so dividing by
// that makes peak_transmittance below mean what it says.
double fano_profile(double wavelength_nm, double resonance_nm,
                    double gamma_nm, double q) {
  const double eps = 2.0 * (wavelength_nm - resonance_nm) / gamma_nm;
  const double num = (q + eps) * (q + eps);
  return num / ((1.0 + q * q) * (1.0 + eps * eps));
}

struct ResolvedResonance {
  double wavelength_nm = 0.0;
  double gamma_nm = 0.0;
  double q = 0.0;
  double peak_transmittance = 0.0;
};

std::vector<ResolvedResonance> resolve_resonances(const HoleArraySpec& array) {
  std::vector<ResolvedResonance> out;
  out.reserve(array.resonances.size());
  for (const auto& fano : array.resonances) {
    ResolvedResonance r;
    r.wavelength_nm = sp_resonance_wavelength_nm(array, fano.order);
    r.gamma_nm = fano.gamma_nm > 0.0
                     ? fano.gamma_nm
                     : default_fano_width_nm(array.hole_diameter_nm,
                                             array.period_nm);
    r.q = fano.q;
    r.peak_transmittance = fano.peak_transmittance;
    out.push_back(r);
  }
  return out;
}

double etalon_factor(const HoleArraySpec& array, double wavelength_nm) {
  if (array.fp_modulation_depth <= 0.0) return 1.0;
  const double optical_path_nm =
      array.substrate_index * array.substrate_thickness_mm * 1e6;
  const double phase = 4.0 * M_PI * optical_path_nm / wavelength_nm;
  return 1.0 + array.fp_modulation_depth * std::cos(phase);
}

double evaluate_array(const HoleArraySpec& array,
                      const std::vector<ResolvedResonance>& resonances,
                      double wavelength_nm, bool* clipped) {
  double t = array.direct_transmission_floor;
  for (const auto& r : resonances) {
    t += r.peak_transmittance *
         fano_profile(wavelength_nm, r.wavelength_nm, r.gamma_nm, r.q);
  }
  t *= etalon_factor(array, wavelength_nm);
  if (clipped) *clipped = t < 0.0 || t > 1.0;
  return std::clamp(t, 0.0, 1.0);
}

}  // namespace

PermittivityTable::PermittivityTable(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  require(!entries_.empty(), "permittivity table: no entries");
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) {
              return a.wavelength_nm < b.wavelength_nm;
            });
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    require(entries_[k].wavelength_nm > 0.0,
            "permittivity table: wavelengths must be positive");
    if (k > 0) {
      require(entries_[k].wavelength_nm > entries_[k - 1].wavelength_nm,
              "permittivity table: duplicate wavelength entry");
    }
  }
}

std::complex<double> PermittivityTable::at(double wavelength_nm) const {
  if (entries_.empty()) {
    throw std::out_of_range("permittivity table: empty table");
  }
  if (entries_.size() == 1) return entries_.front().permittivity;
  if (wavelength_nm < min_wavelength_nm() ||
      wavelength_nm > max_wavelength_nm()) {
    std::ostringstream os;
    os << "permittivity table: " << wavelength_nm
       << " nm outside table range [" << min_wavelength_nm() << ", "
       << max_wavelength_nm() << "] nm";
    throw std::out_of_range(os.str());
  }
  const auto upper = std::lower_bound(
      entries_.begin(), entries_.end(), wavelength_nm,
      [](const Entry& e, double w) { return e.wavelength_nm < w; });
  if (upper == entries_.begin()) return upper->permittivity;
  const auto lower = upper - 1;
  if (upper == entries_.end()) return lower->permittivity;
  const double span = upper->wavelength_nm - lower->wavelength_nm;
  const double frac = (wavelength_nm - lower->wavelength_nm) / span;
  return lower->permittivity +
         frac * (upper->permittivity - lower->permittivity);
}

double PermittivityTable::min_wavelength_nm() const {
  if (entries_.empty()) throw std::out_of_range("permittivity table: empty");
  return entries_.front().wavelength_nm;
}

double PermittivityTable::max_wavelength_nm() const {
  if (entries_.empty()) throw std::out_of_range("permittivity table: empty");
  return entries_.back().wavelength_nm;
}

PermittivityTable PermittivityTable::default_gold() {
  return PermittivityTable({{700.0, {-16.8, 1.1}},
                            {810.0, {-24.1, 1.5}},
                            {1550.0, {-115.0, 11.6}}});
}

PermittivityTable PermittivityTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("permittivity table: cannot open " + path);
  }
  std::vector<Entry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double wavelength = 0.0;
    std::string eps_token;
    if (!(ls >> wavelength)) continue;  // blank or comment-only line
    if (!(ls >> eps_token)) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected \"wavelength re,im\"";
      throw std::runtime_error(os.str());
    }
    double re = 0.0, im = 0.0;
    if (std::sscanf(eps_token.c_str(), "%lf,%lf", &re, &im) != 2) {
      std::ostringstream os;
      os << path << ":" << line_no << ": cannot parse permittivity \""
         << eps_token << "\" as re,im";
      throw std::runtime_error(os.str());
    }
    entries.push_back({wavelength, {re, im}});
  }
  if (entries.empty()) {
    throw std::runtime_error("permittivity table: no entries in " + path);
  }
  return PermittivityTable(std::move(entries));
}

double LatticeOrder::magnitude() const {
  return std::hypot(static_cast<double>(i), static_cast<double>(j));
}

std::string LatticeOrder::label() const {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

double default_fano_width_nm(double hole_diameter_nm, double period_nm) {
  require(hole_diameter_nm > 0.0 && period_nm > 0.0,
          "fano width: diameter and period must be positive");
  // Radiative coupling of the surface mode grows with the hole area, so the
  // width scales like d^2 at fixed period. Anchored to give ~77 nm for
  // d = 600 nm holes in a 1400 nm lattice.
  return 0.3 * hole_diameter_nm * hole_diameter_nm / period_nm;
}

double sp_resonance_wavelength_nm(double period_nm, const LatticeOrder& order,
                                  std::complex<double> metal_permittivity,
                                  double dielectric_constant) {
  require(period_nm > 0.0, "sp resonance: period must be positive");
  require(order.i != 0 || order.j != 0,
          "sp resonance: order (0,0) has no momentum");
  require(dielectric_constant > 0.0,
          "sp resonance: dielectric constant must be positive");
  const std::complex<double> product =
      metal_permittivity * dielectric_constant;
  const std::complex<double> sum =
      metal_permittivity + dielectric_constant;
  const double index = std::sqrt(product / sum).real();
  const double wavelength = period_nm / order.magnitude() * index;
  if (!std::isfinite(wavelength) || wavelength <= 0.0) {
    throw std::domain_error(
        "sp resonance: permittivities do not support a bound surface mode");
  }
  return wavelength;
}

double sp_resonance_wavelength_nm(const HoleArraySpec& array,
                                  const LatticeOrder& order) {
  const double eps_d = array.substrate_index * array.substrate_index;
  if (array.metal.dispersionless()) {
    return sp_resonance_wavelength_nm(array.period_nm, order,
                                      array.metal.at(0.0), eps_d);
  }

  const double lo = array.metal.min_wavelength_nm();
  const double hi = array.metal.max_wavelength_nm();
  // Start from the substrate light line folded by the lattice.
  double lambda = std::clamp(
      array.period_nm / order.magnitude() * array.substrate_index, lo, hi);

  constexpr int kMaxIterations = 100;
  constexpr double kToleranceNm = 1e-3;
  constexpr double kDamping = 0.5;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const double next = sp_resonance_wavelength_nm(
        array.period_nm, order, array.metal.at(lambda), eps_d);
    if (next < lo || next > hi) {
      std::ostringstream os;
      os << "sp resonance " << order.label() << ": fixed point at " << next
         << " nm leaves the permittivity table range [" << lo << ", " << hi
         << "] nm";
      throw std::out_of_range(os.str());
    }
    if (std::abs(next - lambda) < kToleranceNm) return next;
    lambda += kDamping * (next - lambda);
  }
  std::ostringstream os;
  os << "sp resonance " << order.label() << ": fixed point iteration did not "
     << "converge within " << kMaxIterations << " steps";
  throw std::runtime_error(os.str());
}

std::vector<double> sp_resonance_wavelengths_nm(
    const HoleArraySpec& array, std::span<const LatticeOrder> orders) {
  std::vector<double> out;
  out.reserve(orders.size());
  for (const auto& order : orders) {
    out.push_back(sp_resonance_wavelength_nm(array, order));
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

double fabry_perot_ripple_period_nm(double wavelength_nm,
                                    double substrate_index,
                                    double substrate_thickness_mm) {
  require(wavelength_nm > 0.0 && substrate_index > 0.0 &&
              substrate_thickness_mm > 0.0,
          "fp ripple: arguments must be positive");
  const double thickness_nm = substrate_thickness_mm * 1e6;
  return wavelength_nm * wavelength_nm /
         (2.0 * substrate_index * thickness_nm);
}

void HoleArraySpec::validate() const {
  require(period_nm > 0.0, "hole array: period must be positive");
  require(hole_diameter_nm > 0.0 && hole_diameter_nm < period_nm,
          "hole array: hole diameter must lie in (0, period)");
  require(film_thickness_nm > 0.0,
          "hole array: film thickness must be positive");
  require(substrate_index > 1.0,
          "hole array: substrate index must exceed 1");
  require(substrate_thickness_mm > 0.0,
          "hole array: substrate thickness must be positive");
  require(array_extent_um > 0.0, "hole array: array extent must be positive");
  require(beam_diameter_um > 0.0, "hole array: beam diameter must be positive");
  // The probing spot has to sit well inside the patterned region, otherwise
  // the sample is no longer a uniform array for the beam.
  const double beam_area = M_PI * beam_diameter_um * beam_diameter_um / 4.0;
  const double array_area = array_extent_um * array_extent_um;
  require(beam_area <= 0.1 * array_area,
          "hole array: beam area exceeds 10% of the array area");
  require(fp_modulation_depth >= 0.0 && fp_modulation_depth <= 0.2,
          "hole array: etalon modulation depth must lie in [0, 0.2]");
  require(direct_transmission_floor >= 0.0 && direct_transmission_floor < 1.0,
          "hole array: direct transmission floor must lie in [0, 1)");
  require(!metal.entries().empty(), "hole array: metal permittivity missing");
  for (const auto& fano : resonances) {
    require(fano.order.i != 0 || fano.order.j != 0,
            "hole array: resonance order (0,0) is not allowed");
    require(fano.q > 0.0, "hole array: fano q must be positive");
    require(fano.gamma_nm >= 0.0, "hole array: fano width must be >= 0");
    require(fano.peak_transmittance > 0.0 && fano.peak_transmittance <= 1.0,
            "hole array: peak transmittance must lie in (0, 1]");
  }
}

TransmittanceSpectrum transmittance_spectrum(
    const HoleArraySpec& array, std::span<const double> wavelength_grid_nm) {
  array.validate();
  require(!wavelength_grid_nm.empty(), "spectrum: empty wavelength grid");
  for (std::size_t k = 1; k < wavelength_grid_nm.size(); ++k) {
    require(wavelength_grid_nm[k] > wavelength_grid_nm[k - 1],
            "spectrum: wavelength grid must be strictly increasing");
  }

  const auto resonances = resolve_resonances(array);
  TransmittanceSpectrum spectrum;
  spectrum.points.reserve(wavelength_grid_nm.size());
  for (double wavelength : wavelength_grid_nm) {
    bool clipped = false;
    const double t = evaluate_array(array, resonances, wavelength, &clipped);
    if (clipped) ++spectrum.clipped_points;
    spectrum.points.push_back({wavelength, t});
  }
  if (spectrum.clipped_points > 0) {
    std::ostringstream os;
    os << spectrum.clipped_points << " of " << spectrum.points.size()
       << " spectrum points fell outside [0, 1] and were clipped; the "
       << "resonance amplitudes are stronger than the model supports";
    spectrum.warnings.push_back(os.str());
  }
  return spectrum;
}

double hole_array_transmittance(const HoleArraySpec& array,
                                double wavelength_nm) {
  require(wavelength_nm > 0.0, "hole array: wavelength must be positive");
  const auto resonances = resolve_resonances(array);
  return evaluate_array(array, resonances, wavelength_nm, nullptr);
}

void write_spectrum_csv(const std::string& path,
                        const TransmittanceSpectrum& spectrum) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "wavelength_nm,transmittance\n";
  char buffer[96];
  for (const auto& point : spectrum.points) {
    std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g\n",
                  point.wavelength_nm, point.transmittance);
    out << buffer;
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

double LrsppWaveguideSpec::total_insertion_loss_db() const {
  return propagation_loss_db_per_cm * stripe_length_cm +
         2.0 * coupling_loss_per_facet_db;
}

double LrsppWaveguideSpec::transmittance() const {
  return db_to_transmittance(total_insertion_loss_db());
}

void LrsppWaveguideSpec::validate() const {
  require(stripe_length_cm > 0.0, "lrspp: stripe length must be positive");
  require(stripe_width_um > 0.0, "lrspp: stripe width must be positive");
  require(stripe_thickness_nm > 0.0,
          "lrspp: stripe thickness must be positive");
  require(cladding_index > 1.0, "lrspp: cladding index must exceed 1");
  require(propagation_loss_db_per_cm >= 0.0,
          "lrspp: propagation loss must be >= 0");
  require(coupling_loss_per_facet_db >= 0.0,
          "lrspp: coupling loss must be >= 0");
}

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::identity: return "identity";
    case ChannelKind::hole_array: return "hole_array";
    case ChannelKind::lrspp: return "lrspp";
  }
  throw std::invalid_argument("channel kind: unknown enumerator");
}

ChannelKind channel_kind_from_string(const std::string& name) {
  if (name == "identity") return ChannelKind::identity;
  if (name == "hole_array") return ChannelKind::hole_array;
  if (name == "lrspp") return ChannelKind::lrspp;
  throw std::invalid_argument("channel kind: unknown name \"" + name + "\"");
}

void ChannelSpec::validate() const {
  require(base_insertion_loss_db >= 0.0,
          "channel: base insertion loss must be >= 0 dB");
  require(polarization_dependence_bound_db >= 0.0,
          "channel: polarization dependence bound must be >= 0 dB");
  require(std::isfinite(polarization_angle_rad),
          "channel: polarization angle must be finite");
  switch (kind) {
    case ChannelKind::identity:
      require(!hole_array && !lrspp,
              "channel: identity channel must not carry an element");
      break;
    case ChannelKind::hole_array:
      require(hole_array.has_value(),
              "channel: hole_array channel needs an array spec");
      require(!lrspp, "channel: hole_array channel carries a stray lrspp spec");
      hole_array->validate();
      break;
    case ChannelKind::lrspp:
      require(lrspp.has_value(), "channel: lrspp channel needs a stripe spec");
      require(!hole_array,
              "channel: lrspp channel carries a stray hole array spec");
      lrspp->validate();
      break;
  }
}

double channel_transmittance(const ChannelSpec& channel, double wavelength_nm,
                             double polarization_angle_rad) {
  require(wavelength_nm > 0.0, "channel: wavelength must be positive");
  double t = db_to_transmittance(channel.base_insertion_loss_db);
  switch (channel.kind) {
    case ChannelKind::identity:
      break;
    case ChannelKind::hole_array:
      t *= hole_array_transmittance(*channel.hole_array, wavelength_nm);
      break;
    case ChannelKind::lrspp:
      // The stripe mode is broadband next to everything else in the setup;
      // its insertion loss is taken flat over the pair bandwidth.
      t *= channel.lrspp->transmittance();
      break;
  }
  // Bounded sinusoidal polarization dependence: the extra loss sweeps from
  // 0 to the configured bound (in dB) as the polarization rotates by 90
  // degrees, so max/min never exceeds the bound.
  if (channel.polarization_dependence_bound_db > 0.0) {
    const double swing =
        0.5 * (1.0 - std::cos(2.0 * polarization_angle_rad));
    t *= db_to_transmittance(channel.polarization_dependence_bound_db * swing);
  }
  return t;
}

double channel_transmittance(const ChannelSpec& channel,
                             double wavelength_nm) {
  return channel_transmittance(channel, wavelength_nm,
                               channel.polarization_angle_rad);
}

ChannelSpec strip_element(const ChannelSpec& channel) {
  ChannelSpec reference;
  reference.kind = ChannelKind::identity;
  reference.base_insertion_loss_db = channel.base_insertion_loss_db;
  reference.polarization_dependence_bound_db = 0.0;
  reference.polarization_angle_rad = channel.polarization_angle_rad;
  return reference;
}

}  // namespace fransim
