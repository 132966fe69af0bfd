#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fransim {

// Tabulated complex metal permittivity vs vacuum wavelength (nm). Lookup is
// linearly interpolated; wavelengths outside the table are an error rather
// than an extrapolation. A single-entry table acts as a dispersionless
// constant, which is handy for quick closed-form checks.
class PermittivityTable {
 public:
  struct Entry {
    double wavelength_nm = 0.0;
    std::complex<double> permittivity;
  };

  PermittivityTable() = default;
  explicit PermittivityTable(std::vector<Entry> entries);

  std::complex<double> at(double wavelength_nm) const;  // std::out_of_range
  double min_wavelength_nm() const;
  double max_wavelength_nm() const;
  bool dispersionless() const { return entries_.size() == 1; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Small built-in gold-like table (700/810/1550 nm). Representative
  // textbook-style values kept as configuration defaults; replace with a
  // measured table file for anything quantitative.
  static PermittivityTable default_gold();

  // Two-column text file: "wavelength_nm re,im", '#' starts a comment.
  static PermittivityTable load_file(const std::string& path);

 private:
  std::vector<Entry> entries_;  // sorted by wavelength, strictly increasing
};

struct LatticeOrder {
  int i = 1;
  int j = 0;
  double magnitude() const;  // sqrt(i^2 + j^2)
  std::string label() const;
};

// One transmission resonance of a hole array, phenomenological Fano shape:
// a peak transmittance, a quality/asymmetry parameter q, and a spectral
// width tied to the lattice order whose surface mode feeds it.
struct FanoResonance {
  LatticeOrder order;
  double q = 3.0;
  double gamma_nm = 0.0;  // 0 = derive from hole diameter, see below
  double peak_transmittance = 0.1;
};

// Width of the Fano resonances grows with hole diameter (larger holes
// couple the surface mode to radiation more strongly). Phenomenological
// monotone map used whenever a resonance does not fix gamma explicitly.
double default_fano_width_nm(double hole_diameter_nm, double period_nm);

// Square-lattice array of subwavelength holes in a metal film on a
// dielectric substrate.
struct HoleArraySpec {
  double period_nm = 1400.0;         // lattice constant a
  double hole_diameter_nm = 600.0;   // d < a
  double film_thickness_nm = 200.0;
  double substrate_index = 1.5;      // n of the supporting glass
  double substrate_thickness_mm = 0.9;
  double array_extent_um = 200.0;    // side length of the patterned square
  double beam_diameter_um = 50.0;    // probing spot, must stay inside
  double fp_modulation_depth = 0.0;  // substrate etalon ripple, <= 0.2
  double direct_transmission_floor = 0.0;
  PermittivityTable metal;
  std::vector<FanoResonance> resonances;

  void validate() const;
};

// Surface-mode momentum matching on a square lattice:
//   lambda(i,j) = a / sqrt(i^2+j^2) * Re sqrt(em*ed / (em+ed))
// with the metal permittivity taken at the resonance wavelength itself.
// The closed form below takes a fixed permittivity; the overload taking the
// array iterates the fixed point over its dispersive table (damped, to
// 1e-3 nm, at most 100 steps).
double sp_resonance_wavelength_nm(double period_nm, const LatticeOrder& order,
                                  std::complex<double> metal_permittivity,
                                  double dielectric_constant);
double sp_resonance_wavelength_nm(const HoleArraySpec& array,
                                  const LatticeOrder& order);
std::vector<double> sp_resonance_wavelengths_nm(
    const HoleArraySpec& array, std::span<const LatticeOrder> orders);

// Substrate etalon fringe spacing lambda^2 / (2 n L) at the given
// wavelength.
double fabry_perot_ripple_period_nm(double wavelength_nm,
                                    double substrate_index,
                                    double substrate_thickness_mm);

struct SpectrumPoint {
  double wavelength_nm = 0.0;
  double transmittance = 0.0;
};

struct TransmittanceSpectrum {
  std::vector<SpectrumPoint> points;
  int clipped_points = 0;  // values that had to be clipped into [0, 1]
  std::vector<std::string> warnings;
};

// Transmittance of the array alone (no coupling optics): direct floor plus
// the Fano resonances, modulated by the substrate etalon, clipped to [0,1].
TransmittanceSpectrum transmittance_spectrum(
    const HoleArraySpec& array, std::span<const double> wavelength_grid_nm);
double hole_array_transmittance(const HoleArraySpec& array,
                                double wavelength_nm);

void write_spectrum_csv(const std::string& path,
                        const TransmittanceSpectrum& spectrum);

// Metal stripe waveguide carrying a long-range surface mode between fiber
// facets. Loss model is plain dB bookkeeping: propagation plus two facets.
struct LrsppWaveguideSpec {
  double stripe_length_cm = 0.5;
  double stripe_width_um = 8.0;
  double stripe_thickness_nm = 20.0;
  double cladding_index = 1.535;
  double propagation_loss_db_per_cm = 6.0;
  double coupling_loss_per_facet_db = 2.0;

  double total_insertion_loss_db() const;
  double transmittance() const;
  void validate() const;
};

enum class ChannelKind { identity, hole_array, lrspp };

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& name);

// One optical channel between the source and a detector: a fixed insertion
// loss (fiber bench), optionally a plasmonic element, and a bounded
// sinusoidal polarization dependence.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::identity;
  double base_insertion_loss_db = 0.0;
  double polarization_dependence_bound_db = 0.0;  // max peak-to-peak, in dB
  double polarization_angle_rad = 0.0;            // operating input polarization
  std::optional<HoleArraySpec> hole_array;
  std::optional<LrsppWaveguideSpec> lrspp;

  void validate() const;
};

// End-to-end power transmittance of the channel at the given wavelength and
// input polarization. dB contributions add, so transmittances multiply.
double channel_transmittance(const ChannelSpec& channel, double wavelength_nm,
                             double polarization_angle_rad);
double channel_transmittance(const ChannelSpec& channel, double wavelength_nm);

// The matching reference channel: same bench loss, element removed, no
// polarization dependence.
ChannelSpec strip_element(const ChannelSpec& channel);

}  // namespace fransim
