#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmwdose {

using cplx = std::complex<double>;

enum class Band { GHz28, GHz39 };
enum class ModelKind { Homogeneous, TwoLayer, ThreeLayer, FourLayer };
enum class Polarization { TE, TM };

double band_frequency(Band b); // Hz
const char* band_name(Band b);
const char* model_name(ModelKind m);
ModelKind model_from_name(const std::string& s);
Band band_from_name(const std::string& s);

struct DielectricProperties {
  double eps_r = 1.0;    // relative permittivity
  double sigma = 0.0;    // S/m
  double density = 1.0;  // kg/m^3, stored only (SAR is out of scope)

  bool operator==(const DielectricProperties&) const = default;
};

inline constexpr double kSemiInfinite = std::numeric_limits<double>::infinity();

struct TissueLayer {
  std::string name;
  DielectricProperties props;
  double thickness = kSemiInfinite; // m, or kSemiInfinite

  bool semi_infinite() const { return !std::isfinite(thickness); }
  bool operator==(const TissueLayer&) const = default;
};

// Ordered top (air side) to bottom. The last layer is always semi-infinite.
struct LayerStack {
  std::vector<TissueLayer> layers;
  ModelKind model_kind = ModelKind::Homogeneous;
  double frequency = 0.0; // Hz the properties were tabulated at

  void validate() const; // throws std::invalid_argument on violation
};

// Tabulated dielectric data. The source literature lists these at 30/40 GHz;
// they are keyed here by the 28/39 GHz bands they are used at.
DielectricProperties tissue_properties(const std::string& tissue, Band band);

struct ComplexWaveParams {
  cplx eps_c; // complex relative permittivity (dimensionless)
  cplx k;     // rad/m
  cplx kz;    // rad/m, Im(kz) <= 0
  cplx eta;   // Ohm, transverse wave impedance for the given polarization
};

// eps_r - j*sigma/(omega*eps0), e^{+j omega t} convention, mu_r = 1.
cplx complex_permittivity(const DielectricProperties& props, double freq);

// Transverse wavenumber fixed by the air-side incidence angle theta_air.
ComplexWaveParams wave_params(const DielectricProperties& props, double freq,
                              double theta_air_deg, Polarization pol);

LayerStack build_paper_stack(ModelKind kind, Band band);

// JSON config round trip (thickness in millimeters, "inf" for the last layer).
std::string stack_to_json(const LayerStack& stack);
LayerStack stack_from_json(const std::string& json_text);

} // namespace mmwdose
