#include "mmwdose/tissue.hpp"

#include "mmwdose/constants.hpp"

#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace mmwdose {

double band_frequency(Band b) { return b == Band::GHz28 ? 28e9 : 39e9; }
const char* band_name(Band b) { return b == Band::GHz28 ? "28" : "39"; }

const char* model_name(ModelKind m) {
  switch (m) {
    case ModelKind::Homogeneous: return "homogeneous";
    case ModelKind::TwoLayer: return "2layer";
    case ModelKind::ThreeLayer: return "3layer";
    case ModelKind::FourLayer: return "4layer";
  }
  return "?";
}

ModelKind model_from_name(const std::string& s) {
  if (s == "homogeneous") return ModelKind::Homogeneous;
  if (s == "2layer" || s == "two_layer") return ModelKind::TwoLayer;
  if (s == "3layer" || s == "three_layer") return ModelKind::ThreeLayer;
  if (s == "4layer" || s == "four_layer") return ModelKind::FourLayer;
  throw std::invalid_argument("unknown model kind: " + s);
}

Band band_from_name(const std::string& s) {
  if (s == "28") return Band::GHz28;
  if (s == "39") return Band::GHz39;
  throw std::invalid_argument("unknown band: " + s + " (expected 28 or 39)");
}

namespace {

struct TissueRow {
  double eps28, eps39, sig28, sig39, density;
};

// eps_r, sigma [S/m] at the two bands, density [kg/m^3].
const std::map<std::string, TissueRow>& tissue_table() {
  static const std::map<std::string, TissueRow> table = {
      {"stratum_corneum", {3.52, 3.33, 1.21, 1.44, 1500.0}},
      {"dermis",          {16.0, 12.1, 27.5, 32.6, 1109.0}},
      {"fat",             {3.42, 3.10, 2.32, 2.68, 911.0}},
      {"muscle",          {21.5, 15.6, 39.9, 47.1, 1090.0}},
  };
  return table;
}

} // namespace

DielectricProperties tissue_properties(const std::string& tissue, Band band) {
  auto it = tissue_table().find(tissue);
  if (it == tissue_table().end())
    throw std::invalid_argument("unknown tissue: " + tissue);
  const TissueRow& r = it->second;
  if (band == Band::GHz28) return {r.eps28, r.sig28, r.density};
  return {r.eps39, r.sig39, r.density};
}

void LayerStack::validate() const {
  if (layers.empty()) throw std::invalid_argument("stack has no layers");
  for (size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].semi_infinite())
      throw std::invalid_argument("interior layer '" + layers[i].name +
                                  "' is semi-infinite");
    if (!(layers[i].thickness > 0.0))
      throw std::invalid_argument("layer '" + layers[i].name +
                                  "' has non-positive thickness");
  }
  if (!layers.back().semi_infinite())
    throw std::invalid_argument("last layer must be semi-infinite");
}

cplx complex_permittivity(const DielectricProperties& props, double freq) {
  if (!(freq > 0.0)) throw std::invalid_argument("frequency must be > 0");
  double omega = 2.0 * pi * freq;
  return {props.eps_r, -props.sigma / (omega * eps0)};
}

namespace {

// Principal sqrt already lands in the lower half plane for eps_c with
// Im <= 0; flip explicitly so the branch choice is independent of corner
// cases on the negative real axis.
cplx sqrt_lower_half(cplx z) {
  cplx s = std::sqrt(z);
  if (s.imag() > 0.0) s = -s;
  if (s.imag() == 0.0 && s.real() < 0.0) s = -s;
  return s;
}

} // namespace

ComplexWaveParams wave_params(const DielectricProperties& props, double freq,
                              double theta_air_deg, Polarization pol) {
  if (!(theta_air_deg >= 0.0 && theta_air_deg < 90.0))
    throw std::invalid_argument("incidence angle must be in [0, 90) degrees");
  ComplexWaveParams w;
  w.eps_c = complex_permittivity(props, freq);
  double omega = 2.0 * pi * freq;
  double k0 = omega / c0;
  w.k = k0 * sqrt_lower_half(w.eps_c);
  double kt = k0 * std::sin(theta_air_deg * pi / 180.0); // air-side, real
  w.kz = sqrt_lower_half(w.k * w.k - kt * kt);
  if (pol == Polarization::TE)
    w.eta = omega * mu0 / w.kz;
  else
    w.eta = w.kz / (omega * eps0 * w.eps_c);
  return w;
}

LayerStack build_paper_stack(ModelKind kind, Band band) {
  LayerStack s;
  s.model_kind = kind;
  s.frequency = band_frequency(band);
  auto layer = [&](const std::string& tissue, double thickness_mm) {
    return TissueLayer{tissue, tissue_properties(tissue, band),
                       thickness_mm * 1e-3};
  };
  auto last = [&](const std::string& tissue) {
    return TissueLayer{tissue, tissue_properties(tissue, band), kSemiInfinite};
  };
  switch (kind) {
    case ModelKind::Homogeneous:
      s.layers = {last("dermis")};
      break;
    case ModelKind::TwoLayer:
      s.layers = {layer("stratum_corneum", 0.02), last("dermis")};
      break;
    case ModelKind::ThreeLayer:
      s.layers = {layer("stratum_corneum", 0.02), layer("dermis", 0.96),
                  last("fat")};
      break;
    case ModelKind::FourLayer:
      s.layers = {layer("stratum_corneum", 0.02), layer("dermis", 0.96),
                  layer("fat", 1.6), last("muscle")};
      break;
  }
  s.validate();
  return s;
}

std::string stack_to_json(const LayerStack& stack) {
  nlohmann::json j;
  j["frequency_ghz"] = stack.frequency / 1e9;
  j["model_kind"] = model_name(stack.model_kind);
  j["layers"] = nlohmann::json::array();
  for (const auto& l : stack.layers) {
    nlohmann::json jl;
    jl["name"] = l.name;
    jl["eps_r"] = l.props.eps_r;
    jl["sigma_s_per_m"] = l.props.sigma;
    jl["density_kg_per_m3"] = l.props.density;
    if (l.semi_infinite()) {
      jl["thickness_mm"] = "inf";
    } else {
      // Pick the mm value whose conversion back to meters is bit-exact.
      double mm = l.thickness * 1e3;
      if (mm * 1e-3 != l.thickness) {
        double up = std::nextafter(mm, mm + 1.0);
        double dn = std::nextafter(mm, mm - 1.0);
        if (up * 1e-3 == l.thickness) mm = up;
        else if (dn * 1e-3 == l.thickness) mm = dn;
      }
      jl["thickness_mm"] = mm;
    }
    j["layers"].push_back(jl);
  }
  return j.dump(2);
}

LayerStack stack_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  LayerStack s;
  s.frequency = j.at("frequency_ghz").get<double>() * 1e9;
  if (j.contains("model_kind"))
    s.model_kind = model_from_name(j.at("model_kind").get<std::string>());
  for (const auto& jl : j.at("layers")) {
    TissueLayer l;
    l.name = jl.at("name").get<std::string>();
    l.props.eps_r = jl.at("eps_r").get<double>();
    l.props.sigma = jl.at("sigma_s_per_m").get<double>();
    l.props.density = jl.at("density_kg_per_m3").get<double>();
    const auto& t = jl.at("thickness_mm");
    l.thickness = t.is_string() ? kSemiInfinite : t.get<double>() * 1e-3;
    s.layers.push_back(l);
  }
  s.validate();
  return s;
}

} // namespace mmwdose
