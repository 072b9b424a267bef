#pragma once

#include "mmwdose/fdtd.hpp"

#include <string>
#include <vector>

namespace mmwdose {

// Time-averaged power density crossing a z grid plane in the +z direction,
// sampled at the lateral grid nodes.  The tissue stack occupies z < 0, so
// absorbed power density is the negated map; per_layer_report applies that
// sign flip when assembling dose entries.
struct SabMap {
  double z = 0.0;
  std::vector<double> x, y;  // sample coordinates
  std::vector<double> s;     // row-major [j * x.size() + i], W/m^2

  double at(int i, int j) const { return s[std::size_t(j) * x.size() + i]; }
};

SabMap poynting_plane(const PhasorField& f, const YeeGrid& g, double z_plane);

struct PeakResult {
  double value = 0.0;  // W/m^2 averaged over the window
  double x = 0.0, y = 0.0; // window center
};

// Slides a square window of the given area (m^2) across the map at
// sample-point granularity; windows are integrated exactly on the bilinear
// interpolant (trapezoidal rule on the nonuniform spacing).  Ties resolve to
// the first occurrence in row-major scan order.
PeakResult averaged_peak(const SabMap& map, double area);

struct LayerDose {
  std::string layer;
  double z = 0.0;            // evaluation depth (upper interface)
  PeakResult peak_1cm2, peak_4cm2;
};

struct DosimetryReport {
  std::vector<LayerDose> entries; // outermost layer first
  double freq = 0.0;
  ModelKind model_kind = ModelKind::Homogeneous;
  double accepted_power = 0.0; // W, post-normalization
  double scale = 1.0;          // normalization factor applied to phasors
};

DosimetryReport per_layer_report(const PhasorField& f, const ExposureScene& scene,
                                 const YeeGrid& g);

std::string report_to_json(const DosimetryReport& r);
std::string report_to_csv(const DosimetryReport& r);
std::string sab_map_to_csv(const SabMap& m);

// Outward time-averaged Poynting flux through the boxed node planes
// [i0,i1] x [j0,j1] x [k0,k1]; used for power-conservation checks.
double poynting_box_flux(const PhasorField& f, const YeeGrid& g, int i0, int i1,
                         int j0, int j1, int k0, int k1);

} // namespace mmwdose
