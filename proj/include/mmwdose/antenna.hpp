#pragma once

#include "mmwdose/tissue.hpp"

#include <string>
#include <vector>

namespace mmwdose {

// Axis-aligned rectangle on a horizontal plane.
struct Rect {
  double x0, y0, x1, y1;
  double width_x() const { return x1 - x0; }
  double width_y() const { return y1 - y0; }
  bool contains(double x, double y, double tol = 0.0) const {
    return x >= x0 - tol && x <= x1 + tol && y >= y0 - tol && y <= y1 + tol;
  }
};

struct TableDimensions {
  double L, W, l1, l2, l3, w1, w2; // m
};

// Microstrip-fed four-patch array. Coordinates: antenna centered at the
// origin in x/y, x along the long side L. The ground plane sits at z = gap
// above the tissue surface (z = 0) so the array radiates away from the body;
// the patch face sits on the opposite substrate face at z = gap + thickness.
struct AntennaGeometry {
  double freq = 28e9;
  TableDimensions dims{};
  double substrate_thickness = 0.254e-3;
  DielectricProperties substrate_props{2.2, 5e-4, 2200.0};
  double patch_scale = 1.0; // tuning hook: scales the resonant patch length

  std::vector<Rect> patches;     // PEC, patch-face plane
  std::vector<Rect> feed_strips; // PEC, patch-face plane
  Rect ground{};                 // PEC, full footprint, opposite face

  struct Port {
    double x = 0.0, y = 0.0;  // location of the vertical feed gap
    double impedance = 50.0;  // Ohm
  } port;

  Rect footprint() const {
    return {-dims.L / 2, -dims.W / 2, dims.L / 2, dims.W / 2};
  }
  void validate() const;
};

AntennaGeometry build_patch_array(Band band, double patch_scale = 1.0);

struct ExposureScene {
  AntennaGeometry antenna;
  bool has_antenna = true;
  LayerStack stack;
  double gap = 2e-3;        // antenna-to-tissue separation, m
  double slab_x = 150e-3;   // lateral tissue extent, m
  double slab_y = 150e-3;
};

ExposureScene assemble_scene(const AntennaGeometry& antenna,
                             const LayerStack& stack, double gap,
                             double slab_x, double slab_y);

std::string antenna_to_json(const AntennaGeometry& a, double gap_m);
AntennaGeometry antenna_from_json(const std::string& text, double* gap_out);

} // namespace mmwdose
