#pragma once

#include "mmwdose/tissue.hpp"

#include <vector>

namespace mmwdose {

struct PlaneWaveExcitation {
  double freq = 28e9;       // Hz
  double theta_deg = 0.0;   // from the surface normal
  Polarization pol = Polarization::TE;
  double s_inc = 10.0;      // W/m^2

  void validate() const;
};

struct ReflectionResult {
  cplx gamma;
  double transmittance;    // 1 - |gamma|^2
  double s_ab_interface;   // W/m^2
};

// Backward recursion over interfaces, returning Gamma at the air/first-layer
// interface. `interface_index` selects where the recursion is read out:
// 1 = air/first-layer (default), 2 = first/second-layer interface, etc.
// The reported multilayer comparison values use index 2 (the interface below
// the outermost layer); see reported_interface_sab.
cplx recursive_gamma(const LayerStack& stack, const PlaneWaveExcitation& wave,
                     int interface_index = 1);

// Independent oracle: 2x2 characteristic-matrix cascade.
cplx transfer_matrix_gamma(const LayerStack& stack,
                           const PlaneWaveExcitation& wave);

double absorbed_power_density(cplx gamma, double s_inc);

ReflectionResult reflection_result(const LayerStack& stack,
                                   const PlaneWaveExcitation& wave);

// S_ab used when comparing models against each other: for a single-layer
// (homogeneous) stack this is the air-interface value; for multilayer stacks
// the reflection coefficient is read out at the interface below the outermost
// layer, which is the quantity the reference results tabulate per model.
double reported_interface_sab(const LayerStack& stack,
                              const PlaneWaveExcitation& wave);

struct SweepPoint {
  double theta_deg;
  Polarization pol;
  double transmittance;
  double s_ab;
};

std::vector<SweepPoint> transmission_sweep(const LayerStack& stack, double freq,
                                           Polarization pol,
                                           const std::vector<double>& theta_grid,
                                           double s_inc = 10.0);

struct CalibrationResult {
  double thickness;     // m
  double max_spread;    // achieved objective (max relative spread)
  std::vector<double> grid_thickness;  // m, objective curve abscissa
  std::vector<double> grid_objective;
};

// Finds the SC thickness minimizing the worst-case relative transmittance
// spread across the multilayer model variants over the angle range, both
// polarizations. Coarse grid then golden-section refinement to 0.1 um;
// ties broken toward the smaller thickness.
CalibrationResult calibrate_sc_thickness(const std::vector<LayerStack>& stacks,
                                         double t_min, double t_max,
                                         double freq,
                                         const std::vector<double>& theta_grid,
                                         int grid_points = 200);

struct DepositionProfile {
  std::vector<double> z;  // m, >= 0 from the air interface
  std::vector<double> s;  // W/m^2, net downward time-averaged flux
};

DepositionProfile deposition_profile(const LayerStack& stack,
                                     const PlaneWaveExcitation& wave,
                                     const std::vector<double>& z_grid);

} // namespace mmwdose
