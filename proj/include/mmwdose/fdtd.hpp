#pragma once

#include "mmwdose/fdtd1d.hpp"
#include "mmwdose/material_grid.hpp"

#include <complex>
#include <vector>

namespace mmwdose {

// Steady-state phasors of all six field components at the drive frequency,
// peak-amplitude convention (time signal = Re[X e^{j w t}]).  Components sit
// on their Yee locations; all arrays share the node-lattice index
// (k*(ny+1)+j)*(nx+1)+i for grid node (i,j,k).
struct PhasorField {
  int nx = 0, ny = 0, nz = 0;
  double freq = 0.0;
  std::vector<std::complex<float>> ex, ey, ez, hx, hy, hz;

  std::size_t node_index(int i, int j, int k) const {
    return (std::size_t(k) * (ny + 1) + j) * (nx + 1) + i;
  }
};

struct PortRecord {
  std::vector<double> voltage;  // V(n dt) across the port gap
  std::vector<double> current;  // I((n+1/2) dt) through the element
  double impedance = 50.0;
  double dt = 0.0;
  std::complex<double> v_phasor, i_phasor; // steady-state, peak amplitude
  double incident = 0.0;   // source available power, W
  double accepted = 0.0;   // delivered into the structure, W
  double reflected = 0.0;  // incident - accepted
};

struct NormalizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SteadyStateResult {
  PhasorField fields;
  PortRecord port;
  int steps = 0;
  int periods = 0;
  int steps_per_period = 0;
  double dt = 0.0;
  double residual = 0.0;   // per-period relative change at convergence
  double scale = 1.0;      // normalization factor applied so far
  int workers = 1;
};

struct Fdtd3DOptions {
  int workers = 1;
  double convergence_tol = 1e-3; // per-period relative change
  int max_periods = 80;
  int min_periods = 8;
  int ramp_periods = 3;
  double courant = 0.99;
  double dt_scale = 1.0;         // >1 breaks the CFL bound (divergence tests)
  double drive_amplitude = 1.0;  // source voltage, V
};

SteadyStateResult run_to_steady_state(const ExposureScene& scene,
                                      const YeeGrid& grid,
                                      const MaterialGrid& mat,
                                      double freq,
                                      const Fdtd3DOptions& opt = {});

// Scales every phasor (fields and port) by sqrt(target/accepted); returns the
// factor.  Derived power quantities scale by its square.
double normalize_to_accepted_power(SteadyStateResult& result, double target);

// Wideband port scan: drives the port with a gaussian-modulated sine around
// f0 and returns S11 at the requested frequencies (reference = port
// impedance).  Used by the patch-length tuning hook.
struct PortSweep {
  std::vector<double> freq;
  std::vector<std::complex<double>> s11;
  double minimum_freq = 0.0; // frequency of the |S11| minimum
};

PortSweep run_port_sweep(const ExposureScene& scene, const YeeGrid& grid,
                         const MaterialGrid& mat, double f0,
                         const std::vector<double>& freqs,
                         const Fdtd3DOptions& opt = {});

} // namespace mmwdose
