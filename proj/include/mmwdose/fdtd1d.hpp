#pragma once

#include "mmwdose/planewave.hpp"
#include "mmwdose/tissue.hpp"

#include <complex>
#include <stdexcept>
#include <vector>

namespace mmwdose {

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Outcome of a 1D layered run at normal incidence.  Depth samples start at
// the air/tissue interface (z = 0) and increase into the stack; flux is the
// time-averaged power density crossing each depth, scaled to the requested
// incident power density.
struct Fdtd1DResult {
  std::complex<double> gamma;   // reflection coefficient at the interface
  double transmittance = 0.0;   // 1 - |gamma|^2
  std::vector<double> depth;    // m, >= 0
  std::vector<double> flux;     // W/m^2 at wave.s_inc
  int steps = 0;
  int periods = 0;
  double dt = 0.0;
  double residual = 0.0;        // last per-period relative change
};

struct Fdtd1DOptions {
  double dz = 10e-6;            // uniform cell size
  double convergence_tol = 1e-4;
  int max_periods = 400;
  int ramp_periods = 3;
  double courant = 1.0;         // 1.0 = magic time step in air
};

Fdtd1DResult run_1d_layered(const LayerStack& stack,
                            const PlaneWaveExcitation& wave,
                            const Fdtd1DOptions& opt = {});

} // namespace mmwdose
