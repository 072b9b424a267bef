#pragma once

#include "mmwdose/antenna.hpp"
#include "mmwdose/tissue.hpp"

#include <cstdint>
#include <vector>

namespace mmwdose {

enum class GridPolicy { PaperFidelity, DeskScale };

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Nonuniform staggered grid. x/y/z hold node coordinates (strictly
// increasing, meters); cell i spans [x[i], x[i+1]).
struct YeeGrid {
  std::vector<double> x, y, z;
  int pml_layers = 8;
  int padding_cells = 10;

  int nx() const { return static_cast<int>(x.size()) - 1; }
  int ny() const { return static_cast<int>(y.size()) - 1; }
  int nz() const { return static_cast<int>(z.size()) - 1; }
  std::int64_t cell_count() const {
    return std::int64_t(nx()) * ny() * nz();
  }
  double min_cell() const;
  double max_cell() const;
  double max_grading_ratio() const;
  // Courant-bound time step for the given safety factor.
  double courant_dt(double safety = 0.99) const;
};

struct GridSpec {
  int points_per_wavelength = 15; // target sampling in each medium
  double tissue_cell_cap = 0.33e-3;
  double auto_min_cell = 0.06e-3; // floor for automatic sizing; explicit
                                  // thin layers may go below it
  int pml_layers = 8;
  int padding_cells = 10;
  double grading_ratio = 1.2;
};

GridSpec policy_spec(GridPolicy policy);

YeeGrid generate_grid(const ExposureScene& scene, GridPolicy policy);
YeeGrid generate_grid(const ExposureScene& scene, const GridSpec& spec);

// One nonuniform axis from breakpoints and per-interval cell-size caps.
std::vector<double> grade_axis(const std::vector<double>& breakpoints,
                               const std::vector<double>& caps,
                               double grading_ratio);

// Depth at which the semi-infinite last layer is truncated before the
// absorbing boundary takes over.
double last_layer_depth(const LayerStack& stack);

} // namespace mmwdose
