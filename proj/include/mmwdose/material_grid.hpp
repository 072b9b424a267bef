#pragma once

#include "mmwdose/antenna.hpp"
#include "mmwdose/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmwdose {

struct Material {
  std::string name;
  double eps_r = 1.0;
  double sigma = 0.0;
};

struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-cell material assignment plus PEC flags on tangential E edges.
// Edge flags use the node-based index (k*(ny+1)+j)*(nx+1)+i shared with the
// solver's field arrays.
struct MaterialGrid {
  int nx = 0, ny = 0, nz = 0;
  std::vector<std::uint8_t> cell;           // material id per cell
  std::vector<Material> materials;          // id 0 is always free space
  std::vector<std::uint8_t> pec_ex, pec_ey; // 1 = forced to zero

  std::size_t cell_index(int i, int j, int k) const {
    return (std::size_t(k) * ny + j) * nx + i;
  }
  std::size_t node_index(int i, int j, int k) const {
    return (std::size_t(k) * (ny + 1) + j) * (nx + 1) + i;
  }
  const Material& cell_material(int i, int j, int k) const {
    return materials[cell[cell_index(i, j, k)]];
  }

  // z interfaces of the tissue layers (node-exact), top first, including the
  // air/first-layer plane at z = 0.
  std::vector<double> tissue_interfaces;
  std::vector<std::string> layer_names;
};

MaterialGrid voxelize(const ExposureScene& scene, const YeeGrid& grid);

} // namespace mmwdose
