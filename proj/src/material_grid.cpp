#include "mmwdose/material_grid.hpp"

#include <algorithm>
#include <cmath>

namespace mmwdose {

namespace {

int nearest_node(const std::vector<double>& coords, double v) {
  auto it = std::lower_bound(coords.begin(), coords.end(), v);
  if (it == coords.end()) return static_cast<int>(coords.size()) - 1;
  int k = static_cast<int>(it - coords.begin());
  if (k > 0 && std::abs(coords[k - 1] - v) < std::abs(coords[k] - v)) --k;
  return k;
}

int require_plane(const std::vector<double>& coords, double v, double tol,
                  const char* what) {
  int k = nearest_node(coords, v);
  if (std::abs(coords[k] - v) > tol)
    throw ResolutionError(std::string(what) +
                          " does not coincide with a grid plane");
  return k;
}

} // namespace

MaterialGrid voxelize(const ExposureScene& scene, const YeeGrid& grid) {
  scene.stack.validate();
  MaterialGrid m;
  m.nx = grid.nx();
  m.ny = grid.ny();
  m.nz = grid.nz();
  m.cell.assign(std::size_t(m.nx) * m.ny * m.nz, 0);
  m.materials.push_back({"free_space", 1.0, 0.0});

  auto material_id = [&](const std::string& name,
                         const DielectricProperties& p) -> std::uint8_t {
    if (p.eps_r == 1.0 && p.sigma == 0.0) return 0;
    for (size_t i = 0; i < m.materials.size(); ++i)
      if (m.materials[i].name == name) return static_cast<std::uint8_t>(i);
    m.materials.push_back({name, p.eps_r, p.sigma});
    return static_cast<std::uint8_t>(m.materials.size() - 1);
  };

  const double tol = 1e-12;

  // Tissue layer geometry: interface depths must be node-exact, and every
  // finite layer must span at least one cell.
  std::vector<double> iface{0.0};
  double depth = 0.0;
  for (const auto& l : scene.stack.layers) {
    m.layer_names.push_back(l.name);
    if (!l.semi_infinite()) {
      depth += l.thickness;
      iface.push_back(-depth);
    }
  }
  m.tissue_interfaces = iface;
  std::vector<int> iface_k;
  for (double z : iface)
    iface_k.push_back(require_plane(grid.z, z, tol, "tissue interface"));
  for (size_t i = 0; i + 1 < iface_k.size(); ++i)
    if (iface_k[i] - iface_k[i + 1] < 1)
      throw ResolutionError("grid too coarse to resolve layer '" +
                            scene.stack.layers[i].name + "' as one cell");

  std::vector<std::uint8_t> layer_ids;
  for (const auto& l : scene.stack.layers)
    layer_ids.push_back(material_id(l.name, l.props));

  auto layer_at_depth = [&](double z) -> int {
    // z < 0 inside tissue; the truncated last layer extends through the
    // bottom padding so the absorbing boundary terminates it.
    double d = -z;
    double acc = 0.0;
    for (size_t i = 0; i + 1 < scene.stack.layers.size(); ++i) {
      acc += scene.stack.layers[i].thickness;
      if (d <= acc) return static_cast<int>(i);
    }
    return static_cast<int>(scene.stack.layers.size()) - 1;
  };

  const double sx = scene.slab_x / 2, sy = scene.slab_y / 2;
  bool antenna = scene.has_antenna;
  Rect fp = antenna ? scene.antenna.footprint() : Rect{0, 0, 0, 0};
  // The ground plane faces the tissue (wearable orientation: the array
  // radiates away from the body); patches sit on the far substrate face.
  double z_ground = scene.gap;
  double z_patch = scene.gap + scene.antenna.substrate_thickness;
  std::uint8_t sub_id =
      antenna ? material_id("substrate", scene.antenna.substrate_props) : 0;

  for (int k = 0; k < m.nz; ++k) {
    double zc = 0.5 * (grid.z[k] + grid.z[k + 1]);
    for (int j = 0; j < m.ny; ++j) {
      double yc = 0.5 * (grid.y[j] + grid.y[j + 1]);
      for (int i = 0; i < m.nx; ++i) {
        double xc = 0.5 * (grid.x[i] + grid.x[i + 1]);
        std::uint8_t id = 0;
        if (zc < 0.0 && std::abs(xc) <= sx && std::abs(yc) <= sy) {
          id = layer_ids[layer_at_depth(zc)];
        } else if (antenna && zc > z_ground && zc < z_patch &&
                   fp.contains(xc, yc)) {
          id = sub_id;
        }
        m.cell[m.cell_index(i, j, k)] = id;
      }
    }
  }

  // Conductors: tangential-E edge flags on the nearest grid plane.
  m.pec_ex.assign(std::size_t(m.nx + 1) * (m.ny + 1) * (m.nz + 1), 0);
  m.pec_ey.assign(m.pec_ex.size(), 0);
  if (antenna) {
    auto rasterize = [&](const Rect& r, double z_plane) {
      int k = require_plane(grid.z, z_plane, 1e-9, "conductor plane");
      for (int j = 0; j <= m.ny; ++j) {
        for (int i = 0; i < m.nx; ++i) {
          double xc = 0.5 * (grid.x[i] + grid.x[i + 1]);
          if (r.contains(xc, grid.y[j])) m.pec_ex[m.node_index(i, j, k)] = 1;
        }
      }
      for (int j = 0; j < m.ny; ++j) {
        double yc = 0.5 * (grid.y[j] + grid.y[j + 1]);
        for (int i = 0; i <= m.nx; ++i) {
          if (r.contains(grid.x[i], yc)) m.pec_ey[m.node_index(i, j, k)] = 1;
        }
      }
    };
    for (const auto& p : scene.antenna.patches) rasterize(p, z_patch);
    for (const auto& s : scene.antenna.feed_strips) rasterize(s, z_patch);
    rasterize(scene.antenna.ground, z_ground);
  }

  return m;
}

} // namespace mmwdose
