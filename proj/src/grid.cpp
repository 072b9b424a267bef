#include "mmwdose/grid.hpp"

#include "mmwdose/constants.hpp"

#include <algorithm>
#include <cmath>

namespace mmwdose {

double YeeGrid::min_cell() const {
  double m = std::numeric_limits<double>::max();
  for (const auto* a : {&x, &y, &z})
    for (size_t i = 0; i + 1 < a->size(); ++i)
      m = std::min(m, (*a)[i + 1] - (*a)[i]);
  return m;
}

double YeeGrid::max_cell() const {
  double m = 0.0;
  for (const auto* a : {&x, &y, &z})
    for (size_t i = 0; i + 1 < a->size(); ++i)
      m = std::max(m, (*a)[i + 1] - (*a)[i]);
  return m;
}

double YeeGrid::max_grading_ratio() const {
  double m = 1.0;
  for (const auto* a : {&x, &y, &z})
    for (size_t i = 0; i + 2 < a->size(); ++i) {
      double d0 = (*a)[i + 1] - (*a)[i];
      double d1 = (*a)[i + 2] - (*a)[i + 1];
      m = std::max(m, std::max(d0 / d1, d1 / d0));
    }
  return m;
}

double YeeGrid::courant_dt(double safety) const {
  auto min_d = [](const std::vector<double>& a) {
    double m = std::numeric_limits<double>::max();
    for (size_t i = 0; i + 1 < a.size(); ++i) m = std::min(m, a[i + 1] - a[i]);
    return m;
  };
  double dx = min_d(x), dy = min_d(y), dz = min_d(z);
  double s = std::sqrt(1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz));
  return safety / (c0 * s);
}

GridSpec policy_spec(GridPolicy policy) {
  GridSpec s;
  if (policy == GridPolicy::PaperFidelity) {
    s.points_per_wavelength = 15;
  } else {
    s.points_per_wavelength = 12;
    s.padding_cells = 10;
  }
  return s;
}

namespace {

std::vector<double> grade_interval(double length, double s_left, double s_right,
                                   double cap, double ratio) {
  if (length <= cap * (1.0 + 1e-9)) return {length};
  std::vector<double> left, right;
  double hl = std::min(s_left, cap), hr = std::min(s_right, cap);
  double sum = 0.0;
  while (sum < length) {
    if (hl <= hr) {
      left.push_back(hl);
      sum += hl;
      hl = std::min(hl * ratio, cap);
    } else {
      right.push_back(hr);
      sum += hr;
      hr = std::min(hr * ratio, cap);
    }
  }
  // Absorb the overshoot by lowering a waterline over the largest interior
  // cells; the two boundary cells keep their exact sizes because neighboring
  // intervals size their own boundary cells against them.
  std::vector<double> sizes;
  sizes.reserve(left.size() + right.size());
  for (double v : left) sizes.push_back(v);
  for (auto it = right.rbegin(); it != right.rend(); ++it) sizes.push_back(*it);
  // Boundary cells sized by a thin neighbor must keep their exact size;
  // boundary cells already at the cap may be shaved like interior ones.
  size_t first = sizes.front() < cap * (1.0 - 1e-12) ? 1 : 0;
  size_t last = sizes.back() < cap * (1.0 - 1e-12) && sizes.size() > 1
                    ? sizes.size() - 1
                    : sizes.size();
  double fixed = 0.0, floor = 0.0;
  if (first == 1) {
    fixed += sizes.front();
    floor = std::max(floor, sizes.front() / ratio);
  }
  if (last == sizes.size() - 1) {
    fixed += sizes.back();
    floor = std::max(floor, sizes.back() / ratio);
  }
  auto shaved_sum = [&](double w) {
    double s = fixed;
    for (size_t i = first; i < last; ++i) s += std::min(sizes[i], w);
    return s;
  };
  if (first >= last || shaved_sum(floor) >= length) {
    // the waterline alone cannot reach an exact fit without breaking the
    // ratio against a pinned boundary cell; finish with a near-unity rescale
    for (size_t i = first; i < last; ++i) sizes[i] = std::min(sizes[i], floor);
    double s = 0.0;
    for (double v : sizes) s += v;
    for (double& v : sizes) v *= length / s;
  } else {
    double lo = floor, hi = cap;
    for (int it = 0; it < 80; ++it) {
      double w = 0.5 * (lo + hi);
      (shaved_sum(w) < length ? lo : hi) = w;
    }
    double w = 0.5 * (lo + hi);
    for (size_t i = first; i < last; ++i) sizes[i] = std::min(sizes[i], w);
  }
  return sizes;
}

} // namespace

std::vector<double> grade_axis(const std::vector<double>& breakpoints,
                               const std::vector<double>& caps,
                               double grading_ratio) {
  if (breakpoints.size() < 2 || caps.size() + 1 != breakpoints.size())
    throw GridError("axis needs n breakpoints and n-1 interval caps");
  const size_t m = caps.size();
  // A neighbor's boundary cell can never exceed its own interval length;
  // account for that so thin layers (one-cell SC, substrate) ramp smoothly.
  auto eff = [&](size_t i) {
    return std::min(caps[i], breakpoints[i + 1] - breakpoints[i]);
  };
  std::vector<double> coords{breakpoints.front()};
  for (size_t i = 0; i < m; ++i) {
    double s_left = i > 0 ? std::min(eff(i), eff(i - 1)) : caps[i];
    double s_right = i + 1 < m ? std::min(eff(i), eff(i + 1)) : caps[i];
    double len = breakpoints[i + 1] - breakpoints[i];
    if (!(len > 0.0)) throw GridError("breakpoints must be increasing");
    auto sizes = grade_interval(len, s_left, s_right, caps[i], grading_ratio);
    double pos = breakpoints[i];
    for (size_t j = 0; j + 1 < sizes.size(); ++j) {
      pos += sizes[j];
      coords.push_back(pos);
    }
    coords.push_back(breakpoints[i + 1]); // interface lands exactly on a node
  }
  return coords;
}

double last_layer_depth(const LayerStack& stack) {
  const auto& l = stack.layers.back();
  auto w = wave_params(l.props, stack.frequency, 0.0, Polarization::TE);
  double im = std::abs(w.k.imag());
  double depth = im > 1.0 ? 6.0 / im : 8e-3;
  return std::clamp(depth, 2e-3, 8e-3);
}

namespace {

void add_padding_and_pml(std::vector<double>& coords, const GridSpec& spec,
                         double front_cap, double back_cap) {
  // Pad with cells growing toward the side's cap, then constant-size cells
  // reserved for the absorbing layer.  The caps differ per side because the
  // bottom of the z axis stays filled with the deepest layer's medium.
  auto extend = [&](bool front) {
    double air_cap = front ? front_cap : back_cap;
    double edge_cell =
        front ? coords[1] - coords[0]
              : coords[coords.size() - 1] - coords[coords.size() - 2];
    double h = edge_cell;
    std::vector<double> sizes;
    for (int i = 0; i < spec.padding_cells; ++i) {
      h = std::min(h * spec.grading_ratio, air_cap);
      sizes.push_back(h);
    }
    for (int i = 0; i < spec.pml_layers; ++i) sizes.push_back(h);
    if (front) {
      double pos = coords.front();
      std::vector<double> pre;
      for (double s : sizes) pre.push_back(pos -= s);
      coords.insert(coords.begin(), pre.rbegin(), pre.rend());
    } else {
      double pos = coords.back();
      for (double s : sizes) coords.push_back(pos += s);
    }
  };
  extend(true);
  extend(false);
}

} // namespace

YeeGrid generate_grid(const ExposureScene& scene, GridPolicy policy) {
  return generate_grid(scene, policy_spec(policy));
}

YeeGrid generate_grid(const ExposureScene& scene, const GridSpec& spec) {
  scene.stack.validate();
  double freq = scene.stack.frequency > 0.0
                    ? scene.stack.frequency
                    : (scene.has_antenna ? scene.antenna.freq : 0.0);
  if (!(freq > 0.0)) throw GridError("scene has no frequency");
  double lambda0 = c0 / freq;
  double air_cap = lambda0 / spec.points_per_wavelength;
  auto medium_cap = [&](const DielectricProperties& p) {
    double cap = lambda0 / (std::sqrt(p.eps_r) * spec.points_per_wavelength);
    if (p.eps_r > 1.0 || p.sigma > 0.0) cap = std::min(cap, spec.tissue_cell_cap);
    return std::max(cap, spec.auto_min_cell);
  };

  // Vertical axis: tissue below z = 0, antenna above the air gap.
  std::vector<double> zb, zcap;
  double depth = 0.0;
  std::vector<double> layer_bottoms;
  for (size_t i = 0; i < scene.stack.layers.size(); ++i) {
    const auto& l = scene.stack.layers[i];
    depth += l.semi_infinite() ? last_layer_depth(scene.stack) : l.thickness;
    layer_bottoms.push_back(-depth);
  }
  zb.push_back(layer_bottoms.back());
  for (size_t i = scene.stack.layers.size(); i-- > 0;) {
    zcap.push_back(medium_cap(scene.stack.layers[i].props));
    zb.push_back(i == 0 ? 0.0 : layer_bottoms[i - 1]);
  }
  if (scene.has_antenna) {
    double t_sub = scene.antenna.substrate_thickness;
    zb.push_back(scene.gap);
    zcap.push_back(std::min(air_cap, spec.tissue_cell_cap));
    // one cell through the substrate so a lumped port spans a single edge
    zb.push_back(scene.gap + t_sub);
    zcap.push_back(t_sub);
  }

  // Lateral axes: fine sampling across the slab, air outside.
  double fine = air_cap;
  for (const auto& l : scene.stack.layers)
    fine = std::min(fine, medium_cap(l.props));
  auto lateral = [&](double half) {
    std::vector<double> b{-half, half};
    std::vector<double> c{fine};
    return grade_axis(b, c, spec.grading_ratio);
  };

  YeeGrid g;
  g.pml_layers = spec.pml_layers;
  g.padding_cells = spec.padding_cells;
  g.x = lateral(scene.slab_x / 2);
  g.y = lateral(scene.slab_y / 2);
  g.z = grade_axis(zb, zcap, spec.grading_ratio);
  double bottom_cap = medium_cap(scene.stack.layers.back().props);
  add_padding_and_pml(g.x, spec, air_cap, air_cap);
  add_padding_and_pml(g.y, spec, air_cap, air_cap);
  add_padding_and_pml(g.z, spec, bottom_cap, air_cap);

  if (g.max_grading_ratio() > 1.3 + 1e-9) {
    std::string where;
    const char* names = "xyz";
    int ai = 0;
    for (const auto* a : {&g.x, &g.y, &g.z}) {
      for (size_t i = 0; i + 2 < a->size(); ++i) {
        double d0 = (*a)[i + 1] - (*a)[i], d1 = (*a)[i + 2] - (*a)[i + 1];
        if (std::max(d0 / d1, d1 / d0) > 1.3 + 1e-9)
          where += std::string(1, names[ai]) + "=" +
                   std::to_string((*a)[i + 1] * 1e3) + "mm(" +
                   std::to_string(d0 * 1e3) + "/" + std::to_string(d1 * 1e3) +
                   ") ";
      }
      ++ai;
    }
    throw GridError("grid generation violated the grading-ratio bound (" +
                    std::to_string(g.max_grading_ratio()) + " > 1.3) at " + where);
  }
  return g;
}

} // namespace mmwdose
