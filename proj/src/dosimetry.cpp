#include "mmwdose/dosimetry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mmwdose {

namespace {

using cplxd = std::complex<double>;

// Interpolates the staggered phasor components to co-located grid nodes.
struct Colocator {
  const PhasorField& f;
  const YeeGrid& g;
  std::vector<double> xc, yc, zc; // cell centers

  Colocator(const PhasorField& field, const YeeGrid& grid) : f(field), g(grid) {
    auto centers = [](const std::vector<double>& n) {
      std::vector<double> c(n.size() - 1);
      for (std::size_t i = 0; i + 1 < n.size(); ++i)
        c[i] = 0.5 * (n[i] + n[i + 1]);
      return c;
    };
    xc = centers(g.x);
    yc = centers(g.y);
    zc = centers(g.z);
  }

  // Linear interpolation between samples living at cell centers, evaluated
  // at node index n along that axis; clamps at the outer boundaries.
  static cplxd interp(const std::vector<std::complex<float>>& a,
                      std::size_t lo, std::size_t stride, int n, int ncells,
                      const std::vector<double>& c,
                      const std::vector<double>& nodes) {
    if (n <= 0) return cplxd(a[lo]);
    if (n >= ncells) return cplxd(a[lo + std::size_t(ncells - 1) * stride]);
    const double w = (nodes[n] - c[n - 1]) / (c[n] - c[n - 1]);
    return (1.0 - w) * cplxd(a[lo + std::size_t(n - 1) * stride]) +
           w * cplxd(a[lo + std::size_t(n) * stride]);
  }

  cplxd ex(int i, int j, int k) const {
    return interp(f.ex, f.node_index(0, j, k), 1, i, f.nx, xc, g.x);
  }
  cplxd ey(int i, int j, int k) const {
    return interp(f.ey, f.node_index(i, 0, k), f.nx + 1, j, f.ny, yc, g.y);
  }
  cplxd ez(int i, int j, int k) const {
    return interp(f.ez, f.node_index(i, j, 0),
                  std::size_t(f.nx + 1) * (f.ny + 1), k, f.nz, zc, g.z);
  }
  cplxd hx(int i, int j, int k) const {
    // H_x lives at (x_i, yc_j, zc_k): interpolate in y then z.
    auto row = [&](int kk) {
      return interp(f.hx, f.node_index(i, 0, kk), f.nx + 1, j, f.ny, yc, g.y);
    };
    if (k <= 0) return row(0);
    if (k >= f.nz) return row(f.nz - 1);
    const double w = (g.z[k] - zc[k - 1]) / (zc[k] - zc[k - 1]);
    return (1.0 - w) * row(k - 1) + w * row(k);
  }
  cplxd hy(int i, int j, int k) const {
    auto row = [&](int kk) {
      return interp(f.hy, f.node_index(0, j, kk), 1, i, f.nx, xc, g.x);
    };
    if (k <= 0) return row(0);
    if (k >= f.nz) return row(f.nz - 1);
    const double w = (g.z[k] - zc[k - 1]) / (zc[k] - zc[k - 1]);
    return (1.0 - w) * row(k - 1) + w * row(k);
  }
  cplxd hz(int i, int j, int k) const {
    auto row = [&](int jj) {
      return interp(f.hz, f.node_index(0, jj, k), 1, i, f.nx, xc, g.x);
    };
    if (j <= 0) return row(0);
    if (j >= f.ny) return row(f.ny - 1);
    const double w = (g.y[j] - yc[j - 1]) / (yc[j] - yc[j - 1]);
    return (1.0 - w) * row(j - 1) + w * row(j);
  }

  double sx(int i, int j, int k) const {
    return 0.5 * std::real(ey(i, j, k) * std::conj(hz(i, j, k)) -
                           ez(i, j, k) * std::conj(hy(i, j, k)));
  }
  double sy(int i, int j, int k) const {
    return 0.5 * std::real(ez(i, j, k) * std::conj(hx(i, j, k)) -
                           ex(i, j, k) * std::conj(hz(i, j, k)));
  }
  double sz(int i, int j, int k) const {
    return 0.5 * std::real(ex(i, j, k) * std::conj(hy(i, j, k)) -
                           ey(i, j, k) * std::conj(hx(i, j, k)));
  }
};

int nearest_node(const std::vector<double>& nodes, double v) {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
  if (it == nodes.end()) return int(nodes.size()) - 1;
  if (it == nodes.begin()) return 0;
  const int hi = int(it - nodes.begin());
  return (v - nodes[hi - 1] <= nodes[hi] - v) ? hi - 1 : hi;
}

// Exact integral of the bilinear interpolant of a node-sampled map over an
// axis-aligned rectangle.
class BilinearIntegrator {
public:
  BilinearIntegrator(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& s)
      : x_(x), y_(y), s_(s), nx_(x.size()) {
    // Cumulative row integrals: rc_[j][i] = integral of f(., y_j) over
    // [x_0, x_i], exact for the piecewise-linear row profile.
    rc_.assign(y_.size() * nx_, 0.0);
    for (std::size_t j = 0; j < y_.size(); ++j)
      for (std::size_t i = 1; i < nx_; ++i)
        rc_[j * nx_ + i] = rc_[j * nx_ + i - 1] +
                           0.5 * (val(i - 1, j) + val(i, j)) * (x_[i] - x_[i - 1]);
  }

  double rect(double xa, double xb, double ya, double yb) const {
    // Row integral G(x, y_j) is linear in y between sample rows, so a
    // trapezoid sum in y (with partial end segments) is exact.
    const std::size_t qa = seg(y_, ya), qb = seg(y_, yb);
    auto G = [&](std::size_t j) { return row_integral(j, xa, xb); };
    auto Gat = [&](std::size_t q, double yv) {
      const double w = (yv - y_[q]) / (y_[q + 1] - y_[q]);
      return (1.0 - w) * G(q) + w * G(q + 1);
    };
    if (qa == qb)
      return 0.5 * (Gat(qa, ya) + Gat(qa, yb)) * (yb - ya);
    double sum = 0.5 * (Gat(qa, ya) + G(qa + 1)) * (y_[qa + 1] - ya);
    for (std::size_t q = qa + 1; q < qb; ++q)
      sum += 0.5 * (G(q) + G(q + 1)) * (y_[q + 1] - y_[q]);
    sum += 0.5 * (G(qb) + Gat(qb, yb)) * (yb - y_[qb]);
    return sum;
  }

private:
  double val(std::size_t i, std::size_t j) const { return s_[j * nx_ + i]; }

  static std::size_t seg(const std::vector<double>& n, double v) {
    auto it = std::upper_bound(n.begin(), n.end(), v);
    std::size_t q = it == n.begin() ? 0 : std::size_t(it - n.begin()) - 1;
    return std::min(q, n.size() - 2);
  }

  // Integral of the linear row profile f(., y_j) over [xa, xb].
  double row_integral(std::size_t j, double xa, double xb) const {
    auto at = [&](double xv) {
      const std::size_t p = seg(x_, xv);
      const double w = (xv - x_[p]) / (x_[p + 1] - x_[p]);
      const double fv = (1.0 - w) * val(p, j) + w * val(p + 1, j);
      return rc_[j * nx_ + p] + 0.5 * (val(p, j) + fv) * (xv - x_[p]);
    };
    return at(xb) - at(xa);
  }

  const std::vector<double>& x_;
  const std::vector<double>& y_;
  const std::vector<double>& s_;
  std::size_t nx_;
  std::vector<double> rc_;
};

} // namespace

SabMap poynting_plane(const PhasorField& f, const YeeGrid& g, double z_plane) {
  Colocator co(f, g);
  SabMap m;
  m.z = z_plane;
  m.x = g.x;
  m.y = g.y;
  const int k = nearest_node(g.z, z_plane);
  if (std::abs(g.z[k] - z_plane) > 1e-9)
    throw std::invalid_argument("z_plane does not lie on a grid plane");
  m.s.resize(m.x.size() * m.y.size());
  for (int j = 0; j <= f.ny; ++j)
    for (int i = 0; i <= f.nx; ++i)
      m.s[std::size_t(j) * m.x.size() + i] = co.sz(i, j, k);
  return m;
}

PeakResult averaged_peak(const SabMap& map, double area) {
  if (area <= 0.0) throw std::invalid_argument("window area must be positive");
  const double half = 0.5 * std::sqrt(area);
  const double x0 = map.x.front(), x1 = map.x.back();
  const double y0 = map.y.front(), y1 = map.y.back();
  if (x1 - x0 < 2 * half || y1 - y0 < 2 * half)
    throw std::invalid_argument("averaging window exceeds the sampled plane");

  BilinearIntegrator integ(map.x, map.y, map.s);
  PeakResult best;
  bool found = false;
  for (std::size_t j = 0; j < map.y.size(); ++j) {
    if (map.y[j] < y0 + half - 1e-15 || map.y[j] > y1 - half + 1e-15)
      continue;
    const double yc = map.y[j];
    for (std::size_t i = 0; i < map.x.size(); ++i) {
      if (map.x[i] < x0 + half - 1e-15 || map.x[i] > x1 - half + 1e-15)
        continue;
      const double xc = map.x[i];
      const double v =
          integ.rect(xc - half, xc + half, yc - half, yc + half) / area;
      if (!found || v > best.value) {
        best.value = v;
        best.x = xc;
        best.y = yc;
        found = true;
      }
    }
  }
  if (!found) throw std::invalid_argument("no valid window position");
  return best;
}

DosimetryReport per_layer_report(const PhasorField& f, const ExposureScene& scene,
                                 const YeeGrid& g) {
  DosimetryReport r;
  r.freq = f.freq;
  r.model_kind = scene.stack.model_kind;
  double z = 0.0;
  for (const auto& layer : scene.stack.layers) {
    LayerDose d;
    d.layer = layer.name;
    d.z = z;
    SabMap m = poynting_plane(f, g, z);
    for (auto& v : m.s) v = -v; // absorbed flux points into the tissue (-z)
    d.peak_1cm2 = averaged_peak(m, 1e-4);
    d.peak_4cm2 = averaged_peak(m, 4e-4);
    r.entries.push_back(std::move(d));
    if (layer.semi_infinite()) break;
    z -= layer.thickness;
  }
  return r;
}

std::string report_to_json(const DosimetryReport& r) {
  nlohmann::json j;
  j["frequency_ghz"] = r.freq / 1e9;
  j["model"] = model_name(r.model_kind);
  j["accepted_power_w"] = r.accepted_power;
  j["normalization_scale"] = r.scale;
  j["layers"] = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json l;
    l["layer"] = e.layer;
    l["z_mm"] = e.z * 1e3;
    l["peak_sab_1cm2_w_m2"] = e.peak_1cm2.value;
    l["peak_sab_4cm2_w_m2"] = e.peak_4cm2.value;
    l["peak_x_mm"] = e.peak_1cm2.x * 1e3;
    l["peak_y_mm"] = e.peak_1cm2.y * 1e3;
    j["layers"].push_back(std::move(l));
  }
  return j.dump(2);
}

std::string report_to_csv(const DosimetryReport& r) {
  std::ostringstream os;
  os << "layer,z_mm,peak_sab_1cm2,peak_sab_4cm2,x_mm,y_mm\n";
  os.precision(9);
  for (const auto& e : r.entries)
    os << e.layer << ',' << e.z * 1e3 << ',' << e.peak_1cm2.value << ','
       << e.peak_4cm2.value << ',' << e.peak_1cm2.x * 1e3 << ','
       << e.peak_1cm2.y * 1e3 << '\n';
  return os.str();
}

std::string sab_map_to_csv(const SabMap& m) {
  std::ostringstream os;
  os << "x_mm,y_mm,s_w_m2\n";
  os.precision(9);
  for (std::size_t j = 0; j < m.y.size(); ++j)
    for (std::size_t i = 0; i < m.x.size(); ++i)
      os << m.x[i] * 1e3 << ',' << m.y[j] * 1e3 << ','
         << m.s[j * m.x.size() + i] << '\n';
  return os.str();
}

// Integrates E x H* on the staggered Yee faces: each tangential E sample is
// paired with the facing H component interpolated along the face normal only,
// which keeps the surface integral second-order without lateral smoothing.
double poynting_box_flux(const PhasorField& f, const YeeGrid& g, int i0, int i1,
                         int j0, int j1, int k0, int k1) {
  auto dual = [](const std::vector<double>& n, int a, int b, int q) {
    // dual length around node q clipped to the face extent [n_a, n_b]
    const double lo = std::max(n[a], q > 0 ? 0.5 * (n[q - 1] + n[q]) : n[a]);
    const double hi =
        std::min(n[b], q + 1 < int(n.size()) ? 0.5 * (n[q] + n[q + 1]) : n[b]);
    return std::max(0.0, hi - lo);
  };
  auto normal_interp = [&](const std::vector<std::complex<float>>& a,
                           std::size_t lo, std::size_t stride, int q,
                           int ncells, const std::vector<double>& nodes) {
    // H lives at cell centers along the normal; interpolate to node plane q.
    if (q <= 0) return cplxd(a[lo]);
    if (q >= ncells) return cplxd(a[lo + std::size_t(ncells - 1) * stride]);
    const double w = (nodes[q] - 0.5 * (nodes[q - 1] + nodes[q])) /
                     (0.5 * (nodes[q + 1] - nodes[q - 1]));
    return (1.0 - w) * cplxd(a[lo + std::size_t(q - 1) * stride]) +
           w * cplxd(a[lo + std::size_t(q) * stride]);
  };
  const std::size_t sx = 1, sy = f.nx + 1,
                    sz = std::size_t(f.nx + 1) * (f.ny + 1);

  double flux = 0.0;
  for (int face = 0; face < 2; ++face) {
    // z faces: Sz = 1/2 Re[Ex Hy* - Ey Hx*]
    const int k = face ? k1 : k0;
    const double sgn = face ? 1.0 : -1.0;
    double s = 0.0;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i < i1; ++i) {
        const cplxd ex(f.ex[f.node_index(i, j, k)]);
        const cplxd hy = normal_interp(f.hy, f.node_index(i, j, 0), sz, k,
                                       f.nz, g.z);
        s += std::real(ex * std::conj(hy)) * (g.x[i + 1] - g.x[i]) *
             dual(g.y, j0, j1, j);
      }
    for (int j = j0; j < j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const cplxd ey(f.ey[f.node_index(i, j, k)]);
        const cplxd hx = normal_interp(f.hx, f.node_index(i, j, 0), sz, k,
                                       f.nz, g.z);
        s -= std::real(ey * std::conj(hx)) * dual(g.x, i0, i1, i) *
             (g.y[j + 1] - g.y[j]);
      }
    flux += sgn * 0.5 * s;
  }
  for (int face = 0; face < 2; ++face) {
    // x faces: Sx = 1/2 Re[Ey Hz* - Ez Hy*]
    const int i = face ? i1 : i0;
    const double sgn = face ? 1.0 : -1.0;
    double s = 0.0;
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j < j1; ++j) {
        const cplxd ey(f.ey[f.node_index(i, j, k)]);
        const cplxd hz = normal_interp(f.hz, f.node_index(0, j, k), sx, i,
                                       f.nx, g.x);
        s += std::real(ey * std::conj(hz)) * (g.y[j + 1] - g.y[j]) *
             dual(g.z, k0, k1, k);
      }
    for (int k = k0; k < k1; ++k)
      for (int j = j0; j <= j1; ++j) {
        const cplxd ez(f.ez[f.node_index(i, j, k)]);
        const cplxd hy = normal_interp(f.hy, f.node_index(0, j, k), sx, i,
                                       f.nx, g.x);
        s -= std::real(ez * std::conj(hy)) * dual(g.y, j0, j1, j) *
             (g.z[k + 1] - g.z[k]);
      }
    flux += sgn * 0.5 * s;
  }
  for (int face = 0; face < 2; ++face) {
    // y faces: Sy = 1/2 Re[Ez Hx* - Ex Hz*]
    const int j = face ? j1 : j0;
    const double sgn = face ? 1.0 : -1.0;
    double s = 0.0;
    for (int k = k0; k < k1; ++k)
      for (int i = i0; i <= i1; ++i) {
        const cplxd ez(f.ez[f.node_index(i, j, k)]);
        const cplxd hx = normal_interp(f.hx, f.node_index(i, 0, k), sy, j,
                                       f.ny, g.y);
        s += std::real(ez * std::conj(hx)) * dual(g.x, i0, i1, i) *
             (g.z[k + 1] - g.z[k]);
      }
    for (int k = k0; k <= k1; ++k)
      for (int i = i0; i < i1; ++i) {
        const cplxd ex(f.ex[f.node_index(i, j, k)]);
        const cplxd hz = normal_interp(f.hz, f.node_index(i, 0, k), sy, j,
                                       f.ny, g.y);
        s -= std::real(ex * std::conj(hz)) * (g.x[i + 1] - g.x[i]) *
             dual(g.z, k0, k1, k);
      }
    flux += sgn * 0.5 * s;
  }
  return flux;
}

} // namespace mmwdose
