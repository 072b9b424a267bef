#include "mmwdose/fdtd.hpp"

#include "mmwdose/constants.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mmwdose {

namespace {

using cplx = std::complex<double>;
using cplxf = std::complex<float>;

constexpr double kPmlOrder = 3.0;
constexpr double kPmlKappaMax = 5.0;
constexpr double kPmlAlphaMax = 0.1;

// Per-axis spacing and CPML data.  "Primal" quantities live on grid nodes
// (used by E updates, which difference H across a node); "dual" quantities
// live on cell centers (used by H updates).
struct Axis {
  int n = 0;                      // cells
  std::vector<float> inv_de;      // 1/(kappa_d * cell size), per cell
  std::vector<float> inv_dh;      // 1/(kappa_p * dual spacing), per node
  std::vector<float> inv_de_raw, inv_dh_raw;
  std::vector<float> bp, cp;      // CPML recursion coefs at nodes
  std::vector<float> bd, cd;      // CPML recursion coefs at cells
  std::vector<int> slab_p, slab_d; // -> psi slab index, -1 outside PML
  int nslab = 0;
  int npml = 0;
};

Axis make_axis(const std::vector<double>& x, int npml, double dt) {
  Axis a;
  a.n = int(x.size()) - 1;
  a.npml = npml;
  a.inv_de.assign(a.n, 0.f);
  a.inv_de_raw.assign(a.n, 0.f);
  a.inv_dh.assign(a.n + 1, 0.f);
  a.inv_dh_raw.assign(a.n + 1, 0.f);
  a.bp.assign(a.n + 1, 0.f);
  a.cp.assign(a.n + 1, 0.f);
  a.bd.assign(a.n, 0.f);
  a.cd.assign(a.n, 0.f);
  a.slab_p.assign(a.n + 1, -1);
  a.slab_d.assign(a.n, -1);
  a.nslab = 2 * (npml + 1);

  double lo_edge = x[npml], hi_edge = x[a.n - npml];
  double lo_delta = x[npml] - x[0], hi_delta = x[a.n] - x[a.n - npml];
  double lo_dx = x[1] - x[0], hi_dx = x[a.n] - x[a.n - 1];
  auto pml = [&](double pos, double& depth, double& dx) {
    if (pos < lo_edge) { depth = (lo_edge - pos) / lo_delta; dx = lo_dx; return true; }
    if (pos > hi_edge) { depth = (pos - hi_edge) / hi_delta; dx = hi_dx; return true; }
    return false;
  };
  auto coefs = [&](double depth, double dx, float& kap, float& b, float& c) {
    double sigma_opt = 0.8 * (kPmlOrder + 1.0) / (eta0 * dx);
    double s = sigma_opt * std::pow(depth, kPmlOrder);
    double kappa = 1.0 + (kPmlKappaMax - 1.0) * std::pow(depth, kPmlOrder);
    double alpha = kPmlAlphaMax * (1.0 - depth);
    double bb = std::exp(-(s / kappa + alpha) * dt / eps0);
    kap = float(kappa);
    b = float(bb);
    c = float(s * (bb - 1.0) / ((s + kappa * alpha) * kappa));
  };

  for (int i = 0; i <= a.n; ++i) {
    double dh = i == 0   ? x[1] - x[0]
                : i == a.n ? x[a.n] - x[a.n - 1]
                           : 0.5 * (x[i + 1] - x[i - 1]);
    float kap = 1.f;
    double depth, dx;
    if (pml(x[i], depth, dx)) coefs(depth, dx, kap, a.bp[i], a.cp[i]);
    a.inv_dh_raw[i] = float(1.0 / dh);
    a.inv_dh[i] = a.inv_dh_raw[i] / kap;
    if (i <= npml) a.slab_p[i] = i;
    else if (i >= a.n - npml) a.slab_p[i] = npml + 1 + (i - (a.n - npml));
  }
  for (int i = 0; i < a.n; ++i) {
    double de = x[i + 1] - x[i];
    double xc = 0.5 * (x[i] + x[i + 1]);
    float kap = 1.f;
    double depth, dx;
    if (pml(xc, depth, dx)) coefs(depth, dx, kap, a.bd[i], a.cd[i]);
    a.inv_de_raw[i] = float(1.0 / de);
    a.inv_de[i] = a.inv_de_raw[i] / kap;
    if (i < npml) a.slab_d[i] = i;
    else if (i >= a.n - npml) a.slab_d[i] = npml + 1 + (i - (a.n - npml));
  }
  return a;
}

struct Solver {
  const YeeGrid& g;
  const MaterialGrid& mg;
  const Fdtd3DOptions& opt;
  double freq, dt, omega;
  int ns; // steps per period

  int nx, ny, nz, n1x, n1y, n1z;
  std::size_t N, sxy;
  Axis ax, ay, az;
  float dtmu;

  std::vector<float> fex, fey, fez, fhx, fhy, fhz;
  std::vector<float> caex, cbex, caey, cbey, caez, cbez;

  // CPML memory, stored only in the boundary slabs
  std::vector<float> psi_eyx, psi_ezx, psi_hyx, psi_hzx; // x direction
  std::vector<float> psi_exy, psi_ezy, psi_hxy, psi_hzy; // y direction
  std::vector<float> psi_exz, psi_eyz, psi_hxz, psi_hyz; // z direction

  // phasor accumulation (active only during the final period)
  std::atomic<bool> accumulate{false};
  std::vector<cplxf> phx[6];
  float wre, wim, whre, whim; // per-step DFT weights

  // per-period convergence monitors: E tangential on selected z planes
  std::vector<int> monitor_k;
  std::vector<std::vector<cplxf>> mon; // [plane] size 2*n1x*n1y (ex then ey)

  // port
  bool has_port = false;
  std::size_t mp = 0;
  double dzp = 0, area = 0, R = 50.0;

  std::size_t idx(int i, int j, int k) const {
    return (std::size_t(k) * n1y + j) * n1x + i;
  }

  Solver(const YeeGrid& grid, const MaterialGrid& mat, double f,
         const Fdtd3DOptions& o)
      : g(grid), mg(mat), opt(o), freq(f) {
    nx = mg.nx; ny = mg.ny; nz = mg.nz;
    n1x = nx + 1; n1y = ny + 1; n1z = nz + 1;
    N = std::size_t(n1x) * n1y * n1z;
    sxy = std::size_t(n1x) * n1y;

    double dt0 = g.courant_dt(opt.courant) * opt.dt_scale;
    ns = std::max(8, int(std::ceil(1.0 / (freq * dt0))));
    dt = 1.0 / (freq * ns);
    if (opt.dt_scale > 1.0) dt = dt0; // deliberate CFL violation
    omega = 2.0 * pi * freq;
    dtmu = float(dt / mu0);

    ax = make_axis(g.x, g.pml_layers, dt);
    ay = make_axis(g.y, g.pml_layers, dt);
    az = make_axis(g.z, g.pml_layers, dt);

    for (auto* v : {&fex, &fey, &fez, &fhx, &fhy, &fhz})
      v->assign(N, 0.f);
    psi_eyx.assign(std::size_t(ax.nslab) * n1y * n1z, 0.f);
    psi_ezx.assign(psi_eyx.size(), 0.f);
    psi_hyx.assign(psi_eyx.size(), 0.f);
    psi_hzx.assign(psi_eyx.size(), 0.f);
    psi_exy.assign(std::size_t(ay.nslab) * n1x * n1z, 0.f);
    psi_ezy.assign(psi_exy.size(), 0.f);
    psi_hxy.assign(psi_exy.size(), 0.f);
    psi_hzy.assign(psi_exy.size(), 0.f);
    psi_exz.assign(std::size_t(az.nslab) * sxy, 0.f);
    psi_eyz.assign(psi_exz.size(), 0.f);
    psi_hxz.assign(psi_exz.size(), 0.f);
    psi_hyz.assign(psi_exz.size(), 0.f);

    build_coefficients();
  }

  // averaged (eps_r, sigma) over the cells sharing an E edge
  void edge_material(int i, int j, int k, int du, int dv, double& er,
                     double& sg) const {
    // du, dv select the two transverse axes: 0=x,1=y,2=z offsets applied
    int lim[3] = {nx, ny, nz};
    int c[3] = {i, j, k};
    er = 0.0; sg = 0.0;
    int n = 0;
    for (int a = -1; a <= 0; ++a)
      for (int b = -1; b <= 0; ++b) {
        int q[3] = {c[0], c[1], c[2]};
        q[du] += a;
        q[dv] += b;
        if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[0] >= lim[0] ||
            q[1] >= lim[1] || q[2] >= lim[2])
          continue;
        const Material& m = mg.materials[mg.cell[mg.cell_index(q[0], q[1], q[2])]];
        er += m.eps_r;
        sg += m.sigma;
        ++n;
      }
    if (n == 0) { er = 1.0; sg = 0.0; return; }
    er /= n; sg /= n;
  }

  void set_coef(std::vector<float>& ca, std::vector<float>& cb, std::size_t m,
                double er, double sg, double sigma_extra = 0.0) {
    double e = er * eps0;
    double q = (sg + sigma_extra) * dt / (2.0 * e);
    ca[m] = float((1.0 - q) / (1.0 + q));
    cb[m] = float((dt / e) / (1.0 + q));
  }

  void build_coefficients() {
    for (auto* v : {&caex, &cbex, &caey, &cbey, &caez, &cbez}) v->assign(N, 0.f);
    double er, sg;
    for (int k = 1; k < nz; ++k)
      for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          std::size_t m = idx(i, j, k);
          if (mg.pec_ex[m]) continue;
          edge_material(i, j, k, 1, 2, er, sg);
          set_coef(caex, cbex, m, er, sg);
        }
    for (int k = 1; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
          std::size_t m = idx(i, j, k);
          if (mg.pec_ey[m]) continue;
          edge_material(i, j, k, 0, 2, er, sg);
          set_coef(caey, cbey, m, er, sg);
        }
    for (int k = 0; k < nz; ++k)
      for (int j = 1; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
          std::size_t m = idx(i, j, k);
          edge_material(i, j, k, 0, 1, er, sg);
          set_coef(caez, cbez, m, er, sg);
        }
  }

  void attach_port(double px, double py, double z_patch, double impedance) {
    auto nearest = [](const std::vector<double>& v, double t) {
      int best = 0;
      for (size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i] - t) < std::abs(v[best] - t)) best = int(i);
      return best;
    };
    int ip = nearest(g.x, px), jp = nearest(g.y, py), kp = nearest(g.z, z_patch);
    has_port = true;
    R = impedance;
    dzp = g.z[kp + 1] - g.z[kp];
    area = 1.0 / (ax.inv_dh_raw[ip] * ay.inv_dh_raw[jp]);
    mp = idx(ip, jp, kp);
    double er, sg;
    edge_material(ip, jp, kp, 0, 1, er, sg);
    set_coef(caez, cbez, mp, er, sg, dzp / (R * area));
  }

  // ---- update kernels over a node-plane range [kb, ke) ----

  void update_e(int kb, int ke) {
    const float* hx = fhx.data();
    const float* hy = fhy.data();
    const float* hz = fhz.data();
    for (int k = std::max(kb, 1); k < std::min(ke, nz); ++k) {
      for (int j = 1; j < ny; ++j) {
        std::size_t m = idx(0, j, k);
        float iy = ay.inv_dh[j], iz = az.inv_dh[k];
        float* e = fex.data();
        for (int i = 0; i < nx; ++i, ++m)
          e[m] = caex[m] * e[m] +
                 cbex[m] * ((hz[m] - hz[m - n1x]) * iy - (hy[m] - hy[m - sxy]) * iz);
      }
      for (int j = 0; j < ny; ++j) {
        std::size_t m = idx(1, j, k);
        float iz = az.inv_dh[k];
        float* e = fey.data();
        for (int i = 1; i < nx; ++i, ++m)
          e[m] = caey[m] * e[m] +
                 cbey[m] * ((hx[m] - hx[m - sxy]) * iz -
                            (hz[m] - hz[m - 1]) * ax.inv_dh[i]);
      }
    }
    for (int k = kb; k < std::min(ke, nz); ++k) {
      for (int j = 1; j < ny; ++j) {
        std::size_t m = idx(1, j, k);
        float iy = ay.inv_dh[j];
        float* e = fez.data();
        for (int i = 1; i < nx; ++i, ++m)
          e[m] = caez[m] * e[m] +
                 cbez[m] * ((hy[m] - hy[m - 1]) * ax.inv_dh[i] -
                            (hx[m] - hx[m - n1x]) * iy);
      }
    }
    pml_e(kb, ke);
  }

  void pml_e(int kb, int ke) {
    // x boundaries: Ey, Ez
    for (int k = kb; k < std::min(ke, nz); ++k)
      for (int j = 0; j < ny; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
          int i0 = pass == 0 ? 1 : nx - ax.npml;
          int i1 = pass == 0 ? ax.npml + 1 : nx;
          for (int i = i0; i < i1; ++i) {
            int s = ax.slab_p[i];
            std::size_t m = idx(i, j, k);
            std::size_t q = (std::size_t(k) * n1y + j) * ax.nslab + s;
            if (k >= 1 && j < ny) {
              float d = (fhz[m] - fhz[m - 1]) * ax.inv_dh_raw[i];
              psi_eyx[q] = ax.bp[i] * psi_eyx[q] + ax.cp[i] * d;
              fey[m] -= cbey[m] * psi_eyx[q];
            }
            if (j >= 1) {
              float d = (fhy[m] - fhy[m - 1]) * ax.inv_dh_raw[i];
              psi_ezx[q] = ax.bp[i] * psi_ezx[q] + ax.cp[i] * d;
              fez[m] += cbez[m] * psi_ezx[q];
            }
          }
        }
      }
    // y boundaries: Ex, Ez
    for (int k = kb; k < std::min(ke, nz); ++k)
      for (int pass = 0; pass < 2; ++pass) {
        int j0 = pass == 0 ? 1 : ny - ay.npml;
        int j1 = pass == 0 ? ay.npml + 1 : ny;
        for (int j = j0; j < j1; ++j) {
          int s = ay.slab_p[j];
          for (int i = 0; i < nx; ++i) {
            std::size_t m = idx(i, j, k);
            std::size_t q = (std::size_t(k) * ay.nslab + s) * n1x + i;
            if (k >= 1) {
              float d = (fhz[m] - fhz[m - n1x]) * ay.inv_dh_raw[j];
              psi_exy[q] = ay.bp[j] * psi_exy[q] + ay.cp[j] * d;
              fex[m] += cbex[m] * psi_exy[q];
            }
            if (i >= 1) {
              float d = (fhx[m] - fhx[m - n1x]) * ay.inv_dh_raw[j];
              psi_ezy[q] = ay.bp[j] * psi_ezy[q] + ay.cp[j] * d;
              fez[m] -= cbez[m] * psi_ezy[q];
            }
          }
        }
      }
    // z boundaries: Ex, Ey
    for (int pass = 0; pass < 2; ++pass) {
      int k0 = pass == 0 ? 1 : nz - az.npml;
      int k1 = pass == 0 ? az.npml + 1 : nz;
      for (int k = std::max(kb, k0); k < std::min({ke, k1, nz}); ++k) {
        int s = az.slab_p[k];
        for (int j = 0; j < ny; ++j)
          for (int i = 0; i < nx; ++i) {
            std::size_t m = idx(i, j, k);
            std::size_t q = (std::size_t(s) * n1y + j) * n1x + i;
            if (j >= 1) {
              float d = (fhy[m] - fhy[m - sxy]) * az.inv_dh_raw[k];
              psi_exz[q] = az.bp[k] * psi_exz[q] + az.cp[k] * d;
              fex[m] -= cbex[m] * psi_exz[q];
            }
            if (i >= 1) {
              float d = (fhx[m] - fhx[m - sxy]) * az.inv_dh_raw[k];
              psi_eyz[q] = az.bp[k] * psi_eyz[q] + az.cp[k] * d;
              fey[m] += cbey[m] * psi_eyz[q];
            }
          }
      }
    }
  }

  void update_h(int kb, int ke) {
    const float* ex = fex.data();
    const float* ey = fey.data();
    const float* ez = fez.data();
    for (int k = kb; k < std::min(ke, nz); ++k) {
      float izd = az.inv_de[k];
      for (int j = 0; j < ny; ++j) {
        float iyd = ay.inv_de[j];
        std::size_t m = idx(0, j, k);
        float* h = fhx.data();
        for (int i = 0; i <= nx; ++i, ++m)
          h[m] += dtmu * ((ey[m + sxy] - ey[m]) * izd - (ez[m + n1x] - ez[m]) * iyd);
      }
      for (int j = 0; j <= ny; ++j) {
        std::size_t m = idx(0, j, k);
        float* h = fhy.data();
        for (int i = 0; i < nx; ++i, ++m)
          h[m] += dtmu *
                  ((ez[m + 1] - ez[m]) * ax.inv_de[i] - (ex[m + sxy] - ex[m]) * izd);
      }
    }
    for (int k = kb; k < std::min(ke, n1z); ++k)
      for (int j = 0; j < ny; ++j) {
        float iyd = ay.inv_de[j];
        std::size_t m = idx(0, j, k);
        float* h = fhz.data();
        for (int i = 0; i < nx; ++i, ++m)
          h[m] += dtmu * ((ex[m + n1x] - ex[m]) * iyd - (ey[m + 1] - ey[m]) * ax.inv_de[i]);
      }
    pml_h(kb, ke);
  }

  void pml_h(int kb, int ke) {
    // x boundaries: Hy, Hz
    for (int k = kb; k < std::min(ke, n1z); ++k)
      for (int j = 0; j <= ny; ++j)
        for (int pass = 0; pass < 2; ++pass) {
          int i0 = pass == 0 ? 0 : nx - ax.npml;
          int i1 = pass == 0 ? ax.npml : nx;
          for (int i = i0; i < i1; ++i) {
            int s = ax.slab_d[i];
            std::size_t m = idx(i, j, k);
            std::size_t q = (std::size_t(k) * n1y + j) * ax.nslab + s;
            if (k < nz) {
              float d = (fez[m + 1] - fez[m]) * ax.inv_de_raw[i];
              psi_hyx[q] = ax.bd[i] * psi_hyx[q] + ax.cd[i] * d;
              fhy[m] += dtmu * psi_hyx[q];
            }
            if (j < ny) {
              float d = (fey[m + 1] - fey[m]) * ax.inv_de_raw[i];
              psi_hzx[q] = ax.bd[i] * psi_hzx[q] + ax.cd[i] * d;
              fhz[m] -= dtmu * psi_hzx[q];
            }
          }
        }
    // y boundaries: Hx, Hz
    for (int k = kb; k < std::min(ke, n1z); ++k)
      for (int pass = 0; pass < 2; ++pass) {
        int j0 = pass == 0 ? 0 : ny - ay.npml;
        int j1 = pass == 0 ? ay.npml : ny;
        for (int j = j0; j < j1; ++j) {
          int s = ay.slab_d[j];
          for (int i = 0; i <= nx; ++i) {
            std::size_t m = idx(i, j, k);
            std::size_t q = (std::size_t(k) * ay.nslab + s) * n1x + i;
            if (k < nz) {
              float d = (fez[m + n1x] - fez[m]) * ay.inv_de_raw[j];
              psi_hxy[q] = ay.bd[j] * psi_hxy[q] + ay.cd[j] * d;
              fhx[m] -= dtmu * psi_hxy[q];
            }
            if (i < nx) {
              float d = (fex[m + n1x] - fex[m]) * ay.inv_de_raw[j];
              psi_hzy[q] = ay.bd[j] * psi_hzy[q] + ay.cd[j] * d;
              fhz[m] += dtmu * psi_hzy[q];
            }
          }
        }
      }
    // z boundaries: Hx, Hy
    for (int pass = 0; pass < 2; ++pass) {
      int k0 = pass == 0 ? 0 : nz - az.npml;
      int k1 = pass == 0 ? az.npml : nz;
      for (int k = std::max(kb, k0); k < std::min(ke, k1); ++k) {
        int s = az.slab_d[k];
        for (int j = 0; j <= ny; ++j)
          for (int i = 0; i <= nx; ++i) {
            std::size_t m = idx(i, j, k);
            std::size_t q = (std::size_t(s) * n1y + j) * n1x + i;
            if (i <= nx && j < ny) {
              float d = (fey[m + sxy] - fey[m]) * az.inv_de_raw[k];
              psi_hxz[q] = az.bd[k] * psi_hxz[q] + az.cd[k] * d;
              fhx[m] += dtmu * psi_hxz[q];
            }
            if (i < nx) {
              float d = (fex[m + sxy] - fex[m]) * az.inv_de_raw[k];
              psi_hyz[q] = az.bd[k] * psi_hyz[q] + az.cd[k] * d;
              fhy[m] -= dtmu * psi_hyz[q];
            }
          }
      }
    }
  }

  // phasor / monitor accumulation for a k range (runs in the H phase, when E
  // holds its integer-step value)
  void accumulate_range(int kb, int ke) {
    if (accumulate.load(std::memory_order_relaxed)) {
      const float* src[6] = {fex.data(), fey.data(), fez.data(),
                             fhx.data(), fhy.data(), fhz.data()};
      for (int c = 0; c < 6; ++c) {
        float re = c < 3 ? wre : whre;
        float im = c < 3 ? wim : whim;
        cplxf* dst = phx[c].data();
        const float* f = src[c];
        for (std::size_t m = std::size_t(kb) * sxy,
                         end = std::min<std::size_t>(std::size_t(ke) * sxy, N);
             m < end; ++m)
          dst[m] += cplxf(re * f[m], im * f[m]);
      }
    }
    for (size_t p = 0; p < monitor_k.size(); ++p) {
      int k = monitor_k[p];
      if (k < kb || k >= ke) continue;
      cplxf* me = mon[p].data();
      const float* ex = fex.data() + std::size_t(k) * sxy;
      const float* ey = fey.data() + std::size_t(k) * sxy;
      for (std::size_t m = 0; m < sxy; ++m) {
        me[m] += cplxf(wre * ex[m], wim * ex[m]);
        me[m + sxy] += cplxf(wre * ey[m], wim * ey[m]);
      }
    }
  }

  double monitor_norm() const {
    double s = 0.0;
    for (const auto& pl : mon)
      for (const auto& v : pl) s += double(v.real()) * v.real() + double(v.imag()) * v.imag();
    return std::sqrt(s);
  }
};

} // namespace

SteadyStateResult run_to_steady_state(const ExposureScene& scene,
                                      const YeeGrid& grid,
                                      const MaterialGrid& mat, double freq,
                                      const Fdtd3DOptions& opt) {
  Solver sv(grid, mat, freq, opt);
  if (scene.has_antenna)
    sv.attach_port(scene.antenna.port.x, scene.antenna.port.y, scene.gap,
                   scene.antenna.port.impedance);

  // convergence monitors: tissue interfaces plus the patch plane
  {
    std::vector<double> zs = mat.tissue_interfaces;
    if (scene.has_antenna) zs.push_back(scene.gap);
    if (zs.empty()) zs.push_back(0.5 * (grid.z.front() + grid.z.back()));
    for (double z : zs) {
      int best = 0;
      for (size_t k = 1; k < grid.z.size(); ++k)
        if (std::abs(grid.z[k] - z) < std::abs(grid.z[best] - z)) best = int(k);
      if (std::find(sv.monitor_k.begin(), sv.monitor_k.end(), best) ==
          sv.monitor_k.end())
        sv.monitor_k.push_back(best);
    }
    sv.mon.assign(sv.monitor_k.size(), std::vector<cplxf>(2 * sv.sxy));
  }

  const int workers = std::max(1, opt.workers);
  const int ns = sv.ns;
  const double dt = sv.dt;
  const double amp = opt.drive_amplitude;
  const double t_ramp = opt.ramp_periods / freq;
  auto drive = [&](double t) {
    if (t <= 0.0) return 0.0;
    double r = t >= t_ramp ? 1.0 : 0.5 * (1.0 - std::cos(pi * t / t_ramp));
    return amp * r * std::sin(sv.omega * t);
  };

  SteadyStateResult res;
  res.dt = dt;
  res.steps_per_period = ns;
  res.workers = workers;
  res.port.impedance = sv.R;
  res.port.dt = dt;

  // k-plane partition
  std::vector<int> kb(workers), ke(workers);
  for (int w = 0; w < workers; ++w) {
    kb[w] = int(std::size_t(w) * sv.n1z / workers);
    ke[w] = int(std::size_t(w + 1) * sv.n1z / workers);
  }

  std::barrier<> bar(workers + 1);
  std::atomic<bool> done{false};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (;;) {
        bar.arrive_and_wait(); // period start
        if (done.load()) return;
        for (int n = 0; n < ns; ++n) {
          sv.update_e(kb[w], ke[w]);
          bar.arrive_and_wait(); // port window
          bar.arrive_and_wait();
          sv.update_h(kb[w], ke[w]);
          sv.accumulate_range(kb[w], ke[w]);
          bar.arrive_and_wait(); // step done
        }
      }
    });

  cplx v_ph = 0.0, i_ph = 0.0;
  double ez_prev = 0.0;
  double prev_norm = -1.0, residual = 1.0;
  int step = 0, period = 0;
  bool converged = false, final_period = false;

  while (true) {
    // decide what this period does
    if (converged) {
      if (final_period) break;
      final_period = true;
      sv.accumulate.store(true);
      for (auto& v : sv.phx) v.assign(sv.N, cplxf{});
      v_ph = i_ph = 0.0;
    }
    if (period >= opt.max_periods) {
      done.store(true);
      bar.arrive_and_wait();
      for (auto& t : pool) t.join();
      throw ConvergenceError("3D run failed to converge after " +
                             std::to_string(period) + " periods; residual " +
                             std::to_string(residual));
    }
    for (auto& pl : sv.mon) std::fill(pl.begin(), pl.end(), cplxf{});

    bar.arrive_and_wait(); // release workers into the period
    for (int n = 0; n < ns; ++n, ++step) {
      double t_e = (step + 1) * dt;        // time of E after this update
      double t_h = (step + 1.5) * dt;      // time of H after this update
      sv.wre = float(2.0 / ns * std::cos(sv.omega * t_e));
      sv.wim = float(-2.0 / ns * std::sin(sv.omega * t_e));
      sv.whre = float(2.0 / ns * std::cos(sv.omega * t_h));
      sv.whim = float(-2.0 / ns * std::sin(sv.omega * t_h));
      bar.arrive_and_wait(); // E updated everywhere
      if (sv.has_port) {
        double vs = drive(t_e - 0.5 * dt);
        sv.fez[sv.mp] -= float(sv.cbez[sv.mp] * vs / (sv.R * sv.area));
        double ez_now = sv.fez[sv.mp];
        double v_now = -ez_now * sv.dzp;
        double v_half = -sv.dzp * 0.5 * (ez_prev + ez_now);
        double i_half = (vs - v_half) / sv.R;
        ez_prev = ez_now;
        res.port.voltage.push_back(v_now);
        res.port.current.push_back(i_half);
        if (final_period) {
          v_ph += 2.0 / ns * v_now * std::exp(cplx(0, -sv.omega * t_e));
          i_ph += 2.0 / ns * i_half *
                  std::exp(cplx(0, -sv.omega * (t_e - 0.5 * dt)));
        }
      }
      bar.arrive_and_wait(); // workers proceed to H
      bar.arrive_and_wait(); // H + accumulation done
    }
    ++period;

    double norm = sv.monitor_norm();
    if (!std::isfinite(norm)) {
      done.store(true);
      bar.arrive_and_wait();
      for (auto& t : pool) t.join();
      throw DivergenceError("3D run diverged at step " + std::to_string(step));
    }
    if (!converged) {
      if (prev_norm >= 0.0)
        residual = norm > 0.0 ? std::abs(norm - prev_norm) / norm
                              : (prev_norm > 0.0 ? 1.0 : 0.0);
      if (period >= opt.min_periods && residual < opt.convergence_tol)
        converged = true;
    }
    prev_norm = norm;
  }
  done.store(true);
  bar.arrive_and_wait();
  for (auto& t : pool) t.join();

  res.steps = step;
  res.periods = period;
  res.residual = residual;
  res.fields.nx = sv.nx;
  res.fields.ny = sv.ny;
  res.fields.nz = sv.nz;
  res.fields.freq = freq;
  res.fields.ex = std::move(sv.phx[0]);
  res.fields.ey = std::move(sv.phx[1]);
  res.fields.ez = std::move(sv.phx[2]);
  res.fields.hx = std::move(sv.phx[3]);
  res.fields.hy = std::move(sv.phx[4]);
  res.fields.hz = std::move(sv.phx[5]);
  if (sv.has_port) {
    res.port.v_phasor = v_ph;
    res.port.i_phasor = i_ph;
    res.port.incident = amp * amp / (8.0 * sv.R);
    res.port.accepted = 0.5 * (v_ph * std::conj(i_ph)).real();
    res.port.reflected = res.port.incident - res.port.accepted;
  }
  return res;
}

double normalize_to_accepted_power(SteadyStateResult& result, double target) {
  if (!(result.port.accepted > 0.0))
    throw NormalizationError("accepted power must be positive, got " +
                             std::to_string(result.port.accepted));
  if (!(target > 0.0))
    throw NormalizationError("target power must be positive, got " +
                             std::to_string(target));
  double alpha = std::sqrt(target / result.port.accepted);
  for (auto* v : {&result.fields.ex, &result.fields.ey, &result.fields.ez,
                  &result.fields.hx, &result.fields.hy, &result.fields.hz})
    for (auto& c : *v) c *= float(alpha);
  result.port.v_phasor *= alpha;
  result.port.i_phasor *= alpha;
  result.port.incident *= alpha * alpha;
  result.port.accepted *= alpha * alpha;
  result.port.reflected *= alpha * alpha;
  result.scale *= alpha;
  return alpha;
}

PortSweep run_port_sweep(const ExposureScene& scene, const YeeGrid& grid,
                         const MaterialGrid& mat, double f0,
                         const std::vector<double>& freqs,
                         const Fdtd3DOptions& opt) {
  if (!scene.has_antenna)
    throw std::invalid_argument("port sweep needs an antenna in the scene");
  Solver sv(grid, mat, f0, opt);
  sv.attach_port(scene.antenna.port.x, scene.antenna.port.y, scene.gap,
                 scene.antenna.port.impedance);

  double fspan = 0.0;
  for (double f : freqs) fspan = std::max(fspan, std::abs(f - f0));
  fspan = std::max(fspan, 0.1 * f0);
  double tau = 1.0 / (pi * fspan / 2.0);
  double t0 = 4.0 * tau;
  auto drive = [&](double t) {
    double u = (t - t0) / tau;
    return opt.drive_amplitude * std::exp(-u * u) * std::sin(sv.omega * t);
  };

  std::vector<cplx> vf(freqs.size()), cf(freqs.size());
  double dt = sv.dt;
  double peak = 0.0;
  double ez_prev = 0.0;
  long max_steps = long((t0 + 60.0 * tau) / dt);
  long step = 0;
  for (; step < max_steps; ++step) {
    sv.update_e(0, sv.n1z);
    double t_e = (step + 1) * dt;
    double vs = drive(t_e - 0.5 * dt);
    sv.fez[sv.mp] -= float(sv.cbez[sv.mp] * vs / (sv.R * sv.area));
    double ez_now = sv.fez[sv.mp];
    double v_now = -ez_now * sv.dzp;
    double i_half = (vs - (-sv.dzp * 0.5 * (ez_prev + ez_now))) / sv.R;
    ez_prev = ez_now;
    for (size_t q = 0; q < freqs.size(); ++q) {
      double w = 2.0 * pi * freqs[q];
      vf[q] += dt * v_now * std::exp(cplx(0, -w * t_e));
      cf[q] += dt * i_half * std::exp(cplx(0, -w * (t_e - 0.5 * dt)));
    }
    sv.update_h(0, sv.n1z);
    peak = std::max(peak, std::abs(v_now));
    if (!std::isfinite(v_now))
      throw DivergenceError("port sweep diverged at step " + std::to_string(step));
    // stop once the port has rung down
    if (t_e > t0 + 8.0 * tau && std::abs(v_now) < 1e-7 * peak) break;
  }

  PortSweep out;
  out.freq = freqs;
  out.s11.resize(freqs.size());
  double best = 1e30;
  for (size_t q = 0; q < freqs.size(); ++q) {
    cplx a = (vf[q] + sv.R * cf[q]);
    cplx b = (vf[q] - sv.R * cf[q]);
    out.s11[q] = b / a;
    if (std::abs(out.s11[q]) < best) {
      best = std::abs(out.s11[q]);
      out.minimum_freq = freqs[q];
    }
  }
  return out;
}

} // namespace mmwdose
