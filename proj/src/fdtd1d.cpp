#include "mmwdose/fdtd1d.hpp"

#include "mmwdose/constants.hpp"
#include "mmwdose/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace mmwdose {

namespace {

using cplx = std::complex<double>;

constexpr int kPmlLayers = 10;
constexpr double kPmlOrder = 3.0;
constexpr double kPmlKappaMax = 5.0;
constexpr double kPmlAlphaMax = 0.1;

struct PmlCoef {
  std::vector<double> b, c, inv_kappa; // indexed like the owning field array
};

// Polynomial-graded CPML profile; d is the normalized depth into the layer.
void fill_pml(PmlCoef& p, size_t idx, double d, double dz, double dt) {
  double sigma_opt = 0.8 * (kPmlOrder + 1.0) / (eta0 * dz);
  double s = sigma_opt * std::pow(d, kPmlOrder);
  double kappa = 1.0 + (kPmlKappaMax - 1.0) * std::pow(d, kPmlOrder);
  double alpha = kPmlAlphaMax * (1.0 - d);
  double b = std::exp(-(s / kappa + alpha) * dt / eps0);
  double c = s * (b - 1.0) / ((s + kappa * alpha) * kappa);
  p.b[idx] = b;
  p.c[idx] = c;
  p.inv_kappa[idx] = 1.0 / kappa;
}

} // namespace

Fdtd1DResult run_1d_layered(const LayerStack& stack,
                            const PlaneWaveExcitation& wave,
                            const Fdtd1DOptions& opt) {
  stack.validate();
  if (std::abs(wave.theta_deg) > 1e-12)
    throw std::invalid_argument("1D layered mode supports normal incidence only");
  if (!(opt.dz > 0.0)) throw std::invalid_argument("dz must be positive");

  const double dz = opt.dz;
  const double f = wave.freq;
  const double period = 1.0 / f;

  // Layout along the propagation axis: [PML | scattered air | TF/SF plane |
  // total-field air | tissue layers | truncated last layer | PML].
  const int k_probe = kPmlLayers + 4;
  const int k_src = kPmlLayers + 10;
  const int k_if = k_src + 40; // air/tissue interface node
  std::vector<int> layer_cells;
  for (const auto& l : stack.layers) {
    double th = l.semi_infinite() ? last_layer_depth(stack) : l.thickness;
    int n = std::max(1, (int)std::lround(th / dz));
    layer_cells.push_back(n);
  }
  int tissue_cells = 0;
  for (int n : layer_cells) tissue_cells += n;
  const int ncell = k_if + tissue_cells + kPmlLayers;
  const int nnode = ncell + 1;

  // Per-cell material
  std::vector<double> eps_c(ncell, 1.0), sig_c(ncell, 0.0);
  {
    int k = k_if;
    for (size_t li = 0; li < stack.layers.size(); ++li) {
      int end = (li + 1 == stack.layers.size()) ? ncell : k + layer_cells[li];
      for (; k < end; ++k) {
        eps_c[k] = stack.layers[li].props.eps_r;
        sig_c[k] = stack.layers[li].props.sigma;
      }
    }
  }

  // Integer number of steps per drive period keeps the running DFT exact.
  const double dt0 = opt.courant * dz / c0;
  const int steps_per_period = (int)std::ceil(period / dt0);
  const double dt = period / steps_per_period;
  const double omega = 2.0 * pi * f;

  // Node update coefficients from face-averaged material
  std::vector<double> ca(nnode), cb(nnode);
  for (int k = 0; k < nnode; ++k) {
    double e = 0.0, s = 0.0;
    int n = 0;
    if (k > 0) { e += eps_c[k - 1]; s += sig_c[k - 1]; ++n; }
    if (k < ncell) { e += eps_c[k]; s += sig_c[k]; ++n; }
    e = eps0 * e / n;
    s /= n;
    double q = s * dt / (2.0 * e);
    ca[k] = (1.0 - q) / (1.0 + q);
    cb[k] = (dt / e) / (1.0 + q);
  }

  PmlCoef pe{std::vector<double>(nnode, 0.0), std::vector<double>(nnode, 0.0),
             std::vector<double>(nnode, 1.0)};
  PmlCoef ph{std::vector<double>(ncell, 0.0), std::vector<double>(ncell, 0.0),
             std::vector<double>(ncell, 1.0)};
  for (int k = 0; k < nnode; ++k) {
    if (k < kPmlLayers)
      fill_pml(pe, k, double(kPmlLayers - k) / kPmlLayers, dz, dt);
    else if (k > ncell - kPmlLayers)
      fill_pml(pe, k, double(k - (ncell - kPmlLayers)) / kPmlLayers, dz, dt);
  }
  for (int k = 0; k < ncell; ++k) {
    double dc = k + 0.5;
    if (dc < kPmlLayers)
      fill_pml(ph, k, (kPmlLayers - dc) / kPmlLayers, dz, dt);
    else if (dc > ncell - kPmlLayers)
      fill_pml(ph, k, (dc - (ncell - kPmlLayers)) / kPmlLayers, dz, dt);
  }

  std::vector<double> ex(nnode, 0.0), hy(ncell, 0.0);
  std::vector<double> psi_e(nnode, 0.0), psi_h(ncell, 0.0);

  const double t_ramp = opt.ramp_periods * period;
  auto drive = [&](double t) {
    if (t <= 0.0) return 0.0;
    double r = t >= t_ramp ? 1.0 : 0.5 * (1.0 - std::cos(pi * t / t_ramp));
    return r * std::sin(omega * t);
  };
  auto e_inc = [&](double t, double z) { return drive(t - (z - k_src * dz) / c0); };

  // Per-period running DFT (peak-amplitude convention, reset each period)
  std::vector<cplx> ex_ph(nnode), hy_ph(ncell);
  cplx probe_ph, probe_inc_ph;
  auto reset_dft = [&] {
    std::fill(ex_ph.begin(), ex_ph.end(), cplx{});
    std::fill(hy_ph.begin(), hy_ph.end(), cplx{});
    probe_ph = probe_inc_ph = cplx{};
  };

  const int min_periods = opt.ramp_periods + 4;
  double prev_norm = -1.0, residual = 1.0;
  int step = 0, periods = 0;
  bool converged = false;
  while (periods < opt.max_periods && !converged) {
    reset_dft();
    for (int n = 0; n < steps_per_period; ++n, ++step) {
      double t_e = step * dt;
      double t_h = (step + 0.5) * dt;
      for (int k = 1; k < ncell; ++k) {
        double curl = (hy[k - 1] - hy[k]) / dz;
        psi_e[k] = pe.b[k] * psi_e[k] + pe.c[k] * curl;
        ex[k] = ca[k] * ex[k] + cb[k] * (curl * pe.inv_kappa[k] + psi_e[k]);
      }
      ex[k_src] += cb[k_src] / dz * e_inc(t_e - 0.5 * dt, (k_src - 0.5) * dz) / eta0;
      for (int k = 0; k < ncell; ++k) {
        double curl = (ex[k] - ex[k + 1]) / dz;
        psi_h[k] = ph.b[k] * psi_h[k] + ph.c[k] * curl;
        hy[k] += dt / mu0 * (curl * ph.inv_kappa[k] + psi_h[k]);
      }
      hy[k_src - 1] += dt / (mu0 * dz) * e_inc(t_e, k_src * dz);

      cplx we = 2.0 / steps_per_period *
                std::exp(cplx(0.0, -omega * t_e));
      cplx wh = 2.0 / steps_per_period *
                std::exp(cplx(0.0, -omega * t_h));
      for (int k = 0; k < nnode; ++k) ex_ph[k] += we * ex[k];
      for (int k = 0; k < ncell; ++k) hy_ph[k] += wh * hy[k];
      probe_ph += we * ex[k_probe];
      probe_inc_ph += we * e_inc(t_e, k_probe * dz);
    }
    ++periods;
    double norm = 0.0;
    for (const auto& v : ex_ph) norm += std::norm(v);
    norm = std::sqrt(norm);
    if (!std::isfinite(norm))
      throw DivergenceError("1D run diverged at step " + std::to_string(step));
    if (prev_norm > 0.0) residual = std::abs(norm - prev_norm) / norm;
    if (periods >= min_periods && residual < opt.convergence_tol)
      converged = true;
    prev_norm = norm;
  }
  if (!converged)
    throw ConvergenceError("1D run did not converge; residual " +
                           std::to_string(residual));

  // Reflection coefficient referenced to the interface: the probe sits in the
  // scattered-field air region, so its phasor is the reflected wave alone.
  double k0 = omega / c0;
  cplx gamma = probe_ph / probe_inc_ph *
               std::exp(cplx(0.0, 2.0 * k0 * (k_if - k_probe) * dz));

  Fdtd1DResult r;
  r.gamma = gamma;
  r.transmittance = 1.0 - std::norm(gamma);
  r.steps = step;
  r.periods = periods;
  r.dt = dt;
  r.residual = residual;
  double s_ref = 1.0 / (2.0 * eta0); // incident flux for a unit drive
  for (int k = k_if; k <= ncell - kPmlLayers; ++k) {
    cplx hc = 0.5 * (hy_ph[k - 1] + hy_ph[k]);
    double s = 0.5 * (ex_ph[k] * std::conj(hc)).real();
    r.depth.push_back((k - k_if) * dz);
    r.flux.push_back(s / s_ref * wave.s_inc);
  }
  return r;
}

} // namespace mmwdose
