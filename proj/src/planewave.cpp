#include "mmwdose/planewave.hpp"

#include "mmwdose/constants.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace mmwdose {

namespace {

const DielectricProperties kAir{1.0, 0.0, 1.0};

struct StackParams {
  std::vector<ComplexWaveParams> media; // index 0 = air, 1..N = layers
};

StackParams stack_params(const LayerStack& stack,
                         const PlaneWaveExcitation& wave) {
  StackParams p;
  p.media.reserve(stack.layers.size() + 1);
  p.media.push_back(wave_params(kAir, wave.freq, wave.theta_deg, wave.pol));
  for (const auto& l : stack.layers)
    p.media.push_back(
        wave_params(l.props, wave.freq, wave.theta_deg, wave.pol));
  return p;
}

cplx fresnel_rho(const ComplexWaveParams& above, const ComplexWaveParams& below) {
  return (below.eta - above.eta) / (below.eta + above.eta);
}

} // namespace

void PlaneWaveExcitation::validate() const {
  if (!(freq > 0.0)) throw std::invalid_argument("freq must be > 0");
  if (!(theta_deg >= 0.0 && theta_deg < 90.0))
    throw std::invalid_argument("theta must be in [0, 90) degrees");
  if (!(s_inc >= 0.0)) throw std::invalid_argument("s_inc must be >= 0");
}

cplx recursive_gamma(const LayerStack& stack, const PlaneWaveExcitation& wave,
                     int interface_index) {
  stack.validate();
  wave.validate();
  const int n = static_cast<int>(stack.layers.size());
  if (interface_index < 1 || interface_index > n)
    throw std::invalid_argument("interface index out of range");
  StackParams p = stack_params(stack, wave);

  // Gamma_n at the deepest interface: the last layer is semi-infinite, so
  // nothing returns from below it.
  cplx gamma = fresnel_rho(p.media[n - 1], p.media[n]);
  for (int i = n - 1; i >= interface_index; --i) {
    cplx rho = fresnel_rho(p.media[i - 1], p.media[i]);
    cplx phase = std::exp(cplx(0.0, -2.0) * p.media[i].kz *
                          stack.layers[i - 1].thickness);
    gamma = (rho + gamma * phase) / (1.0 + rho * gamma * phase);
  }
  return gamma;
}

cplx transfer_matrix_gamma(const LayerStack& stack,
                           const PlaneWaveExcitation& wave) {
  stack.validate();
  wave.validate();
  const int n = static_cast<int>(stack.layers.size());
  StackParams p = stack_params(stack, wave);

  // Characteristic matrix of each finite layer maps (E_t, H_t) at its bottom
  // face to the top face; the semi-infinite last layer fixes E/H = eta_n.
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  const cplx J(0.0, 1.0);
  for (int i = 1; i < n; ++i) {
    cplx delta = p.media[i].kz * stack.layers[i - 1].thickness;
    cplx cd = std::cos(delta), sd = std::sin(delta);
    Eigen::Matrix2cd mi;
    mi << cd, J * p.media[i].eta * sd, J * sd / p.media[i].eta, cd;
    m = m * mi;
  }
  Eigen::Vector2cd bc = m * Eigen::Vector2cd(p.media[n].eta, 1.0);
  cplx z_in = bc(0) / bc(1);
  return (z_in - p.media[0].eta) / (z_in + p.media[0].eta);
}

double absorbed_power_density(cplx gamma, double s_inc) {
  if (!(s_inc >= 0.0)) throw std::invalid_argument("s_inc must be >= 0");
  double mag = std::abs(gamma);
  if (mag > 1.0 + 1e-12)
    throw std::runtime_error("|Gamma| > 1: upstream numeric inconsistency");
  mag = std::min(mag, 1.0);
  return (1.0 - mag * mag) * s_inc;
}

ReflectionResult reflection_result(const LayerStack& stack,
                                   const PlaneWaveExcitation& wave) {
  ReflectionResult r;
  r.gamma = recursive_gamma(stack, wave);
  double mag = std::min(std::abs(r.gamma), 1.0);
  r.transmittance = 1.0 - mag * mag;
  r.s_ab_interface = absorbed_power_density(r.gamma, wave.s_inc);
  return r;
}

double reported_interface_sab(const LayerStack& stack,
                              const PlaneWaveExcitation& wave) {
  int idx = stack.layers.size() > 1 ? 2 : 1;
  return absorbed_power_density(recursive_gamma(stack, wave, idx), wave.s_inc);
}

std::vector<SweepPoint> transmission_sweep(const LayerStack& stack, double freq,
                                           Polarization pol,
                                           const std::vector<double>& theta_grid,
                                           double s_inc) {
  if (theta_grid.empty()) throw std::invalid_argument("empty angle grid");
  std::vector<SweepPoint> out;
  out.reserve(theta_grid.size());
  for (double th : theta_grid) {
    PlaneWaveExcitation w{freq, th, pol, s_inc};
    ReflectionResult r = reflection_result(stack, w);
    out.push_back({th, pol, r.transmittance, r.s_ab_interface});
  }
  return out;
}

namespace {

double spread_objective(const std::vector<LayerStack>& stacks, double thickness,
                        double freq, const std::vector<double>& theta_grid) {
  double worst = 0.0;
  std::vector<LayerStack> mod = stacks;
  for (auto& s : mod) s.layers.front().thickness = thickness;
  for (double th : theta_grid) {
    for (Polarization pol : {Polarization::TE, Polarization::TM}) {
      double tmin = 1.0, tmax = 0.0;
      for (const auto& s : mod) {
        PlaneWaveExcitation w{freq, th, pol, 1.0};
        double t = reflection_result(s, w).transmittance;
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
      }
      if (tmin > 0.0) worst = std::max(worst, (tmax - tmin) / tmin);
    }
  }
  return worst;
}

} // namespace

CalibrationResult calibrate_sc_thickness(const std::vector<LayerStack>& stacks,
                                         double t_min, double t_max,
                                         double freq,
                                         const std::vector<double>& theta_grid,
                                         int grid_points) {
  if (!(t_min > 0.0) || !(t_max > t_min))
    throw std::invalid_argument("invalid thickness bounds");
  if (stacks.empty() || theta_grid.empty())
    throw std::invalid_argument("calibration needs stacks and an angle grid");
  for (const auto& s : stacks) s.validate();

  auto f = [&](double t) { return spread_objective(stacks, t, freq, theta_grid); };

  CalibrationResult res;
  double best_t = t_min, best_f = f(t_min);
  res.grid_thickness.reserve(grid_points);
  res.grid_objective.reserve(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    double t = t_min + (t_max - t_min) * i / double(grid_points - 1);
    double v = f(t);
    res.grid_thickness.push_back(t);
    res.grid_objective.push_back(v);
    if (v < best_f) { best_f = v; best_t = t; }
  }

  // Golden-section refinement inside the bracketing grid cells.
  double h = (t_max - t_min) / double(grid_points - 1);
  double a = std::max(t_min, best_t - h), b = std::min(t_max, best_t + h);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-7) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - invphi * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + invphi * (b - a); f2 = f(x2);
    }
  }
  double t_ref = f1 <= f2 ? x1 : x2;
  double f_ref = std::min(f1, f2);
  if (f_ref < best_f || (f_ref == best_f && t_ref < best_t)) {
    best_f = f_ref;
    best_t = t_ref;
  }
  res.thickness = best_t;
  res.max_spread = best_f;
  return res;
}

DepositionProfile deposition_profile(const LayerStack& stack,
                                     const PlaneWaveExcitation& wave,
                                     const std::vector<double>& z_grid) {
  stack.validate();
  wave.validate();
  if (!std::is_sorted(z_grid.begin(), z_grid.end()))
    throw std::invalid_argument("z grid must be sorted");
  if (!z_grid.empty() && z_grid.front() < 0.0)
    throw std::invalid_argument("z grid must be nonnegative");

  const int n = static_cast<int>(stack.layers.size());
  StackParams p = stack_params(stack, wave);
  cplx gamma = recursive_gamma(stack, wave);

  // Transverse-field amplitude giving the requested incident flux.
  double e0 = std::sqrt(2.0 * std::abs(p.media[0].eta) * wave.s_inc);

  // Downward/upward amplitudes at the top of each layer, marched from the
  // air interface by transverse-field continuity.
  std::vector<cplx> a(n + 1), b(n + 1);
  std::vector<double> z_top(n + 1, 0.0);
  cplx et = e0 * (1.0 + gamma);
  cplx ht = e0 * (1.0 - gamma) / p.media[0].eta;
  for (int i = 1; i <= n; ++i) {
    a[i] = 0.5 * (et + p.media[i].eta * ht);
    b[i] = 0.5 * (et - p.media[i].eta * ht);
    if (i == n) {
      b[i] = 0.0; // semi-infinite: nothing returns from below
      break;
    }
    z_top[i + 1] = z_top[i] + stack.layers[i - 1].thickness;
    cplx delta = p.media[i].kz * stack.layers[i - 1].thickness;
    cplx down = a[i] * std::exp(cplx(0.0, -1.0) * delta);
    cplx up = b[i] * std::exp(cplx(0.0, 1.0) * delta);
    et = down + up;
    ht = (down - up) / p.media[i].eta;
  }

  DepositionProfile prof;
  prof.z = z_grid;
  prof.s.reserve(z_grid.size());
  for (double z : z_grid) {
    int i = 1;
    while (i < n && z > z_top[i + 1]) ++i;
    cplx ph = std::exp(cplx(0.0, -1.0) * p.media[i].kz * (z - z_top[i]));
    cplx down = a[i] * ph, up = b[i] / ph;
    cplx e = down + up;
    cplx hconj = std::conj((down - up) / p.media[i].eta);
    prof.s.push_back(0.5 * (e * hconj).real());
  }
  return prof;
}

} // namespace mmwdose
