#include "doctest.h"

#include "mmwdose/antenna.hpp"
#include "mmwdose/dosimetry.hpp"
#include "mmwdose/fdtd.hpp"
#include "mmwdose/fdtd1d.hpp"
#include "mmwdose/grid.hpp"
#include "mmwdose/material_grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

using namespace mmwdose;

namespace {

LayerStack vacuum_stack() {
  LayerStack s;
  s.frequency = 28e9;
  s.layers = {{"vacuum", {1.0, 0.0, 1.0}, kSemiInfinite}};
  return s;
}

// Antenna over free space on a laterally trimmed domain: small enough for
// unit tests, large enough that the array plus margin fits.
ExposureScene small_free_space_scene() {
  AntennaGeometry ant = build_patch_array(Band::GHz28);
  return assemble_scene(ant, vacuum_stack(), 2e-3, 30e-3, 30e-3);
}

} // namespace

TEST_CASE("no source, no fields") {
  ExposureScene scene = small_free_space_scene();
  scene.has_antenna = false;
  YeeGrid g = generate_grid(scene, GridPolicy::DeskScale);
  MaterialGrid m = voxelize(scene, g);
  Fdtd3DOptions opt;
  opt.min_periods = 2;
  opt.drive_amplitude = 0.0;
  auto r = run_to_steady_state(scene, g, m, 28e9, opt);
  CHECK(r.residual == 0.0);
  double maxe = 0.0;
  for (auto v : r.fields.ex) maxe = std::max(maxe, double(std::abs(v)));
  for (auto v : r.fields.ey) maxe = std::max(maxe, double(std::abs(v)));
  for (auto v : r.fields.ez) maxe = std::max(maxe, double(std::abs(v)));
  CHECK(maxe == 0.0);
  CHECK(r.port.accepted == 0.0);
}

TEST_CASE("time step above the stability bound is reported, not silently wrong") {
  ExposureScene scene = small_free_space_scene();
  YeeGrid g = generate_grid(scene, GridPolicy::DeskScale);
  MaterialGrid m = voxelize(scene, g);
  Fdtd3DOptions opt;
  opt.dt_scale = 1.25;
  opt.max_periods = 40;
  CHECK_THROWS_AS(run_to_steady_state(scene, g, m, 28e9, opt), DivergenceError);
}

TEST_CASE("steady-state drive in free space: power bookkeeping and closure") {
  ExposureScene scene = small_free_space_scene();
  YeeGrid g = generate_grid(scene, GridPolicy::DeskScale);
  MaterialGrid m = voxelize(scene, g);
  auto r = run_to_steady_state(scene, g, m, 28e9, {});

  CHECK(r.residual < 1e-3);
  CHECK(r.port.incident == doctest::Approx(1.0 / (8.0 * 50.0)));
  CHECK(r.port.accepted > 0.0);
  CHECK(r.port.accepted < r.port.incident * 1.05);

  // All accepted power must leave through a box enclosing the antenna
  // (free space: no dissipation outside the port).
  const int npad = g.pml_layers + 3;
  const double flux =
      poynting_box_flux(r.fields, g, npad, g.nx() - npad, npad, g.ny() - npad,
                        npad, g.nz() - npad);
  CHECK(flux == doctest::Approx(r.port.accepted).epsilon(0.02));

  SUBCASE("normalization rescales fields and powers consistently") {
    const double p0 = r.port.accepted;
    const std::complex<float> e0 = r.fields.ez[r.fields.ez.size() / 2];
    const double alpha = normalize_to_accepted_power(r, 0.02);
    CHECK(alpha == doctest::Approx(std::sqrt(0.02 / p0)));
    CHECK(r.port.accepted == doctest::Approx(0.02));
    CHECK(std::abs(std::complex<double>(r.fields.ez[r.fields.ez.size() / 2])) ==
          doctest::Approx(alpha * std::abs(std::complex<double>(e0))).epsilon(1e-5));
    CHECK_THROWS_AS(normalize_to_accepted_power(r, -1.0), NormalizationError);
  }
}

TEST_CASE("results do not depend on the worker count") {
  ExposureScene scene = small_free_space_scene();
  YeeGrid g = generate_grid(scene, GridPolicy::DeskScale);
  MaterialGrid m = voxelize(scene, g);
  Fdtd3DOptions opt;
  opt.min_periods = 4;
  opt.convergence_tol = 2e-2; // keep the unit test short
  Fdtd3DOptions opt3 = opt;
  opt3.workers = 3;

  SteadyStateResult a = run_to_steady_state(scene, g, m, 28e9, opt);
  SteadyStateResult b = run_to_steady_state(scene, g, m, 28e9, opt3);
  CHECK(a.periods == b.periods);
  REQUIRE(a.fields.ez.size() == b.fields.ez.size());
  double num = 0.0, den = 0.0;
  auto acc = [&](const std::vector<std::complex<float>>& u,
                 const std::vector<std::complex<float>>& v) {
    for (std::size_t n = 0; n < u.size(); ++n) {
      num = std::max(num, double(std::abs(u[n] - v[n])));
      den = std::max(den, double(std::abs(u[n])));
    }
  };
  acc(a.fields.ex, b.fields.ex);
  acc(a.fields.ey, b.fields.ey);
  acc(a.fields.ez, b.fields.ez);
  acc(a.fields.hx, b.fields.hx);
  acc(a.fields.hy, b.fields.hy);
  acc(a.fields.hz, b.fields.hz);
  REQUIRE(den > 0.0);
  CHECK(num / den <= 1e-6);
  CHECK(a.port.accepted == doctest::Approx(b.port.accepted).epsilon(1e-9));
}
