#include "doctest.h"

#include "mmwdose/constants.hpp"
#include "mmwdose/grid.hpp"
#include "mmwdose/material_grid.hpp"

#include <cmath>
#include <map>
#include <set>

using namespace mmwdose;

namespace {

ExposureScene desk_scene(ModelKind m, Band b) {
  return assemble_scene(build_patch_array(b), build_paper_stack(m, b), 2e-3,
                        60e-3, 60e-3);
}

ExposureScene vacuum_scene() {
  ExposureScene s;
  s.has_antenna = false;
  s.stack.frequency = 28e9;
  s.stack.layers = {{"vacuum", {1.0, 0.0, 1.0}, kSemiInfinite}};
  s.slab_x = s.slab_y = 30e-3;
  s.gap = 2e-3;
  return s;
}

} // namespace

TEST_CASE("grid generation honors the mesh invariants") {
  for (ModelKind m : {ModelKind::Homogeneous, ModelKind::TwoLayer,
                      ModelKind::ThreeLayer, ModelKind::FourLayer}) {
    for (Band b : {Band::GHz28, Band::GHz39}) {
      auto scene = desk_scene(m, b);
      auto g = generate_grid(scene, GridPolicy::DeskScale);
      CHECK(g.max_grading_ratio() <= 1.3 + 1e-9);
      CHECK(g.pml_layers == 8);
      CHECK(g.padding_cells == 10);
      // strictly increasing coordinates
      for (const auto* a : {&g.x, &g.y, &g.z})
        for (size_t i = 0; i + 1 < a->size(); ++i)
          CHECK((*a)[i + 1] > (*a)[i]);
      // tissue interfaces are node-exact
      double depth = 0.0;
      for (const auto& l : scene.stack.layers) {
        if (l.semi_infinite()) break;
        depth += l.thickness;
        double target = -depth;
        double best = 1e9;
        for (double z : g.z) best = std::min(best, std::abs(z - target));
        CHECK(best < 1e-12);
      }
      auto mg = voxelize(scene, g);
      // every cell edge <= lambda_medium / 10
      double lambda0 = c0 / scene.stack.frequency;
      for (int k = 0; k < mg.nz; ++k)
        for (int j = 0; j < mg.ny; ++j)
          for (int i = 0; i < mg.nx; ++i) {
            const auto& mat = mg.cell_material(i, j, k);
            double cap = lambda0 / (10.0 * std::sqrt(mat.eps_r));
            double dx = g.x[i + 1] - g.x[i];
            double dy = g.y[j + 1] - g.y[j];
            double dz = g.z[k + 1] - g.z[k];
            REQUIRE(std::max({dx, dy, dz}) <= cap * (1.0 + 1e-9));
          }
    }
  }
}

TEST_CASE("paper fidelity policy mirrors the reference mesh settings") {
  auto scene = assemble_scene(build_patch_array(Band::GHz28),
                              build_paper_stack(ModelKind::FourLayer, Band::GHz28),
                              2e-3, 150e-3, 150e-3);
  auto g = generate_grid(scene, GridPolicy::PaperFidelity);
  CHECK(g.pml_layers == 8);
  CHECK(g.padding_cells == 10);
  CHECK(g.max_cell() <= c0 / 28e9 / 15 * (1 + 1e-9));
  // automatic sizing stays at or above 0.06 mm; only the explicit SC layer
  // goes below it
  double second_smallest = 1e9;
  for (const auto* a : {&g.x, &g.y, &g.z})
    for (size_t i = 0; i + 1 < a->size(); ++i) {
      double d = (*a)[i + 1] - (*a)[i];
      if (d > 0.02e-3 * (1 + 1e-6)) second_smallest = std::min(second_smallest, d);
    }
  // rescale-to-fit may trim boundary cells slightly below the SC size
  CHECK(g.min_cell() >= 0.02e-3 * 0.95);
  CHECK(second_smallest >= 0.02e-3);
  // tissue-region cells within the reference 0.33 mm bound
  auto mg = voxelize(scene, g);
  for (int k = 0; k < mg.nz; ++k) {
    if (g.z[k + 1] > 0.0) continue;
    double dz = g.z[k + 1] - g.z[k];
    if (mg.cell[mg.cell_index(mg.nx / 2, mg.ny / 2, k)] != 0)
      CHECK(dz <= 0.33e-3 * (1 + 1e-9));
  }
}

TEST_CASE("uniform vacuum scene yields a uniform core grid") {
  auto g = generate_grid(vacuum_scene(), GridPolicy::PaperFidelity);
  double target = c0 / 28e9 / 15;
  // interior (non-padding) cells all at the air target
  std::set<long> sizes;
  int skip = g.padding_cells + g.pml_layers;
  for (size_t i = skip; i + 1 + skip < g.x.size(); ++i)
    sizes.insert(std::lround((g.x[i + 1] - g.x[i]) / target * 1e6));
  CHECK(sizes.size() == 1);
  CHECK(std::abs(*sizes.begin() - 1000000L) < 100000L);
}

TEST_CASE("courant dt") {
  auto g = generate_grid(desk_scene(ModelKind::FourLayer, Band::GHz28),
                         GridPolicy::DeskScale);
  double dt = g.courant_dt();
  CHECK(dt > 0.0);
  // bounded by the smallest cell in any single direction
  CHECK(dt < g.min_cell() / c0);
}

TEST_CASE("voxelization") {
  auto scene = desk_scene(ModelKind::FourLayer, Band::GHz28);
  auto g = generate_grid(scene, GridPolicy::DeskScale);
  auto mg = voxelize(scene, g);

  SUBCASE("deterministic and idempotent") {
    auto mg2 = voxelize(scene, g);
    CHECK(mg2.cell == mg.cell);
    CHECK(mg2.pec_ex == mg.pec_ex);
  }
  SUBCASE("substrate cells report eps 2.2") {
    int k = -1;
    double zc_target = scene.gap + scene.antenna.substrate_thickness / 2;
    double best = 1e9;
    for (int kk = 0; kk < mg.nz; ++kk) {
      double zc = 0.5 * (g.z[kk] + g.z[kk + 1]);
      if (zc > scene.gap && zc < scene.gap + scene.antenna.substrate_thickness &&
          std::abs(zc - zc_target) < best) {
        best = std::abs(zc - zc_target);
        k = kk;
      }
    }
    REQUIRE(k >= 0);
    int ic = int(std::lower_bound(g.x.begin(), g.x.end(), 0.0) - g.x.begin());
    int jc = int(std::lower_bound(g.y.begin(), g.y.end(), 0.0) - g.y.begin());
    CHECK(mg.cell_material(ic, jc, k).eps_r == doctest::Approx(2.2));
  }
  SUBCASE("tissue volume matches the analytic slab volume") {
    double vol = 0.0;
    std::set<std::string> tissue_names{"stratum_corneum", "dermis", "fat", "muscle"};
    for (int k = 0; k < mg.nz; ++k)
      for (int j = 0; j < mg.ny; ++j)
        for (int i = 0; i < mg.nx; ++i) {
          const auto& mat = mg.cell_material(i, j, k);
          double zc = 0.5 * (g.z[k] + g.z[k + 1]);
          if (tissue_names.count(mat.name) && zc > -(0.02 + 0.96 + 1.6) * 1e-3)
            vol += (g.x[i + 1] - g.x[i]) * (g.y[j + 1] - g.y[j]) *
                   (g.z[k + 1] - g.z[k]);
        }
    double analytic = 60e-3 * 60e-3 * (0.02 + 0.96 + 1.6) * 1e-3;
    CHECK(vol == doctest::Approx(analytic).epsilon(0.01));
  }
  SUBCASE("PEC flags only near conductor planes") {
    int k_patch = -1, k_ground = -1;
    for (size_t kk = 0; kk < g.z.size(); ++kk) {
      if (std::abs(g.z[kk] - scene.gap) < 1e-9) k_patch = int(kk);
      if (std::abs(g.z[kk] - scene.gap - scene.antenna.substrate_thickness) < 1e-9)
        k_ground = int(kk);
    }
    REQUIRE(k_patch >= 0);
    REQUIRE(k_ground >= 0);
    long count = 0;
    for (int k = 0; k <= mg.nz; ++k)
      for (int j = 0; j <= mg.ny; ++j)
        for (int i = 0; i <= mg.nx; ++i)
          if (mg.pec_ex[mg.node_index(i, j, k)] ||
              mg.pec_ey[mg.node_index(i, j, k)]) {
            ++count;
            REQUIRE((k == k_patch || k == k_ground));
          }
    CHECK(count > 0);
  }
  SUBCASE("empty scene is all free space") {
    auto vs = vacuum_scene();
    auto vg = generate_grid(vs, GridPolicy::DeskScale);
    auto vmg = voxelize(vs, vg);
    for (auto c : vmg.cell) CHECK(c == 0);
  }
  SUBCASE("too coarse a grid raises a resolution error") {
    YeeGrid coarse = g;
    // strip the SC plane out of the z axis
    std::vector<double> z2;
    for (double z : coarse.z)
      if (std::abs(z + 0.02e-3) > 1e-12) z2.push_back(z);
    coarse.z = z2;
    CHECK_THROWS_AS(voxelize(scene, coarse), ResolutionError);
  }
}

TEST_CASE("staircase convergence under 2x refinement") {
  auto scene = desk_scene(ModelKind::ThreeLayer, Band::GHz28);
  GridSpec spec = policy_spec(GridPolicy::DeskScale);
  // compare within the nominal domain only: the semi-infinite layer also
  // fills the (resolution-dependent) bottom padding
  double finite = 0.0;
  for (const auto& l : scene.stack.layers)
    if (!l.semi_infinite()) finite += l.thickness;
  double z_floor = -(finite + last_layer_depth(scene.stack));
  auto volumes = [&](const GridSpec& s) {
    auto g = generate_grid(scene, s);
    auto mg = voxelize(scene, g);
    std::map<std::string, double> v;
    for (int k = 0; k < mg.nz; ++k) {
      double zc = 0.5 * (g.z[k] + g.z[k + 1]);
      if (zc < z_floor) continue;
      for (int j = 0; j < mg.ny; ++j)
        for (int i = 0; i < mg.nx; ++i) {
          const auto& mat = mg.cell_material(i, j, k);
          v[mat.name] += (g.x[i + 1] - g.x[i]) * (g.y[j + 1] - g.y[j]) *
                         (g.z[k + 1] - g.z[k]);
        }
    }
    return v;
  };
  auto v1 = volumes(spec);
  GridSpec fine = spec;
  fine.points_per_wavelength = 24;
  auto v2 = volumes(fine);
  for (const auto& [name, vol] : v1) {
    if (name == "free_space") continue;
    CHECK(std::abs(v2[name] - vol) / vol < 0.02);
  }
}
