#include "doctest.h"

#include "mmwdose/antenna.hpp"

using namespace mmwdose;

TEST_CASE("patch array dimensions") {
  SUBCASE("28 GHz footprint") {
    auto a = build_patch_array(Band::GHz28);
    CHECK(a.dims.L == doctest::Approx(40e-3));
    CHECK(a.dims.W == doctest::Approx(16.62e-3));
    CHECK(a.footprint().width_x() == doctest::Approx(40e-3));
    CHECK(a.footprint().width_y() == doctest::Approx(16.62e-3));
  }
  SUBCASE("39 GHz footprint") {
    auto a = build_patch_array(Band::GHz39);
    CHECK(a.dims.L == doctest::Approx(33.5e-3));
    CHECK(a.dims.W == doctest::Approx(13.6e-3));
    CHECK(a.dims.l1 == doctest::Approx(6e-3));
    CHECK(a.dims.w1 == doctest::Approx(2.4e-3));
  }
  SUBCASE("structure") {
    for (Band b : {Band::GHz28, Band::GHz39}) {
      auto a = build_patch_array(b);
      CHECK(a.patches.size() == 4);
      CHECK(a.feed_strips.size() >= 2);
      CHECK(a.substrate_props.eps_r == 2.2);
      CHECK(a.substrate_props.sigma == 5e-4);
      CHECK(a.port.impedance == 50.0);
      // port lies on the main feed strip
      CHECK(a.feed_strips[0].contains(a.port.x, a.port.y));
      a.validate(); // no overlaps, everything inside the footprint
    }
  }
  SUBCASE("tuning hook scales patch length") {
    auto a = build_patch_array(Band::GHz28, 0.8);
    auto b = build_patch_array(Band::GHz28, 1.0);
    CHECK(a.patches[0].width_x() == doctest::Approx(0.8 * b.patches[0].width_x()));
  }
}

TEST_CASE("scene assembly") {
  auto ant = build_patch_array(Band::GHz28);
  auto stack = build_paper_stack(ModelKind::FourLayer, Band::GHz28);
  SUBCASE("defaults") {
    auto s = assemble_scene(ant, stack, 2e-3, 150e-3, 150e-3);
    CHECK(s.gap == 2e-3);
    CHECK(s.slab_x == 150e-3);
    CHECK(s.slab_y == 150e-3);
  }
  SUBCASE("desk-scale preset") {
    auto s = assemble_scene(ant, stack, 2e-3, 60e-3, 60e-3);
    CHECK(s.slab_x == 60e-3);
  }
  SUBCASE("invalid gap") {
    CHECK_THROWS_AS(assemble_scene(ant, stack, 0.0, 60e-3, 60e-3),
                    std::invalid_argument);
  }
}

TEST_CASE("antenna config round trip") {
  auto a = build_patch_array(Band::GHz39, 0.93);
  a.substrate_thickness = 0.127e-3;
  std::string text = antenna_to_json(a, 2e-3);
  double gap = 0.0;
  auto back = antenna_from_json(text, &gap);
  CHECK(gap == doctest::Approx(2e-3));
  CHECK(back.dims.L == doctest::Approx(a.dims.L));
  CHECK(back.patch_scale == doctest::Approx(0.93));
  CHECK(back.substrate_thickness == doctest::Approx(0.127e-3));
  CHECK(back.patches.size() == 4);
}
