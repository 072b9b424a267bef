#include "doctest.h"

#include "mmwdose/constants.hpp"
#include "mmwdose/tissue.hpp"

using namespace mmwdose;

TEST_CASE("tissue table matches the tabulated dielectric data") {
  auto sc28 = tissue_properties("stratum_corneum", Band::GHz28);
  CHECK(sc28.eps_r == 3.52);
  CHECK(sc28.sigma == 1.21);
  CHECK(sc28.density == 1500.0);
  auto derm39 = tissue_properties("dermis", Band::GHz39);
  CHECK(derm39.eps_r == 12.1);
  CHECK(derm39.sigma == 32.6);
  auto fat28 = tissue_properties("fat", Band::GHz28);
  CHECK(fat28.eps_r == 3.42);
  CHECK(fat28.sigma == 2.32);
  auto mus39 = tissue_properties("muscle", Band::GHz39);
  CHECK(mus39.eps_r == 15.6);
  CHECK(mus39.sigma == 47.1);
  CHECK_THROWS_AS(tissue_properties("bone", Band::GHz28),
                  std::invalid_argument);
}

TEST_CASE("complex permittivity") {
  SUBCASE("lossless case is purely real") {
    cplx e = complex_permittivity({4.0, 0.0, 1000.0}, 10e9);
    CHECK(e.imag() == 0.0);
    CHECK(e.real() == 4.0);
  }
  SUBCASE("SC at 28 GHz") {
    cplx e = complex_permittivity(tissue_properties("stratum_corneum", Band::GHz28), 28e9);
    // oracle: sigma/(omega*eps0) = 1.21 / (2*pi*28e9*8.8541878128e-12)
    CHECK(e.real() == doctest::Approx(3.52));
    CHECK(e.imag() == doctest::Approx(-0.776766).epsilon(1e-4));
  }
  SUBCASE("dermis at 39 GHz") {
    cplx e = complex_permittivity(tissue_properties("dermis", Band::GHz39), 39e9);
    CHECK(e.real() == doctest::Approx(12.1));
    CHECK(e.imag() == doctest::Approx(-15.0256).epsilon(1e-4));
  }
  CHECK_THROWS_AS(complex_permittivity({2.0, 0.1, 1.0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("wave params") {
  DielectricProperties vacuum{1.0, 0.0, 1.0};
  SUBCASE("free space at normal incidence") {
    auto w = wave_params(vacuum, 28e9, 0.0, Polarization::TE);
    CHECK(std::abs(w.eta - cplx(eta0, 0.0)) < 1e-6);
    CHECK(w.k.imag() == doctest::Approx(0.0));
    CHECK(w.k.real() == doctest::Approx(2.0 * pi * 28e9 / c0));
  }
  SUBCASE("TE and TM coincide at normal incidence") {
    auto props = tissue_properties("muscle", Band::GHz28);
    auto te = wave_params(props, 28e9, 0.0, Polarization::TE);
    auto tm = wave_params(props, 28e9, 0.0, Polarization::TM);
    CHECK(std::abs(te.eta - tm.eta) < 1e-9 * std::abs(te.eta));
  }
  SUBCASE("dermis refractive index at 28 GHz") {
    auto w = wave_params(tissue_properties("dermis", Band::GHz28), 28e9, 0.0,
                         Polarization::TE);
    cplx n = w.k / (2.0 * pi * 28e9 / c0);
    // oracle: polar-form sqrt of 16 - j17.655
    CHECK(n.real() == doctest::Approx(4.4630).epsilon(1e-3));
    CHECK(n.imag() == doctest::Approx(-1.9790).epsilon(1e-3));
  }
  SUBCASE("decay branch at oblique incidence") {
    for (const char* t : {"stratum_corneum", "dermis", "fat", "muscle"}) {
      for (double th : {0.0, 30.0, 60.0, 89.0}) {
        auto w = wave_params(tissue_properties(t, Band::GHz39), 39e9, th,
                             Polarization::TM);
        CHECK(w.kz.imag() <= 0.0);
        CHECK(w.eps_c.imag() <= 0.0);
      }
    }
  }
  CHECK_THROWS_AS(wave_params(vacuum, 28e9, 90.0, Polarization::TE),
                  std::invalid_argument);
}

TEST_CASE("paper stacks") {
  SUBCASE("homogeneous 28 GHz") {
    auto s = build_paper_stack(ModelKind::Homogeneous, Band::GHz28);
    REQUIRE(s.layers.size() == 1);
    CHECK(s.layers[0].name == "dermis");
    CHECK(s.layers[0].semi_infinite());
    CHECK(s.layers[0].props.eps_r == 16.0);
    CHECK(s.layers[0].props.sigma == 27.5);
  }
  SUBCASE("four layer 39 GHz") {
    auto s = build_paper_stack(ModelKind::FourLayer, Band::GHz39);
    REQUIRE(s.layers.size() == 4);
    CHECK(s.layers[0].thickness == doctest::Approx(0.02e-3));
    CHECK(s.layers[1].thickness == doctest::Approx(0.96e-3));
    CHECK(s.layers[2].thickness == doctest::Approx(1.6e-3));
    CHECK(s.layers[3].semi_infinite());
    CHECK(s.layers[3].name == "muscle");
  }
  SUBCASE("two layer structure") {
    for (Band b : {Band::GHz28, Band::GHz39}) {
      auto s = build_paper_stack(ModelKind::TwoLayer, b);
      REQUIRE(s.layers.size() == 2);
      CHECK(s.layers[0].name == "stratum_corneum");
    }
  }
  SUBCASE("thicknesses are band independent") {
    for (ModelKind m : {ModelKind::Homogeneous, ModelKind::TwoLayer,
                        ModelKind::ThreeLayer, ModelKind::FourLayer}) {
      auto a = build_paper_stack(m, Band::GHz28);
      auto b = build_paper_stack(m, Band::GHz39);
      REQUIRE(a.layers.size() == b.layers.size());
      for (size_t i = 0; i < a.layers.size(); ++i) {
        CHECK(a.layers[i].thickness == b.layers[i].thickness);
        CHECK(a.layers[i].name == b.layers[i].name);
      }
    }
  }
  SUBCASE("|eps_c| exceeds eps_r whenever sigma > 0") {
    for (const char* t : {"stratum_corneum", "dermis", "fat", "muscle"}) {
      for (Band b : {Band::GHz28, Band::GHz39}) {
        auto p = tissue_properties(t, b);
        cplx e = complex_permittivity(p, band_frequency(b));
        CHECK(std::abs(e) > p.eps_r);
      }
    }
  }
}

TEST_CASE("stack config round trip") {
  for (ModelKind m : {ModelKind::Homogeneous, ModelKind::TwoLayer,
                      ModelKind::ThreeLayer, ModelKind::FourLayer}) {
    for (Band b : {Band::GHz28, Band::GHz39}) {
      auto s = build_paper_stack(m, b);
      auto back = stack_from_json(stack_to_json(s));
      REQUIRE(back.layers.size() == s.layers.size());
      CHECK(back.model_kind == s.model_kind);
      CHECK(back.frequency == s.frequency);
      for (size_t i = 0; i < s.layers.size(); ++i) {
        CHECK(back.layers[i] == s.layers[i]);
      }
    }
  }
}

TEST_CASE("stack validation rejects malformed stacks") {
  LayerStack s;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.layers = {{"a", {2.0, 1.0, 1.0}, 1e-3}};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument); // last not infinite
  s.layers = {{"a", {2.0, 1.0, 1.0}, kSemiInfinite},
              {"b", {3.0, 1.0, 1.0}, kSemiInfinite}};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument); // interior infinite
}
