#include "doctest.h"

#include "mmwdose/snapshot.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace mmwdose;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const char* name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

PhasorField random_field(const YeeGrid& g, unsigned seed) {
  PhasorField f;
  f.nx = g.nx();
  f.ny = g.ny();
  f.nz = g.nz();
  f.freq = 28e9;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const std::size_t n = std::size_t(f.nx + 1) * (f.ny + 1) * (f.nz + 1);
  for (auto* a : {&f.ex, &f.ey, &f.ez, &f.hx, &f.hy, &f.hz}) {
    a->resize(n);
    for (auto& v : *a) v = {u(rng), u(rng)};
  }
  return f;
}

YeeGrid small_grid() {
  YeeGrid g;
  for (int i = 0; i <= 7; ++i) g.x.push_back(i * 1.1e-3);
  for (int j = 0; j <= 5; ++j) g.y.push_back(j * 0.9e-3);
  for (int k = 0; k <= 4; ++k) g.z.push_back(k * 0.7e-3 - 1e-3);
  return g;
}

} // namespace

TEST_CASE("field snapshot round trip is exact") {
  YeeGrid g = small_grid();
  PhasorField f = random_field(g, 42);
  TempFile t("mmw_snapshot_test.bin");
  save_fields(t.path, f, g);

  YeeGrid g2;
  PhasorField f2 = load_fields(t.path, &g2);
  CHECK(f2.nx == f.nx);
  CHECK(f2.ny == f.ny);
  CHECK(f2.nz == f.nz);
  CHECK(f2.freq == f.freq);
  CHECK(g2.x == g.x);
  CHECK(g2.y == g.y);
  CHECK(g2.z == g.z);
  CHECK(f2.ex == f.ex);
  CHECK(f2.ey == f.ey);
  CHECK(f2.ez == f.ez);
  CHECK(f2.hx == f.hx);
  CHECK(f2.hy == f.hy);
  CHECK(f2.hz == f.hz);
}

TEST_CASE("corrupt snapshots are rejected") {
  TempFile t("mmw_snapshot_bad.bin");
  {
    std::ofstream os(t.path, std::ios::binary);
    os << "not-a-snapshot\n";
  }
  CHECK_THROWS_AS(load_fields(t.path), SnapshotError);
  CHECK_THROWS_AS(load_fields("/nonexistent/path.bin"), SnapshotError);

  // truncated payload
  YeeGrid g = small_grid();
  PhasorField f = random_field(g, 1);
  save_fields(t.path, f, g);
  std::filesystem::resize_file(t.path,
                               std::filesystem::file_size(t.path) / 2);
  CHECK_THROWS_AS(load_fields(t.path), SnapshotError);
}

TEST_CASE("run metadata round trips through JSON") {
  RunMetadata m;
  m.freq = 39e9;
  m.steps = 12345;
  m.periods = 21;
  m.steps_per_period = 74;
  m.dt = 3.4e-13;
  m.residual = 4.2e-4;
  m.scale = 1.8;
  m.accepted_power = 0.1;
  m.incident_power = 0.11;
  m.resolved_config = R"({"model":"four_layer","band":39})";

  const std::string js = metadata_to_json(m);
  CHECK(js.find(toolkit_version) != std::string::npos);
  RunMetadata m2 = metadata_from_json(js);
  CHECK(m2.version == m.version);
  CHECK(m2.freq == m.freq);
  CHECK(m2.steps == m.steps);
  CHECK(m2.periods == m.periods);
  CHECK(m2.steps_per_period == m.steps_per_period);
  CHECK(m2.dt == m.dt);
  CHECK(m2.residual == m.residual);
  CHECK(m2.scale == m.scale);
  CHECK(m2.accepted_power == m.accepted_power);
  CHECK(m2.incident_power == m.incident_power);
  CHECK(metadata_from_json(m2.resolved_config).freq == 0.0); // nested JSON parses
  CHECK_THROWS_AS(metadata_from_json("{broken"), SnapshotError);
}
