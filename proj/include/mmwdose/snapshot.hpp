#pragma once

#include "mmwdose/constants.hpp"
#include "mmwdose/fdtd.hpp"
#include "mmwdose/grid.hpp"

#include <string>

namespace mmwdose {

struct SnapshotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary phasor snapshot: a self-describing text header (dimensions, node
// coordinates, component order Ex,Ey,Ez,Hx,Hy,Hz) followed by little-endian
// 32-bit floats, real/imag interleaved, node-indexed.
void save_fields(const std::string& path, const PhasorField& f,
                 const YeeGrid& g);
PhasorField load_fields(const std::string& path, YeeGrid* grid_out = nullptr);

struct RunMetadata {
  std::string version = toolkit_version;
  double freq = 0.0;
  int steps = 0, periods = 0, steps_per_period = 0;
  double dt = 0.0, residual = 0.0, scale = 1.0;
  double accepted_power = 0.0, incident_power = 0.0;
  double port_impedance = 50.0;
  std::string resolved_config; // JSON text of the configuration actually used
};

RunMetadata make_metadata(const SteadyStateResult& r,
                          const std::string& resolved_config);
std::string metadata_to_json(const RunMetadata& m);
RunMetadata metadata_from_json(const std::string& text);

} // namespace mmwdose
