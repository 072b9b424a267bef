#include "mmwdose/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian");

namespace mmwdose {

namespace {

void write_coords(std::ostream& os, const char* name,
                  const std::vector<double>& v) {
  os << name;
  os.precision(17);
  for (double c : v) os << ' ' << c;
  os << '\n';
}

std::vector<double> read_coords(std::istringstream& line, std::size_t n) {
  std::vector<double> v(n);
  for (auto& c : v)
    if (!(line >> c)) throw SnapshotError("truncated coordinate list");
  return v;
}

} // namespace

void save_fields(const std::string& path, const PhasorField& f,
                 const YeeGrid& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SnapshotError("cannot open " + path + " for writing");
  os << "mmwdose-fields 1\n";
  os << "freq " << f.freq << '\n';
  os << "dims " << f.nx << ' ' << f.ny << ' ' << f.nz << '\n';
  write_coords(os, "x", g.x);
  write_coords(os, "y", g.y);
  write_coords(os, "z", g.z);
  os << "components ex ey ez hx hy hz\n";
  os << "encoding float32-le complex-interleaved\n";
  os << "data\n";
  for (const auto* a : {&f.ex, &f.ey, &f.ez, &f.hx, &f.hy, &f.hz})
    os.write(reinterpret_cast<const char*>(a->data()),
             std::streamsize(a->size() * sizeof(std::complex<float>)));
  if (!os) throw SnapshotError("write failed: " + path);
}

PhasorField load_fields(const std::string& path, YeeGrid* grid_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SnapshotError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "mmwdose-fields 1")
    throw SnapshotError("unrecognized snapshot header in " + path);

  PhasorField f;
  YeeGrid g;
  while (std::getline(is, line) && line != "data") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "freq") ls >> f.freq;
    else if (key == "dims") ls >> f.nx >> f.ny >> f.nz;
    else if (key == "x") g.x = read_coords(ls, std::size_t(f.nx) + 1);
    else if (key == "y") g.y = read_coords(ls, std::size_t(f.ny) + 1);
    else if (key == "z") g.z = read_coords(ls, std::size_t(f.nz) + 1);
    else if (key == "components" && line != "components ex ey ez hx hy hz")
      throw SnapshotError("unexpected component order");
    else if (key == "encoding" && line.find("float32-le") == std::string::npos)
      throw SnapshotError("unexpected encoding");
  }
  if (line != "data") throw SnapshotError("missing data section in " + path);
  if (f.nx <= 0 || f.ny <= 0 || f.nz <= 0)
    throw SnapshotError("missing or invalid dims in " + path);

  const std::size_t n =
      std::size_t(f.nx + 1) * (f.ny + 1) * (f.nz + 1);
  for (auto* a : {&f.ex, &f.ey, &f.ez, &f.hx, &f.hy, &f.hz}) {
    a->resize(n);
    is.read(reinterpret_cast<char*>(a->data()),
            std::streamsize(n * sizeof(std::complex<float>)));
    if (std::size_t(is.gcount()) != n * sizeof(std::complex<float>))
      throw SnapshotError("truncated field data in " + path);
  }
  if (grid_out) *grid_out = g;
  return f;
}

RunMetadata make_metadata(const SteadyStateResult& r,
                          const std::string& resolved_config) {
  RunMetadata m;
  m.freq = r.fields.freq;
  m.steps = r.steps;
  m.periods = r.periods;
  m.steps_per_period = r.steps_per_period;
  m.dt = r.dt;
  m.residual = r.residual;
  m.scale = r.scale;
  m.accepted_power = r.port.accepted;
  m.incident_power = r.port.incident;
  m.port_impedance = r.port.impedance;
  m.resolved_config = resolved_config;
  return m;
}

std::string metadata_to_json(const RunMetadata& m) {
  nlohmann::json j;
  j["version"] = m.version;
  j["frequency_hz"] = m.freq;
  j["steps"] = m.steps;
  j["periods"] = m.periods;
  j["steps_per_period"] = m.steps_per_period;
  j["dt_s"] = m.dt;
  j["residual"] = m.residual;
  j["scale"] = m.scale;
  j["accepted_power_w"] = m.accepted_power;
  j["incident_power_w"] = m.incident_power;
  j["port_impedance_ohm"] = m.port_impedance;
  if (!m.resolved_config.empty())
    j["resolved_config"] = nlohmann::json::parse(m.resolved_config);
  return j.dump(2);
}

RunMetadata metadata_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError(std::string("bad metadata JSON: ") + e.what());
  }
  RunMetadata m;
  m.version = j.value("version", "");
  m.freq = j.value("frequency_hz", 0.0);
  m.steps = j.value("steps", 0);
  m.periods = j.value("periods", 0);
  m.steps_per_period = j.value("steps_per_period", 0);
  m.dt = j.value("dt_s", 0.0);
  m.residual = j.value("residual", 0.0);
  m.scale = j.value("scale", 1.0);
  m.accepted_power = j.value("accepted_power_w", 0.0);
  m.incident_power = j.value("incident_power_w", 0.0);
  m.port_impedance = j.value("port_impedance_ohm", 50.0);
  if (j.contains("resolved_config"))
    m.resolved_config = j["resolved_config"].dump();
  return m;
}

} // namespace mmwdose
