#include "mmwdose/antenna.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace mmwdose {

namespace {

bool overlaps(const Rect& a, const Rect& b) {
  double ox = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  double oy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return ox > 1e-12 && oy > 1e-12;
}

TableDimensions table_dimensions(Band band) {
  auto mm = [](double v) { return v * 1e-3; };
  if (band == Band::GHz28)
    return {mm(40.0), mm(16.62), mm(9.6), mm(5.0), mm(30.25), mm(3.4), mm(9.6)};
  return {mm(33.5), mm(13.6), mm(6.0), mm(3.6), mm(25.88), mm(2.4), mm(6.0)};
}

} // namespace

void AntennaGeometry::validate() const {
  if (patches.size() != 4)
    throw std::invalid_argument("antenna must have exactly 4 patches");
  Rect fp = footprint();
  auto inside = [&](const Rect& r) {
    return r.x0 >= fp.x0 - 1e-12 && r.x1 <= fp.x1 + 1e-12 &&
           r.y0 >= fp.y0 - 1e-12 && r.y1 <= fp.y1 + 1e-12;
  };
  for (const auto& p : patches)
    if (!inside(p)) throw std::invalid_argument("patch outside footprint");
  for (const auto& s : feed_strips)
    if (!inside(s)) throw std::invalid_argument("feed strip outside footprint");
  // Patches may not overlap each other or the feed network; strips overlap
  // only at their junctions, which is checked by the builder.
  for (size_t i = 0; i < patches.size(); ++i)
    for (size_t j = i + 1; j < patches.size(); ++j)
      if (overlaps(patches[i], patches[j]))
        throw std::invalid_argument("patches overlap");
  for (const auto& p : patches)
    for (const auto& s : feed_strips)
      if (overlaps(p, s))
        throw std::invalid_argument("patch overlaps feed strip");
  if (!(ground.width_x() > 0) || !(ground.width_y() > 0))
    throw std::invalid_argument("missing ground plane");
}

AntennaGeometry build_patch_array(Band band, double patch_scale) {
  AntennaGeometry a;
  a.freq = band_frequency(band);
  a.dims = table_dimensions(band);
  a.patch_scale = patch_scale;
  const auto& d = a.dims;

  // Canonical corporate-fed 2x2 layout. Patch length l1 along x; the patch
  // width is w2 clipped so the two rows clear the central feed line. Patch
  // columns span l3 outer edge to outer edge; rows sit flush with the W
  // edges of the footprint.
  double px = d.l1 * patch_scale;
  double clearance = 0.2e-3;
  double py = std::min(d.w2, (d.W - d.w1) / 2 - clearance);
  double xc = (d.l3 - px) / 2;
  double yc = (d.W - py) / 2;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      a.patches.push_back({sx * xc - px / 2, sy * yc - py / 2,
                           sx * xc + px / 2, sy * yc + py / 2});

  // Feed network: main line of width w1 from the port edge to the center,
  // a transverse splitter, and row lines of width w1/2 joining the patch
  // inner edges. Strips abut at T junctions.
  double wmain = d.w1, wsub = d.w1 / 2;
  a.feed_strips.push_back({-d.L / 2, -wmain / 2, 0.0, wmain / 2});
  a.feed_strips.push_back({-wsub / 2, -yc, wsub / 2, yc});
  for (double sy : {-1.0, 1.0}) {
    double y = sy * yc;
    a.feed_strips.push_back({-(xc - px / 2), y - wsub / 2,
                             xc - px / 2, y + wsub / 2});
  }

  a.ground = a.footprint();
  a.port = {-d.L / 2 + 0.5e-3, 0.0, 50.0};
  a.validate();
  return a;
}

ExposureScene assemble_scene(const AntennaGeometry& antenna,
                             const LayerStack& stack, double gap,
                             double slab_x, double slab_y) {
  if (!(gap > 0.0)) throw std::invalid_argument("gap must be > 0");
  if (!(slab_x > 0.0) || !(slab_y > 0.0))
    throw std::invalid_argument("slab extent must be > 0");
  antenna.validate();
  stack.validate();
  ExposureScene s;
  s.antenna = antenna;
  s.stack = stack;
  s.gap = gap;
  s.slab_x = slab_x;
  s.slab_y = slab_y;
  return s;
}

std::string antenna_to_json(const AntennaGeometry& a, double gap_m) {
  nlohmann::json j;
  auto mm = [](double v) { return v * 1e3; };
  j["frequency_ghz"] = a.freq / 1e9;
  j["L"] = mm(a.dims.L);
  j["W"] = mm(a.dims.W);
  j["l1"] = mm(a.dims.l1);
  j["l2"] = mm(a.dims.l2);
  j["l3"] = mm(a.dims.l3);
  j["w1"] = mm(a.dims.w1);
  j["w2"] = mm(a.dims.w2);
  j["substrate_thickness_mm"] = mm(a.substrate_thickness);
  j["substrate_eps_r"] = a.substrate_props.eps_r;
  j["substrate_sigma_s_per_m"] = a.substrate_props.sigma;
  j["gap_mm"] = mm(gap_m);
  j["patch_scale"] = a.patch_scale;
  j["port_impedance_ohm"] = a.port.impedance;
  return j.dump(2);
}

AntennaGeometry antenna_from_json(const std::string& text, double* gap_out) {
  nlohmann::json j = nlohmann::json::parse(text);
  double f = j.at("frequency_ghz").get<double>() * 1e9;
  Band band = f < 33e9 ? Band::GHz28 : Band::GHz39;
  AntennaGeometry a = build_patch_array(band, j.value("patch_scale", 1.0));
  auto m = [&](const char* key, double dflt) {
    return j.value(key, dflt * 1e3) * 1e-3;
  };
  a.substrate_thickness = m("substrate_thickness_mm", a.substrate_thickness);
  if (j.contains("substrate_eps_r"))
    a.substrate_props.eps_r = j["substrate_eps_r"].get<double>();
  if (j.contains("substrate_sigma_s_per_m"))
    a.substrate_props.sigma = j["substrate_sigma_s_per_m"].get<double>();
  if (j.contains("port_impedance_ohm"))
    a.port.impedance = j["port_impedance_ohm"].get<double>();
  if (gap_out) *gap_out = m("gap_mm", 2e-3);
  return a;
}

} // namespace mmwdose
