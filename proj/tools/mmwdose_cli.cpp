// Command-line front end: analytic solver, SC-thickness calibration, FDTD
// runs with snapshot output, and dosimetry post-processing.

#include "mmwdose/antenna.hpp"
#include "mmwdose/dosimetry.hpp"
#include "mmwdose/fdtd.hpp"
#include "mmwdose/fdtd1d.hpp"
#include "mmwdose/grid.hpp"
#include "mmwdose/material_grid.hpp"
#include "mmwdose/planewave.hpp"
#include "mmwdose/snapshot.hpp"
#include "mmwdose/tissue.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmwdose;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitNonConvergence = 4;
constexpr double kReferencePeak = 20.0;  // W/m^2 reporting reference line

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string model = "4layer";
  std::string band = "28";
  std::string policy = "desk";
  std::string out_dir = "out";
  std::string config_path;
  int workers = 1;
  // optional overrides, read from --config JSON
  double gap = 2e-3;
  double slab = 60e-3;
  double target_power = 0.1;  // W accepted after normalization
  double dt_scale = 1.0;
  double convergence_tol = 1e-3;
  int max_periods = 80;
  double patch_scale = 1.0;

  json to_json() const {
    return json{{"model", model},
                {"band", band},
                {"policy", policy},
                {"out", out_dir},
                {"workers", workers},
                {"gap_mm", gap * 1e3},
                {"slab_mm", slab * 1e3},
                {"target_power_w", target_power},
                {"dt_scale", dt_scale},
                {"convergence_tol", convergence_tol},
                {"max_periods", max_periods},
                {"patch_scale", patch_scale}};
  }
};

Band parse_band(const std::string& s) {
  if (s == "28") return Band::GHz28;
  if (s == "39") return Band::GHz39;
  throw ConfigError("band must be 28 or 39, got '" + s + "'");
}

ModelKind parse_model(const std::string& s) {
  try {
    return model_from_name(s);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad model: ") + e.what());
  }
}

GridPolicy parse_policy(const std::string& s) {
  if (s == "desk") return GridPolicy::DeskScale;
  if (s == "paper") return GridPolicy::PaperFidelity;
  throw ConfigError("policy must be desk or paper, got '" + s + "'");
}

void apply_config_file(RunConfig& cfg) {
  if (cfg.config_path.empty()) return;
  std::ifstream is(cfg.config_path);
  if (!is) throw ConfigError("cannot open config file " + cfg.config_path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + cfg.config_path + ": " +
                      e.what());
  }
  try {
    if (j.contains("model")) cfg.model = j["model"].get<std::string>();
    if (j.contains("band")) {
      cfg.band = j["band"].is_string() ? j["band"].get<std::string>()
                                       : std::to_string(j["band"].get<int>());
    }
    if (j.contains("policy")) cfg.policy = j["policy"].get<std::string>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("gap_mm")) cfg.gap = j["gap_mm"].get<double>() * 1e-3;
    if (j.contains("slab_mm")) cfg.slab = j["slab_mm"].get<double>() * 1e-3;
    if (j.contains("target_power_w"))
      cfg.target_power = j["target_power_w"].get<double>();
    if (j.contains("dt_scale")) cfg.dt_scale = j["dt_scale"].get<double>();
    if (j.contains("convergence_tol"))
      cfg.convergence_tol = j["convergence_tol"].get<double>();
    if (j.contains("max_periods")) cfg.max_periods = j["max_periods"].get<int>();
    if (j.contains("patch_scale"))
      cfg.patch_scale = j["patch_scale"].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError("config key error in " + cfg.config_path + ": " +
                      e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

// Leading provenance comment so every CSV carries the version and the
// resolved configuration; the column header row follows on the next line.
std::string csv_preamble(const RunConfig& cfg) {
  return std::string("# ") + toolkit_version + " config=" +
         cfg.to_json().dump() + "\n";
}

void write_run_config(const RunConfig& cfg) {
  json j = cfg.to_json();
  j["version"] = toolkit_version;
  write_file(fs::path(cfg.out_dir) / "run_config.json", j.dump(2));
}

std::vector<ModelKind> all_models() {
  return {ModelKind::Homogeneous, ModelKind::TwoLayer, ModelKind::ThreeLayer,
          ModelKind::FourLayer};
}

// ---------------------------------------------------------------- analytic

int cmd_analytic(const RunConfig& cfg, bool sweep, bool profile) {
  fs::create_directories(cfg.out_dir);
  write_run_config(cfg);
  const Band band = parse_band(cfg.band);
  const double freq = band_frequency(band);

  std::ostringstream table, cmp;
  table << csv_preamble(cfg)
        << "model,gamma_re,gamma_im,transmittance,s_ab_w_per_m2\n";
  cmp << csv_preamble(cfg)
      << "model,s_ab_w_per_m2,homogeneous_vs_model_percent\n";
  table.precision(10);
  cmp.precision(10);

  PlaneWaveExcitation wave;
  wave.freq = freq;
  wave.theta_deg = 0.0;
  wave.s_inc = 10.0;

  double homo_sab = 0.0;
  std::vector<std::pair<std::string, double>> sabs;
  for (ModelKind m : all_models()) {
    LayerStack stack = build_paper_stack(m, band);
    ReflectionResult rr = reflection_result(stack, wave);
    const double sab = reported_interface_sab(stack, wave);
    table << model_name(m) << ',' << rr.gamma.real() << ',' << rr.gamma.imag()
          << ',' << rr.transmittance << ',' << sab << '\n';
    if (m == ModelKind::Homogeneous) homo_sab = sab;
    sabs.emplace_back(model_name(m), sab);
  }
  for (const auto& [name, sab] : sabs)
    cmp << name << ',' << sab << ','
        << (sab > 0 ? (sab - homo_sab) / sab * 100.0 : 0.0) << '\n';

  const std::string suffix = "_" + cfg.band + "ghz.csv";
  write_file(fs::path(cfg.out_dir) / ("analytic_models" + suffix), table.str());
  write_file(fs::path(cfg.out_dir) / ("analytic_comparison" + suffix),
             cmp.str());

  if (sweep) {
    std::vector<double> thetas;
    for (int t = 0; t <= 80; t += 5) thetas.push_back(t);
    std::ostringstream sw;
    sw << csv_preamble(cfg) << "theta_deg,pol,transmittance,s_ab_w_per_m2\n";
    sw.precision(10);
    LayerStack stack = build_paper_stack(parse_model(cfg.model), band);
    for (Polarization p : {Polarization::TE, Polarization::TM})
      for (const auto& pt : transmission_sweep(stack, freq, p, thetas, 10.0))
        sw << pt.theta_deg << ',' << (pt.pol == Polarization::TE ? "TE" : "TM")
           << ',' << pt.transmittance << ',' << pt.s_ab << '\n';
    write_file(fs::path(cfg.out_dir) / ("theta_sweep" + suffix), sw.str());
  }

  if (profile) {
    std::vector<double> zs;
    for (int n = 0; n <= 300; ++n) zs.push_back(n * 0.02e-3); // 0..6 mm
    LayerStack stack = build_paper_stack(parse_model(cfg.model), band);
    DepositionProfile dp = deposition_profile(stack, wave, zs);
    std::ostringstream pr;
    pr << csv_preamble(cfg) << "z_mm,s_w_per_m2\n";
    pr.precision(10);
    for (std::size_t n = 0; n < dp.z.size(); ++n)
      pr << dp.z[n] * 1e3 << ',' << dp.s[n] << '\n';
    write_file(fs::path(cfg.out_dir) / ("deposition_profile" + suffix),
               pr.str());
  }
  std::cout << "analytic tables written to " << cfg.out_dir << "\n";
  return 0;
}

// --------------------------------------------------------------- calibrate

int cmd_calibrate(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_run_config(cfg);
  const Band band = parse_band(cfg.band);
  std::vector<LayerStack> stacks = {build_paper_stack(ModelKind::TwoLayer, band),
                                    build_paper_stack(ModelKind::ThreeLayer, band),
                                    build_paper_stack(ModelKind::FourLayer, band)};
  std::vector<double> thetas;
  for (int t = 0; t <= 80; t += 5) thetas.push_back(t);
  CalibrationResult r = calibrate_sc_thickness(stacks, 0.01e-3, 0.04e-3,
                                               band_frequency(band), thetas);

  json j;
  j["version"] = toolkit_version;
  j["config"] = cfg.to_json();
  j["sc_thickness_mm"] = r.thickness * 1e3;
  j["max_spread"] = r.max_spread;
  write_file(fs::path(cfg.out_dir) / "calibration.json", j.dump(2));

  std::ostringstream os;
  os << csv_preamble(cfg) << "thickness_mm,objective\n";
  os.precision(10);
  for (std::size_t n = 0; n < r.grid_thickness.size(); ++n)
    os << r.grid_thickness[n] * 1e3 << ',' << r.grid_objective[n] << '\n';
  write_file(fs::path(cfg.out_dir) / "calibration_objective.csv", os.str());
  std::cout << "calibrated SC thickness " << r.thickness * 1e3
            << " mm, spread " << r.max_spread * 100 << "%\n";
  return 0;
}

// -------------------------------------------------------------------- fdtd

int cmd_fdtd_1d(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_run_config(cfg);
  const Band band = parse_band(cfg.band);
  std::ostringstream os;
  os << csv_preamble(cfg)
     << "model,transmittance_fdtd,transmittance_analytic,delta\n";
  os.precision(10);
  PlaneWaveExcitation wave;
  wave.freq = band_frequency(band);
  for (ModelKind m : all_models()) {
    LayerStack stack = build_paper_stack(m, band);
    auto r = run_1d_layered(stack, wave);
    auto a = reflection_result(stack, wave);
    os << model_name(m) << ',' << r.transmittance << ',' << a.transmittance
       << ',' << r.transmittance - a.transmittance << '\n';
  }
  write_file(fs::path(cfg.out_dir) / ("validation_1d_" + cfg.band + "ghz.csv"),
             os.str());
  std::cout << "1D validation deltas written to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_fdtd(const RunConfig& cfg, bool validate_1d) {
  if (validate_1d) return cmd_fdtd_1d(cfg);
  fs::create_directories(cfg.out_dir);
  write_run_config(cfg);
  const Band band = parse_band(cfg.band);
  const ModelKind model = parse_model(cfg.model);
  const GridPolicy policy = parse_policy(cfg.policy);

  AntennaGeometry ant = build_patch_array(band, cfg.patch_scale);
  LayerStack stack = build_paper_stack(model, band);
  ExposureScene scene = assemble_scene(ant, stack, cfg.gap, cfg.slab, cfg.slab);
  YeeGrid grid = generate_grid(scene, policy);
  MaterialGrid mat = voxelize(scene, grid);
  std::cout << "grid " << grid.nx() << "x" << grid.ny() << "x" << grid.nz()
            << " (" << grid.cell_count() << " cells)\n";

  Fdtd3DOptions opt;
  opt.workers = cfg.workers;
  opt.dt_scale = cfg.dt_scale;
  opt.convergence_tol = cfg.convergence_tol;
  opt.max_periods = cfg.max_periods;
  SteadyStateResult r =
      run_to_steady_state(scene, grid, mat, band_frequency(band), opt);
  normalize_to_accepted_power(r, cfg.target_power);

  save_fields((fs::path(cfg.out_dir) / "fields.bin").string(), r.fields, grid);
  json jc = cfg.to_json();
  jc["version"] = toolkit_version;
  RunMetadata meta = make_metadata(r, jc.dump());
  write_file(fs::path(cfg.out_dir) / "metadata.json", metadata_to_json(meta));

  std::ostringstream port;
  port << csv_preamble(cfg) << "step,voltage_v,current_a\n";
  port.precision(10);
  for (std::size_t n = 0; n < r.port.voltage.size(); ++n)
    port << n << ',' << r.port.voltage[n] << ',' << r.port.current[n] << '\n';
  write_file(fs::path(cfg.out_dir) / "port.csv", port.str());

  std::cout << "converged after " << r.periods << " periods (" << r.steps
            << " steps), residual " << r.residual << "\n"
            << "accepted power normalized to " << r.port.accepted * 1e3
            << " mW (scale " << r.scale << ")\n";
  return 0;
}

// --------------------------------------------------------------- dosimetry

int cmd_dosimetry(const RunConfig& cfg, const std::string& in_dir) {
  fs::create_directories(cfg.out_dir);
  const fs::path in(in_dir);
  std::ifstream ms(in / "metadata.json");
  if (!ms) throw ConfigError("missing " + (in / "metadata.json").string());
  std::stringstream mbuf;
  mbuf << ms.rdbuf();
  RunMetadata meta = metadata_from_json(mbuf.str());
  json jc;
  try {
    jc = json::parse(meta.resolved_config);
  } catch (const json::exception&) {
    throw ConfigError("metadata lacks a resolved config");
  }

  RunConfig run = cfg;
  run.model = jc.value("model", run.model);
  run.band = jc.value("band", run.band);
  run.gap = jc.value("gap_mm", run.gap * 1e3) * 1e-3;
  run.slab = jc.value("slab_mm", run.slab * 1e3) * 1e-3;
  run.patch_scale = jc.value("patch_scale", 1.0);

  YeeGrid grid;
  PhasorField fields = load_fields((in / "fields.bin").string(), &grid);
  const Band band = parse_band(run.band);
  AntennaGeometry ant = build_patch_array(band, run.patch_scale);
  LayerStack stack = build_paper_stack(parse_model(run.model), band);
  ExposureScene scene = assemble_scene(ant, stack, run.gap, run.slab, run.slab);

  DosimetryReport rep = per_layer_report(fields, scene, grid);
  rep.accepted_power = meta.accepted_power;
  rep.scale = meta.scale;
  for (const auto& e : rep.entries)
    if (e.peak_1cm2.value < e.peak_4cm2.value - 1e-12)
      throw std::runtime_error("report invariant violated: peak(1cm2) < "
                               "peak(4cm2) for layer " + e.layer);

  write_file(fs::path(cfg.out_dir) / "dosimetry.json", report_to_json(rep));
  write_file(fs::path(cfg.out_dir) / "dosimetry.csv",
             csv_preamble(run) + report_to_csv(rep));
  for (const auto& e : rep.entries) {
    SabMap m = poynting_plane(fields, grid, e.z);
    for (auto& v : m.s) v = -v; // absorbed flux points into the tissue
    write_file(fs::path(cfg.out_dir) / ("sab_map_" + e.layer + ".csv"),
               csv_preamble(run) + sab_map_to_csv(m));
  }

  double worst = 0.0;
  for (const auto& e : rep.entries) worst = std::max(worst, e.peak_1cm2.value);
  std::cout << "model " << run.model << " band " << run.band << " GHz\n";
  for (const auto& e : rep.entries)
    std::cout << "  " << e.layer << " z=" << e.z * 1e3
              << " mm: peak 1cm2 " << e.peak_1cm2.value << " W/m2, 4cm2 "
              << e.peak_4cm2.value << " W/m2\n";
  std::cout << "margin to " << kReferencePeak << " W/m2 reference line: "
            << kReferencePeak - worst << " W/m2\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"millimeter-wave skin dosimetry toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;
  bool sweep = false, profile = false, validate_1d = false;
  std::string in_dir;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--model", cfg.model,
                  "homogeneous|2layer|3layer|4layer");
    c->add_option("--band", cfg.band, "28|39");
    c->add_option("--policy", cfg.policy, "paper|desk");
    c->add_option("--out", cfg.out_dir, "output directory");
    c->add_option("--config", cfg.config_path, "JSON config with overrides");
    c->add_option("--workers", cfg.workers, "FDTD worker threads");
  };

  CLI::App* analytic = app.add_subcommand("analytic", "stratified-media tables");
  add_common(analytic);
  analytic->add_flag("--sweep", sweep, "angle sweep CSV for --model");
  analytic->add_flag("--profile", profile, "depth deposition CSV for --model");

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "SC thickness calibration");
  add_common(calibrate);

  CLI::App* fdtd = app.add_subcommand("fdtd", "3D steady-state run");
  add_common(fdtd);
  fdtd->add_flag("--validate-1d", validate_1d,
                 "1D layered-mode transmittance vs analytic");

  CLI::App* dosim = app.add_subcommand("dosimetry", "post-process a snapshot");
  add_common(dosim);
  dosim->add_option("--in", in_dir, "directory with fields.bin + metadata.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    apply_config_file(cfg);
    if (*analytic) return cmd_analytic(cfg, sweep, profile);
    if (*calibrate) return cmd_calibrate(cfg);
    if (*fdtd) return cmd_fdtd(cfg, validate_1d);
    if (*dosim) return cmd_dosimetry(cfg, in_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const ConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
