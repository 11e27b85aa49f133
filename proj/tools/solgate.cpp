// solgate command-line harness: crystal / modes / gate / heating / transport
// pipelines plus the named paper reproductions (fig2, table1-row, eq4-alpha,
// transport-demo).
//
// Exit codes: 0 success, 1 configuration validation failure, 2 numerical
// failure, 3 protocol-criterion failure.

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "solgate/artifacts.hpp"
#include "solgate/configio.hpp"
#include "solgate/pipeline.hpp"

namespace fs = std::filesystem;
using namespace solgate;

namespace {

// Paper-default 31-ion linear Paul configuration, used when --config is
// omitted (identical to configs/paper-31.json).
const char* kDefaultLinear = R"json({
  "trap": {"kind": "linear_paul", "rf_frequency": "80.8 MHz",
           "radial_frequency": "700 kHz", "q_y": 0.22, "anisotropy_yx": 8.38},
  "species": {"arrangement": "uniform",
              "list": [{"mass": "39.9626 amu", "charge": 1.0, "label": "Ca40"}]},
  "crystal": {"n_ions": 31, "ansatz": "zigzag_kink", "restarts": 1, "seed": 7},
  "laser": {"wavelength": "729 nm", "core_budget": 0.01},
  "gate": {"heating_rate": 0.0, "detuning_factor": 0.004, "n_fock": 12,
           "dt": 0.25, "n_samples": 400},
  "heating": {"bath_temperature": "0.5 mK", "ensemble": 100,
              "duration_mode_periods": 60, "dt": 0.1},
  "seed": 1
})json";

// Ring transport demo configuration (identical to configs/ring-transport.json).
const char* kDefaultRing = R"json({
  "trap": {"kind": "ring_quadrupole", "rf_frequency": "80.8 MHz",
           "radial_frequency": "1.2 MHz", "axial_frequency": "3.6 MHz",
           "ring_radius": "65 l0"},
  "species": {"arrangement": "alternating",
              "list": [{"mass": "39.9626 amu", "charge": 1.0, "label": "Ca40"},
                        {"mass": "43.9555 amu", "charge": 1.0, "label": "Ca44"}]},
  "crystal": {"n_ions": 31, "restarts": 1, "seed": 3},
  "transport": {"protocol": "radial_decrease", "excite_mode": "low_localized",
                "n_phonons": 1000.0, "phase": 0.0, "cooling_friction": 1e-3,
                "cooling_temperature": "0 K", "radial_scale_end": 0.6,
                "duration_mode_periods": 150.0, "frame_stride": 200},
  "seed": 11
})json";

struct GlobalArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string out_dir = "out";
  int threads = 0;
  bool recompute = false;
  bool require_cache = false;
};

ExperimentConfig load_config(const GlobalArgs& args, const char* fallback) {
  nlohmann::json doc = args.config_path.empty()
                           ? nlohmann::json::parse(fallback)
                           : read_json_file(args.config_path);
  for (const std::string& s : args.overrides) apply_override(doc, s);
  if (args.seed >= 0) doc["seed"] = args.seed;
  return load_experiment_config(doc);
}

// Secular x frequency for reporting mode frequencies in units of omega_x.
double omega_x(const ExperimentConfig& cfg) {
  if (cfg.trap.geometry == TrapGeometry::LinearPaul)
    return mathieu_exponent(cfg.trap.static_curvature[0], cfg.trap.mathieu_q[0]);
  return cfg.trap.radial_frequency;
}

void record_pipeline(ResultDocument& doc, const Pipeline& p) {
  doc.add_artifact("crystal", p.hash);
  if (p.orbit) doc.add_artifact("orbit", p.hash);
  if (p.floquet) doc.add_artifact("modes", p.hash);
  doc.set_scalar("crystal_cached", p.crystal_cached ? 1.0 : 0.0);
  doc.set_scalar("modes_cached", p.modes_cached ? 1.0 : 0.0);
}

const char* kink_name(KinkKind k) {
  switch (k) {
    case KinkKind::Localized: return "localized";
    case KinkKind::Extended: return "extended";
    default: return "none";
  }
}

int cmd_crystal(const GlobalArgs& args) {
  ExperimentConfig cfg = load_config(args, kDefaultLinear);
  ArtifactCache cache(fs::path(args.out_dir) / "cache");
  Pipeline p = run_pipeline(cfg, args.recompute ? nullptr : &cache, 1);
  if (args.recompute) {
    cache.store("crystal", p.hash, serialize_crystal(p.crystal));
    if (p.orbit) cache.store("orbit", p.hash, serialize_orbit(*p.orbit));
  }

  ResultDocument doc(cfg);
  record_pipeline(doc, p);
  doc.set_scalar("energy", p.crystal.energy);
  doc.set_scalar("gradient_norm", p.crystal.gradient_norm);
  doc.set_text("kink_kind", kink_name(p.kink.kind));
  doc.set_scalar("kink_center", p.kink.center_index);
  doc.set_scalar("kink_width", p.kink.width);
  doc.set_scalar("kink_charge", p.kink.topological_charge);
  if (p.orbit) doc.set_scalar("orbit_residual", p.orbit->residual);

  std::vector<std::vector<double>> rows;
  for (int i = 0; i < cfg.n_ions; ++i)
    rows.push_back({double(i), p.crystal.positions[3 * i],
                    p.crystal.positions[3 * i + 1],
                    p.crystal.positions[3 * i + 2]});
  const fs::path csv = fs::path(args.out_dir) / "crystal.csv";
  write_csv(csv, {"ion", "x", "y", "z"}, rows);
  doc.add_csv(csv.string());
  doc.write(fs::path(args.out_dir) / "crystal.result.json");
  std::printf("crystal: E=%.10g kink=%s center=%d charge=%d\n",
              p.crystal.energy, kink_name(p.kink.kind), p.kink.center_index,
              p.kink.topological_charge);
  return 0;
}

int cmd_modes(const GlobalArgs& args) {
  ExperimentConfig cfg = load_config(args, kDefaultLinear);
  ArtifactCache cache(fs::path(args.out_dir) / "cache");
  Pipeline p = run_pipeline(cfg, args.recompute ? nullptr : &cache, 2);
  if (args.recompute && p.floquet) {
    cache.store("crystal", p.hash, serialize_crystal(p.crystal));
    cache.store("orbit", p.hash, serialize_orbit(*p.orbit));
    cache.store("modes", p.hash, serialize_modes(*p.floquet));
  }
  const ModeSpectrum& spec = p.spectrum();
  const double wx = omega_x(cfg);

  ResultDocument doc(cfg);
  record_pipeline(doc, p);
  doc.set_scalar("omega_x", wx);
  doc.set_scalar("bus_frequency", spec.modes[0].frequency);
  doc.set_scalar("bus_over_omega_x", spec.modes[0].frequency / wx);
  doc.set_scalar("gap_ratio",
                 spec.modes[0].frequency / spec.modes[1].frequency);

  try {
    LocalizedModes loc = identify_localized_modes(spec, p.crystal, p.kink);
    doc.set_scalar("bus_localization", loc.bus_localization);
    doc.set_scalar("low_in_plane_over_omega_x",
                   spec.modes[loc.low_in_plane_index].frequency / wx);
    doc.set_scalar("low_out_of_plane_over_omega_x",
                   spec.modes[loc.low_out_of_plane_index].frequency / wx);
    if (p.floquet) {
      // matching pseudopotential value of the low in-plane localized mode
      LocalizedModes ploc = identify_localized_modes(p.pseudo, p.crystal, p.kink);
      doc.set_scalar("low_in_plane_pseudo_over_omega_x",
                     p.pseudo.modes[ploc.low_in_plane_index].frequency / wx);
    }
  } catch (const NotLocalizedError&) {
    doc.set_text("localized_modes", "none (no localized kink)");
  }

  std::vector<std::vector<double>> rows;
  for (size_t j = 0; j < spec.modes.size(); ++j)
    rows.push_back({double(j), spec.modes[j].frequency,
                    j < p.pseudo.modes.size() ? p.pseudo.modes[j].frequency : 0.0});
  const fs::path csv = fs::path(args.out_dir) / "modes.csv";
  write_csv(csv, {"mode", "floquet_frequency", "pseudo_frequency"}, rows);
  doc.add_csv(csv.string());
  doc.write(fs::path(args.out_dir) / "modes.result.json");
  std::printf("modes: w1=%.4f (%.3f wx) gap=%.4f\n", spec.modes[0].frequency,
              spec.modes[0].frequency / wx,
              spec.modes[0].frequency / spec.modes[1].frequency);
  return 0;
}

int run_gate_command(const GlobalArgs& args, const ExperimentConfig& cfg,
                     const std::string& tag) {
  ArtifactCache cache(fs::path(args.out_dir) / "cache");
  Pipeline p = run_pipeline(cfg, args.recompute ? nullptr : &cache, 2);
  if (args.recompute && p.floquet) {
    cache.store("crystal", p.hash, serialize_crystal(p.crystal));
    cache.store("orbit", p.hash, serialize_orbit(*p.orbit));
    cache.store("modes", p.hash, serialize_modes(*p.floquet));
  }
  GateRun g = run_gate(p);

  ResultDocument doc(cfg);
  record_pipeline(doc, p);
  doc.set_scalar("alpha", g.alpha);
  doc.set_scalar("rabi", g.rabi);
  doc.set_scalar("rabi_over_omega_1",
                 g.rabi / p.floquet->modes[g.localized.bus_index].frequency);
  doc.set_scalar("eta_bus", g.drive.eta);
  doc.set_scalar("gate_time", g.drive.gate_time());
  doc.set_scalar("final_fidelity", g.result.final_fidelity);
  doc.set_scalar("final_fidelity_full", g.result.final_fidelity_full);
  doc.set_scalar("final_purity", g.result.purity_trace.back());
  double peak_n = 0.0, peak_t = 0.0;
  for (size_t i = 0; i < g.result.mean_n_trace.size(); ++i)
    if (g.result.mean_n_trace[i] > peak_n) {
      peak_n = g.result.mean_n_trace[i];
      peak_t = g.result.times[i];
    }
  doc.set_scalar("peak_mean_n", peak_n);
  doc.set_scalar("peak_mean_n_time", peak_t);
  for (int q = 0; q < 3; ++q)
    doc.set_scalar("fitted_phase_" + std::to_string(q + 1),
                   g.result.fitted_phases[q]);

  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < g.result.times.size(); ++i)
    rows.push_back({g.result.times[i], g.result.fidelity_trace[i],
                    g.result.fidelity_full_trace[i], g.result.purity_trace[i],
                    g.result.mean_n_trace[i]});
  const fs::path csv = fs::path(args.out_dir) / (tag + ".csv");
  write_csv(csv, {"time", "fidelity_qubits", "fidelity_full", "bus_purity",
                  "mean_n"}, rows);
  doc.add_csv(csv.string());
  doc.write(fs::path(args.out_dir) / (tag + ".result.json"));
  std::printf("%s: alpha=%.4f F=%.5f F_full=%.5f purity=%.5f peak<n>=%.4f\n",
              tag.c_str(), g.alpha, g.result.final_fidelity,
              g.result.final_fidelity_full, g.result.purity_trace.back(),
              peak_n);
  return 0;
}

int cmd_gate(const GlobalArgs& args) {
  return run_gate_command(args, load_config(args, kDefaultLinear), "gate");
}

int cmd_heating(const GlobalArgs& args) {
  ExperimentConfig cfg = load_config(args, kDefaultLinear);
  ArtifactCache cache(fs::path(args.out_dir) / "cache");
  Pipeline p = run_pipeline(cfg, args.recompute ? nullptr : &cache, 0);
  HeatingEstimate est = run_heating(p);

  ResultDocument doc(cfg);
  record_pipeline(doc, p);
  doc.set_scalar("rate_per_period", est.rate);
  doc.set_scalar("rate_confidence", est.confidence);
  doc.set_scalar("fit_r_squared", est.fit_r_squared);
  doc.set_scalar("fit_ok", est.fit_ok ? 1.0 : 0.0);
  doc.set_scalar("ensemble_size", est.ensemble_size);
  doc.set_scalar("bath_temperature_kelvin", est.bath_temperature);

  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < est.mean_occupation.size(); ++i)
    rows.push_back({double(i), est.mean_occupation[i]});
  const fs::path csv = fs::path(args.out_dir) / "heating.csv";
  write_csv(csv, {"mode_period", "mean_occupation"}, rows);
  doc.add_csv(csv.string());
  doc.write(fs::path(args.out_dir) / "heating.result.json");
  std::printf("heating: rate=%.4e +/- %.1e per period (R2=%.3f)\n", est.rate,
              est.confidence, est.fit_r_squared);
  return 0;
}

int run_transport_command(const GlobalArgs& args, const ExperimentConfig& cfg,
                          const std::string& tag) {
  ArtifactCache cache(fs::path(args.out_dir) / "cache");
  Pipeline p = run_pipeline(cfg, args.recompute ? nullptr : &cache, 0);
  TransportReport rep = run_transport(p);

  ResultDocument doc(cfg);
  record_pipeline(doc, p);
  doc.set_scalar("success", rep.success ? 1.0 : 0.0);
  doc.set_scalar("tracked_ion", rep.tracked_ion);
  doc.set_text("diagnostics", rep.diagnostics);
  bool charge_conserved = true;
  for (int q : rep.kink_charge)
    if (q != rep.kink_charge.front()) charge_conserved = false;
  doc.set_scalar("charge_conserved", charge_conserved ? 1.0 : 0.0);
  if (!rep.kink_center.empty()) {
    doc.set_scalar("kink_center_start", rep.kink_center.front());
    doc.set_scalar("kink_center_end", rep.kink_center.back());
  }

  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < rep.times.size(); ++i)
    rows.push_back({rep.times[i], double(rep.kink_center[i]),
                    double(rep.kink_charge[i]),
                    double(static_cast<int>(rep.kink_kind[i])),
                    rep.tracked_ion_radius[i]});
  const fs::path csv = fs::path(args.out_dir) / (tag + ".csv");
  write_csv(csv, {"time", "kink_center", "kink_charge", "kink_kind",
                  "tracked_radius"}, rows);
  doc.add_csv(csv.string());
  doc.write(fs::path(args.out_dir) / (tag + ".result.json"));
  std::printf("%s: success=%d %s\n", tag.c_str(), rep.success ? 1 : 0,
              rep.diagnostics.c_str());
  return rep.success ? 0 : 3;
}

int cmd_transport(const GlobalArgs& args) {
  return run_transport_command(args, load_config(args, kDefaultRing),
                               "transport");
}

int cmd_paper(const GlobalArgs& args, const std::string& which) {
  if (which == "eq4-alpha") {
    ExperimentConfig cfg = load_config(args, kDefaultLinear);
    ResultDocument doc(cfg);
    // paper's literal projections and k.B2 value
    doc.set_scalar("alpha_literal", compute_alpha(-0.0237, -0.0121, -0.35));
    ArtifactCache cache(fs::path(args.out_dir) / "cache");
    Pipeline p = run_pipeline(cfg, args.recompute ? nullptr : &cache, 2);
    GateRun g{};
    g.localized = identify_localized_modes(*p.floquet, p.crystal, p.kink);
    LaserConstraints cons;
    cons.non_core_limit = cfg.laser_core_budget;
    LaserGeometry laser = optimize_laser_direction(
        *p.floquet, g.localized, cfg.laser_k(), cfg.units.hbar, cons);
    const Eigen::VectorXd dc = laser.bus().dc();
    std::complex<double> kb2 = 0.0;
    for (int a = 0; a < 3; ++a)
      kb2 += laser.wavevector[a] *
             p.orbit->fourier[1][3 * g.localized.core_ions[0] + a];
    const double alpha = compute_alpha(dc[g.localized.core_ions[1]],
                                       dc[g.localized.core_ions[0]],
                                       std::abs(kb2));
    record_pipeline(doc, p);
    doc.set_scalar("alpha_crystal", alpha);
    doc.write(fs::path(args.out_dir) / "eq4-alpha.result.json");
    std::printf("eq4-alpha: literal=%.4f crystal=%.4f\n",
                doc.scalar("alpha_literal"), alpha);
    return 0;
  }
  if (which == "fig2") {
    GlobalArgs a = args;
    // Fig. 2 damped curve: heating rate 0.75e-4 per bus period
    a.overrides.insert(a.overrides.begin(), "gate.heating_rate=0.75e-4");
    return run_gate_command(a, load_config(a, kDefaultLinear), "fig2");
  }
  if (which == "table1-row") {
    ExperimentConfig cfg = load_config(args, kDefaultLinear);
    ArtifactCache cache(fs::path(args.out_dir) / "cache");
    Pipeline p = run_pipeline(cfg, args.recompute ? nullptr : &cache, 2);
    const ModeSpectrum& spec = p.spectrum();
    const double wx = omega_x(cfg);
    LocalizedModes loc = identify_localized_modes(spec, p.crystal, p.kink);
    ResultDocument doc(cfg);
    record_pipeline(doc, p);
    doc.set_scalar("n_ions", cfg.n_ions);
    doc.set_scalar("omega_x_hz",
                   cfg.units.frequency_to_physical(wx) / (2.0 * constants::pi));
    doc.set_scalar("bus_over_omega_x", spec.modes[0].frequency / wx);
    doc.set_scalar("gap_ratio", spec.modes[0].frequency / spec.modes[1].frequency);
    doc.set_scalar("low_over_omega_x",
                   spec.modes[loc.low_in_plane_index].frequency / wx);
    const fs::path csv = fs::path(args.out_dir) / "table1-row.csv";
    write_csv(csv, {"n_ions", "omega_x_hz", "bus_over_omega_x", "gap_ratio",
                    "low_over_omega_x"},
              {{double(cfg.n_ions), doc.scalar("omega_x_hz"),
                doc.scalar("bus_over_omega_x"), doc.scalar("gap_ratio"),
                doc.scalar("low_over_omega_x")}});
    doc.add_csv(csv.string());
    doc.write(fs::path(args.out_dir) / "table1-row.result.json");
    std::printf("table1-row: N=%d w1=%.3f wx gap=%.4f low=%.3f wx\n",
                cfg.n_ions, doc.scalar("bus_over_omega_x"),
                doc.scalar("gap_ratio"), doc.scalar("low_over_omega_x"));
    return 0;
  }
  if (which == "transport-demo") {
    return run_transport_command(args, load_config(args, kDefaultRing),
                                 "transport-demo");
  }
  std::fprintf(stderr, "unknown paper pipeline '%s' (fig2, table1-row, "
               "eq4-alpha, transport-demo)\n", which.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete-soliton entangling-gate simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  app.add_option("--config", args.config_path, "configuration file (JSON)");
  app.add_option("--set", args.overrides, "override, key.path=value");
  app.add_option("--seed", args.seed, "global seed override");
  app.add_option("--out", args.out_dir, "output directory");
  app.add_option("--threads", args.threads, "Eigen thread count");
  app.add_flag("--recompute", args.recompute, "ignore cached artifacts");
  app.add_flag("--require-cache", args.require_cache,
               "fail instead of recomputing missing artifacts");

  app.add_subcommand("crystal", "equilibrium configuration and periodic orbit");
  app.add_subcommand("modes", "Floquet and pseudopotential mode spectra");
  app.add_subcommand("gate", "calibrate and propagate the entangling gate");
  app.add_subcommand("heating", "classical surrogate heating-rate estimate");
  app.add_subcommand("transport", "ring transport protocol");
  CLI::App* paper = app.add_subcommand("paper", "named paper reproductions");
  std::string pipeline_name;
  paper->add_option("pipeline", pipeline_name,
                    "fig2 | table1-row | eq4-alpha | transport-demo")
      ->required();

  CLI11_PARSE(app, argc, argv);
  if (args.threads > 0) Eigen::setNbThreads(args.threads);

  try {
    if (args.require_cache && !args.config_path.empty()) {
      // validate that the cache holds the pipeline stages for this config
      ExperimentConfig cfg = load_config(args, kDefaultLinear);
      ArtifactCache cache(fs::path(args.out_dir) / "cache");
      const std::string h = content_hash(pipeline_key(cfg));
      if (!cache.load("crystal", h)) {
        std::fprintf(stderr, "error: no cached crystal artifact for hash %s "
                     "(drop --require-cache to recompute)\n", h.c_str());
        return 1;
      }
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "crystal") return cmd_crystal(args);
    if (sub == "modes") return cmd_modes(args);
    if (sub == "gate") return cmd_gate(args);
    if (sub == "heating") return cmd_heating(args);
    if (sub == "transport") return cmd_transport(args);
    if (sub == "paper") return cmd_paper(args, pipeline_name);
    std::fprintf(stderr, "unknown subcommand\n");
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
}
