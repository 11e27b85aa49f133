#pragma once

#include <optional>

#include "solgate/artifacts.hpp"
#include "solgate/configio.hpp"
#include "solgate/crystal.hpp"
#include "solgate/dynamics.hpp"
#include "solgate/floquet.hpp"
#include "solgate/gate.hpp"
#include "solgate/laser.hpp"
#include "solgate/nonlinear.hpp"
#include "solgate/orbit.hpp"

// Experiment pipelines shared by the CLI subcommands and the acceptance
// tests: crystal -> orbit -> modes (cached), then the gate / heating /
// transport stages on top.

namespace solgate {

struct Pipeline {
  ExperimentConfig cfg;
  CrystalConfiguration crystal;
  KinkDescriptor kink;  // kind None when the crystal holds no kink
  ModeSpectrum pseudo;
  std::optional<PeriodicOrbit> orbit;     // linear Paul traps only
  std::optional<ModeSpectrum> floquet;    // linear Paul traps only
  std::string hash;                       // pipeline content hash
  bool crystal_cached = false;
  bool orbit_cached = false;
  bool modes_cached = false;

  // modes used downstream: Floquet when available, pseudopotential otherwise
  const ModeSpectrum& spectrum() const { return floquet ? *floquet : pseudo; }
};

inline Eigen::VectorXd seed_ansatz(const ExperimentConfig& cfg) {
  if (cfg.trap.geometry != TrapGeometry::LinearPaul)
    return ring_ansatz(cfg.trap, cfg.ions);
  if (cfg.ansatz == "zigzag_kink") return zigzag_ansatz(cfg.trap, cfg.ions, true);
  if (cfg.ansatz == "zigzag") return zigzag_ansatz(cfg.trap, cfg.ions, false);
  throw ConfigError("config.crystal.ansatz: unknown value '" + cfg.ansatz + "'");
}

// Solve (or load) the pipeline stages: 0 = crystal only, 1 = + periodic
// orbit, 2 = + Floquet modes. Orbit/Floquet apply to linear Paul traps; ring
// geometries are pseudopotential-only.
inline Pipeline run_pipeline(const ExperimentConfig& cfg,
                             const ArtifactCache* cache, int stages = 2) {
  Pipeline p;
  p.cfg = cfg;
  p.hash = content_hash(pipeline_key(cfg));

  if (cache) {
    if (auto j = cache->load("crystal", p.hash)) {
      p.crystal = deserialize_crystal(*j, cfg);
      p.crystal_cached = true;
    }
  }
  if (!p.crystal_cached) {
    p.crystal = find_equilibrium(cfg.trap, cfg.ions, cfg.crystal_seed,
                                 cfg.restarts, seed_ansatz(cfg));
    if (cache) cache->store("crystal", p.hash, serialize_crystal(p.crystal));
  }

  try {
    p.kink = detect_kink(p.crystal);
  } catch (const ClassificationError&) {
    p.kink = KinkDescriptor{};
  }
  p.pseudo = pseudopotential_modes(p.crystal);

  if (stages >= 1 && cfg.trap.geometry == TrapGeometry::LinearPaul) {
    if (cache) {
      if (auto j = cache->load("orbit", p.hash)) {
        p.orbit = deserialize_orbit(*j, cfg);
        p.orbit_cached = true;
      }
    }
    if (!p.orbit) {
      p.orbit = find_periodic_orbit(cfg.trap, p.crystal);
      if (cache) cache->store("orbit", p.hash, serialize_orbit(*p.orbit));
    }
  }
  if (stages >= 2 && p.orbit) {
    if (cache) {
      if (auto j = cache->load("modes", p.hash)) {
        p.floquet = deserialize_modes(*j);
        p.modes_cached = true;
      }
    }
    if (!p.floquet) {
      p.floquet = floquet_modes(*p.orbit);
      if (cache) cache->store("modes", p.hash, serialize_modes(*p.floquet));
    }
  }
  return p;
}

struct GateRun {
  LocalizedModes localized;
  LaserGeometry laser;
  DriveParameters drive;
  double alpha = 0.0;
  double rabi = 0.0;
  GateResult result;
};

// Full gate pipeline on a solved linear-Paul kink crystal: localized modes,
// laser direction, alpha, Rabi calibration, master-equation propagation.
inline GateRun run_gate(const Pipeline& p) {
  if (!p.floquet || !p.orbit)
    throw ValidationError("run_gate: gate pipeline needs Floquet modes (linear Paul trap)");
  GateRun g;
  g.localized = identify_localized_modes(*p.floquet, p.crystal, p.kink);
  LaserConstraints cons;
  cons.non_core_limit = p.cfg.laser_core_budget;
  g.laser = optimize_laser_direction(*p.floquet, g.localized, p.cfg.laser_k(),
                                     p.cfg.units.hbar, cons);

  const Eigen::VectorXd bus_dc = g.laser.bus().dc();
  const double lam1 = bus_dc[g.localized.core_ions[0]];
  const double lam2 = bus_dc[g.localized.core_ions[1]];
  std::complex<double> kb2 = 0.0;
  for (int a = 0; a < 3; ++a)
    kb2 += g.laser.wavevector[a] *
           p.orbit->fourier[1][3 * g.localized.core_ions[0] + a];
  g.alpha = compute_alpha(lam2, lam1, std::abs(kb2));

  const double w1 = p.floquet->modes[g.localized.bus_index].frequency;
  g.drive = make_drive(g.laser, *p.orbit, g.localized, *p.floquet,
                       p.cfg.gate.detuning_factor * w1);
  g.drive.micromotion_harmonics = p.cfg.gate.micromotion_harmonics;
  g.rabi = calibrate_rabi(g.drive, g.alpha).rabi;
  g.drive.rabi = g.rabi;

  const double t_star = g.drive.gate_time();
  g.drive.window.total_time = p.cfg.gate.duration_gates * t_star;

  QubitPhononState init = QubitPhononState::ground(p.cfg.gate.n_fock);
  PropagateOptions popt;
  popt.dt = p.cfg.gate.dt;
  popt.n_samples = p.cfg.gate.n_samples;
  popt.validate_truncation = false;
  popt.ideal_power = p.cfg.gate.ideal_power;
  HeatingModel heat{p.cfg.gate.heating_rate};
  g.result = propagate_master(init, g.drive, heat,
                              p.cfg.gate.duration_gates * t_star, g.alpha, popt);
  return g;
}

inline HeatingEstimate run_heating(const Pipeline& p) {
  HeatingOptions opt;
  opt.ensemble_size = p.cfg.heating.ensemble;
  opt.duration_mode_periods = p.cfg.heating.duration_mode_periods;
  opt.dt = p.cfg.heating.dt;
  opt.hbar = p.cfg.units.hbar;
  opt.seed = p.cfg.seed;
  if (p.cfg.heating.cool_localized) {
    LocalizedModes loc = identify_localized_modes(p.pseudo, p.crystal, p.kink);
    opt.cooled_modes = {loc.bus_index, loc.low_in_plane_index,
                        loc.low_out_of_plane_index};
  }
  return estimate_heating_rate(p.crystal, p.pseudo,
                               p.cfg.heating.bath_temperature_kelvin,
                               p.cfg.units.boltzmann_per_kelvin, opt);
}

// Resolve the transport excitation mode: best core-localized pseudopotential
// mode, low (below half the top frequency) or high band.
inline int resolve_transport_mode(const Pipeline& p) {
  const TransportConfig& t = p.cfg.transport;
  if (t.excite_mode_index >= 0) return t.excite_mode_index;
  std::vector<int> core(p.kink.core_indices.begin(), p.kink.core_indices.end());
  const double w_top = p.pseudo.modes[0].frequency;
  int best = -1;
  double best_frac = 0.0;
  for (int j = 0; j < static_cast<int>(p.pseudo.modes.size()); ++j) {
    const double w = p.pseudo.modes[j].frequency;
    if (w < 1e-6) continue;
    if (t.excite_mode == "low_localized" && w >= 0.5 * w_top) continue;
    if (t.excite_mode == "high_localized" && w < 0.5 * w_top) continue;
    const double f = mode_localization(p.pseudo.modes[j], core);
    if (f > best_frac) {
      best_frac = f;
      best = j;
    }
  }
  if (best < 0) throw ValidationError("resolve_transport_mode: no candidate mode");
  return best;
}

inline TransportReport run_transport(const Pipeline& p) {
  const TransportConfig& t = p.cfg.transport;
  TransportOptions opt;
  opt.hbar = p.cfg.units.hbar;
  opt.seed = p.cfg.seed;
  opt.duration_mode_periods = t.duration_mode_periods;
  opt.radial_scale_end = t.radial_scale_end;
  opt.frame_stride = t.frame_stride;
  ExcitationSpec exc{resolve_transport_mode(p), t.n_phonons, t.phase};
  CoolingModel cooling;
  const CoolingModel* cooling_ptr = nullptr;
  if (t.cooling_friction > 0.0) {
    cooling.friction = t.cooling_friction;
    cooling.temperature_kelvin = t.cooling_temperature_kelvin;
    cooling.boltzmann_per_kelvin = p.cfg.units.boltzmann_per_kelvin;
    cooling.species_mask.assign(p.cfg.n_ions, true);
    cooling_ptr = &cooling;
  }
  const TransportVariant variant = t.protocol == "kink_slide"
                                       ? TransportVariant::KinkSlide
                                       : TransportVariant::RadialDecrease;
  return transport_protocol(p.crystal, p.pseudo, variant, exc, cooling_ptr, opt);
}

}  // namespace solgate
