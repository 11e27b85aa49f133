#include <catch2/catch_amalgamated.hpp>

#include "solgate/crystal.hpp"
#include "solgate/dynamics.hpp"
#include "solgate/floquet.hpp"
#include "solgate/units.hpp"

using namespace solgate;

namespace {

struct RingSystem {
  UnitSystem units;
  CrystalConfiguration config;
  ModeSpectrum spectrum;
};

// small single-species ring: time-independent potential, so energy is
// conserved and mode projections are exact
RingSystem make_ring(int n_ions) {
  RingSystem s;
  s.units = UnitSystem::make(2.0 * constants::pi * 80.8e6,
                             39.9626 * constants::atomic_mass,
                             constants::elementary_charge);
  TrapParameters trap;
  trap.geometry = TrapGeometry::RingQuadrupole;
  trap.rf_frequency = s.units.omega_rf;
  trap.radial_frequency = 2.0 * constants::pi * 1.2e6 * s.units.time;
  trap.axial_frequency = 3.0 * trap.radial_frequency;
  trap.ring_radius_scale = 30.0;
  std::vector<IonSpecies> sp(n_ions, IonSpecies{39.9626, 1.0, "Ca40"});
  s.config = find_equilibrium(trap, make_ion_set(sp), 1);
  s.spectrum = pseudopotential_modes(s.config);
  return s;
}

double total_energy(const RingSystem& s, const MDState& st) {
  double e =
      potential_and_force(st.positions, s.config.ions, s.config.trap, st.time,
                          false).energy;
  for (int i = 0; i < s.config.ions.size(); ++i)
    e += 0.5 * s.config.ions.mass[i] *
         st.velocities.segment<3>(3 * i).squaredNorm();
  return e;
}

}  // namespace

TEST_CASE("[DERIVED] undriven MD conserves energy to 1e-8 over 1e4 steps") {
  RingSystem s = make_ring(6);
  MDState st{s.config.positions, Eigen::VectorXd::Zero(18), 0.0};
  // small coherent excitation of the top mode
  st = excite_mode_coherent(st, s.config.ions, s.spectrum.modes[0], 50.0, 0.3,
                            s.units.hbar);
  const double e0 = total_energy(s, st);
  IntegrateOptions opt;
  opt.sample_stride = 10000;
  const Trajectory traj = integrate(st, s.config.ions, s.config.trap,
                                    std::nullopt, 0.005, 10000, nullptr, opt);
  const double e1 = total_energy(s, traj.final_state);
  CHECK(std::abs(e1 - e0) / std::abs(e0) < 1e-8);
}

TEST_CASE("[TRIVIAL] coherent excitation deposits n hbar w of mode energy") {
  RingSystem s = make_ring(6);
  const MDState base{s.config.positions, Eigen::VectorXd::Zero(18), 0.0};
  for (double phase : {0.0, 0.8, 2.4}) {
    const MDState st = excite_mode_coherent(base, s.config.ions,
                                            s.spectrum.modes[2], 120.0, phase,
                                            s.units.hbar);
    const Eigen::VectorXd e = mode_energy(st, s.config.ions, s.config, s.spectrum);
    const double w = s.spectrum.modes[2].frequency;
    CHECK(e[2] == Catch::Approx(120.0 * s.units.hbar * w).epsilon(1e-8));
    // other modes stay empty
    for (int j = 0; j < e.size(); ++j)
      if (j != 2) CHECK(std::abs(e[j]) < 1e-12);
  }
}

TEST_CASE("[DERIVED] thermal sampling satisfies equipartition") {
  RingSystem s = make_ring(6);
  const double temperature = 5e-4;
  const double kbt = s.units.boltzmann_per_kelvin * temperature;
  const int n_samples = 400;
  // keep the free-rotation (near-zero) modes out of the sample: their
  // thermal amplitude diverges as 1/w
  std::vector<int> soft;
  for (size_t j = 0; j < s.spectrum.modes.size(); ++j)
    if (s.spectrum.modes[j].frequency < 1e-3) soft.push_back(static_cast<int>(j));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s.spectrum.modes.size());
  int n_modes = 0;
  for (int k = 0; k < n_samples; ++k) {
    const MDState st = doppler_thermal_sample(s.config, s.spectrum, temperature,
                                              s.units.boltzmann_per_kelvin,
                                              100 + k, soft);
    mean += mode_energy(st, s.config.ions, s.config, s.spectrum);
  }
  mean /= n_samples;
  double avg = 0.0;
  for (size_t j = 0; j < s.spectrum.modes.size(); ++j) {
    if (s.spectrum.modes[j].frequency < 1e-3) continue;
    avg += mean[j];
    ++n_modes;
  }
  avg /= n_modes;
  // <E_mode> = k_B T; ensemble error ~ kbt * sqrt(2 / (N_samples n_modes))
  CHECK(avg == Catch::Approx(kbt).epsilon(0.05));
}

TEST_CASE("[DERIVED] Langevin thermostat relaxes to the bath temperature") {
  RingSystem s = make_ring(6);
  CoolingModel cooling;
  cooling.friction = 0.05;
  cooling.temperature_kelvin = 1e-3;
  cooling.boltzmann_per_kelvin = s.units.boltzmann_per_kelvin;
  const double kbt = s.units.boltzmann_per_kelvin * cooling.temperature_kelvin;

  MDState st{s.config.positions, Eigen::VectorXd::Zero(18), 0.0};
  IntegrateOptions opt;
  opt.sample_stride = 50;
  opt.seed = 21;
  // burn-in, then time-average the kinetic energy
  Trajectory burn = integrate(st, s.config.ions, s.config.trap, std::nullopt,
                              0.05, 20000, &cooling, opt);
  Trajectory traj = integrate(burn.final_state, s.config.ions, s.config.trap,
                              std::nullopt, 0.05, 60000, &cooling, opt);
  double kin = 0.0;
  int count = 0;
  for (const Eigen::VectorXd& v : traj.velocities) {
    for (int i = 0; i < s.config.ions.size(); ++i)
      kin += 0.5 * s.config.ions.mass[i] * v.segment<3>(3 * i).squaredNorm();
    ++count;
  }
  kin /= count;
  // equipartition: <E_kin> = (3N/2) k_B T
  const double expected = 1.5 * s.config.ions.size() * kbt;
  CHECK(kin == Catch::Approx(expected).epsilon(0.15));
}

TEST_CASE("[TRIVIAL] ramp schedule endpoints and smoothness") {
  RampSchedule ramp;
  ramp.t_start = 10.0;
  ramp.duration = 5.0;
  ramp.scale_start = 1.0;
  ramp.scale_end = 0.6;
  CHECK(ramp.value(0.0) == Catch::Approx(1.0));
  CHECK(ramp.value(15.0) == Catch::Approx(0.6));
  CHECK(ramp.value(12.5) == Catch::Approx(0.8));
  // monotone in between
  double prev = ramp.value(10.0);
  for (double t = 10.0; t <= 15.0; t += 0.1) {
    CHECK(ramp.value(t) <= prev + 1e-12);
    prev = ramp.value(t);
  }
}

TEST_CASE("[TRIVIAL] thermal sampling zeroes the requested modes") {
  RingSystem s = make_ring(6);
  const MDState st = doppler_thermal_sample(s.config, s.spectrum, 5e-4,
                                            s.units.boltzmann_per_kelvin, 9,
                                            {0, 1});
  const Eigen::VectorXd e = mode_energy(st, s.config.ions, s.config, s.spectrum);
  CHECK(std::abs(e[0]) < 1e-12);
  CHECK(std::abs(e[1]) < 1e-12);
}
