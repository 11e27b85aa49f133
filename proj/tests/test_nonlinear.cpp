#include <catch2/catch_amalgamated.hpp>

#include "solgate/crystal.hpp"
#include "solgate/floquet.hpp"
#include "solgate/nonlinear.hpp"
#include "solgate/units.hpp"

using namespace solgate;

namespace {

struct SmallSystem {
  CrystalConfiguration config;
  ModeSpectrum spectrum;
};

// 7-ion chain in the paper trap: small enough for fast finite differences,
// anharmonic enough for sizable cubic couplings.
SmallSystem make_small() {
  const LinearPaulFit fit = fit_linear_paul_trap(
      2.0 * constants::pi * 700e3, 0.22, 2.0 * constants::pi * 80.8e6, 8.38);
  std::vector<IonSpecies> sp(7, IonSpecies{39.9626, 1.0, "Ca40"});
  const IonSet ions = make_ion_set(sp);
  SmallSystem s;
  s.config = find_equilibrium(fit.trap, ions, 1);
  s.spectrum = pseudopotential_modes(s.config);
  return s;
}

Eigen::VectorXd mode_vector(const SmallSystem& s, int j) {
  const int dim = static_cast<int>(s.config.positions.size());
  Eigen::VectorXd e(dim);
  const double sc = std::sqrt(2.0 * s.spectrum.modes[j].frequency);
  for (int i = 0; i < dim; ++i) e[i] = sc * s.spectrum.modes[j].dc()[i].real();
  return e;
}

}  // namespace

TEST_CASE("[DERIVED] cubic couplings match the gradient-contraction oracle") {
  const SmallSystem s = make_small();
  const CubicCouplingSet cc = cubic_couplings(s.config, s.spectrum);
  const Eigen::MatrixXd w2 = pseudo_curvatures(s.config.trap, s.config.ions);
  auto grad = [&](const Eigen::VectorXd& x) {
    return (-pseudo_potential_and_force(x, s.config.ions, s.config.trap, w2)
                 .force).eval();
  };

  // pick the largest couplings involving the top mode
  const int n = static_cast<int>(s.spectrum.modes.size());
  struct Triple { int j, k, l; double c; };
  std::vector<Triple> triples;
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) triples.push_back({0, k, l, std::abs(cc.get(0, k, l))});
  std::sort(triples.begin(), triples.end(),
            [](const Triple& a, const Triple& b) { return a.c > b.c; });

  const double h = 1e-3;
  for (int t = 0; t < 5; ++t) {
    const auto [j, k, l, mag] = triples[t];
    const Eigen::VectorXd ea = mode_vector(s, j);
    const Eigen::VectorXd eb = mode_vector(s, k);
    const Eigen::VectorXd ec = mode_vector(s, l);
    const Eigen::VectorXd& x0 = s.config.positions;
    const double oracle = (ea.dot(grad(x0 + h * eb + h * ec)) -
                           ea.dot(grad(x0 + h * eb - h * ec)) -
                           ea.dot(grad(x0 - h * eb + h * ec)) +
                           ea.dot(grad(x0 - h * eb - h * ec))) /
                          (4.0 * h * h);
    CAPTURE(j, k, l);
    CHECK(cc.get(j, k, l) ==
          Catch::Approx(oracle).epsilon(1e-5).margin(1e-8));
  }
}

TEST_CASE("[DERIVED] cubic couplings are permutation symmetric") {
  const SmallSystem s = make_small();
  const CubicCouplingSet cc = cubic_couplings(s.config, s.spectrum, {0, 1, 2});
  const double c012 = cc.get(0, 1, 2);
  CHECK(cc.get(1, 0, 2) == Catch::Approx(c012).margin(1e-12));
  CHECK(cc.get(2, 1, 0) == Catch::Approx(c012).margin(1e-12));
  CHECK(cc.get(0, 2, 1) == Catch::Approx(c012).margin(1e-12));
}

TEST_CASE("[TRIVIAL] coupling set rejects triples outside the filter") {
  const SmallSystem s = make_small();
  const CubicCouplingSet cc = cubic_couplings(s.config, s.spectrum, {0});
  CHECK_NOTHROW(cc.get(0, 3, 4));
  CHECK_THROWS_AS(cc.get(1, 2, 3), ValidationError);
}

TEST_CASE("[TRIVIAL] resonance scan respects the detuning tolerance") {
  const SmallSystem s = make_small();
  const CubicCouplingSet cc = cubic_couplings(s.config, s.spectrum);
  const double tol = 0.5;  // loose: a 7-ion spectrum is sparse
  const auto triples = resonance_scan(s.spectrum, cc, tol);
  const double w_bus = s.spectrum.modes[0].frequency;
  for (const auto& t : triples) {
    CHECK(std::abs(t.detuning) <= tol);
    CHECK(t.detuning ==
          Catch::Approx(w_bus - s.spectrum.modes[t.k].frequency -
                        s.spectrum.modes[t.l].frequency).margin(1e-12));
  }
  // ranking is by descending score
  for (size_t i = 1; i < triples.size(); ++i)
    CHECK(triples[i - 1].score >= triples[i].score);
}

TEST_CASE("[DERIVED] heating surrogate vanishes for a cold, unexcited crystal") {
  const SmallSystem s = make_small();
  const UnitSystem u = UnitSystem::make(2.0 * constants::pi * 80.8e6,
                                        39.9626 * constants::atomic_mass,
                                        constants::elementary_charge);
  HeatingOptions opt;
  opt.ensemble_size = 4;
  opt.duration_mode_periods = 10;
  opt.hbar = u.hbar;
  opt.seed = 3;
  // zero-temperature bath and no zero-point excitation: nothing moves
  const HeatingEstimate est =
      estimate_heating_rate(s.config, s.spectrum, 0.0, u.boltzmann_per_kelvin, opt);
  CHECK(std::abs(est.rate) < 1e-12);
}

TEST_CASE("[TRIVIAL] heating estimate is seed-deterministic") {
  const SmallSystem s = make_small();
  const UnitSystem u = UnitSystem::make(2.0 * constants::pi * 80.8e6,
                                        39.9626 * constants::atomic_mass,
                                        constants::elementary_charge);
  HeatingOptions opt;
  opt.ensemble_size = 3;
  opt.duration_mode_periods = 5;
  opt.hbar = u.hbar;
  opt.seed = 11;
  const HeatingEstimate a =
      estimate_heating_rate(s.config, s.spectrum, 5e-4, u.boltzmann_per_kelvin, opt);
  const HeatingEstimate b =
      estimate_heating_rate(s.config, s.spectrum, 5e-4, u.boltzmann_per_kelvin, opt);
  CHECK(a.rate == b.rate);
}
