#include <catch2/catch_amalgamated.hpp>

#include "solgate/crystal.hpp"
#include "solgate/trap.hpp"
#include "solgate/units.hpp"

using namespace solgate;

namespace {

UnitSystem paper_units() {
  return UnitSystem::make(2.0 * constants::pi * 80.8e6,
                          39.9626 * constants::atomic_mass,
                          constants::elementary_charge);
}

// Independent continued-fraction oracle for the Mathieu characteristic
// exponent of x'' + (a + 2 q cos 2t) x = 0: with x = e^{i nu t} sum c_{2n}
// e^{2 i n t}, the coefficients obey [a - (nu + 2n)^2] c_{2n} +
// q (c_{2n+2} + c_{2n-2}) = 0. Eliminating the tails by downward continued
// fractions leaves a single root condition at n = 0.
double mathieu_cf_root(double a, double q, double lo, double hi) {
  auto tail = [&](double nu, int dir) {
    double g = 0.0;
    for (int n = 40; n >= 1; --n) {
      const double d = a - (nu + 2.0 * dir * n) * (nu + 2.0 * dir * n);
      g = -q / (d + q * g);
    }
    return g;
  };
  auto f = [&](double nu) {
    return a - nu * nu + q * (tail(nu, +1) + tail(nu, -1));
  };
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo <= 0.0) == (fm <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("[PAPER] dimensionless unit constants match the supplemental") {
  const UnitSystem u = paper_units();
  // length unit, dimensionless hbar, and 729 nm wavenumber quoted in the
  // supplemental for Ca-40 at Omega_rf = 2 pi x 80.8 MHz
  CHECK(u.length == Catch::Approx(3.7776e-7).epsilon(1e-3));
  CHECK(u.hbar == Catch::Approx(4.38451e-5).epsilon(1e-3));
  CHECK((2.0 * constants::pi / 729e-9) * u.length ==
        Catch::Approx(3.2569).epsilon(1e-3));
  // time unit is 2/Omega_rf, so the rf period is pi in dimensionless time
  CHECK(u.time == Catch::Approx(2.0 / u.omega_rf).epsilon(1e-14));
}

TEST_CASE("[TRIVIAL] unit conversions round-trip") {
  const UnitSystem u = paper_units();
  CHECK(u.frequency_from_physical(u.frequency_to_physical(0.0173)) ==
        Catch::Approx(0.0173).epsilon(1e-14));
  CHECK(u.length_from_physical(u.length_to_physical(2.5)) ==
        Catch::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("[DERIVED] Mathieu exponent vs continued-fraction oracle") {
  const LinearPaulFit fit = fit_linear_paul_trap(
      2.0 * constants::pi * 700e3, 0.22, 2.0 * constants::pi * 80.8e6, 8.38);
  const TrapParameters& t = fit.trap;
  for (int axis = 0; axis < 3; ++axis) {
    const double a = t.static_curvature[axis];
    const double q = t.mathieu_q[axis];
    const double nu = mathieu_exponent(a, q);
    const double oracle = std::abs(q) < 1e-14
                              ? std::sqrt(a)
                              : mathieu_cf_root(a, q, 1e-4, 0.9);
    CAPTURE(axis, a, q);
    CHECK(nu == Catch::Approx(oracle).margin(1e-6));
  }
}

TEST_CASE("[DERIVED] monodromy matrix is symplectic") {
  for (auto [a, q] : {std::pair{0.01, 0.22}, {-0.003, 0.3}, {3e-4, 0.0}}) {
    const Eigen::Matrix2d m = detail::mathieu_monodromy(a, q);
    CHECK(m.determinant() == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("[PAPER] linear Paul trap fit hits the quoted secular frequencies") {
  const double omega_rf = 2.0 * constants::pi * 80.8e6;
  const LinearPaulFit fit =
      fit_linear_paul_trap(2.0 * constants::pi * 700e3, 0.22, omega_rf, 8.38);
  const TrapParameters& t = fit.trap;
  const double wx = mathieu_exponent(t.static_curvature[0], t.mathieu_q[0]);
  const double wy = mathieu_exponent(t.static_curvature[1], t.mathieu_q[1]);
  CHECK(wx * 0.5 * omega_rf / (2.0 * constants::pi) ==
        Catch::Approx(700e3).epsilon(1e-6));
  CHECK(wy / wx == Catch::Approx(8.38).epsilon(1e-6));
  // Laplace closure: static curvatures sum to zero
  CHECK(std::abs(t.static_curvature.sum()) < 1e-12);
  // the z/y anisotropy is overdetermined; the paper quotes 1.16
  CHECK(fit.achieved_ratio_zy == Catch::Approx(1.16).epsilon(0.02));
}

TEST_CASE("[DERIVED] pseudopotential forces match finite differences") {
  const LinearPaulFit fit = fit_linear_paul_trap(
      2.0 * constants::pi * 700e3, 0.22, 2.0 * constants::pi * 80.8e6, 8.38);
  std::vector<IonSpecies> sp(4, IonSpecies{39.9626, 1.0, "Ca40"});
  const IonSet ions = make_ion_set(sp);
  const Eigen::MatrixXd w2 = pseudo_curvatures(fit.trap, ions);

  Eigen::VectorXd x = zigzag_ansatz(fit.trap, ions, false);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 0.05);
  for (int i = 0; i < x.size(); ++i) x[i] += gauss(rng);

  const PotentialResult res = pseudo_potential_and_force(x, ions, fit.trap, w2);
  const double h = 1e-6;
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double ep =
        pseudo_potential_and_force(xp, ions, fit.trap, w2, false).energy;
    const double em =
        pseudo_potential_and_force(xm, ions, fit.trap, w2, false).energy;
    const double fd = -(ep - em) / (2.0 * h);  // force = -dE/dx
    CHECK(res.force[i] == Catch::Approx(fd).margin(1e-6 * (1.0 + std::abs(fd))));
  }
}

TEST_CASE("[DERIVED] full rf forces match finite differences") {
  const LinearPaulFit fit = fit_linear_paul_trap(
      2.0 * constants::pi * 700e3, 0.22, 2.0 * constants::pi * 80.8e6, 8.38);
  std::vector<IonSpecies> sp(3, IonSpecies{39.9626, 1.0, "Ca40"});
  const IonSet ions = make_ion_set(sp);
  Eigen::VectorXd x = zigzag_ansatz(fit.trap, ions, false);
  x[1] += 0.03;
  x[5] -= 0.02;
  const double t = 0.37;  // arbitrary rf phase
  const PotentialResult res = potential_and_force(x, ions, fit.trap, t);
  const double h = 1e-6;
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd =
        -(potential_and_force(xp, ions, fit.trap, t, false).energy -
          potential_and_force(xm, ions, fit.trap, t, false).energy) /
        (2.0 * h);
    CHECK(res.force[i] == Catch::Approx(fd).margin(1e-6 * (1.0 + std::abs(fd))));
  }
}

TEST_CASE("[TRIVIAL] trap parameter validation") {
  TrapParameters t;
  t.geometry = TrapGeometry::LinearPaul;
  t.rf_frequency = 1.0;
  t.static_curvature = Eigen::Vector3d(1e-3, 1e-3, 1e-3);  // violates Laplace
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t.static_curvature = Eigen::Vector3d(1e-3, 1e-3, -2e-3);
  t.mathieu_q = Eigen::Vector3d(0.0, 0.95, -0.95);  // |q| too large
  CHECK_THROWS_AS(t.validate(), ValidationError);
}
