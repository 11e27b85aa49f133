#include <catch2/catch_amalgamated.hpp>

#include "solgate/entanglement.hpp"
#include "solgate/gate.hpp"

using namespace solgate;

namespace {

Eigen::VectorXcd ket(std::initializer_list<std::complex<double>> amps) {
  Eigen::VectorXcd v(static_cast<int>(amps.size()));
  int i = 0;
  for (auto a : amps) v[i++] = a;
  return v.normalized();
}

}  // namespace

TEST_CASE("[DERIVED] three-tangle separates GHZ, W, and product states") {
  const std::complex<double> I(0.0, 1.0);
  const Eigen::VectorXcd ghz = ket({1, 0, 0, 0, 0, 0, 0, I});
  CHECK(three_tangle(ghz) == Catch::Approx(1.0).margin(1e-12));

  const Eigen::VectorXcd w = ket({0, 1, 1, 0, 1, 0, 0, 0});
  CHECK(three_tangle(w) == Catch::Approx(0.0).margin(1e-12));

  const Eigen::VectorXcd product = ket({1, 1, 1, 1, 1, 1, 1, 1});
  CHECK(three_tangle(product) == Catch::Approx(0.0).margin(1e-12));

  // tangle is invariant under local phase rotations
  Eigen::VectorXcd rotated = ghz;
  for (int i = 0; i < 8; ++i)
    rotated[i] *= std::polar(1.0, 0.3 * (i & 1) + 0.7 * ((i >> 1) & 1));
  CHECK(three_tangle(rotated) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("[DERIVED] concurrence of Bell and product pairs") {
  const std::complex<double> I(0.0, 1.0);
  Eigen::VectorXcd bell(4);
  bell << 1.0, 0.0, 0.0, I;
  bell.normalize();
  CHECK(concurrence(bell * bell.adjoint()) == Catch::Approx(1.0).margin(1e-10));

  Eigen::VectorXcd prod(4);
  prod << 1.0, 1.0, 1.0, 1.0;
  prod.normalize();
  CHECK(concurrence(prod * prod.adjoint()) == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("[PAPER] ideal unitary creates a GHZ-class state; its square an "
          "EPR pair with qubit 2 disentangled") {
  const double alpha = -2.22;
  const std::array<double, 3> phases{0.1, -0.4, 0.7};
  Eigen::VectorXcd ggg = Eigen::VectorXcd::Zero(8);
  ggg[0] = 1.0;

  const Eigen::VectorXcd psi1 = ideal_unitary(alpha, phases, 1) * ggg;
  CHECK(three_tangle(psi1) == Catch::Approx(1.0).margin(1e-9));

  const Eigen::VectorXcd psi2 = ideal_unitary(alpha, phases, 2) * ggg;
  CHECK(three_tangle(psi2) == Catch::Approx(0.0).margin(1e-9));
  // qubit 2 is pure (disentangled) in [U_eff]^2 |ggg>
  const Eigen::MatrixXcd rho3 = psi2 * psi2.adjoint();
  Eigen::MatrixXcd rho_q2 = Eigen::MatrixXcd::Zero(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
          rho_q2(a, b) += rho3(4 * i + 2 * a + k, 4 * i + 2 * b + k);
  CHECK(purity(rho_q2) == Catch::Approx(1.0).margin(1e-9));

  // pair 1-3 concurrence: maximal at alpha = 2, slightly reduced at 2.22
  const double c22 = concurrence(reduce_to_pair(rho3, 0, 2));
  const Eigen::VectorXcd psi2_ideal = ideal_unitary(2.0, phases, 2) * ggg;
  const double c20 = concurrence(reduce_to_pair(psi2_ideal * psi2_ideal.adjoint(), 0, 2));
  CHECK(c20 == Catch::Approx(1.0).margin(1e-9));
  // |alpha| = 2.22 gives the approximately (0.92|gg> + 1.075 i|ee>)/sqrt(2) pair
  CHECK(c22 == Catch::Approx(2.0 * 0.92 * 1.075 / 2.0).epsilon(0.02));
}

TEST_CASE("[TRIVIAL] phase fit recovers local phases exactly") {
  const std::complex<double> I(0.0, 1.0);
  Eigen::VectorXcd target = Eigen::VectorXcd::Zero(8);
  target[0] = 1.0 / std::sqrt(2.0);
  target[7] = I / std::sqrt(2.0);
  const std::array<double, 3> ph{0.35, 1.9, 5.1};
  Eigen::VectorXcd rotated = target;
  for (int i = 0; i < 8; ++i) {
    const double p = (i & 4 ? ph[0] : 0.0) + (i & 2 ? ph[1] : 0.0) +
                     (i & 1 ? ph[2] : 0.0);
    rotated[i] *= std::polar(1.0, p);
  }
  const PhaseFitResult fit =
      fidelity_up_to_local_phases(rotated * rotated.adjoint(), target);
  CHECK(fit.fidelity == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("[TRIVIAL] Fock ladder operators satisfy the commutator") {
  const int n = 8;
  const Eigen::MatrixXcd b = gate_detail::fock_annihilation(n);
  const Eigen::MatrixXcd comm = b * b.adjoint() - b.adjoint() * b;
  // the commutator is the identity except in the truncated top level
  for (int i = 0; i + 1 < n; ++i)
    CHECK(comm(i, i).real() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("[TRIVIAL] partial traces are consistent") {
  QubitPhononState st = QubitPhononState::ground(6);
  const Eigen::MatrixXcd rq = trace_out_phonon(st.rho, 6);
  const Eigen::MatrixXcd rb = trace_out_qubits(st.rho, 6);
  CHECK(rq.trace().real() == Catch::Approx(1.0).margin(1e-12));
  CHECK(rb.trace().real() == Catch::Approx(1.0).margin(1e-12));
  CHECK(rq(0, 0).real() == Catch::Approx(1.0).margin(1e-12));  // |ggg>
  CHECK(rb(0, 0).real() == Catch::Approx(1.0).margin(1e-12));  // |0>
}

TEST_CASE("[DERIVED] Rabi calibration closes the geometric phase") {
  // synthetic single-mode drive; the calibrated Rabi frequency must satisfy
  // theta_total * rabi^2 = pi / (8 |alpha|)
  DriveParameters d;
  d.bus_frequency = 0.21;
  d.epsilon = 0.004 * d.bus_frequency;
  d.eta = 0.03;
  d.core_ions = {0, 1, 2};
  d.phase_tilde = {0.0, 0.0, 0.0};
  d.j0_factor = {0.9, 1.0, 0.9};
  d.lambda_dc = {0.4, -0.8, 0.4};
  d.window.total_time = d.gate_time();
  d.window.ramp_time = 2.0 * 2.0 * constants::pi / d.bus_frequency;
  const double alpha = -2.2;
  const CalibrationResult cal = calibrate_rabi(d, alpha);
  CHECK(std::abs(cal.theta_total) * cal.rabi * cal.rabi ==
        Catch::Approx(constants::pi / (8.0 * std::abs(alpha))).epsilon(1e-6));
  // phonon loop closes at t*: residual displacement small vs accumulated area
  CHECK(cal.residual_displacement * cal.rabi < 0.05);
}

TEST_CASE("[TRIVIAL] short master-equation propagation is bit-deterministic") {
  DriveParameters d;
  d.bus_frequency = 0.21;
  d.epsilon = 0.05 * d.bus_frequency;
  d.eta = 0.03;
  d.core_ions = {0, 1, 2};
  d.phase_tilde = {0.1, 0.0, -0.1};
  d.j0_factor = {0.9, 1.0, 0.9};
  d.lambda_dc = {0.4, -0.8, 0.4};
  d.rabi = 0.02;
  d.window.total_time = d.gate_time();
  d.window.ramp_time = 2.0 * constants::pi / d.bus_frequency;

  const QubitPhononState init = QubitPhononState::ground(4);
  PropagateOptions opt;
  opt.dt = 0.5;
  opt.n_samples = 10;
  opt.validate_truncation = false;
  const double t_end = d.gate_time() / 10.0;
  const GateResult a = propagate_master(init, d, HeatingModel{1e-4}, t_end, -2.2, opt);
  const GateResult b = propagate_master(init, d, HeatingModel{1e-4}, t_end, -2.2, opt);
  CHECK(a.final_fidelity == b.final_fidelity);
  CHECK(a.final_fidelity_full == b.final_fidelity_full);
  CHECK((a.final_rho - b.final_rho).cwiseAbs().maxCoeff() == 0.0);
}
