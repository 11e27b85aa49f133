#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "solgate/entanglement.hpp"
#include "solgate/laser.hpp"
#include "solgate/orbit.hpp"

namespace solgate {

inline double bessel_micromotion_factor(double k_y, double b2y) {
  return std::cyl_bessel_j(0.0, std::abs(2.0 * k_y * b2y));
}

inline double compute_alpha(double lambda2, double lambda1, double ky_b2) {
  const double j0 = std::cyl_bessel_j(0.0, std::abs(2.0 * ky_b2));
  if (std::abs(lambda1) < 1e-14 || std::abs(j0) < 1e-14)
    throw ValidationError("compute_alpha: vanishing denominator");
  // The bus pattern weights the middle ion with the opposite sign to the
  // outer ions, so alpha is negative regardless of the overall mode sign
  // (projections are often quoted as magnitudes).
  return -std::abs(lambda2 / (lambda1 * j0));
}

enum class HamiltonianOrder { Exact, FirstOrderLD };

// Smooth raised-cosine window anchored at rf phase zero: ramps of duration
// ramp_time at each end, unity in between.
struct Window {
  double ramp_time = 0.0;
  double total_time = 0.0;
  double operator()(double t) const {
    if (t <= 0.0 || t >= total_time) return 0.0;
    if (t < ramp_time) return 0.5 * (1.0 - std::cos(constants::pi * t / ramp_time));
    if (t > total_time - ramp_time)
      return 0.5 * (1.0 - std::cos(constants::pi * (total_time - t) / ramp_time));
    return 1.0;
  }
};

struct DriveParameters {
  double rabi = 0.0;          // Omega, dimensionless angular frequency
  double epsilon = 0.0;       // omega_1 - delta; t* = 2 pi / |epsilon|
  double bus_frequency = 0.0; // omega_1
  Window window;
  bool micromotion_harmonics = false;
  HamiltonianOrder order = HamiltonianOrder::FirstOrderLD;

  // Per core ion (gate qubit) data derived from laser + orbit.
  std::array<int, 3> core_ions{};
  std::array<double, 3> phase_tilde{};   // phi_L - k . B0_i
  std::array<double, 3> j0_factor{};     // J0(2 k . B2_i), in-plane
  std::array<std::complex<double>, 3> lambda_dc{};  // bus-mode DC projection
  double eta = 0.0;                      // bus Lamb-Dicke parameter
  // micromotion data (used when micromotion_harmonics is on)
  int n_max = 0;
  std::array<std::vector<std::complex<double>>, 3> k_dot_b;      // k . B_{2n,i}, n=1..n_max
  std::array<std::vector<std::complex<double>>, 3> lambda_harm;  // lambda_i^{(n)}, n=-n_max..n_max

  double delta() const { return bus_frequency - epsilon; }
  double gate_time() const { return 2.0 * constants::pi / std::abs(epsilon); }
};

// Derive the per-ion drive data from laser geometry and orbit. epsilon keeps
// its sign; rabi is set later (directly or by calibration).
inline DriveParameters make_drive(const LaserGeometry& laser, const PeriodicOrbit& orbit,
                                  const LocalizedModes& loc, const ModeSpectrum& spectrum,
                                  double epsilon) {
  DriveParameters d;
  d.bus_frequency = spectrum.modes[loc.bus_index].frequency;
  d.epsilon = epsilon;
  d.eta = laser.bus().eta;
  d.n_max = orbit.n_max;
  const Eigen::Vector3d k = laser.wavevector;
  for (int q = 0; q < 3; ++q) {
    const int i = loc.core_ions[q];
    d.core_ions[q] = i;
    Eigen::Vector3d b0;
    for (int a = 0; a < 3; ++a) b0[a] = orbit.fourier[0][3 * i + a].real();
    d.phase_tilde[q] = laser.optical_phase - k.dot(b0);
    std::complex<double> kb2 = 0.0;
    for (int a = 0; a < 3; ++a) kb2 += k[a] * orbit.fourier[1][3 * i + a];
    // leading micromotion harmonic: phase modulation amplitude 2|k.B2|
    d.j0_factor[q] = std::cyl_bessel_j(0.0, 2.0 * std::abs(kb2));
    d.lambda_dc[q] = laser.bus().harmonic(0)[i];
    d.k_dot_b[q].resize(d.n_max);
    for (int n = 1; n <= d.n_max; ++n) {
      std::complex<double> kb = 0.0;
      for (int a = 0; a < 3; ++a) kb += k[a] * orbit.fourier[n][3 * i + a];
      d.k_dot_b[q][n - 1] = kb;
    }
    d.lambda_harm[q].resize(2 * d.n_max + 1);
    const int bus_n = laser.bus().n_max;
    for (int n = -d.n_max; n <= d.n_max; ++n)
      d.lambda_harm[q][n + d.n_max] =
          (n >= -bus_n && n <= bus_n) ? laser.bus().harmonic(n)[i]
                                      : std::complex<double>(0.0);
  }
  d.window.total_time = d.gate_time();
  d.window.ramp_time = 2.0 * 2.0 * constants::pi / d.bus_frequency;
  return d;
}

struct HeatingModel {
  double rate_per_period = 0.0;  // gamma: d<n>/d(mode period) from the ground state
};

namespace gate_detail {

inline Eigen::MatrixXcd fock_annihilation(int n_fock) {
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n_fock, n_fock);
  for (int n = 1; n < n_fock; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
  return b;
}

// Builder for H(t) on (3 qubits) x Fock(n_fock); produces the generic form
// sum_q c_q(t) sigma+_q (x) O_q(t) + h.c.
class HamiltonianBuilder {
 public:
  HamiltonianBuilder(const DriveParameters& drive, int n_fock)
      : drive_(drive), n_fock_(n_fock), b_(fock_annihilation(n_fock)) {
    id_ = Eigen::MatrixXcd::Identity(n_fock, n_fock);
  }

  Eigen::MatrixXcd operator()(double t) const {
    const int dim = 8 * n_fock_;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    const double w = drive_.bus_frequency;
    const double envelope =
        drive_.rabi * drive_.window(t) * std::cos(drive_.delta() * t);
    if (envelope == 0.0) return h;
    for (int q = 0; q < 3; ++q) {
      // laser phase factor, with or without micromotion phase modulation
      std::complex<double> c = envelope * std::polar(1.0, -drive_.phase_tilde[q]);
      if (drive_.micromotion_harmonics) {
        // e^{ i k . (R_i^pi(t) - B0_i) }
        double mod = 0.0;
        for (int n = 1; n <= drive_.n_max; ++n)
          mod += 2.0 * (drive_.k_dot_b[q][n - 1] *
                        std::polar(1.0, 2.0 * n * t)).real();
        c *= std::polar(1.0, mod);
      } else {
        c *= drive_.j0_factor[q];
      }

      // lambda_i(t): DC or full harmonic series
      std::complex<double> lam = drive_.lambda_dc[q];
      if (drive_.micromotion_harmonics) {
        lam = 0.0;
        for (int n = -drive_.n_max; n <= drive_.n_max; ++n)
          lam += drive_.lambda_harm[q][n + drive_.n_max] *
                 std::polar(1.0, 2.0 * n * t);
      }

      // O_q(t) = exp{ i eta (lambda b^dag e^{i w t} + lambda* b e^{-i w t}) },
      // or its first-order expansion for the LD branch.
      const std::complex<double> coef =
          drive_.eta * lam * std::polar(1.0, w * t);
      Eigen::MatrixXcd x = coef * b_.adjoint();
      x += x.adjoint().eval();
      Eigen::MatrixXcd o;
      if (drive_.order == HamiltonianOrder::FirstOrderLD) {
        o = id_ + std::complex<double>(0.0, 1.0) * x;
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(x);
        Eigen::VectorXcd ph(n_fock_);
        for (int n = 0; n < n_fock_; ++n)
          ph[n] = std::polar(1.0, es.eigenvalues()[n]);
        o = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
      }

      // scatter c * sigma+_q (x) o + h.c. into the full matrix
      const int bit = 4 >> q;  // qubit 0 most significant
      for (int a = 0; a < 8; ++a) {
        if (!(a & bit)) continue;      // a has qubit q excited, a->a^bit is sigma+ row/col
        const int g = a ^ bit;
        h.block(a * n_fock_, g * n_fock_, n_fock_, n_fock_) += c * o;
        h.block(g * n_fock_, a * n_fock_, n_fock_, n_fock_) +=
            std::conj(c) * o.adjoint();
      }
    }
    return h;
  }

 private:
  DriveParameters drive_;
  int n_fock_;
  Eigen::MatrixXcd b_, id_;
};

}  // namespace gate_detail

struct QubitPhononState {
  Eigen::MatrixXcd rho;
  int n_fock = 0;
  double time = 0.0;

  static QubitPhononState ground(int n_fock) {
    QubitPhononState s;
    s.n_fock = n_fock;
    s.rho = Eigen::MatrixXcd::Zero(8 * n_fock, 8 * n_fock);
    // |ggg> (x) |0>; ground = bit 0 on each qubit
    s.rho(0, 0) = 1.0;
    return s;
  }

  void validate() const {
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-8)
      throw ValidationError("QubitPhononState: trace " + std::to_string(tr));
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
      throw ValidationError("QubitPhononState: not Hermitian");
    double top = 0.0;
    for (int a = 0; a < 8; ++a)
      for (int n = n_fock - 2; n < n_fock; ++n)
        top += rho(a * n_fock + n, a * n_fock + n).real();
    if (top > 1e-4)
      throw TruncationError("QubitPhononState: top Fock levels hold " +
                            std::to_string(top) + "; raise n_max_fock");
  }
};

struct GateResult {
  std::vector<double> times;
  std::vector<double> fidelity_trace;   // qubits vs ideal final state
  std::vector<double> fidelity_full_trace;  // combined state, per-sample phase fit
  std::vector<double> purity_trace;     // bus-mode purity
  std::vector<double> mean_n_trace;     // bus phonon number
  Eigen::MatrixXcd final_rho;
  double alpha = 0.0;
  std::array<double, 3> fitted_phases{};
  double final_fidelity = 0.0;
  // Overlap <Psi|rho|Psi> of the combined qubit+phonon state with the
  // phase-fitted ideal state tensored with the motional ground state.
  double final_fidelity_full = 0.0;
};

// Ideal effective unitary of eq-style S^2 form on 3 qubits.
inline Eigen::MatrixXcd ideal_unitary(double alpha,
                                      const std::array<double, 3>& phases,
                                      int power = 1) {
  if (alpha == 0.0) throw ValidationError("ideal_unitary: alpha = 0");
  Eigen::Matrix2cd sx, sy;
  sx << 0, 1, 1, 0;
  sy << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(8, 8);
  const double wts[3] = {1.0, alpha, 1.0};
  for (int q = 0; q < 3; ++q) {
    // sigma~_y = i (sigma+ e^{-i phi} - sigma- e^{i phi}) in the |g>=0, |e>=1
    // basis used throughout
    const Eigen::Matrix2cd sq =
        std::cos(phases[q]) * sy + std::sin(phases[q]) * sx;
    const int bit = 4 >> q;
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        if ((a & ~bit) != (b & ~bit)) continue;
        s(a, b) += wts[q] * sq((a & bit) ? 1 : 0, (b & bit) ? 1 : 0);
      }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s * s);
  Eigen::VectorXcd ph(8);
  const double theta = power * constants::pi / (8.0 * alpha);
  for (int i = 0; i < 8; ++i) ph[i] = std::polar(1.0, theta * es.eigenvalues()[i]);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

struct PropagateOptions {
  double dt = 0.25;                // base step; shrunk if harmonics demand it
  int n_samples = 400;             // trace sampling resolution
  bool validate_truncation = true;
  int ideal_power = 1;             // comparison target: [U_eff]^power |ggg>
};

// Fixed-step RK4 integration of the master equation
// drho/dt = -i [H(t), rho] + gamma_rate D[b^dag](rho).
inline GateResult propagate_master(const QubitPhononState& initial,
                                   const DriveParameters& drive,
                                   const HeatingModel& heating, double t_end,
                                   double alpha,
                                   const PropagateOptions& opt = {}) {
  const int n_fock = initial.n_fock;
  const int dim = 8 * n_fock;
  initial.validate();
  gate_detail::HamiltonianBuilder ham(drive, n_fock);

  double dt = opt.dt;
  if (drive.micromotion_harmonics)
    dt = std::min(dt, constants::pi / 32.0);  // >= 20 steps per rf half-cycle
  int steps = static_cast<int>(std::ceil(t_end / dt));
  steps = ((steps + opt.n_samples - 1) / opt.n_samples) * opt.n_samples;
  dt = t_end / steps;

  const Eigen::MatrixXcd b_small = gate_detail::fock_annihilation(n_fock);
  Eigen::MatrixXcd bdag = Eigen::MatrixXcd::Zero(dim, dim);
  for (int a = 0; a < 8; ++a)
    bdag.block(a * n_fock, a * n_fock, n_fock, n_fock) = b_small.adjoint();
  const Eigen::MatrixXcd b_bdag = bdag.adjoint() * bdag;  // b b^dag
  const double gamma_rate =
      heating.rate_per_period * drive.bus_frequency / (2.0 * constants::pi);

  // D[b^dag] rho = b^dag rho b - 1/2 {b b^dag, rho}
  auto rhs = [&](double t, const Eigen::MatrixXcd& rho) -> Eigen::MatrixXcd {
    const Eigen::MatrixXcd h = ham(t);
    Eigen::MatrixXcd d = std::complex<double>(0.0, -1.0) * (h * rho - rho * h);
    if (gamma_rate > 0.0) {
      d += gamma_rate * (bdag * rho * bdag.adjoint() -
                         0.5 * (b_bdag * rho + rho * b_bdag));
    }
    return d;
  };

  // n operator for <n> traces
  Eigen::MatrixXcd num = Eigen::MatrixXcd::Zero(dim, dim);
  for (int a = 0; a < 8; ++a)
    num.block(a * n_fock, a * n_fock, n_fock, n_fock) =
        b_small.adjoint() * b_small;

  const Eigen::MatrixXcd u_ideal =
      ideal_unitary(alpha, drive.phase_tilde, opt.ideal_power);
  Eigen::VectorXcd ggg = Eigen::VectorXcd::Zero(8);
  ggg[0] = 1.0;
  const Eigen::VectorXcd psi_ideal = u_ideal * ggg;

  GateResult result;
  result.alpha = alpha;
  // squared-convention overlap of the combined state with the phase-adjusted
  // ideal qubit state in the motional ground state
  auto full_overlap = [&](const Eigen::MatrixXcd& r,
                          const std::array<double, 3>& ph) {
    Eigen::VectorXcd psi_full = Eigen::VectorXcd::Zero(dim);
    for (int a = 0; a < 8; ++a) {
      const double p = (a & 4 ? ph[0] : 0.0) + (a & 2 ? ph[1] : 0.0) +
                       (a & 1 ? ph[2] : 0.0);
      psi_full[a * n_fock] = psi_ideal[a] * std::polar(1.0, p);
    }
    return (psi_full.adjoint() * r * psi_full)(0, 0).real();
  };
  Eigen::MatrixXcd rho = initial.rho;
  const int sample_stride = steps / opt.n_samples;
  for (int s = 0; s <= steps; ++s) {
    const double t = s * dt;
    if (s % sample_stride == 0) {
      result.times.push_back(t);
      const Eigen::MatrixXcd rho_q = trace_out_phonon(rho, n_fock);
      const Eigen::MatrixXcd rho_b = trace_out_qubits(rho, n_fock);
      result.fidelity_trace.push_back(fidelity_pure(psi_ideal, rho_q));
      result.fidelity_full_trace.push_back(
          full_overlap(rho, fidelity_up_to_local_phases(rho_q, psi_ideal).phases));
      result.purity_trace.push_back(purity(rho_b));
      result.mean_n_trace.push_back((num * rho).trace().real());
      if (opt.validate_truncation) {
        QubitPhononState chk;
        chk.rho = rho;
        chk.n_fock = n_fock;
        chk.time = t;
        chk.validate();
      }
    }
    if (s == steps) break;
    const Eigen::MatrixXcd k1 = rhs(t, rho);
    const Eigen::MatrixXcd k2 = rhs(t + 0.5 * dt, rho + 0.5 * dt * k1);
    const Eigen::MatrixXcd k3 = rhs(t + 0.5 * dt, rho + 0.5 * dt * k2);
    const Eigen::MatrixXcd k4 = rhs(t + dt, rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = 0.5 * (rho + rho.adjoint().eval());  // keep Hermitian against roundoff
  }
  result.final_rho = rho;
  const Eigen::MatrixXcd rho_q = trace_out_phonon(rho, n_fock);
  PhaseFitResult fit = fidelity_up_to_local_phases(rho_q, psi_ideal);
  result.final_fidelity = fit.fidelity;
  result.fitted_phases = fit.phases;
  result.final_fidelity_full = full_overlap(rho, fit.phases);
  return result;
}

// Analytic Sorensen-Molmer closure: dropping the fast carrier term, the LD
// Hamiltonian integrates exactly to a spin-dependent displacement plus the
// geometric phase exp{i Theta(t) (sum_q w_q sigma~_y,q)^2}. Theta scales as
// rabi^2, so one quadrature fixes the Rabi frequency from theta t* = pi/8|alpha|.
struct CalibrationResult {
  double rabi = 0.0;
  double theta_total = 0.0;        // accumulated S^2 phase at t* for rabi = 1
  double residual_displacement = 0.0;  // |beta(t*)|, phonon closure check
};

inline CalibrationResult calibrate_rabi(const DriveParameters& drive, double alpha) {
  // per unit rabi: A_q(t) = f(t) cos(delta t) J0_q eta |lambda_q|; the ion-1
  // weight w1 = J0_1 eta lambda_1 normalizes S.
  const double t_star = drive.gate_time();
  const int n_steps = 200000;
  const double h = t_star / n_steps;
  const double w = drive.bus_frequency;
  std::complex<double> beta = 0.0;   // int A e^{i w t} dt (ion-1 weight)
  double theta = 0.0;                // Im int dt A(t) e^{iwt} int dt' A(t') e^{-iwt'}
  std::complex<double> inner = 0.0;
  const double w1 = drive.j0_factor[0] * drive.eta * std::abs(drive.lambda_dc[0]);
  auto amp = [&](double t) {
    return drive.window(t) * std::cos(drive.delta() * t) * w1;
  };
  double prev_a = amp(0.0);
  std::complex<double> prev_e = 1.0;
  for (int s = 1; s <= n_steps; ++s) {
    const double t = s * h;
    const double a = amp(t);
    const std::complex<double> e = std::polar(1.0, w * t);
    // trapezoid on both accumulators
    inner += 0.5 * h * (prev_a * std::conj(prev_e) + a * std::conj(e));
    theta += (0.5 * h * (prev_a * prev_e + a * e) * inner).imag();
    beta += 0.5 * h * (prev_a * prev_e + a * e);
    prev_a = a;
    prev_e = e;
  }
  // H = -A(t)(b e^{-iwt} + h.c.) S' with S' = S w1 / w1: theta accumulates on
  // S^2 with the stated sign for epsilon > 0.
  CalibrationResult out;
  out.theta_total = theta;
  out.residual_displacement = std::abs(beta);
  const double target = constants::pi / (8.0 * std::abs(alpha));
  if (std::abs(theta) < 1e-16)
    throw OptimizationError("calibrate_rabi: no accumulated phase", 0.0);
  out.rabi = std::sqrt(target / std::abs(theta));
  return out;
}

}  // namespace solgate
