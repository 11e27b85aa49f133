#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "solgate/crystal.hpp"
#include "solgate/trap.hpp"

namespace solgate {

// pi-periodic driven solution of the crystal (the dynamical counterpart of a
// pseudopotential minimum). Stored as Fourier coefficients of the ion
// coordinates, R_i(t) = sum_n B_{2n,i} e^{2int}; reality fixes
// B_{-2n} = conj(B_{2n}), so only n >= 0 is kept.
struct PeriodicOrbit {
  TrapParameters trap;
  IonSet ions;
  int n_max = 5;
  std::vector<Eigen::VectorXcd> fourier;  // index n = 0..n_max, each 3N complex
  double residual = 0.0;                  // max-norm EOM residual over a period

  Eigen::VectorXd position(double t) const {
    const int dim = static_cast<int>(fourier[0].size());
    Eigen::VectorXcd r = fourier[0];
    for (int n = 1; n <= n_max; ++n) {
      const std::complex<double> ph(std::cos(2.0 * n * t), std::sin(2.0 * n * t));
      r += fourier[n] * ph + fourier[n].conjugate() * std::conj(ph);
    }
    Eigen::VectorXd out(dim);
    for (int i = 0; i < dim; ++i) out[i] = r[i].real();
    return out;
  }

  Eigen::VectorXd velocity(double t) const {
    const int dim = static_cast<int>(fourier[0].size());
    Eigen::VectorXcd r = Eigen::VectorXcd::Zero(dim);
    for (int n = 1; n <= n_max; ++n) {
      const std::complex<double> iw(0.0, 2.0 * n);
      const std::complex<double> ph(std::cos(2.0 * n * t), std::sin(2.0 * n * t));
      r += iw * fourier[n] * ph - iw * fourier[n].conjugate() * std::conj(ph);
    }
    Eigen::VectorXd out(dim);
    for (int i = 0; i < dim; ++i) out[i] = r[i].real();
    return out;
  }
};

namespace detail {

inline Eigen::VectorXd rf_acceleration(const TrapParameters& trap, const IonSet& ions,
                                       const Eigen::VectorXd& x, double t) {
  PotentialResult r = potential_and_force(x, ions, trap, t, true);
  Eigen::VectorXd a = r.force;
  for (int i = 0; i < ions.size(); ++i) a.segment<3>(3 * i) /= ions.mass[i];
  return a;
}

struct RfFlowResult {
  Eigen::VectorXd x1, v1;
  Eigen::MatrixXd monodromy;              // 6N x 6N, empty unless requested
  std::vector<double> sample_times;
  std::vector<Eigen::VectorXd> sample_x;
  std::vector<Eigen::MatrixXd> sample_phi;  // fundamental matrix at samples
};

// RK4 flow of the full equations of motion over [t0, t0 + span], optionally
// carrying the variational (fundamental) matrix and storing n_samples
// snapshots (sample k at t0 + span * k / n_samples).
inline RfFlowResult rf_flow(const TrapParameters& trap, const IonSet& ions,
                            Eigen::VectorXd x, Eigen::VectorXd v, double t0,
                            double span, int steps, bool variational,
                            int n_samples = 0) {
  const int dim = static_cast<int>(x.size());
  const int n = ions.size();
  RfFlowResult out;
  Eigen::MatrixXd phi;
  if (variational) phi = Eigen::MatrixXd::Identity(2 * dim, 2 * dim);

  Eigen::VectorXd inv_mass(dim);
  for (int i = 0; i < n; ++i) inv_mass.segment<3>(3 * i).setConstant(1.0 / ions.mass[i]);

  const double h = span / steps;
  const int stride = n_samples > 0 ? steps / n_samples : 0;
  if (n_samples > 0 && stride * n_samples != steps)
    throw ValidationError("rf_flow: steps must be a multiple of n_samples");

  auto var_rhs = [&](const Eigen::MatrixXd& H, const Eigen::MatrixXd& p) {
    Eigen::MatrixXd d(2 * dim, 2 * dim);
    d.topRows(dim) = p.bottomRows(dim);
    d.bottomRows(dim).noalias() = -H * p.topRows(dim);
    d.bottomRows(dim).array().colwise() *= inv_mass.array();
    return d;
  };

  double t = t0;
  for (int s = 0; s < steps; ++s) {
    if (stride > 0 && s % stride == 0) {
      out.sample_times.push_back(t);
      out.sample_x.push_back(x);
      if (variational) out.sample_phi.push_back(phi);
    }
    // State RK4
    const Eigen::VectorXd a1 = rf_acceleration(trap, ions, x, t);
    const Eigen::VectorXd x2 = x + 0.5 * h * v, v2 = v + 0.5 * h * a1;
    const Eigen::VectorXd a2 = rf_acceleration(trap, ions, x2, t + 0.5 * h);
    const Eigen::VectorXd x3 = x + 0.5 * h * v2, v3 = v + 0.5 * h * a2;
    const Eigen::VectorXd a3 = rf_acceleration(trap, ions, x3, t + 0.5 * h);
    const Eigen::VectorXd x4 = x + h * v3, v4 = v + h * a3;
    const Eigen::VectorXd a4 = rf_acceleration(trap, ions, x4, t + h);

    if (variational) {
      const Eigen::MatrixXd H1 = potential_hessian(x, ions, trap, t);
      const Eigen::MatrixXd H2 = potential_hessian(x2, ions, trap, t + 0.5 * h);
      const Eigen::MatrixXd H3 = potential_hessian(x3, ions, trap, t + 0.5 * h);
      const Eigen::MatrixXd H4 = potential_hessian(x4, ions, trap, t + h);
      const Eigen::MatrixXd k1 = var_rhs(H1, phi);
      const Eigen::MatrixXd k2 = var_rhs(H2, phi + 0.5 * h * k1);
      const Eigen::MatrixXd k3 = var_rhs(H3, phi + 0.5 * h * k2);
      const Eigen::MatrixXd k4 = var_rhs(H4, phi + h * k3);
      phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    x += (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
    v += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    t += h;
  }
  out.x1 = std::move(x);
  out.v1 = std::move(v);
  if (variational) out.monodromy = std::move(phi);
  return out;
}

}  // namespace detail

struct OrbitOptions {
  int n_max = 5;
  int newton_max_iterations = 30;
  double newton_tolerance = 1e-11;  // max-norm of the period-map defect
  int integration_steps = 512;
  int fourier_samples = 64;
};

// Newton (single shooting) solve for the pi-periodic driven orbit seeded at
// the pseudopotential equilibrium. For drive-free geometries the orbit is the
// equilibrium itself.
inline PeriodicOrbit find_periodic_orbit(const TrapParameters& trap,
                                         const CrystalConfiguration& equilibrium,
                                         const OrbitOptions& opt = {}) {
  if (equilibrium.gradient_norm >= 1e-8)
    throw ValidationError("find_periodic_orbit: equilibrium does not satisfy its invariant");
  if (opt.n_max < 1) throw ValidationError("find_periodic_orbit: n_max must be >= 1");
  const IonSet& ions = equilibrium.ions;
  const int dim = static_cast<int>(equilibrium.positions.size());

  PeriodicOrbit orbit;
  orbit.trap = trap;
  orbit.ions = ions;
  orbit.n_max = opt.n_max;

  const bool driven = trap.geometry == TrapGeometry::LinearPaul &&
                      trap.mathieu_q.cwiseAbs().maxCoeff() > 0.0;
  if (!driven) {
    orbit.fourier.assign(opt.n_max + 1, Eigen::VectorXcd::Zero(dim));
    for (int i = 0; i < dim; ++i) orbit.fourier[0][i] = equilibrium.positions[i];
    orbit.residual = 0.0;
    return orbit;
  }

  Eigen::VectorXd x = equilibrium.positions;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  const double period = constants::pi;

  std::vector<double> residual_history;
  bool converged = false;
  for (int it = 0; it < opt.newton_max_iterations; ++it) {
    detail::RfFlowResult flow = detail::rf_flow(trap, ions, x, v, 0.0, period,
                                                opt.integration_steps, true);
    Eigen::VectorXd defect(2 * dim);
    defect.head(dim) = flow.x1 - x;
    defect.tail(dim) = flow.v1 - v;
    const double defect_norm = defect.lpNorm<Eigen::Infinity>();
    residual_history.push_back(defect_norm);
    if (defect_norm < opt.newton_tolerance) { converged = true; break; }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(
        flow.monodromy - Eigen::MatrixXd::Identity(2 * dim, 2 * dim));
    const Eigen::VectorXd delta = lu.solve(defect);
    x -= delta.head(dim);
    v -= delta.tail(dim);
  }
  if (!converged) {
    std::string hist;
    for (double r : residual_history) hist += std::to_string(r) + " ";
    throw OptimizationError("find_periodic_orbit: Newton did not converge; residuals: " + hist,
                            residual_history.back());
  }

  // Fourier extraction from one final pass over the period.
  const int K = opt.fourier_samples;
  const int steps = opt.integration_steps - opt.integration_steps % K;
  detail::RfFlowResult flow =
      detail::rf_flow(trap, ions, x, v, 0.0, period, steps, false, K);
  orbit.fourier.assign(opt.n_max + 1, Eigen::VectorXcd::Zero(dim));
  for (int n = 0; n <= opt.n_max; ++n) {
    for (int k = 0; k < K; ++k) {
      const double phase = -2.0 * n * flow.sample_times[k];
      const std::complex<double> w(std::cos(phase), std::sin(phase));
      for (int i = 0; i < dim; ++i) orbit.fourier[n][i] += w * flow.sample_x[k][i];
    }
    orbit.fourier[n] /= static_cast<double>(K);
  }

  // Residual of the equations of motion for the truncated Fourier series.
  double res = 0.0;
  for (int k = 0; k < 4 * K; ++k) {
    const double t = period * k / (4.0 * K);
    const Eigen::VectorXd pos = orbit.position(t);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
    for (int n = 1; n <= opt.n_max; ++n) {
      const std::complex<double> ph(std::cos(2.0 * n * t), std::sin(2.0 * n * t));
      acc += -4.0 * n * n * (orbit.fourier[n] * ph + orbit.fourier[n].conjugate() * std::conj(ph));
    }
    const Eigen::VectorXd accel = detail::rf_acceleration(trap, ions, pos, t);
    for (int i = 0; i < dim; ++i)
      res = std::max(res, std::abs(acc[i].real() - accel[i]));
  }
  orbit.residual = res;
  return orbit;
}

}  // namespace solgate
