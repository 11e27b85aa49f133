#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "solgate/errors.hpp"
#include "solgate/units.hpp"

namespace solgate {

inline double purity(const Eigen::MatrixXcd& rho) {
  return (rho * rho).trace().real();
}

// Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)).
inline double fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw ValidationError("fidelity: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXcd sqrt_rho =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> inner(sqrt_rho * sigma * sqrt_rho);
  return inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

inline double fidelity_pure(const Eigen::VectorXcd& psi, const Eigen::MatrixXcd& rho) {
  return std::sqrt(std::max(0.0, (psi.adjoint() * rho * psi)(0, 0).real()));
}

// Three-tangle of a pure 3-qubit state (Coffman-Kundu-Wootters residual
// tangle, 4 |hyperdeterminant|). Basis order |q1 q2 q3>, qubit 1 most
// significant.
inline double three_tangle(const Eigen::VectorXcd& psi) {
  if (psi.size() != 8) throw ValidationError("three_tangle: need a 3-qubit pure state");
  using C = std::complex<double>;
  auto a = [&](int i, int j, int k) { return psi[4 * i + 2 * j + k]; };
  const C d1 = a(0,0,0)*a(0,0,0)*a(1,1,1)*a(1,1,1) + a(0,0,1)*a(0,0,1)*a(1,1,0)*a(1,1,0) +
               a(0,1,0)*a(0,1,0)*a(1,0,1)*a(1,0,1) + a(1,0,0)*a(1,0,0)*a(0,1,1)*a(0,1,1);
  const C d2 = a(0,0,0)*a(1,1,1)*a(0,1,1)*a(1,0,0) + a(0,0,0)*a(1,1,1)*a(1,0,1)*a(0,1,0) +
               a(0,0,0)*a(1,1,1)*a(1,1,0)*a(0,0,1) + a(0,1,1)*a(1,0,0)*a(1,0,1)*a(0,1,0) +
               a(0,1,1)*a(1,0,0)*a(1,1,0)*a(0,0,1) + a(1,0,1)*a(0,1,0)*a(1,1,0)*a(0,0,1);
  const C d3 = a(0,0,0)*a(1,1,0)*a(1,0,1)*a(0,1,1) + a(1,1,1)*a(0,0,1)*a(0,1,0)*a(1,0,0);
  return 4.0 * std::abs(d1 - 2.0 * d2 + 4.0 * d3);
}

// Wootters concurrence of a 2-qubit density matrix.
inline double concurrence(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != 4 || rho.cols() != 4)
    throw ValidationError("concurrence: need a 2-qubit density matrix");
  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  yy(0, 3) = -1; yy(1, 2) = 1; yy(2, 1) = 1; yy(3, 0) = -1;
  const Eigen::Matrix4cd m = rho * yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(m);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i)
    lam[i] = std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
  std::sort(lam.begin(), lam.end());
  return std::max(0.0, lam[3] - lam[2] - lam[1] - lam[0]);
}

// Partial trace helpers for states on (3 qubits) x (Fock n_f).
inline Eigen::MatrixXcd trace_out_phonon(const Eigen::MatrixXcd& rho, int n_fock) {
  const int nq = static_cast<int>(rho.rows()) / n_fock;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nq, nq);
  for (int a = 0; a < nq; ++a)
    for (int b = 0; b < nq; ++b)
      for (int n = 0; n < n_fock; ++n) out(a, b) += rho(a * n_fock + n, b * n_fock + n);
  return out;
}

inline Eigen::MatrixXcd trace_out_qubits(const Eigen::MatrixXcd& rho, int n_fock) {
  const int nq = static_cast<int>(rho.rows()) / n_fock;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n_fock, n_fock);
  for (int n = 0; n < n_fock; ++n)
    for (int m = 0; m < n_fock; ++m)
      for (int a = 0; a < nq; ++a) out(n, m) += rho(a * n_fock + n, a * n_fock + m);
  return out;
}

// Reduce a 3-qubit density matrix to the (q_a, q_b) pair.
inline Eigen::MatrixXcd reduce_to_pair(const Eigen::MatrixXcd& rho3, int qa, int qb) {
  if (rho3.rows() != 8) throw ValidationError("reduce_to_pair: need 3 qubits");
  const int qc = 3 - qa - qb;
  auto bit = [](int idx, int q) { return (idx >> (2 - q)) & 1; };
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(4, 4);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      if (bit(i, qc) != bit(j, qc)) continue;
      out(2 * bit(i, qa) + bit(i, qb), 2 * bit(j, qa) + bit(j, qb)) += rho3(i, j);
    }
  return out;
}

// Best fidelity between rho (3 qubits) and a pure target, maximized over
// per-qubit z-phase rotations ("up to local qubit phases"). Coarse grid plus
// local refinement; returns the optimum and the phases found.
struct PhaseFitResult {
  double fidelity = 0.0;
  std::array<double, 3> phases{};
};

inline PhaseFitResult fidelity_up_to_local_phases(const Eigen::MatrixXcd& rho,
                                                  const Eigen::VectorXcd& target) {
  if (rho.rows() != 8 || target.size() != 8)
    throw ValidationError("fidelity_up_to_local_phases: need 3-qubit inputs");
  auto eval = [&](double p0, double p1, double p2) {
    Eigen::VectorXcd t(8);
    for (int i = 0; i < 8; ++i) {
      const double ph = (i & 4 ? p0 : 0.0) + (i & 2 ? p1 : 0.0) + (i & 1 ? p2 : 0.0);
      t[i] = target[i] * std::polar(1.0, ph);
    }
    return (t.adjoint() * rho * t)(0, 0).real();
  };
  PhaseFitResult best;
  const int g = 24;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      for (int k = 0; k < g; ++k) {
        const double p0 = 2.0 * constants::pi * i / g;
        const double p1 = 2.0 * constants::pi * j / g;
        const double p2 = 2.0 * constants::pi * k / g;
        const double f = eval(p0, p1, p2);
        if (f > best.fidelity) { best.fidelity = f; best.phases = {p0, p1, p2}; }
      }
  // coordinate refinement
  double step = 2.0 * constants::pi / g;
  for (int pass = 0; pass < 40; ++pass) {
    bool improved = false;
    for (int q = 0; q < 3; ++q)
      for (double dir : {-1.0, 1.0}) {
        auto trial = best.phases;
        trial[q] += dir * step;
        const double f = eval(trial[0], trial[1], trial[2]);
        if (f > best.fidelity) { best.fidelity = f; best.phases = trial; improved = true; }
      }
    if (!improved) step *= 0.5;
    if (step < 1e-10) break;
  }
  best.fidelity = std::sqrt(std::max(0.0, best.fidelity));
  return best;
}

}  // namespace solgate
