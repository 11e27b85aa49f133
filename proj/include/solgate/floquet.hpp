#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "solgate/crystal.hpp"
#include "solgate/orbit.hpp"

namespace solgate {

// One normal mode of the driven crystal. The complex Floquet solution for the
// displacement is u_i(t) = e^{-i w t} p_i(t) with p pi-periodic, stored as
// harmonics p(t) = sum_n U_n e^{2int}. The normalization is canonical,
// i * sum_i m_i (du_i/dt u_i* - c.c.) = 1, so the quantized displacement is
// dR = sqrt(hbar_dimensionless) * (u b + u* b^dag) summed over modes.
struct FloquetMode {
  double frequency = 0.0;   // quasi-frequency, units of Omega_rf / 2
  int n_max = 0;
  std::vector<Eigen::VectorXcd> harmonics;  // index n + n_max, n = -n_max..n_max

  const Eigen::VectorXcd& harmonic(int n) const { return harmonics[n + n_max]; }
  Eigen::VectorXcd& harmonic(int n) { return harmonics[n + n_max]; }
  const Eigen::VectorXcd& dc() const { return harmonics[n_max]; }
};

struct ModeSpectrum {
  std::vector<FloquetMode> modes;  // sorted by descending frequency (mode 1 = bus)
  Eigen::VectorXd frequencies() const {
    Eigen::VectorXd f(modes.size());
    for (size_t j = 0; j < modes.size(); ++j) f[j] = modes[j].frequency;
    return f;
  }
};

namespace detail {

// Canonical (symplectic) norm i sum m (u' u* - u'* u) evaluated from the
// phase-space vector z = (u; u') at one time.
inline double canonical_norm(const Eigen::VectorXcd& z, const IonSet& ions) {
  const int dim = 3 * ions.size();
  std::complex<double> s = 0.0;
  for (int i = 0; i < dim; ++i)
    s += ions.mass[i / 3] * (z[dim + i] * std::conj(z[i]) -
                             std::conj(z[dim + i]) * z[i]);
  return (std::complex<double>(0.0, 1.0) * s).real();
}

// Fix the free overall phase: DC harmonic's largest position component made
// real and positive.
inline void fix_mode_phase(FloquetMode& mode) {
  int imax = 0;
  double best = -1.0;
  const Eigen::VectorXcd& d = mode.dc();
  for (int i = 0; i < d.size(); ++i)
    if (std::abs(d[i]) > best) { best = std::abs(d[i]); imax = i; }
  const std::complex<double> rot = std::polar(1.0, -std::arg(d[imax]));
  for (auto& h : mode.harmonics) h *= rot;
}

}  // namespace detail

// Static normal modes in the pseudopotential (time-averaged) description.
// Zero modes (free ring rotation) are kept with frequency 0; a genuinely
// negative curvature direction raises SaddlePointError.
inline ModeSpectrum pseudopotential_modes(const CrystalConfiguration& config) {
  const IonSet& ions = config.ions;
  const int dim = static_cast<int>(config.positions.size());
  const Eigen::MatrixXd w2 = pseudo_curvatures(config.trap, ions);
  Eigen::MatrixXd h = pseudo_hessian(config.positions, ions, config.trap, w2);

  Eigen::VectorXd inv_sqrt_m(dim);
  for (int i = 0; i < dim; ++i) inv_sqrt_m[i] = 1.0 / std::sqrt(ions.mass[i / 3]);
  Eigen::MatrixXd dyn = inv_sqrt_m.asDiagonal() * h * inv_sqrt_m.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (dyn + dyn.transpose()));

  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  ModeSpectrum spec;
  spec.modes.resize(dim);
  for (int j = 0; j < dim; ++j) {
    double w2j = es.eigenvalues()[dim - 1 - j];
    if (w2j < -1e-9 * scale)
      throw SaddlePointError("pseudopotential_modes: negative curvature eigenvalue " +
                             std::to_string(w2j));
    if (w2j < 0.0) w2j = 0.0;
    const double w = std::sqrt(w2j);
    FloquetMode& m = spec.modes[j];
    m.frequency = w;
    m.n_max = 0;
    m.harmonics.assign(1, Eigen::VectorXcd::Zero(dim));
    // mass-orthonormal displacement pattern e = M^{-1/2} v; canonical
    // amplitude u = e / sqrt(2 w) (left unscaled for zero modes).
    const double amp = w > 0.0 ? 1.0 / std::sqrt(2.0 * w) : 1.0;
    for (int i = 0; i < dim; ++i)
      m.harmonics[0][i] = amp * inv_sqrt_m[i] * es.eigenvectors()(i, dim - 1 - j);
    detail::fix_mode_phase(m);
  }
  return spec;
}

struct FloquetOptions {
  int integration_steps = 512;
  int fourier_samples = 64;
  int n_max = 5;
  double stability_tolerance = 1e-6;  // allowed ||multiplier| - 1|
};

// Full Floquet-Lyapunov mode analysis of the linearization about a periodic
// orbit. Quasi-frequency branches (the 2n ambiguity of e^{-i pi w}) are
// resolved by continuity with the pseudopotential spectrum.
inline ModeSpectrum floquet_modes(const PeriodicOrbit& orbit,
                                  const FloquetOptions& opt = {}) {
  const IonSet& ions = orbit.ions;
  const int dim = static_cast<int>(orbit.fourier[0].size());

  CrystalConfiguration avg;
  avg.trap = orbit.trap;
  avg.ions = ions;
  // static proxy for branch matching: DC component of the orbit
  avg.positions.resize(dim);
  for (int i = 0; i < dim; ++i) avg.positions[i] = orbit.fourier[0][i].real();
  const ModeSpectrum pseudo = pseudopotential_modes(avg);
  const Eigen::VectorXd pseudo_freq = pseudo.frequencies();

  const bool driven = orbit.trap.geometry == TrapGeometry::LinearPaul &&
                      orbit.trap.mathieu_q.cwiseAbs().maxCoeff() > 0.0;
  if (!driven) return pseudo;

  const int K = opt.fourier_samples;
  const int steps = opt.integration_steps - opt.integration_steps % K;
  detail::RfFlowResult flow =
      detail::rf_flow(orbit.trap, ions, orbit.position(0.0), orbit.velocity(0.0),
                      0.0, constants::pi, steps, true, K);

  Eigen::EigenSolver<Eigen::MatrixXd> es(flow.monodromy);
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();

  for (int j = 0; j < 2 * dim; ++j)
    if (std::abs(std::abs(lambda[j]) - 1.0) > opt.stability_tolerance)
      throw InstabilityError(
          "floquet_modes: multiplier off the unit circle, |lambda| = " +
              std::to_string(std::abs(lambda[j])),
          std::abs(lambda[j]));

  ModeSpectrum spec;
  for (int j = 0; j < 2 * dim; ++j) {
    // Each conjugate pair contributes one physical mode: pick the member with
    // positive canonical norm.
    if (lambda[j].imag() < 0.0) continue;
    Eigen::VectorXcd z = vecs.col(j);
    double norm = detail::canonical_norm(z, ions);
    double w0 = -std::arg(lambda[j]) / constants::pi;  // in (-1, 0]
    if (norm < 0.0) {
      z = z.conjugate();
      norm = -norm;
      w0 = -w0;
    }
    if (norm < 1e-12)
      throw ClassificationError("floquet_modes: degenerate (zero-norm) multiplier pair");
    z /= std::sqrt(norm);

    // Branch: w = w0 + 2k, choose the positive candidate nearest a
    // pseudopotential frequency.
    double w = w0;
    {
      double best = 1e300;
      for (int k = -2; k <= 3; ++k) {
        const double cand = w0 + 2.0 * k;
        if (cand <= 0.0) continue;
        double d = 1e300;
        for (int p = 0; p < pseudo_freq.size(); ++p)
          d = std::min(d, std::abs(cand - pseudo_freq[p]));
        if (d < best) { best = d; w = cand; }
      }
    }

    // Periodic part p(t) = e^{i w t} Phi(t) z, sampled and Fourier-analyzed.
    FloquetMode mode;
    mode.frequency = w;
    mode.n_max = opt.n_max;
    mode.harmonics.assign(2 * opt.n_max + 1, Eigen::VectorXcd::Zero(dim));
    for (int k = 0; k < K; ++k) {
      const double t = flow.sample_times[k];
      const Eigen::VectorXcd zc = flow.sample_phi[k] * z;
      const Eigen::VectorXcd p =
          std::polar(1.0, w * t) * zc.head(dim);
      for (int n = -opt.n_max; n <= opt.n_max; ++n) {
        const std::complex<double> wgt = std::polar(1.0 / K, -2.0 * n * t);
        mode.harmonic(n) += wgt * p;
      }
    }
    detail::fix_mode_phase(mode);
    spec.modes.push_back(std::move(mode));
  }

  if (static_cast<int>(spec.modes.size()) != dim)
    throw ClassificationError("floquet_modes: mode count mismatch");
  std::sort(spec.modes.begin(), spec.modes.end(),
            [](const FloquetMode& a, const FloquetMode& b) {
              return a.frequency > b.frequency;
            });
  return spec;
}

// Fraction of a mode's DC displacement norm carried by the listed ions.
inline double mode_localization(const FloquetMode& mode,
                                const std::vector<int>& ion_indices) {
  const Eigen::VectorXcd& d = mode.dc();
  double total = d.squaredNorm();
  double core = 0.0;
  for (int i : ion_indices) core += d.segment<3>(3 * i).squaredNorm();
  return total > 0.0 ? core / total : 0.0;
}

struct LocalizedModes {
  int bus_index = -1;         // highest mode, gap-separated above the band
  double gap_ratio = 0.0;     // w_bus / w_next
  double bus_localization = 0.0;
  int low_in_plane_index = -1;   // localized low-frequency in-plane mode
  int low_out_of_plane_index = -1;
  std::vector<int> core_ions;
};

struct LocalizationOptions {
  double gap_threshold = 1.05;
  double bus_core_fraction = 0.6;
  double low_core_fraction = 0.5;
  int core_halo = 1;  // extra ions on each side of the kink core for the low modes
};

// Identify the kink's localized modes: the gap-separated bus mode at the top
// of the spectrum plus the below-band localized in-plane / out-of-plane modes.
inline LocalizedModes identify_localized_modes(const ModeSpectrum& spectrum,
                                               const CrystalConfiguration& config,
                                               const KinkDescriptor& kink,
                                               const LocalizationOptions& opt = {}) {
  if (kink.kind != KinkKind::Localized)
    throw NotLocalizedError("identify_localized_modes: configuration has no localized kink");
  const int n_modes = static_cast<int>(spectrum.modes.size());
  if (n_modes < 2) throw ValidationError("identify_localized_modes: spectrum too small");

  LocalizedModes out;
  out.core_ions.assign(kink.core_indices.begin(), kink.core_indices.end());

  out.bus_index = 0;
  const double w1 = spectrum.modes[0].frequency;
  const double w2 = spectrum.modes[1].frequency;
  out.gap_ratio = w1 / w2;
  out.bus_localization = mode_localization(spectrum.modes[out.bus_index], out.core_ions);
  if (out.gap_ratio < opt.gap_threshold)
    throw NotLocalizedError("identify_localized_modes: bus gap ratio " +
                            std::to_string(out.gap_ratio) + " below threshold");
  if (out.bus_localization < opt.bus_core_fraction)
    throw NotLocalizedError("identify_localized_modes: bus mode core fraction " +
                            std::to_string(out.bus_localization) + " too small");

  // Low localized modes: scan upward from the bottom of the spectrum with a
  // slightly widened core window; classify by out-of-plane (z) weight.
  std::vector<int> window = out.core_ions;
  const int n_ions = config.ions.size();
  for (int h = 1; h <= opt.core_halo; ++h) {
    const int lo = *std::min_element(out.core_ions.begin(), out.core_ions.end()) - h;
    const int hi = *std::max_element(out.core_ions.begin(), out.core_ions.end()) + h;
    if (lo >= 0) window.push_back(lo);
    if (hi < n_ions) window.push_back(hi);
  }
  for (int j = n_modes - 1; j >= 1; --j) {
    const FloquetMode& m = spectrum.modes[j];
    if (m.frequency <= 0.0) continue;
    if (mode_localization(m, window) < opt.low_core_fraction) continue;
    const Eigen::VectorXcd& d = m.dc();
    double z_frac = 0.0, tot = d.squaredNorm();
    for (int i = 0; i < n_ions; ++i) z_frac += std::norm(d[3 * i + 2]);
    z_frac /= tot;
    if (z_frac > 0.5) {
      if (out.low_out_of_plane_index < 0) out.low_out_of_plane_index = j;
    } else {
      if (out.low_in_plane_index < 0) out.low_in_plane_index = j;
    }
    if (out.low_in_plane_index >= 0 && out.low_out_of_plane_index >= 0) break;
  }
  return out;
}

}  // namespace solgate
