#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "solgate/crystal.hpp"
#include "solgate/dynamics.hpp"
#include "solgate/floquet.hpp"

namespace solgate {

// Cubic couplings C_{jkl} = third directional derivative of the (secular)
// potential along mass-orthonormal mode vectors, computed as a central
// difference of the analytic Hessian along the third mode. Stored as one
// mode-basis matrix per third index.
struct CubicCouplingSet {
  std::vector<int> third_index;          // mode indices l
  std::vector<Eigen::MatrixXd> coeff;    // per l: C_{jk,l} over all (j, k)

  double get(int j, int k, int l) const {
    for (size_t m = 0; m < third_index.size(); ++m) {
      if (third_index[m] == l) return coeff[m](j, k);
      if (third_index[m] == j) return coeff[m](k, l);
      if (third_index[m] == k) return coeff[m](j, l);
    }
    throw ValidationError("CubicCouplingSet: triple not covered by the filter");
  }
};

inline CubicCouplingSet cubic_couplings(const CrystalConfiguration& config,
                                        const ModeSpectrum& spectrum,
                                        const std::vector<int>& filter = {},
                                        double step = 1e-4) {
  const int dim = static_cast<int>(config.positions.size());
  const int n_modes = static_cast<int>(spectrum.modes.size());
  const Eigen::MatrixXd w2 = pseudo_curvatures(config.trap, config.ions);

  // mass-orthonormal mode matrix E (columns)
  Eigen::MatrixXd e(dim, n_modes);
  for (int j = 0; j < n_modes; ++j) {
    const FloquetMode& m = spectrum.modes[j];
    const double s = m.frequency > 0.0 ? std::sqrt(2.0 * m.frequency) : 1.0;
    for (int i = 0; i < dim; ++i) e(i, j) = s * m.dc()[i].real();
  }

  std::vector<int> third = filter;
  if (third.empty()) {
    third.resize(n_modes);
    for (int j = 0; j < n_modes; ++j) third[j] = j;
  }

  CubicCouplingSet out;
  out.third_index = third;
  for (int l : third) {
    const Eigen::VectorXd dir = e.col(l);
    const Eigen::MatrixXd hp = pseudo_hessian(config.positions + step * dir,
                                              config.ions, config.trap, w2);
    const Eigen::MatrixXd hm = pseudo_hessian(config.positions - step * dir,
                                              config.ions, config.trap, w2);
    const Eigen::MatrixXd d = (hp - hm) / (2.0 * step);
    out.coeff.push_back(e.transpose() * d * e);
  }
  return out;
}

struct ResonantTriple {
  int j = 0, k = 0, l = 0;
  double detuning = 0.0;   // w_j - w_k - w_l
  double coupling = 0.0;
  double score = 0.0;      // coupling^2 / |detuning|
};

// Near-resonant decay channels w_bus ~ w_k + w_l, ranked by
// |coupling|^2 / detuning.
inline std::vector<ResonantTriple> resonance_scan(const ModeSpectrum& spectrum,
                                                  const CubicCouplingSet& couplings,
                                                  double tolerance,
                                                  int bus_index = 0) {
  const int n = static_cast<int>(spectrum.modes.size());
  const double w_bus = spectrum.modes[bus_index].frequency;
  std::vector<ResonantTriple> out;
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      const double det = w_bus - spectrum.modes[k].frequency -
                         spectrum.modes[l].frequency;
      if (std::abs(det) >= tolerance) continue;
      ResonantTriple t;
      t.j = bus_index;
      t.k = k;
      t.l = l;
      t.detuning = det;
      t.coupling = couplings.get(bus_index, k, l);
      t.score = t.coupling * t.coupling / std::max(std::abs(det), 1e-12);
      out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ResonantTriple& a, const ResonantTriple& b) {
              return a.score > b.score;
            });
  return out;
}

struct HeatingEstimate {
  double rate = 0.0;            // d<n_bus>/d(mode period)
  double confidence = 0.0;      // 1-sigma interval half-width
  int ensemble_size = 0;
  double bath_temperature = 0.0;
  double fit_r_squared = 0.0;
  bool fit_ok = true;
  std::vector<double> mean_occupation;  // per sampled period
};

struct HeatingOptions {
  int ensemble_size = 200;
  double duration_mode_periods = 100.0;
  double dt = 0.1;
  double hbar = 0.0;                    // unit-system hbar (required)
  std::vector<int> cooled_modes;        // bus + localized lows, set to zero point
  unsigned long long seed = 1;
};

// Classical ensemble surrogate for the bus-mode heating rate: bath modes
// thermally sampled, bus and localized modes at zero-point-equivalent
// amplitude, full nonlinear secular dynamics, occupation read off by mode
// projection. This is an order-of-magnitude stand-in for the quantum
// bath calculation, not a reproduction of it.
inline HeatingEstimate estimate_heating_rate(const CrystalConfiguration& config,
                                             const ModeSpectrum& spectrum,
                                             double bath_temperature_kelvin,
                                             double boltzmann_per_kelvin,
                                             const HeatingOptions& opt) {
  if (opt.hbar <= 0.0)
    throw ValidationError("estimate_heating_rate: hbar must be provided");
  const int dim = static_cast<int>(config.positions.size());
  const IonSet& ions = config.ions;
  const double w_bus = spectrum.modes[0].frequency;
  const double period = 2.0 * constants::pi / w_bus;
  const int n_periods = static_cast<int>(opt.duration_mode_periods);
  const int steps_per_period = std::max(1, static_cast<int>(period / opt.dt));
  const double dt = period / steps_per_period;
  const Eigen::MatrixXd w2 = pseudo_curvatures(config.trap, ions);

  // mass-orthonormal bus pattern for projection
  Eigen::VectorXd e_bus(dim);
  {
    const double s = std::sqrt(2.0 * w_bus);
    for (int i = 0; i < dim; ++i) e_bus[i] = s * spectrum.modes[0].dc()[i].real();
  }

  auto accel = [&](const Eigen::VectorXd& pos) {
    PotentialResult r = pseudo_potential_and_force(pos, ions, config.trap, w2, true);
    Eigen::VectorXd a = r.force;
    for (int i = 0; i < ions.size(); ++i) a.segment<3>(3 * i) /= ions.mass[i];
    return a;
  };

  std::vector<std::vector<double>> occupation(opt.ensemble_size);
  for (int m = 0; m < opt.ensemble_size; ++m) {
    MDState state = doppler_thermal_sample(config, spectrum,
                                           bath_temperature_kelvin,
                                           boltzmann_per_kelvin,
                                           opt.seed + 1000003ULL * m,
                                           opt.cooled_modes);
    // zero-point-equivalent amplitude in the cooled modes, random phase
    std::mt19937_64 rng(opt.seed * 786433ULL + m);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * constants::pi);
    for (int j : opt.cooled_modes)
      state = excite_mode_coherent(state, ions, spectrum.modes[j], 0.5,
                                   uphase(rng), opt.hbar);

    occupation[m].reserve(n_periods + 1);
    Eigen::VectorXd x = state.positions, v = state.velocities;
    Eigen::VectorXd a = accel(x);
    for (int p = 0; p <= n_periods; ++p) {
      double q = 0.0, pw = 0.0;
      const Eigen::VectorXd dx = x - config.positions;
      for (int i = 0; i < dim; ++i) {
        q += ions.mass[i / 3] * e_bus[i] * dx[i];
        pw += ions.mass[i / 3] * e_bus[i] * v[i];
      }
      const double energy = 0.5 * (pw * pw + w_bus * w_bus * q * q);
      occupation[m].push_back(energy / (opt.hbar * w_bus) - 0.5);
      if (p == n_periods) break;
      for (int s = 0; s < steps_per_period; ++s) {
        v += 0.5 * dt * a;
        x += dt * v;
        a = accel(x);
        v += 0.5 * dt * a;
      }
    }
  }

  HeatingEstimate est;
  est.ensemble_size = opt.ensemble_size;
  est.bath_temperature = bath_temperature_kelvin;
  est.mean_occupation.assign(n_periods + 1, 0.0);
  for (int m = 0; m < opt.ensemble_size; ++m)
    for (int p = 0; p <= n_periods; ++p)
      est.mean_occupation[p] += occupation[m][p] / opt.ensemble_size;

  // least-squares slope of <n>(period), per trajectory for the spread
  auto slope = [&](const std::vector<double>& y) {
    const int n = static_cast<int>(y.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += i; sy += y[i]; sxx += static_cast<double>(i) * i; sxy += i * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  est.rate = slope(est.mean_occupation);

  double var = 0.0;
  for (int m = 0; m < opt.ensemble_size; ++m) {
    const double d = slope(occupation[m]) - est.rate;
    var += d * d;
  }
  est.confidence = std::sqrt(var / opt.ensemble_size / opt.ensemble_size);

  // R^2 of the linear fit on the ensemble mean
  {
    const int n = n_periods + 1;
    double mean = 0.0;
    for (double y : est.mean_occupation) mean += y / n;
    double ss_tot = 0.0, ss_res = 0.0;
    const double intercept = mean - est.rate * (n - 1) / 2.0;
    for (int i = 0; i < n; ++i) {
      const double fitv = intercept + est.rate * i;
      ss_tot += (est.mean_occupation[i] - mean) * (est.mean_occupation[i] - mean);
      ss_res += (est.mean_occupation[i] - fitv) * (est.mean_occupation[i] - fitv);
    }
    est.fit_r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    est.fit_ok = est.fit_r_squared >= 0.8;
  }
  return est;
}

}  // namespace solgate
