#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "solgate/floquet.hpp"
#include "solgate/orbit.hpp"

namespace solgate {

// Laser projection onto one mode: lambda_i(t) = sum_alpha khat_alpha E_{i,alpha}(t)
// where E = sqrt(2 w) U is the mass-orthonormal periodic mode function; the
// Lamb-Dicke parameter eta = |k| sqrt(hbar / 2 w) carries the remaining scale,
// so eta * lambda_i = sqrt(hbar) k . U_i exactly as in the quantized coupling.
struct LaserProjection {
  int mode_index = -1;
  double eta = 0.0;
  int n_max = 0;
  std::vector<Eigen::VectorXcd> lambda_harmonics;  // per rf harmonic, size n_ions
  const Eigen::VectorXcd& harmonic(int n) const { return lambda_harmonics[n + n_max]; }
  Eigen::VectorXd dc() const {
    Eigen::VectorXd d(lambda_harmonics[n_max].size());
    for (int i = 0; i < d.size(); ++i) d[i] = lambda_harmonics[n_max][i].real();
    return d;
  }
};

struct ConstraintViolation {
  int mode_index = -1;
  int ion = -1;
  double value = 0.0;
  double budget = 0.0;
};

struct LaserGeometry {
  Eigen::Vector3d wavevector = Eigen::Vector3d::Zero();  // dimensionless (1/length unit)
  double optical_phase = 0.0;
  std::vector<LaserProjection> projections;  // bus first, then off-resonant modes
  bool feasible = false;
  std::vector<ConstraintViolation> violations;

  Eigen::Vector3d direction() const { return wavevector.normalized(); }
  const LaserProjection& bus() const { return projections.front(); }
};

namespace detail {

inline LaserProjection project_mode(const FloquetMode& mode, int mode_index,
                                    const Eigen::Vector3d& khat, double k_mag,
                                    double hbar) {
  const int n_ions = static_cast<int>(mode.dc().size()) / 3;
  LaserProjection p;
  p.mode_index = mode_index;
  p.eta = k_mag * std::sqrt(hbar / (2.0 * mode.frequency));
  p.n_max = mode.n_max;
  const double mass_orth = std::sqrt(2.0 * mode.frequency);
  p.lambda_harmonics.assign(2 * mode.n_max + 1, Eigen::VectorXcd::Zero(n_ions));
  for (int n = -mode.n_max; n <= mode.n_max; ++n) {
    const Eigen::VectorXcd& u = mode.harmonics[n + mode.n_max];
    for (int i = 0; i < n_ions; ++i)
      p.lambda_harmonics[n + p.n_max][i] =
          mass_orth * (khat.x() * u[3 * i] + khat.y() * u[3 * i + 1] +
                       khat.z() * u[3 * i + 2]);
  }
  return p;
}

}  // namespace detail

struct LaserConstraints {
  double non_core_limit = 0.01;       // |lambda_bus| budget off the core ions
  double off_resonant_ratio = 0.2;    // |lambda_j| <= ratio * |lambda_bus| on core
  std::vector<int> off_resonant_modes = {1, 2};  // spectrum indices (0 = bus)
  int scan_points = 3600;
};

// Pick an in-plane laser direction for the gate: the bus mode must not reach
// non-core ions, the off-resonant modes must not reach the core ions, and
// among feasible directions the one whose DC projection ratio
// lambda_2 / lambda_1 (center over neighbor) is closest in magnitude to the
// ideal EPR value 2 is returned. Infeasible constraint sets return the least
// violating direction together with a violation report.
inline LaserGeometry optimize_laser_direction(const ModeSpectrum& spectrum,
                                              const LocalizedModes& loc,
                                              double k_magnitude, double hbar,
                                              const LaserConstraints& cons = {}) {
  const FloquetMode& bus = spectrum.modes[loc.bus_index];
  const int n_ions = static_cast<int>(bus.dc().size()) / 3;
  const int center = loc.core_ions[1];
  const int neighbor = loc.core_ions[0];

  std::vector<bool> is_core(n_ions, false);
  for (int i : loc.core_ions) is_core[i] = true;

  // DC in-plane 2-vectors per ion, mass-orthonormal scale.
  auto dc_xy = [&](const FloquetMode& m) {
    Eigen::MatrixXd v(n_ions, 2);
    const double s = std::sqrt(2.0 * m.frequency);
    for (int i = 0; i < n_ions; ++i) {
      v(i, 0) = s * m.dc()[3 * i].real();
      v(i, 1) = s * m.dc()[3 * i + 1].real();
    }
    return v;
  };
  const Eigen::MatrixXd bus_xy = dc_xy(bus);
  std::vector<Eigen::MatrixXd> off_xy;
  for (int j : cons.off_resonant_modes) off_xy.push_back(dc_xy(spectrum.modes[j]));

  double best_score = 1e300, best_violation = 1e300, best_theta = 0.0;
  bool any_feasible = false;
  for (int s = 0; s < cons.scan_points; ++s) {
    const double theta = constants::pi * s / cons.scan_points;
    const Eigen::Vector2d khat(std::cos(theta), std::sin(theta));
    const Eigen::VectorXd lam_bus = bus_xy * khat;

    double violation = 0.0;
    for (int i = 0; i < n_ions; ++i) {
      if (is_core[i]) {
        for (const Eigen::MatrixXd& oxy : off_xy) {
          const double budget = cons.off_resonant_ratio * std::abs(lam_bus[i]);
          violation = std::max(violation, std::abs(oxy.row(i).dot(khat)) - budget);
        }
      } else {
        violation = std::max(violation, std::abs(lam_bus[i]) - cons.non_core_limit);
      }
    }
    const bool feasible = violation <= 0.0;
    const double den = lam_bus[neighbor];
    if (std::abs(den) < 1e-12) continue;
    const double score = std::abs(std::abs(lam_bus[center] / den) - 2.0);

    if (feasible) {
      if (!any_feasible || score < best_score) {
        any_feasible = true;
        best_score = score;
        best_theta = theta;
      }
    } else if (!any_feasible && violation < best_violation) {
      best_violation = violation;
      best_theta = theta;
      best_score = score;
    }
  }

  LaserGeometry geom;
  const Eigen::Vector3d khat(std::cos(best_theta), std::sin(best_theta), 0.0);
  geom.wavevector = k_magnitude * khat;
  geom.feasible = any_feasible;
  geom.projections.push_back(
      detail::project_mode(bus, loc.bus_index, khat, k_magnitude, hbar));
  for (int j : cons.off_resonant_modes)
    geom.projections.push_back(
        detail::project_mode(spectrum.modes[j], j, khat, k_magnitude, hbar));

  // Violation report at the chosen direction.
  const Eigen::VectorXd lam_bus = geom.bus().dc();
  for (int i = 0; i < n_ions; ++i) {
    if (is_core[i]) {
      for (size_t m = 1; m < geom.projections.size(); ++m) {
        const double budget = cons.off_resonant_ratio * std::abs(lam_bus[i]);
        const double v = std::abs(geom.projections[m].dc()[i]);
        if (v > budget)
          geom.violations.push_back({geom.projections[m].mode_index, i, v, budget});
      }
    } else if (std::abs(lam_bus[i]) > cons.non_core_limit) {
      geom.violations.push_back({loc.bus_index, i, std::abs(lam_bus[i]),
                                 cons.non_core_limit});
    }
  }
  return geom;
}

}  // namespace solgate
