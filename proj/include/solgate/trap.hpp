#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "solgate/errors.hpp"
#include "solgate/units.hpp"

namespace solgate {

struct IonSpecies {
  double mass = 0.0;    // atomic mass units
  double charge = 1.0;  // elementary charges
  std::string label;

  void validate() const {
    if (mass <= 0.0) throw ValidationError("IonSpecies: mass must be > 0");
    if (charge <= 0.0) throw ValidationError("IonSpecies: charge must be > 0");
  }
};

// Per-ion dimensionless masses and charges, relative to the reference species
// (the lightest one present).
struct IonSet {
  std::vector<IonSpecies> species;  // one entry per ion
  Eigen::VectorXd mass;             // m_i / m_ref
  Eigen::VectorXd charge;           // Q_i / Q_ref
  double ref_mass_amu = 0.0;
  double ref_charge_e = 1.0;

  int size() const { return static_cast<int>(species.size()); }
};

inline IonSet make_ion_set(std::vector<IonSpecies> species) {
  if (species.empty()) throw ValidationError("make_ion_set: no ions");
  IonSet set;
  double mref = species.front().mass;
  double qref = species.front().charge;
  for (const auto& s : species) {
    s.validate();
    if (s.mass < mref) {
      mref = s.mass;
      qref = s.charge;
    }
  }
  const int n = static_cast<int>(species.size());
  set.species = std::move(species);
  set.mass.resize(n);
  set.charge.resize(n);
  for (int i = 0; i < n; ++i) {
    set.mass[i] = set.species[i].mass / mref;
    set.charge[i] = set.species[i].charge / qref;
  }
  set.ref_mass_amu = mref;
  set.ref_charge_e = qref;
  return set;
}

enum class TrapGeometry { LinearPaul, RingQuadrupole, LinearMultipole };

// All trap fields are dimensionless (see units.hpp) and refer to the
// reference species; other species scale as charge/mass.
struct TrapParameters {
  TrapGeometry geometry = TrapGeometry::LinearPaul;
  double rf_frequency = 0.0;  // physical Omega_rf [rad/s], kept for unit bookkeeping

  // Linear Paul trap: x'' + (a_alpha + 2 q_alpha cos 2t) x = 0 per axis.
  Eigen::Vector3d static_curvature = Eigen::Vector3d::Zero();  // a_x, a_y, a_z
  Eigen::Vector3d mathieu_q = Eigen::Vector3d::Zero();         // q_x, q_y, q_z

  // Ring / multipole geometries (pseudopotential form, stiffness ~ charge^2/mass):
  int pole_order = 2;             // k; k = 2 is the quadrupole
  double ring_radius_scale = 1.0; // torus radius (ring) / normalization radius (multipole)
  double radial_frequency = 0.0;  // dimensionless radial secular freq (ref species)
  double axial_frequency = 0.0;   // dimensionless z secular freq (ref species)
  double radial_scale = 1.0;      // multiplier on radial_frequency (ramp hook)

  void validate() const {
    if (rf_frequency <= 0.0) throw ValidationError("TrapParameters: rf_frequency must be > 0");
    if (geometry == TrapGeometry::LinearPaul) {
      if (std::abs(static_curvature.sum()) > 1e-10 * (1.0 + static_curvature.cwiseAbs().maxCoeff()))
        throw ValidationError("TrapParameters: static curvatures must sum to zero (Laplace)");
      if (mathieu_q.cwiseAbs().maxCoeff() >= 0.9)
        throw ValidationError("TrapParameters: |q| must be < 0.9");
    } else {
      if (radial_frequency <= 0.0)
        throw ValidationError("TrapParameters: radial_frequency must be > 0");
      if (axial_frequency <= 0.0)
        throw ValidationError("TrapParameters: axial_frequency must be > 0");
      if (pole_order < 2) throw ValidationError("TrapParameters: pole_order must be >= 2");
      if (ring_radius_scale <= 0.0)
        throw ValidationError("TrapParameters: ring_radius_scale must be > 0");
    }
  }
};

// ---------------------------------------------------------------------------
// Mathieu characteristic exponent
// ---------------------------------------------------------------------------

namespace detail {

// Monodromy matrix of x'' + (a + 2 q cos 2t) x = 0 over one drive period pi.
inline Eigen::Matrix2d mathieu_monodromy(double a, double q, int steps = 400) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  const double h = constants::pi / steps;
  auto rhs = [&](double t, const Eigen::Matrix2d& y) -> Eigen::Matrix2d {
    Eigen::Matrix2d d;
    const double w = a + 2.0 * q * std::cos(2.0 * t);
    d.row(0) = y.row(1);
    d.row(1) = -w * y.row(0);
    return d;
  };
  double t = 0.0;
  for (int i = 0; i < steps; ++i) {
    const Eigen::Matrix2d k1 = rhs(t, m);
    const Eigen::Matrix2d k2 = rhs(t + 0.5 * h, m + 0.5 * h * k1);
    const Eigen::Matrix2d k3 = rhs(t + 0.5 * h, m + 0.5 * h * k2);
    const Eigen::Matrix2d k4 = rhs(t + h, m + h * k3);
    m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return m;
}

}  // namespace detail

// Characteristic exponent beta of the Mathieu equation, picked on the
// principal branch (0, 1). The dimensionless secular frequency equals beta;
// physical frequency beta * Omega_rf / 2.
inline double mathieu_exponent(double a, double q) {
  if (a == 0.0 && q == 0.0) return 0.0;
  const Eigen::Matrix2d m = detail::mathieu_monodromy(a, q);
  const double half_trace = 0.5 * m.trace();
  if (std::abs(half_trace) > 1.0 + 1e-9) {
    throw InstabilityError(
        "mathieu_exponent: unstable (a, q), |Floquet multiplier| = " +
            std::to_string(std::abs(half_trace) + std::sqrt(half_trace * half_trace - 1.0)),
        std::abs(half_trace) + std::sqrt(half_trace * half_trace - 1.0));
  }
  return std::acos(std::clamp(half_trace, -1.0, 1.0)) / constants::pi;
}

// Lowest-order pseudopotential estimate sqrt(a + q^2/2), dimensionless.
inline double pseudopotential_frequency(double a, double q) {
  const double w2 = a + 0.5 * q * q;
  if (w2 < 0.0) throw InstabilityError("pseudopotential_frequency: a + q^2/2 < 0", 0.0);
  return std::sqrt(w2);
}

struct SecularFrequencies {
  Eigen::Vector3d exact;   // from the single-ion monodromy matrix
  Eigen::Vector3d pseudo;  // lowest-order pseudopotential values
};

// Per-axis secular frequencies of a single ion of the given species
// (dimensionless; multiply by Omega_rf/2 for physical values).
inline SecularFrequencies secular_frequencies(const TrapParameters& trap,
                                              const IonSpecies& species,
                                              const IonSpecies& reference) {
  species.validate();
  SecularFrequencies out;
  const double scale = (species.charge / reference.charge) /
                       (species.mass / reference.mass);
  if (trap.geometry == TrapGeometry::LinearPaul) {
    for (int axis = 0; axis < 3; ++axis) {
      const double a = trap.static_curvature[axis] * scale;
      const double q = trap.mathieu_q[axis] * scale;
      out.exact[axis] = mathieu_exponent(a, q);
      out.pseudo[axis] = pseudopotential_frequency(a, q);
    }
  } else {
    // Pseudopotential stiffness scales as charge^2 / mass, so the secular
    // frequency scales as charge / mass.
    const double freq_scale = scale;
    const double wr = trap.radial_frequency * trap.radial_scale * freq_scale;
    const double wz = trap.axial_frequency * freq_scale;
    out.exact = Eigen::Vector3d(wr, wr, wz);
    out.pseudo = out.exact;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Potential, force, Hessian (dimensionless)
// ---------------------------------------------------------------------------

struct PotentialResult {
  double energy = 0.0;
  Eigen::VectorXd force;  // 3N, empty unless requested
};

namespace detail {

constexpr double kMinPairDistance = 1e-9;

inline void coulomb_energy_force(const Eigen::VectorXd& pos, const IonSet& ions,
                                 bool want_gradient, double& energy,
                                 Eigen::VectorXd* force) {
  const int n = ions.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::Vector3d d = pos.segment<3>(3 * i) - pos.segment<3>(3 * j);
      const double r = d.norm();
      if (r < kMinPairDistance)
        throw DegenerateConfigurationError("overlapping ions " + std::to_string(i) +
                                           ", " + std::to_string(j));
      const double qq = ions.charge[i] * ions.charge[j];
      energy += qq / r;
      if (want_gradient) {
        const Eigen::Vector3d f = qq / (r * r * r) * d;  // on ion i
        force->segment<3>(3 * i) += f;
        force->segment<3>(3 * j) -= f;
      }
    }
  }
}

inline void coulomb_hessian(const Eigen::VectorXd& pos, const IonSet& ions,
                            Eigen::MatrixXd& h) {
  const int n = ions.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::Vector3d d = pos.segment<3>(3 * i) - pos.segment<3>(3 * j);
      const double r = d.norm();
      if (r < kMinPairDistance)
        throw DegenerateConfigurationError("overlapping ions in hessian");
      const double qq = ions.charge[i] * ions.charge[j];
      const Eigen::Matrix3d block =
          qq * (3.0 * d * d.transpose() / std::pow(r, 5) -
                Eigen::Matrix3d::Identity() / std::pow(r, 3));
      h.block<3, 3>(3 * i, 3 * i) += block;
      h.block<3, 3>(3 * j, 3 * j) += block;
      h.block<3, 3>(3 * i, 3 * j) -= block;
      h.block<3, 3>(3 * j, 3 * i) -= block;
    }
  }
}

// Radial (xy) confinement prefactor of ring/multipole geometries for ion i:
// u = A/p * rho^p with p = 2(pole_order - 1).
inline double ring_radial_prefactor(const TrapParameters& trap, const IonSet& ions, int i) {
  const double wr = trap.radial_frequency * trap.radial_scale;
  const double p = 2.0 * (trap.pole_order - 1);
  const double q2_over_m = ions.charge[i] * ions.charge[i] / ions.mass[i];
  return q2_over_m * wr * wr / std::pow(trap.ring_radius_scale, p - 2.0);
}

}  // namespace detail

// Full potential with explicit time dependence. For the linear Paul geometry
// this includes the rf drive; ring/multipole geometries are realized in
// pseudopotential form and are time independent.
inline PotentialResult potential_and_force(const Eigen::VectorXd& pos,
                                           const IonSet& ions,
                                           const TrapParameters& trap, double t,
                                           bool want_gradient = true) {
  if (!std::isfinite(t)) throw ValidationError("potential_and_force: t not finite");
  const int n = ions.size();
  if (pos.size() != 3 * n)
    throw ValidationError("potential_and_force: position size mismatch");
  PotentialResult out;
  if (want_gradient) out.force = Eigen::VectorXd::Zero(3 * n);

  if (trap.geometry == TrapGeometry::LinearPaul) {
    const double c = std::cos(2.0 * t);
    Eigen::Vector3d w;
    for (int axis = 0; axis < 3; ++axis)
      w[axis] = trap.static_curvature[axis] + 2.0 * trap.mathieu_q[axis] * c;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d x = pos.segment<3>(3 * i);
      out.energy += 0.5 * ions.charge[i] * w.dot(x.cwiseProduct(x));
      if (want_gradient)
        out.force.segment<3>(3 * i) -= ions.charge[i] * w.cwiseProduct(x);
    }
  } else if (trap.geometry == TrapGeometry::RingQuadrupole) {
    // toroidal quadrupole: harmonic well centered on the circle rho = R
    const double wr = trap.radial_frequency * trap.radial_scale;
    const double wz = trap.axial_frequency;
    const double R = trap.ring_radius_scale;
    for (int i = 0; i < n; ++i) {
      const double q2_over_m = ions.charge[i] * ions.charge[i] / ions.mass[i];
      const double C = q2_over_m * wr * wr;
      const Eigen::Vector3d x = pos.segment<3>(3 * i);
      const double rho = std::hypot(x[0], x[1]);
      out.energy += 0.5 * C * (rho - R) * (rho - R);
      out.energy += 0.5 * q2_over_m * wz * wz * x[2] * x[2];
      if (want_gradient) {
        if (rho > 0.0) {
          out.force[3 * i + 0] -= C * (rho - R) * x[0] / rho;
          out.force[3 * i + 1] -= C * (rho - R) * x[1] / rho;
        }
        out.force[3 * i + 2] -= q2_over_m * wz * wz * x[2];
      }
    }
  } else {
    const double p = 2.0 * (trap.pole_order - 1);
    for (int i = 0; i < n; ++i) {
      const double A = detail::ring_radial_prefactor(trap, ions, i);
      const Eigen::Vector3d x = pos.segment<3>(3 * i);
      const double rho2 = x[0] * x[0] + x[1] * x[1];
      const double rho = std::sqrt(rho2);
      out.energy += A / p * std::pow(rho, p);
      const double wz = trap.axial_frequency;
      const double q2_over_m = ions.charge[i] * ions.charge[i] / ions.mass[i];
      out.energy += 0.5 * q2_over_m * wz * wz * x[2] * x[2];
      if (want_gradient) {
        if (rho > 0.0) {
          const double du_drho = A * std::pow(rho, p - 1.0);
          out.force[3 * i + 0] -= du_drho * x[0] / rho;
          out.force[3 * i + 1] -= du_drho * x[1] / rho;
        }
        out.force[3 * i + 2] -= q2_over_m * wz * wz * x[2];
      }
    }
  }

  detail::coulomb_energy_force(pos, ions, want_gradient, out.energy,
                               want_gradient ? &out.force : nullptr);
  return out;
}

// Hessian of the full potential at the given positions and time.
inline Eigen::MatrixXd potential_hessian(const Eigen::VectorXd& pos,
                                         const IonSet& ions,
                                         const TrapParameters& trap, double t) {
  const int n = ions.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  if (trap.geometry == TrapGeometry::LinearPaul) {
    const double c = std::cos(2.0 * t);
    for (int i = 0; i < n; ++i)
      for (int axis = 0; axis < 3; ++axis)
        h(3 * i + axis, 3 * i + axis) =
            ions.charge[i] *
            (trap.static_curvature[axis] + 2.0 * trap.mathieu_q[axis] * c);
  } else if (trap.geometry == TrapGeometry::RingQuadrupole) {
    const double wr = trap.radial_frequency * trap.radial_scale;
    const double R = trap.ring_radius_scale;
    for (int i = 0; i < n; ++i) {
      const double q2_over_m = ions.charge[i] * ions.charge[i] / ions.mass[i];
      const double C = q2_over_m * wr * wr;
      const Eigen::Vector3d x = pos.segment<3>(3 * i);
      const double rho = std::hypot(x[0], x[1]);
      Eigen::Matrix2d rad = C * Eigen::Matrix2d::Identity();
      if (rho > 0.0) {
        const Eigen::Vector2d u(x[0] / rho, x[1] / rho);
        rad = C * ((1.0 - R / rho) * Eigen::Matrix2d::Identity() +
                   (R / rho) * (u * u.transpose()));
      }
      h.block<2, 2>(3 * i, 3 * i) = rad;
      h(3 * i + 2, 3 * i + 2) = q2_over_m * trap.axial_frequency * trap.axial_frequency;
    }
  } else {
    const double p = 2.0 * (trap.pole_order - 1);
    for (int i = 0; i < n; ++i) {
      const double A = detail::ring_radial_prefactor(trap, ions, i);
      const Eigen::Vector3d x = pos.segment<3>(3 * i);
      const double rho2 = x[0] * x[0] + x[1] * x[1];
      const double rho = std::sqrt(rho2);
      Eigen::Matrix2d rad = Eigen::Matrix2d::Zero();
      if (rho > 0.0) {
        const Eigen::Vector2d u(x[0] / rho, x[1] / rho);
        rad = A * std::pow(rho, p - 2.0) * Eigen::Matrix2d::Identity() +
              A * (p - 2.0) * std::pow(rho, p - 2.0) * (u * u.transpose());
      } else if (p == 2.0) {
        rad = A * Eigen::Matrix2d::Identity();
      }
      h.block<2, 2>(3 * i, 3 * i) = rad;
      const double q2_over_m = ions.charge[i] * ions.charge[i] / ions.mass[i];
      h(3 * i + 2, 3 * i + 2) = q2_over_m * trap.axial_frequency * trap.axial_frequency;
    }
  }
  detail::coulomb_hessian(pos, ions, h);
  return h;
}

// ---------------------------------------------------------------------------
// Pseudopotential (time-averaged) view
// ---------------------------------------------------------------------------

// Per-ion, per-axis effective curvatures m_i * beta_{i,alpha}^2; the
// pseudopotential single-ion energy is 1/2 sum_alpha w2(i, alpha) x_alpha^2.
inline Eigen::MatrixXd pseudo_curvatures(const TrapParameters& trap,
                                         const IonSet& ions) {
  const int n = ions.size();
  Eigen::MatrixXd w2(n, 3);
  if (trap.geometry == TrapGeometry::LinearPaul) {
    // Cache by species scale factor: identical ions share exponents.
    std::vector<std::pair<double, Eigen::Vector3d>> cache;
    for (int i = 0; i < n; ++i) {
      const double scale = ions.charge[i] / ions.mass[i];
      Eigen::Vector3d b2;
      bool found = false;
      for (const auto& [s, v] : cache)
        if (s == scale) {
          b2 = v;
          found = true;
          break;
        }
      if (!found) {
        for (int axis = 0; axis < 3; ++axis) {
          const double beta = mathieu_exponent(trap.static_curvature[axis] * scale,
                                               trap.mathieu_q[axis] * scale);
          b2[axis] = beta * beta;
        }
        cache.emplace_back(scale, b2);
      }
      w2.row(i) = ions.mass[i] * b2.transpose();
    }
  } else {
    const double wr = trap.radial_frequency * trap.radial_scale;
    const double wz = trap.axial_frequency;
    for (int i = 0; i < n; ++i) {
      const double q2_over_m = ions.charge[i] * ions.charge[i] / ions.mass[i];
      // Only meaningful as a harmonic curvature for pole_order 2; higher
      // orders handle the radial part through the full potential.
      w2(i, 0) = w2(i, 1) = q2_over_m * wr * wr;
      w2(i, 2) = q2_over_m * wz * wz;
    }
  }
  return w2;
}

// Pseudopotential energy and force. For the linear Paul trap the single-ion
// part uses the exact Mathieu secular curvatures; ring geometries coincide
// with the full (time-independent) potential.
inline PotentialResult pseudo_potential_and_force(const Eigen::VectorXd& pos,
                                                  const IonSet& ions,
                                                  const TrapParameters& trap,
                                                  const Eigen::MatrixXd& w2,
                                                  bool want_gradient = true) {
  if (trap.geometry != TrapGeometry::LinearPaul)
    return potential_and_force(pos, ions, trap, 0.0, want_gradient);
  const int n = ions.size();
  PotentialResult out;
  if (want_gradient) out.force = Eigen::VectorXd::Zero(3 * n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d x = pos.segment<3>(3 * i);
    const Eigen::Vector3d c = w2.row(i).transpose();
    out.energy += 0.5 * c.dot(x.cwiseProduct(x));
    if (want_gradient) out.force.segment<3>(3 * i) -= c.cwiseProduct(x);
  }
  detail::coulomb_energy_force(pos, ions, want_gradient, out.energy,
                               want_gradient ? &out.force : nullptr);
  return out;
}

inline Eigen::MatrixXd pseudo_hessian(const Eigen::VectorXd& pos,
                                      const IonSet& ions,
                                      const TrapParameters& trap,
                                      const Eigen::MatrixXd& w2) {
  if (trap.geometry != TrapGeometry::LinearPaul)
    return potential_hessian(pos, ions, trap, 0.0);
  const int n = ions.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (int i = 0; i < n; ++i)
    for (int axis = 0; axis < 3; ++axis) h(3 * i + axis, 3 * i + axis) = w2(i, axis);
  detail::coulomb_hessian(pos, ions, h);
  return h;
}

// ---------------------------------------------------------------------------
// Paper-style trap construction
// ---------------------------------------------------------------------------

struct LinearPaulFit {
  TrapParameters trap;
  double achieved_ratio_yx = 0.0;
  double achieved_ratio_zy = 0.0;
};

// Build a linear Paul trap from (omega_x, q_y, Omega_rf, ratio_yx) for the
// reference species: a_x follows from omega_x (q_x = 0), a_y is fitted so the
// exact Mathieu exponent gives omega_y = ratio_yx * omega_x, and a_z closes
// the Laplace constraint. The resulting omega_z / omega_y is reported, not
// prescribed: with q_z = -q_y and the Laplace constraint there is no freedom
// left to set it independently.
inline LinearPaulFit fit_linear_paul_trap(double omega_x_phys, double q_y,
                                          double omega_rf_phys, double ratio_yx) {
  LinearPaulFit fit;
  TrapParameters& trap = fit.trap;
  trap.geometry = TrapGeometry::LinearPaul;
  trap.rf_frequency = omega_rf_phys;
  const double wx = omega_x_phys / (0.5 * omega_rf_phys);
  trap.mathieu_q = Eigen::Vector3d(0.0, q_y, -q_y);
  const double ax = wx * wx;
  const double wy_target = ratio_yx * wx;

  // Bisection on a_y for beta(a_y, q_y) = wy_target. The lower bracket sits
  // just inside the stability region (a0(q) ~ -q^2/2 + 7 q^4/128).
  double lo = -0.5 * q_y * q_y + 7.0 * std::pow(q_y, 4) / 128.0 + 1e-6;
  double hi = wy_target * wy_target;
  auto f = [&](double ay) { return mathieu_exponent(ay, q_y) - wy_target; };
  double flo = f(lo);
  double fhi = f(hi);
  if (flo * fhi > 0.0) throw OptimizationError("fit_linear_paul_trap: bracket failed", flo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0 || hi - lo < 1e-15) break;
    if (flo * fm <= 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  const double ay = 0.5 * (lo + hi);
  const double az = -ax - ay;
  trap.static_curvature = Eigen::Vector3d(ax, ay, az);
  trap.validate();
  const double wy = mathieu_exponent(ay, q_y);
  const double wz = mathieu_exponent(az, -q_y);
  fit.achieved_ratio_yx = wy / wx;
  fit.achieved_ratio_zy = wz / wy;
  return fit;
}

}  // namespace solgate
