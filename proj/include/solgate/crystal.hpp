#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "solgate/minimize.hpp"
#include "solgate/trap.hpp"

namespace solgate {

struct CrystalConfiguration {
  TrapParameters trap;
  IonSet ions;
  Eigen::VectorXd positions;  // 3N, dimensionless
  double energy = 0.0;        // pseudopotential energy
  double gradient_norm = 0.0; // infinity norm at the stored positions
};

enum class KinkKind { None, Localized, Extended };

struct KinkDescriptor {
  KinkKind kind = KinkKind::None;
  int center_index = -1;            // ion index (original ordering)
  int width = 0;                    // sites with |transverse| < half the bulk amplitude
  int topological_charge = 0;
  std::array<int, 3> core_indices = {-1, -1, -1};  // gate ions 1, 2, 3
};

// ---------------------------------------------------------------------------
// Seeding ansaetze
// ---------------------------------------------------------------------------

namespace detail {

// Relax ion positions along the x axis only (transverse frozen at zero).
inline Eigen::VectorXd relax_chain_1d(const TrapParameters& trap, const IonSet& ions,
                                      const Eigen::MatrixXd& w2) {
  const int n = ions.size();
  const double ax = std::max(w2.col(0).minCoeff() / ions.mass.maxCoeff(), 1e-12);
  const double u2 = std::cbrt(0.25 / ax);  // two-ion half separation
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0[i] = 2.0 * u2 * (i - 0.5 * (n - 1)) / std::sqrt(n);
  auto obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    Eigen::VectorXd pos = Eigen::VectorXd::Zero(3 * n);
    for (int i = 0; i < n; ++i) pos[3 * i] = x[i];
    PotentialResult r = pseudo_potential_and_force(pos, ions, trap, w2, true);
    for (int i = 0; i < n; ++i) g[i] = -r.force[3 * i];
    return r.energy;
  };
  MinimizeOptions opt;
  opt.gradient_tolerance = 1e-10;
  MinimizeResult res = minimize_lbfgs(obj, x0, opt);
  Eigen::VectorXd pos = Eigen::VectorXd::Zero(3 * n);
  Eigen::VectorXd xs = res.x;
  std::sort(xs.data(), xs.data() + n);
  for (int i = 0; i < n; ++i) pos[3 * i] = xs[i];
  return pos;
}

inline double ring_equilibrium_radius(int n, double wr2_eff) {
  double s = 0.0;
  for (int k = 1; k < n; ++k) s += 1.0 / std::sin(constants::pi * k / n);
  s *= 0.25;
  return std::cbrt(s / wr2_eff);
}

}  // namespace detail

// Planar zigzag seed in a linear trap, with an optional kink. The kink seed
// is point-antisymmetric about the trap center: the center ion starts on the
// axis, the transverse alternation continues through it with a net phase
// slip, and the lattice is squeezed toward the center to make room for the
// defect. This registry relaxes to a stable localized kink at the paper-like
// trap parameters; the mirror-symmetric registry (center ion flanked by two
// same-row neighbors) is not a minimum and anneals back to the zigzag.
inline Eigen::VectorXd zigzag_ansatz(const TrapParameters& trap, const IonSet& ions,
                                     bool with_kink, double amplitude_factor = 0.5,
                                     double squeeze_factor = 0.5) {
  const Eigen::MatrixXd w2 = pseudo_curvatures(trap, ions);
  Eigen::VectorXd pos = detail::relax_chain_1d(trap, ions, w2);
  const int n = ions.size();
  double spacing = 0.0;
  for (int i = 0; i + 1 < n; ++i) spacing += pos[3 * (i + 1)] - pos[3 * i];
  spacing /= (n - 1);
  const double amp = amplitude_factor * spacing;
  const int c = n / 2;
  for (int i = 0; i < n; ++i) {
    double sign;
    if (!with_kink) {
      sign = (i % 2 == 0) ? 1.0 : -1.0;
    } else {
      const int k = i - c;
      pos[3 * i] -= 0.5 * squeeze_factor * spacing * std::tanh(k / 3.0);
      sign = (k == 0) ? 0.0
                      : ((k > 0 ? 1.0 : -1.0) * ((std::abs(k) % 2 == 0) ? 1.0 : -1.0));
    }
    pos[3 * i + 1] = amp * sign;
  }
  return pos;
}

// Ring seed: ions on a circle with alternating radial offsets. With an odd
// ion count the alternation necessarily frustrates, seeding a kink. For two
// species the lighter ions take the even (inner) slots.
inline Eigen::VectorXd ring_ansatz(const TrapParameters& trap, const IonSet& ions,
                                   double offset_factor = 0.15) {
  const int n = ions.size();
  const double wr = trap.radial_frequency * trap.radial_scale;
  const double r0 = trap.geometry == TrapGeometry::RingQuadrupole
                        ? trap.ring_radius_scale
                        : detail::ring_equilibrium_radius(n, wr * wr);
  const double d = offset_factor * 2.0 * constants::pi * r0 / n;
  Eigen::VectorXd pos(3 * n);
  for (int i = 0; i < n; ++i) {
    const double theta = 2.0 * constants::pi * i / n;
    const double rho = r0 + ((i % 2 == 0) ? -d : d);
    pos[3 * i + 0] = rho * std::cos(theta);
    pos[3 * i + 1] = rho * std::sin(theta);
    pos[3 * i + 2] = 0.0;
  }
  return pos;
}

// ---------------------------------------------------------------------------
// Equilibrium search
// ---------------------------------------------------------------------------

inline CrystalConfiguration find_equilibrium(
    const TrapParameters& trap, const IonSet& ions, std::uint64_t seed,
    int n_restarts = 1, std::optional<Eigen::VectorXd> seed_positions = {}) {
  trap.validate();
  const int n = ions.size();
  if (n < 1) throw ValidationError("find_equilibrium: need at least one ion");
  const Eigen::MatrixXd w2 = pseudo_curvatures(trap, ions);

  Eigen::VectorXd base;
  if (seed_positions) {
    if (seed_positions->size() != 3 * n)
      throw ValidationError("find_equilibrium: seed size mismatch");
    base = *seed_positions;
  } else if (trap.geometry == TrapGeometry::LinearPaul) {
    base = (n >= 2) ? zigzag_ansatz(trap, ions, false) : Eigen::VectorXd::Zero(3);
  } else {
    base = ring_ansatz(trap, ions);
  }

  auto obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    PotentialResult r = pseudo_potential_and_force(x, ions, trap, w2, true);
    g = -r.force;
    return r.energy;
  };

  const double scale = std::max(base.cwiseAbs().maxCoeff(), 1.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  bool have_best = false;
  double best_residual = std::numeric_limits<double>::infinity();
  CrystalConfiguration best;
  for (int r = 0; r < std::max(1, n_restarts); ++r) {
    Eigen::VectorXd x0 = base;
    if (r > 0) {
      const double sigma = 0.05 * scale;
      for (int i = 0; i < x0.size(); ++i) x0[i] += sigma * gauss(rng);
    }
    MinimizeOptions opt;
    opt.gradient_tolerance = 1e-10;
    MinimizeResult res = minimize_lbfgs(obj, x0, opt);
    best_residual = std::min(best_residual, res.gradient_norm);
    if (res.gradient_norm >= 1e-8) continue;
    if (!have_best || res.value < best.energy) {
      have_best = true;
      best.trap = trap;
      best.ions = ions;
      best.positions = res.x;
      best.energy = res.value;
      best.gradient_norm = res.gradient_norm;
    }
  }
  if (!have_best)
    throw OptimizationError("find_equilibrium: no restart converged", best_residual);
  return best;
}

// ---------------------------------------------------------------------------
// Kink detection
// ---------------------------------------------------------------------------

namespace detail {

struct ZigzagView {
  std::vector<int> order;       // ion indices along the chain / ring
  std::vector<double> trans;    // transverse deviation, same ordering
  bool cyclic = false;
};

inline ZigzagView zigzag_view(const CrystalConfiguration& config) {
  const int n = config.ions.size();
  ZigzagView v;
  v.order.resize(n);
  std::iota(v.order.begin(), v.order.end(), 0);
  v.trans.resize(n);
  if (config.trap.geometry == TrapGeometry::LinearPaul) {
    std::sort(v.order.begin(), v.order.end(), [&](int a, int b) {
      return config.positions[3 * a] < config.positions[3 * b];
    });
    double var_y = 0.0, var_z = 0.0;
    for (int i = 0; i < n; ++i) {
      var_y += std::pow(config.positions[3 * i + 1], 2);
      var_z += std::pow(config.positions[3 * i + 2], 2);
    }
    const int axis = (var_z > var_y) ? 2 : 1;
    for (int i = 0; i < n; ++i) v.trans[i] = config.positions[3 * v.order[i] + axis];
  } else {
    v.cyclic = true;
    std::vector<double> theta(n), rho(n);
    for (int i = 0; i < n; ++i) {
      theta[i] = std::atan2(config.positions[3 * i + 1], config.positions[3 * i + 0]);
      rho[i] = std::hypot(config.positions[3 * i + 0], config.positions[3 * i + 1]);
    }
    std::sort(v.order.begin(), v.order.end(),
              [&](int a, int b) { return theta[a] < theta[b]; });
    const double mean_rho = std::accumulate(rho.begin(), rho.end(), 0.0) / n;
    for (int i = 0; i < n; ++i) v.trans[i] = rho[v.order[i]] - mean_rho;
  }
  return v;
}

inline double bulk_amplitude(const std::vector<double>& trans) {
  std::vector<double> mags(trans.size());
  for (size_t i = 0; i < trans.size(); ++i) mags[i] = std::abs(trans[i]);
  std::sort(mags.begin(), mags.end());
  return mags[mags.size() / 2];  // median
}

}  // namespace detail

// Localized/extended classification threshold: a kink wider than this many
// depressed sites counts as Extended.
inline constexpr int kLocalizedWidthLimit = 5;

inline KinkDescriptor detect_kink(const CrystalConfiguration& config) {
  const int n = config.ions.size();
  if (n < 5) throw ClassificationError("detect_kink: too few ions for a zigzag");
  detail::ZigzagView v = detail::zigzag_view(config);

  const double amp = detail::bulk_amplitude(v.trans);
  double spacing;
  if (v.cyclic) {
    double mean_rho = 0.0;
    for (int i = 0; i < n; ++i)
      mean_rho += std::hypot(config.positions[3 * i], config.positions[3 * i + 1]);
    mean_rho /= n;
    spacing = 2.0 * constants::pi * mean_rho / n;
  } else {
    spacing = (config.positions[3 * v.order[n - 1]] - config.positions[3 * v.order[0]]) /
              (n - 1);
  }
  if (amp < 1e-3 * spacing)
    throw ClassificationError("detect_kink: no transverse alternation (1D chain?)");

  // Staggered order parameter: phi_i = (-1)^i * d_i is constant (+-A) in the
  // bulk and crosses zero at a kink, like a domain wall. On a ring with odd
  // ion count the parity factor is inconsistent across the seam bond
  // (n-1, 0); the comparison there carries an extra (-1)^n twist, which is
  // what makes the charge of an odd ring nonzero.
  std::vector<double> phi(n);
  for (int i = 0; i < n; ++i) phi[i] = ((i % 2 == 0) ? 1.0 : -1.0) * v.trans[i];

  // Nearest-neighbor smoothing (seam-aware on rings).
  const double seam = (n % 2 == 0) ? 1.0 : -1.0;
  auto phi_at = [&](int i) {
    if (!v.cyclic) return phi[std::clamp(i, 0, n - 1)];
    double twist = 1.0;
    while (i < 0) {
      i += n;
      twist *= seam;
    }
    while (i >= n) {
      i -= n;
      twist *= seam;
    }
    return twist * phi[i];
  };
  std::vector<double> sm(n);
  for (int i = 0; i < n; ++i)
    sm[i] = (phi_at(i - 1) + phi_at(i) + phi_at(i + 1)) / 3.0;

  KinkDescriptor out;
  // Domain walls: bonds where the smoothed profile changes sign.
  std::vector<int> walls;  // left site of the wall bond
  int charge = 0;
  const int nb = v.cyclic ? n : n - 1;
  for (int b = 0; b < nb; ++b) {
    const double left = sm[b];
    const double right = (b + 1 < n) ? sm[b + 1] : seam * sm[0];
    if (left * right < 0.0) {
      walls.push_back(b);
      charge += (left > 0.0) ? 1 : -1;
    }
  }

  if (walls.empty()) {
    out.kind = KinkKind::None;
    out.topological_charge = 0;
    return out;
  }
  out.topological_charge = charge;

  // Several separated domain walls mean the defect is no longer confined to
  // one core: report the spread structure as a single extended kink.
  if (walls.size() > 1) {
    out.kind = KinkKind::Extended;
    out.width = walls.back() - walls.front() + 1;
    const int c = walls.front();
    out.center_index = v.order[c];
    auto wrapw = [&](int i) { return v.cyclic ? (i % n + n) % n : std::clamp(i, 0, n - 1); };
    out.core_indices = {v.order[wrapw(c - 1)], v.order[wrapw(c)],
                        v.order[wrapw(c + 1)]};
    return out;
  }

  // Center: site of minimum |phi| near the first wall.
  int center = walls.front();
  double dmin = std::numeric_limits<double>::infinity();
  for (int off = -2; off <= 3; ++off) {
    int i = walls.front() + off;
    if (v.cyclic)
      i = (i % n + n) % n;
    else if (i < 0 || i >= n)
      continue;
    if (std::abs(phi[i]) < dmin) {
      dmin = std::abs(phi[i]);
      center = i;
    }
  }
  out.center_index = v.order[center];

  // Width: contiguous run of depressed zigzag amplitude around the center.
  // (Counting all depressed sites would sweep in the decaying envelope at the
  // crystal edges.)
  int width = 1;
  for (int dir : {-1, 1}) {
    for (int off = 1; off < n; ++off) {
      int i = center + dir * off;
      if (v.cyclic)
        i = (i % n + n) % n;
      else if (i < 0 || i >= n)
        break;
      if (std::abs(v.trans[i]) < 0.5 * amp)
        ++width;
      else
        break;
    }
  }
  out.width = width;
  out.kind = (width <= kLocalizedWidthLimit) ? KinkKind::Localized : KinkKind::Extended;

  auto wrap = [&](int i) { return v.cyclic ? (i % n + n) % n : std::clamp(i, 0, n - 1); };
  out.core_indices = {v.order[wrap(center - 1)], v.order[wrap(center)],
                      v.order[wrap(center + 1)]};
  return out;
}

}  // namespace solgate
