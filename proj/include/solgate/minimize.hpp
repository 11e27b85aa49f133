#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>

#include "solgate/errors.hpp"

namespace solgate {

struct MinimizeOptions {
  int max_iterations = 20000;
  double gradient_tolerance = 1e-9;  // infinity norm
  int history = 10;                  // L-BFGS memory
  double initial_step = 1.0;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;  // infinity norm
  int iterations = 0;
  bool converged = false;
};

// Limited-memory BFGS with Armijo backtracking. The objective callback
// returns the value and fills the gradient.
inline MinimizeResult minimize_lbfgs(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
    Eigen::VectorXd x0, const MinimizeOptions& opt = {}) {
  MinimizeResult res;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(x.size());
  double f = objective(x, g);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    res.iterations = iter;
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      d *= gamma;
    }
    for (size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }
    if (d.dot(g) >= 0.0) d = -g;  // not a descent direction: reset

    // Backtracking line search (Armijo).
    double step = s_hist.empty() ? std::min(opt.initial_step, 1.0 / std::max(1.0, g.norm())) : 1.0;
    const double slope = d.dot(g);
    Eigen::VectorXd x_new, g_new(x.size());
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Try steepest descent with a tiny step before giving up.
      x_new = x - (1e-12 / std::max(1e-12, g.norm())) * g;
      f_new = objective(x_new, g_new);
      if (!(f_new < f)) break;
    }

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-14 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    g = g_new;
    f = f_new;
  }

  res.x = std::move(x);
  res.value = f;
  res.gradient_norm = g.lpNorm<Eigen::Infinity>();
  return res;
}

}  // namespace solgate
