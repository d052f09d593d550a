#pragma once

#include <qmm/space.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

// Log-barrier interior-point method for
//     minimize f(z)  subject to  a_i . z >= b_i,  h_j(z) >= 0
// with f convex and h_j concave, all twice differentiable on the strict interior.
// Iterates stay strictly feasible, so any returned point satisfies every constraint.

namespace qmm::opt {

struct LinearRow {
  std::vector<std::pair<int, double>> a;
  double b = 0;
  double slack(const Vector& z) const {
    double v = -b;
    for (auto [i, c] : a) v += c * z(i);
    return v;
  }
};

/// Value at z; fills gradient / Hessian (dense, size n) when the pointers are non-null.
using SmoothFn = std::function<double(const Vector& z, Vector* grad, Matrix* hess)>;

struct Options {
  double gap_rel = 1e-13;   // stop when (#constraints)/t <= gap_rel * f
  double gap_abs = 1e-300;
  double t_factor = 12;
  int max_newton = 4000;
};

struct Result {
  Vector z;
  double f = 0;
  int newton_steps = 0;
  bool converged = false;
};

inline Result minimize(int n, const SmoothFn& f, const std::vector<LinearRow>& rows,
                       const std::vector<SmoothFn>& concave, Vector z, const Options& opt = {}) {
  const double m = static_cast<double>(rows.size() + concave.size());
  Result res;

  auto feasible = [&](const Vector& y) {
    for (const auto& r : rows)
      if (!(r.slack(y) > 0)) return false;
    for (const auto& h : concave)
      if (!(h(y, nullptr, nullptr) > 0)) return false;
    return true;
  };
  // phi_t(y) - phi_t(z), with the barrier part summed as log-ratios to limit cancellation.
  auto phi_diff = [&](const Vector& y, const Vector& z0, double t) {
    double v = t * (f(y, nullptr, nullptr) - f(z0, nullptr, nullptr));
    for (const auto& r : rows) v -= std::log(r.slack(y) / r.slack(z0));
    for (const auto& h : concave) v -= std::log(h(y, nullptr, nullptr) / h(z0, nullptr, nullptr));
    return v;
  };

  if (!feasible(z)) throw Error(ErrorCode::Precondition, "barrier start is not strictly feasible");

  double f0 = f(z, nullptr, nullptr);
  double t = m / std::max(std::abs(f0), 1e-300);
  Vector g(n), gh(n), step(n);
  Matrix H(n, n), Hh(n, n);

  while (res.newton_steps < opt.max_newton) {
    // centering
    for (int inner = 0; inner < 200 && res.newton_steps < opt.max_newton; ++inner) {
      ++res.newton_steps;
      g.setZero();
      H.setZero();
      f(z, &g, &H);
      g *= t;
      H *= t;
      for (const auto& r : rows) {
        const double s = r.slack(z);
        for (auto [i, ci] : r.a) {
          g(i) -= ci / s;
          for (auto [j, cj] : r.a) H(i, j) += ci * cj / (s * s);
        }
      }
      for (const auto& h : concave) {
        gh.setZero();
        Hh.setZero();
        const double v = h(z, &gh, &Hh);
        g -= gh / v;
        H += gh * gh.transpose() / (v * v) - Hh / v;
      }
      Eigen::LDLT<Matrix> ldlt(H);
      step = -ldlt.solve(g);
      if (!step.allFinite() || ldlt.info() != Eigen::Success) {
        const double jitter = 1e-12 * (H.diagonal().cwiseAbs().maxCoeff() + 1e-300);
        Matrix Hj = H;
        Hj.diagonal().array() += jitter;
        step = -Hj.ldlt().solve(g);
        if (!step.allFinite()) break;
      }
      const double dec = -g.dot(step);  // Newton decrement squared
      if (dec / 2 <= 1e-10) break;

      double a = 1;
      while (a > 1e-16 && !feasible(z + a * step)) a *= 0.5;
      while (a > 1e-16 && phi_diff(z + a * step, z, t) > -0.25 * a * dec) a *= 0.5;
      if (a <= 1e-16) break;  // rounding floor reached; treat as centred
      z += a * step;
    }
    res.z = z;
    res.f = f(z, nullptr, nullptr);
    if (m / t <= opt.gap_rel * std::abs(res.f) + opt.gap_abs) {
      res.converged = true;
      break;
    }
    t *= opt.t_factor;
  }
  res.z = z;
  res.f = f(z, nullptr, nullptr);
  return res;
}

}  // namespace qmm::opt
