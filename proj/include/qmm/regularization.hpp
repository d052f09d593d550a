#pragma once

#include <qmm/space.hpp>

#include <algorithm>
#include <cmath>

namespace qmm {

/// Symmetric quasi-metric whose alpha-th power is a metric for every alpha <= alpha0.
struct RegularizedMetric {
  double alpha0 = kInf;  // +inf when C_rho == 1
  Matrix rho_sharp;
  double comparability = 1;  // least c with c^-1 rho <= rho# <= c rho
  double C_rho = 1;
  double C_tilde_rho = 1;
};

/// Least c >= 1 with c^-1 a <= b <= c a on off-diagonal entries.
inline double comparability_constant(const Matrix& a, const Matrix& b) {
  double c = 1;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) c = std::max({c, b(i, j) / a(i, j), a(i, j) / b(i, j)});
  return c;
}

/// min over chains of sum w(xi_i, xi_{i+1})^alpha, directed (Floyd-Warshall on powered weights).
inline Matrix chain_power_sums(const Matrix& w, double alpha) {
  Matrix d = w.array().pow(alpha).matrix();
  const auto n = d.rows();
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dik = d(i, k);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double via = dik + d(k, j);
        if (via < d(i, j)) d(i, j) = via;
      }
    }
  return d;
}

/// The chain construction at a fixed exponent, symmetrised; exposed so the fixed-point
/// property can be checked directly.
inline Matrix chain_regularize(const Matrix& rho, double alpha) {
  const auto n = rho.rows();
  Matrix sym(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sym(i, j) = std::max(rho(i, j), rho(j, i));
  // Powers of tiny ratios underflow for large alpha; work on the normalised matrix.
  const double scale = sym.maxCoeff();
  Matrix sp = chain_power_sums(sym / scale, alpha);
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = i == j ? 0.0 : scale * std::pow(std::min(sp(i, j), sp(j, i)), 1.0 / alpha);
  return out;
}

inline RegularizedMetric regularize(const QuasiMetricSpace& sp) {
  RegularizedMetric r;
  r.C_rho = quasi_triangle_constant(sp.rho());
  r.C_tilde_rho = quasi_symmetry_constant(sp.rho());
  const auto n = sp.rho().rows();
  if (r.C_rho <= 1.0) {
    r.alpha0 = kInf;
    r.rho_sharp.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        r.rho_sharp(i, j) = std::max(sp.rho()(i, j), sp.rho()(j, i));
  } else {
    r.alpha0 = 1.0 / std::log2(r.C_rho);
    r.rho_sharp = chain_regularize(sp.rho(), r.alpha0);
  }
  r.comparability = comparability_constant(sp.rho(), r.rho_sharp);

  const double lo = 1.0 / (r.C_rho * r.C_rho);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double rho = sp.rho()(i, j), sharp = r.rho_sharp(i, j);
      if (sharp < lo * rho * (1 - 1e-9) || sharp > r.C_tilde_rho * rho * (1 + 1e-9))
        throw Error(ErrorCode::MetrizationMismatch,
                    "comparability bounds fail at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
    }
  return r;
}

struct MetrizationReport {
  double symmetry_violation = 0;
  double triangle_violation = 0;     // on rho#/max(rho#) raised to alpha
  double lower_bound_violation = 0;  // max of C^-2 rho - rho#, relative
  double upper_bound_violation = 0;  // max of rho# - C~ rho, relative
  bool symmetric = true;
  bool triangle = true;
  bool bounds = true;
  bool pass() const { return symmetric && triangle && bounds; }
};

inline MetrizationReport verify_metrization(const RegularizedMetric& reg,
                                            const QuasiMetricSpace& sp, double alpha) {
  if (!(alpha > 0) || !std::isfinite(alpha) || alpha > reg.alpha0)
    throw Error(ErrorCode::Precondition, "alpha must lie in (0, alpha0] and be finite");
  MetrizationReport rep;
  const Matrix& S = reg.rho_sharp;
  const auto n = S.rows();
  const double scale = S.maxCoeff();
  Matrix P = (S / scale).array().pow(alpha).matrix();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      rep.symmetry_violation = std::max(rep.symmetry_violation, std::abs(S(i, j) - S(j, i)));
      for (Eigen::Index k = 0; k < n; ++k)
        rep.triangle_violation = std::max(rep.triangle_violation, P(i, j) - P(i, k) - P(k, j));
      if (i == j) continue;
      const double rho = sp.rho()(i, j);
      rep.lower_bound_violation =
          std::max(rep.lower_bound_violation, (rho / (reg.C_rho * reg.C_rho) - S(i, j)) / rho);
      rep.upper_bound_violation =
          std::max(rep.upper_bound_violation, (S(i, j) - reg.C_tilde_rho * rho) / rho);
    }
  rep.symmetric = rep.symmetry_violation == 0;
  rep.triangle = rep.triangle_violation <= 1e-12;
  rep.bounds = rep.lower_bound_violation <= 1e-12 && rep.upper_bound_violation <= 1e-12;
  return rep;
}

}  // namespace qmm
