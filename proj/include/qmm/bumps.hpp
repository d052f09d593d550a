#pragma once

#include <qmm/geometry.hpp>
#include <qmm/gradients.hpp>
#include <qmm/regularization.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace qmm {

struct BumpFunction {
  PointId center = 0;
  double r = 0, R = 0, alpha = 1;
  Vector values;
  double holder = 0;  // Holder-alpha seminorm w.r.t. rho#
};

/// Default Holder exponent for smoothness s: alpha0 itself (s = alpha0 is allowed, the caller
/// must then use q = inf); when alpha0 = inf any finite alpha works and we take max(2s, 1).
inline double default_alpha(const RegularizedMetric& reg, double s) {
  if (!(s > 0)) throw Error(ErrorCode::Precondition, "s must be positive");
  if (std::isinf(reg.alpha0)) return std::max(2 * s, 1.0);
  if (s > reg.alpha0) throw Error(ErrorCode::Precondition, "s exceeds alpha0");
  return reg.alpha0;
}

inline BumpFunction bump_function(const RegularizedMetric& reg, const QuasiMetricSpace& sp,
                                  PointId center, double r, double R, double alpha) {
  if (!(r >= 0) || !(R > r) || !std::isfinite(R))
    throw Error(ErrorCode::BadRadii, "need 0 <= r < R < inf");
  if (!(alpha > 0) || !std::isfinite(alpha) || alpha > reg.alpha0)
    throw Error(ErrorCode::Precondition, "alpha must be finite and lie in (0, alpha0]");
  const Matrix& S = reg.rho_sharp;
  BumpFunction b{center, r, R, alpha, Vector::Zero(static_cast<Eigen::Index>(sp.size())), 0};
  const double Ra = std::pow(R, alpha), ra = std::pow(r, alpha);
  for (PointId y = 0; y < sp.size(); ++y) {
    const double d = S(center, y);
    if (d <= r) b.values(y) = 1;
    else if (d < R) b.values(y) = (Ra - std::pow(d, alpha)) / (Ra - ra);
  }
  b.holder = holder_seminorm(S, b.values, alpha);
  if (b.values.minCoeff() < 0 || b.values.maxCoeff() > 1 || b.holder > (1 + 1e-9) / (Ra - ra))
    throw Error(ErrorCode::Precondition, "bump invariants fail; rho# is not alpha-regular");
  return b;
}

struct BumpGradient {
  FractionalGradient grad;  // active levels only
  int k0 = 0;
  double level_norm = 0;  // (sum over all k of G_k^q)^(1/q), closed form
  double norm_TL = 0;     // closed form over all k
  double norm_Besov = 0;
  double measured_TL = 0;  // mixed norm of the truncated gradient
  double measured_Besov = 0;
  double C = 0;      // constant of the a-priori bound
  double bound = 0;  // C (R^alpha - r^alpha)^(-s/alpha) mu(B#(x,R))^(1/p)
};

/// The constant of the closed-form estimate, depending on s, q, alpha and the comparability c.
inline double bump_constant(double s, double q, double alpha, double c) {
  if (std::isinf(q)) return std::max(std::pow(2.0, 1 + s), std::pow(c, alpha));
  return std::pow(std::pow(2.0, q * (1 + s)) / (1 - std::pow(2.0, -s * q)) +
                      std::pow(c, alpha * q) / (1 - std::pow(2.0, -(alpha - s) * q)),
                  1 / q);
}

inline BumpGradient bump_gradient(const RegularizedMetric& reg, const QuasiMetricSpace& sp,
                                  const BumpFunction& bump, double s, double p, double q) {
  const double a = bump.alpha;
  if (!(s > 0) || !(p > 0) || !(q > 0)) throw Error(ErrorCode::Precondition, "need s, p, q > 0");
  if (s > a) throw Error(ErrorCode::Precondition, "s must not exceed alpha");
  if (s == a && !std::isinf(q))
    throw Error(ErrorCode::CriticalSmoothness, "s = alpha needs q = inf (the level series diverges)");
  BumpGradient out;
  const double c = reg.comparability;
  out.C = bump_constant(s, q, a, c);
  const PointSet supp = ball_members(reg.rho_sharp, bump.center, bump.R);
  const double m = sp.measure(supp);
  out.bound = out.C * std::pow(std::pow(bump.R, a) - std::pow(bump.r, a), -s / a) * std::pow(m, 1 / p);
  if (bump.holder == 0) return out;

  int e = 0;
  std::frexp(std::pow(bump.holder, 1 / a), &e);
  out.k0 = e;
  const int k0 = e;
  const double top = std::pow(c, a) * bump.holder;
  auto G = [&](int k) {
    return k >= k0 ? std::pow(2.0, -k * (a - s)) * top : std::pow(2.0, (k + 1) * s + 1);
  };
  if (std::isinf(q)) {
    out.level_norm = std::max(std::pow(2.0, k0 * s + 1), top * std::pow(2.0, -k0 * (a - s)));
  } else {
    const double lo = std::pow(2.0, q) * std::pow(2.0, k0 * s * q) / (1 - std::pow(2.0, -s * q));
    const double hi = std::pow(top, q) * std::pow(2.0, -k0 * (a - s) * q) / (1 - std::pow(2.0, -(a - s) * q));
    out.level_norm = std::pow(lo + hi, 1 / q);
  }
  // every point of the support carries the same level sequence, so both mixed norms factor
  out.norm_TL = out.level_norm * std::pow(m, 1 / p);
  out.norm_Besov = out.norm_TL;

  const auto L = level_decomposition(sp);
  const auto n = static_cast<Eigen::Index>(sp.size());
  for (int k : L.active) {
    Vector gk = Vector::Zero(n);
    for (PointId y : supp) gk(y) = G(k);
    out.grad.levels[k] = gk;
  }
  out.measured_TL = mixed_norm(sp, out.grad, p, q, Kind::TriebelLizorkin);
  out.measured_Besov = mixed_norm(sp, out.grad, p, q, Kind::Besov);
  return out;
}

// ---------------------------------------------------------------------------
// chains

struct ChainVariant {
  bool half_mass = false;
  double c0 = 2;
};

struct BumpChain {
  PointId center = 0;
  double r = 0;
  double alpha = 1;
  double c = 1;      // radius-scaling constant, > 1
  double delta = 0;  // every r_j exceeds delta r
  ChainVariant variant;
  double phi = 0;              // half-mass radius (half-mass variant)
  std::vector<double> radii;   // r_1 > ... > r_{J+1}
  std::vector<BumpFunction> functions;  // u_j = Phi_{r_{j+1}, r_j}, j = 1..J
  std::vector<double> ball_mass;        // mu(B#(x, r_j)), j = 1..J
  std::vector<double> norms;            // closed-form TL norm of each u_j's gradient
  std::vector<double> measured_C;       // norms_j / (2^j r^-s mu_j^(1/p))
  double analytic_C = 0;                // the constant the construction guarantees
  bool properties_hold = true;
  int J() const { return static_cast<int>(functions.size()); }
};

/// Index after which no point of X has rho#-distance in (r_inf, r_j): from there on u_j is the
/// same indicator for every j.
inline int stabilization_index(const Matrix& S, PointId x, double r1, double alpha, int cap = 60) {
  const double rinf = r1 * std::pow(0.5, 1 / alpha);
  for (int j = 1; j < cap; ++j) {
    const double rj = r1 * std::pow(0.5 + std::ldexp(1.0, -j), 1 / alpha);
    bool empty = true;
    for (Eigen::Index y = 0; y < S.cols(); ++y)
      if (S(x, y) > rinf && S(x, y) < rj) empty = false;
    if (empty) return j;
  }
  return cap;
}

inline BumpChain bump_chain(const RegularizedMetric& reg, const QuasiMetricSpace& sp,
                            PointId center, double r, double s, double p, double q,
                            ChainVariant variant = {}, std::optional<double> alpha = {}) {
  if (!(r > 0) || r > diameter(sp)) throw Error(ErrorCode::BadRadii, "chain radius must lie in (0, diam]");
  BumpChain ch;
  ch.center = center;
  ch.r = r;
  ch.variant = variant;
  ch.alpha = alpha ? *alpha : default_alpha(reg, s);
  const double a = ch.alpha;
  // the construction needs a strict c > 1; when rho# = rho exactly any c slightly above 1 works
  ch.c = std::max(reg.comparability, 1 + 0x1p-20);
  double top = r;
  if (variant.half_mass) {
    if (!(variant.c0 > 1)) throw Error(ErrorCode::HalfMassPreconditionFailed, "c0 must exceed 1");
    ch.phi = half_mass_radius(sp, center, r);
    if (!(r <= variant.c0 * ch.phi))
      throw Error(ErrorCode::HalfMassPreconditionFailed,
                  "r > c0 * phi(r): the ball is too concentrated at its center");
    top = ch.phi;
    ch.delta = 1 / (ch.c * variant.c0 * std::pow(2.0, 1 / a));
  } else {
    ch.delta = 1 / (std::pow(2.0, 1 / a) * ch.c);
  }
  const double r1 = top / ch.c;
  const int J = stabilization_index(reg.rho_sharp, center, r1, a);
  for (int j = 1; j <= J + 1; ++j) ch.radii.push_back(r1 * std::pow(0.5 + std::ldexp(1.0, -j), 1 / a));

  const double Cq = bump_constant(s, q, a, reg.comparability);
  ch.analytic_C = Cq * std::pow(ch.c, s) * std::pow(2.0, s / a);
  if (variant.half_mass) ch.analytic_C = Cq * 2 * std::pow(ch.c * variant.c0, s);

  const PointSet Brho = ball_members(sp, center, r);
  for (int j = 1; j <= J; ++j) {
    const double rj = ch.radii[j - 1], rj1 = ch.radii[j];
    auto u = bump_function(reg, sp, center, rj1, rj, a);
    const PointSet Bj = ball_members(reg.rho_sharp, center, rj);
    const double mj = sp.measure(Bj);
    const auto bg = bump_gradient(reg, sp, u, s, p, q);
    ch.ball_mass.push_back(mj);
    ch.norms.push_back(bg.norm_TL);
    ch.measured_C.push_back(bg.norm_TL / (std::ldexp(1.0, j) * std::pow(r, -s) * std::pow(mj, 1 / p)));
    // (a) inclusions and radius bounds, (c)/(d) support and plateau
    bool ok = is_subset(Bj, Brho) && rj1 < rj && rj1 > ch.delta * r && rj <= r;
    for (PointId y = 0; y < sp.size(); ++y) {
      const double d = reg.rho_sharp(center, y);
      if (d >= rj && u.values(y) != 0) ok = false;
      if (d <= rj1 && u.values(y) != 1) ok = false;
    }
    ch.properties_hold = ch.properties_hold && ok;
    ch.functions.push_back(std::move(u));
  }
  return ch;
}

struct Discrepancy {
  PointSet set;
  bool inner = true;
  double mass = 0;
  double required = 0;  // mu(B#(x, r_{j+1}))
};

/// j is 1-based.
inline Discrepancy discrepancy_set(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                   const BumpChain& ch, int j, double gamma) {
  if (j < 1 || j > ch.J()) throw Error(ErrorCode::Precondition, "chain index out of range");
  Discrepancy d;
  const PointSet inner = ball_members(reg.rho_sharp, ch.center, ch.radii[j]);
  d.required = sp.measure(inner);
  d.inner = std::abs(1 - gamma) >= 0.5;
  if (d.inner) {
    d.set = inner;
  } else {
    d.set = set_difference(ball_members(sp, ch.center, ch.r),
                           ball_members(reg.rho_sharp, ch.center, ch.radii[j - 1]));
  }
  d.mass = sp.measure(d.set);
  if (ch.variant.half_mass && d.mass < d.required * (1 - 1e-12))
    throw Error(ErrorCode::Precondition, "discrepancy set lighter than the inner ball");
  return d;
}

}  // namespace qmm
