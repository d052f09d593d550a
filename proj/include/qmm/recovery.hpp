#pragma once

#include <qmm/bumps.hpp>
#include <qmm/embeddings.hpp>
#include <qmm/geometry.hpp>
#include <qmm/gradients.hpp>
#include <qmm/regularization.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

// From measured embedding constants back to measure bounds. Every step follows a proof chain:
// bump chain -> embedding inequality on each u_j -> geometric decay of the chain measures ->
// iteration bound. The constant C' absorbed into theta is kept per ball.

namespace qmm {

// ---------------------------------------------------------------------------
// iteration bound

inline double iteration_bound(double p, double t, double theta) {
  if (!(p > 0) || !(t > p) || !std::isfinite(t))
    throw Error(ErrorCode::BadExponents, "need 0 < p < t < inf");
  if (!(theta > 0)) throw Error(ErrorCode::BadExponents, "theta must be positive");
  const double e1 = p * t / (t - p), e2 = p * t * t / ((t - p) * (t - p));
  return std::exp(-e1 * std::log(theta) - e2 * std::log(2.0));
}

/// Lower bound for mu(B) when theta = A mu(B)^gamma: solving mu >= (A mu^gamma)^-e1 2^-e2.
inline double iteration_bound_solved(double p, double t, double A, double gamma) {
  if (!(p > 0) || !(t > p)) throw Error(ErrorCode::BadExponents, "need 0 < p < t");
  const double e1 = p * t / (t - p), e2 = p * t * t / ((t - p) * (t - p));
  return std::exp((-e1 * std::log(A) - e2 * std::log(2.0)) / (1 + gamma * e1));
}

struct HypothesisCheck {
  bool holds = true;
  std::optional<int> first_violation;  // 1-based j
  std::vector<double> measures;        // mu(B#(x, r_j))
  int stable_from = 0;                 // measures constant from this j on
  std::string note;
};

/// Checks mu(B#(x, r_{j+1}))^(1/t) <= theta 2^j mu(B#(x, r_j))^(1/p) for the stored radii.
/// Once the measures are constant the right side only grows with j, so the inequality at the
/// last stored step covers every later one.
inline HypothesisCheck verify_iteration_hypothesis(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                                   PointId x, const std::vector<double>& radii,
                                                   double p, double t, double theta) {
  HypothesisCheck h;
  const bool dec = std::is_sorted(radii.rbegin(), radii.rend());
  const bool inc = std::is_sorted(radii.begin(), radii.end());
  if (!dec && !inc) throw Error(ErrorCode::Precondition, "radii must be monotone");
  for (double r : radii) h.measures.push_back(sp.measure(ball_members(reg.rho_sharp, x, r)));
  const int L = static_cast<int>(radii.size());
  h.stable_from = L;
  while (h.stable_from > 1 && h.measures[h.stable_from - 2] == h.measures[L - 1]) --h.stable_from;
  for (int j = 1; j < L; ++j) {
    const double lhs = std::pow(h.measures[j], 1 / t);
    const double rhs = theta * std::ldexp(1.0, j) * std::pow(h.measures[j - 1], 1 / p);
    if (!(lhs <= rhs * (1 + 1e-12))) {
      h.holds = false;
      h.first_violation = j;
      break;
    }
  }
  if (h.holds)
    h.note = "checked j=1.." + std::to_string(std::max(L - 1, 0)) + "; measures constant from j=" +
             std::to_string(h.stable_from) + ", later steps follow from the growth of 2^j";
  return h;
}

inline double extend_restricted(double C, double lambda, double Q) {
  if (!(lambda > 0 && lambda <= 1)) throw Error(ErrorCode::Precondition, "lambda must lie in (0,1]");
  if (!(C > 0) || !(Q > 0)) throw Error(ErrorCode::Precondition, "C and Q must be positive");
  return C * std::pow(lambda, Q);
}

// ---------------------------------------------------------------------------
// parameters, cases, batteries

enum class RecoveryMode { A, B, C, D };

inline const char* to_string(RecoveryMode m) {
  switch (m) {
    case RecoveryMode::A: return "a";
    case RecoveryMode::B: return "b";
    case RecoveryMode::C: return "c";
    case RecoveryMode::D: return "d";
  }
  return "?";
}

inline std::optional<RecoveryMode> parse_recovery_mode(const std::string& s) {
  for (auto m : {RecoveryMode::A, RecoveryMode::B, RecoveryMode::C, RecoveryMode::D})
    if (s == to_string(m)) return m;
  return {};
}

struct RecoveryParams {
  double s = 0.5, p = 1, q = kInf, sigma = 1, Q = 1;
  double c1 = 1, omega = 1;  // Trudinger form (mode c)
  double beta = 2;           // doubling mode c
};

/// The embedding inequality each mode consumes.
inline EmbeddingCase recovery_case(const RecoveryParams& P, RecoveryMode m, bool doubling) {
  EmbeddingCase c;
  c.theorem = doubling ? Theorem::Doub : Theorem::LB;
  c.s = P.s;
  c.p = P.p;
  c.q = P.q;
  c.Q = P.Q;
  c.sigma = P.sigma;
  c.c1 = P.c1;
  c.omega = P.omega;
  switch (m) {
    case RecoveryMode::A: c.regime = Regime::Sobolev; break;
    case RecoveryMode::B: c.regime = Regime::Poincare; break;
    case RecoveryMode::C: c.regime = Regime::Trudinger; break;
    case RecoveryMode::D: c.regime = Regime::Holder; break;
  }
  return c;
}

/// lambda used by the perfectness-based modes: the measured lambda*, kept strictly below
/// (C_rho C~_rho)^-2 as the restricted-ball argument needs.
inline double recovery_lambda(const QuasiMetricSpace& sp, const RegularizedMetric& reg) {
  const auto perf = uniform_perfectness(sp);
  if (!perf.perfect)
    throw Error(ErrorCode::NotPerfect, "space is not uniformly perfect (lambda* = " +
                                           std::to_string(perf.lambda_star) + ")");
  const double cap = std::pow(reg.C_rho * reg.C_tilde_rho, -2) * (1 - 0x1p-20);
  return std::min(perf.lambda_star, cap);
}

namespace detail {

inline double chain_c(const RegularizedMetric& reg) { return std::max(reg.comparability, 1 + 0x1p-20); }

/// Bump radii available at x: the rho#-distances from x.
inline std::vector<double> sharp_radii(const RegularizedMetric& reg, PointId x) {
  return distance_profile(reg.rho_sharp, x);
}

/// Radius R' for the single bump at x that separates z while staying inside B(x, r):
/// the largest rho#-distance from x not above min(rho#(x,z), r/c), or the nearest one.
inline double separating_radius(const RegularizedMetric& reg, PointId x, PointId z, double r) {
  const auto d = sharp_radii(reg, x);
  const double cap = std::min(reg.rho_sharp(x, z), r / chain_c(reg));
  double best = d.front();
  for (double v : d)
    if (v <= cap) best = std::max(best, v);
  return best;
}

inline Vector bump_values(const RegularizedMetric& reg, const QuasiMetricSpace& sp, PointId x, double R,
                          double s) {
  return bump_function(reg, sp, x, 0, R, default_alpha(reg, s)).values;
}

}  // namespace detail

/// Outer balls of the doubling scans: B(y, R) with R just above each distance from y, i.e.
/// the closed balls of the ladder of y.
inline std::vector<Ball> doubling_outer_balls(const QuasiMetricSpace& sp) {
  std::vector<Ball> out;
  for (PointId y = 0; y < sp.size(); ++y)
    for (double d : distance_profile(sp.rho(), y))
      out.push_back({y, std::nextafter(d, kInf), false});
  return out;
}

/// Inner balls of a doubling scan: (x, r) with r a distance from x and B(x, r) a proper subset
/// of `outer`.
inline std::vector<Ball> inner_balls(const QuasiMetricSpace& sp, const PointSet& outer) {
  std::vector<Ball> out;
  for (PointId x : outer)
    for (double r : distance_profile(sp.rho(), x)) {
      const PointSet B = ball_members(sp, x, r);
      if (B.size() < outer.size() && is_subset(B, outer)) out.push_back({x, r, false});
    }
  return out;
}

/// The witnesses each recovery mode needs the measured constant to cover.
inline Battery recovery_battery(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                const RecoveryParams& P, RecoveryMode m, bool doubling) {
  const EmbeddingCase c = recovery_case(P, m, doubling);
  double c0 = 0;
  if (m == RecoveryMode::B || m == RecoveryMode::C) {
    const double lam = recovery_lambda(sp, reg);
    c0 = reg.C_rho / (lam * lam);
  }
  return [&sp, &reg, c, m, doubling, c0](const Ball& ball) {
    std::vector<Ball> sources;
    if (doubling) sources = inner_balls(sp, ball_members(sp, ball.center, ball.radius));
    else sources = {ball};
    std::vector<Witness> out;
    if (m == RecoveryMode::D) {
      PointSet centers = doubling ? ball_members(sp, ball.center, ball.radius) : PointSet{ball.center};
      for (PointId x : centers)
        for (double R : detail::sharp_radii(reg, x))
          try {
            out.push_back({"bump0(" + std::to_string(x) + "," + std::to_string(R) + ")",
                           detail::bump_values(reg, sp, x, R, c.s)});
          } catch (const Error&) {
          }
      return out;
    }
    for (const auto& b : sources) {
      ChainVariant v;
      if (m != RecoveryMode::A) {
        v.half_mass = true;
        v.c0 = c0;
      }
      for (auto& w : chain_witnesses(reg, sp, b, c.s, c.p, c.q, v)) {
        w.name += "@(" + std::to_string(b.center) + "," + std::to_string(b.radius) + ")";
        out.push_back(std::move(w));
      }
    }
    return out;
  };
}

/// The measured constant a recovery mode consumes, over the ball family the recovery uses.
inline EmbeddingReport measure_for_recovery(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                            const RecoveryParams& P, RecoveryMode m, bool doubling,
                                            SeminormCache* cache = nullptr) {
  const auto balls = doubling ? doubling_outer_balls(sp) : critical_balls(sp);
  return best_constant(sp, reg, recovery_case(P, m, doubling), balls,
                       recovery_battery(sp, reg, P, m, doubling), {}, cache);
}

// ---------------------------------------------------------------------------
// reports

struct BallRecovery {
  PointId x = 0;
  double r = 0;
  PointId y = 0;  // doubling: outer center and radius
  double R = 0;
  double mu = 0;
  double C_prime = 0;  // measured constant times the chain factor
  double theta = 0;
  double bound = 0;    // lower bound on mu(B) (or on mu(B)/mu(B0) for doubling)
  double kappa = 0;
  bool restricted = true;
  bool hypothesis_holds = true;
  int chain_length = 0;
  PointId x0 = 0;  // mode d
  std::string note;
};

struct RecoveryReport {
  RecoveryMode mode = RecoveryMode::A;
  bool doubling = false;
  double exponent = 1;  // Q, or Q beta/(beta-1) for doubling mode c
  double kappa_recovered = 0;
  double kappa_restricted = 0;
  double kappa_exact = 0;
  double lambda = 1;
  bool sandwich_holds = false;
  std::vector<BallRecovery> per_ball;
  std::vector<std::string> notes;
};

namespace detail {

inline void common_preconditions(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                 const RecoveryParams& P, RecoveryMode m, double measured) {
  if (std::isinf(measured)) throw Error(ErrorCode::UnboundedConstant, "measured constant is infinite");
  if (!(measured > 0)) throw Error(ErrorCode::PreconditionFailed, "measured constant must be positive");
  if (!(P.s > 0) || !(P.p > 0) || !(P.q > 0) || !(P.Q > 0) || !(P.sigma >= 1))
    throw Error(ErrorCode::PreconditionFailed, "need s, p, q, Q > 0 and sigma >= 1");
  const double lb = index_bounds(sp, {}, &reg).smoothness_lb;
  if (P.s > lb || (P.s == lb && !std::isinf(P.q)))
    throw Error(ErrorCode::PreconditionFailed, "s exceeds the smoothness bound (equality needs q = inf)");
  const double sp_ = P.s * P.p;
  const bool ok = m == RecoveryMode::C ? std::abs(sp_ - P.Q) <= 1e-12 * P.Q
                  : m == RecoveryMode::D ? sp_ > P.Q
                                         : sp_ < P.Q;
  if (!ok) throw Error(ErrorCode::PreconditionFailed, "p outside the range of this mode");
}

struct ChainData {
  BumpChain ch;
  std::vector<double> Lp;  // ||u_j||_{L^p}
};

inline ChainData chain_data(const RegularizedMetric& reg, const QuasiMetricSpace& sp, PointId x, double r,
                            const RecoveryParams& P, ChainVariant v) {
  ChainData d{bump_chain(reg, sp, x, r, P.s, P.p, P.q, v), {}};
  for (const auto& u : d.ch.functions) d.Lp.push_back(lp_norm(sp, u.values, P.p));
  return d;
}

inline void check_hypothesis(const QuasiMetricSpace& sp, const RegularizedMetric& reg, BallRecovery& b,
                             const BumpChain& ch, double p, double t) {
  const auto h = verify_iteration_hypothesis(sp, reg, ch.center, ch.radii, p, t, b.theta);
  b.hypothesis_holds = h.holds;
  b.chain_length = ch.J();
  if (!h.holds)
    throw Error(ErrorCode::PreconditionFailed,
                "iteration hypothesis fails at j=" + std::to_string(*h.first_violation) + " for B(" +
                    std::to_string(ch.center) + ", " + std::to_string(ch.r) +
                    "): the measured constant does not cover this chain");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// lower Ahlfors regularity

inline RecoveryReport recover_lower_regularity(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                               const RecoveryParams& P, double measured, RecoveryMode m) {
  if (m != RecoveryMode::A) recovery_lambda(sp, reg);  // NotPerfect first, as the theorem requires
  detail::common_preconditions(sp, reg, P, m, measured);
  RecoveryReport rep;
  rep.mode = m;
  rep.exponent = P.Q;
  const double s = P.s, p = P.p, Q = P.Q;
  const double diam = diameter(sp);
  const double mu_X = sp.mu().sum();
  const double lam = m == RecoveryMode::A ? 1.0 : recovery_lambda(sp, reg);
  rep.lambda = lam;
  const double c0 = reg.C_rho / (lam * lam);
  double kappa_all = kInf, kappa_res = kInf;

  for (const auto& ball : critical_balls(sp)) {
    BallRecovery b;
    b.x = ball.center;
    b.r = ball.radius;
    const PointSet B = ball_members(sp, b.x, b.r);
    b.mu = sp.measure(B);

    if (m == RecoveryMode::D) {
      if (B.size() == sp.size()) {
        b.bound = mu_X;
        b.kappa = mu_X / std::pow(diam, Q);
        b.note = "B = X";
      } else {
        // two-point evaluation 1 = |Phi(x) - Phi(x0)| <= C_H rho(x,x0)^(s-Q/p) ||Phi||
        double best = 0;
        for (PointId z = 0; z < sp.size(); ++z) {
          if (z == b.x) continue;
          const double Rp = detail::separating_radius(reg, b.x, z, b.r);
          const auto bump = bump_function(reg, sp, b.x, 0, Rp, default_alpha(reg, s));
          const auto bg = bump_gradient(reg, sp, bump, s, p, P.q);
          const double v = std::pow(measured * std::pow(sp.d(b.x, z), s - Q / p) * bg.level_norm, -p);
          if (v > best) {
            best = v;
            b.x0 = z;
            b.C_prime = measured * bg.level_norm;
          }
        }
        b.bound = best;
        b.kappa = best / std::pow(b.r, Q);
      }
      kappa_all = std::min(kappa_all, b.kappa);
      rep.per_ball.push_back(b);
      continue;
    }

    const bool half = m != RecoveryMode::A;
    if (half) {
      const double phi = half_mass_radius(sp, b.x, b.r);
      b.restricted = b.r <= c0 * phi;
      if (!b.restricted) {
        b.note = "unrestricted: covered by extension";
        rep.per_ball.push_back(b);
        continue;
      }
    }
    ChainVariant v;
    if (half) {
      v.half_mass = true;
      v.c0 = c0;
    }
    const auto cd = detail::chain_data(reg, sp, b.x, b.r, P, v);
    const auto& ch = cd.ch;
    if (half)  // both branches of the discrepancy set carry the inner ball's mass
      for (int j = 1; j <= ch.J(); ++j) {
        discrepancy_set(sp, reg, ch, j, 0.0);
        discrepancy_set(sp, reg, ch, j, 1.0);
      }
    double K = 0;
    double A = 0, gamma = 0, t = 0;
    for (int j = 1; j <= ch.J(); ++j) {
      const double mj = ch.ball_mass[j - 1], Nj = ch.norms[j - 1];
      const double scale = std::ldexp(1.0, j);
      switch (m) {
        case RecoveryMode::A: K = std::max(K, (std::pow(b.r, s) * Nj + cd.Lp[j - 1]) / (scale * std::pow(mj, 1 / p))); break;
        case RecoveryMode::B: K = std::max(K, 2 * std::pow(b.r, s) * Nj / (scale * std::pow(mj, 1 / p))); break;
        case RecoveryMode::C: K = std::max(K, 2 * Nj / (P.c1 * scale * std::pow(mj, s / Q))); break;
        default: break;
      }
    }
    if (m == RecoveryMode::C) {
      t = 2 * Q / s;
      gamma = s / (2 * Q);
      A = std::pow(2 * Q / (s * P.omega), 1 / P.omega) * std::pow(measured, s / (2 * Q)) * K;
      b.C_prime = A;
    } else {
      t = p_star(Q, p, s);
      gamma = 1 / t;
      b.C_prime = measured * K;
      A = b.C_prime * std::pow(b.r, -Q / p);
    }
    b.theta = A * std::pow(b.mu, gamma);
    detail::check_hypothesis(sp, reg, b, ch, p, t);
    b.bound = iteration_bound_solved(p, t, A, gamma);
    b.kappa = b.bound / std::pow(b.r, Q);
    (half ? kappa_res : kappa_all) = std::min(half ? kappa_res : kappa_all, b.kappa);
    rep.per_ball.push_back(b);
  }

  if (m == RecoveryMode::B || m == RecoveryMode::C) {
    if (!std::isfinite(kappa_res)) throw Error(ErrorCode::PreconditionFailed, "no restricted ball");
    rep.kappa_restricted = kappa_res;
    rep.kappa_recovered = extend_restricted(kappa_res, lam, Q);
    rep.notes.push_back("restricted balls (r <= C_rho phi(r)/lambda^2) extended by lambda^Q");
  } else {
    rep.kappa_recovered = kappa_all;
    rep.kappa_restricted = kappa_all;
  }
  if (m == RecoveryMode::D)
    rep.notes.push_back("x0 ranges over all admissible points (the annulus choice is one of them)");
  rep.notes.push_back("iteration hypothesis checked up to chain stabilization");
  rep.kappa_exact = regularity_fit(sp, Q).kappa;
  rep.sandwich_holds = rep.kappa_recovered > 0 && rep.kappa_recovered <= rep.kappa_exact;
  return rep;
}

// ---------------------------------------------------------------------------
// doubling

inline RecoveryReport recover_doubling(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                       const RecoveryParams& P, double measured, RecoveryMode m) {
  if (m != RecoveryMode::A) recovery_lambda(sp, reg);
  detail::common_preconditions(sp, reg, P, m, measured);
  if (m == RecoveryMode::C && !(P.beta > 1)) throw Error(ErrorCode::PreconditionFailed, "beta must exceed 1");
  RecoveryReport rep;
  rep.mode = m;
  rep.doubling = true;
  const double s = P.s, p = P.p, Q = P.Q;
  rep.exponent = m == RecoveryMode::C ? Q * P.beta / (P.beta - 1) : Q;
  const double Qe = rep.exponent;
  const double lam = m == RecoveryMode::A ? 1.0 : recovery_lambda(sp, reg);
  rep.lambda = lam;
  const double c0 = reg.C_rho / (lam * lam);
  const std::size_t n = sp.size();

  std::vector<detail::BallLadder> lad;
  for (PointId x = 0; x < n; ++x) lad.push_back(detail::ball_ladder(sp, x));

  // one chain per inner set, built at the right end of its constancy interval
  std::map<std::pair<PointId, std::size_t>, std::optional<detail::ChainData>> chains;
  auto chain_for = [&](PointId x, std::size_t i) -> const std::optional<detail::ChainData>& {
    auto key = std::make_pair(x, i);
    auto it = chains.find(key);
    if (it != chains.end()) return it->second;
    std::optional<detail::ChainData> cd;
    ChainVariant v;
    if (m == RecoveryMode::B || m == RecoveryMode::C) {
      v.half_mass = true;
      v.c0 = c0;
    }
    try {
      cd = detail::chain_data(reg, sp, x, lad[x].hi[i], P, v);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HalfMassPreconditionFailed) throw;
    }
    return chains.emplace(key, std::move(cd)).first->second;
  };

  double kappa_all = kInf, kappa_res = kInf;
  for (PointId x = 0; x < n; ++x) {
    const auto& Lx = lad[x];
    for (std::size_t i = 0; i + 1 < Lx.lo.size(); ++i) {  // last interval: B = X, trivial
      for (PointId y = 0; y < n; ++y) {
        const auto& Ly = lad[y];
        for (std::size_t j = 1; j < Ly.lo.size(); ++j) {
          if (!is_subset(Lx.members[i], Ly.members[j])) continue;
          if (Lx.members[i].size() == Ly.members[j].size()) continue;  // same set: ratio 1
          double factor;
          if (Lx.lo[i] < Ly.hi[j] && Ly.lo[j] < Lx.hi[i]) factor = 1;
          else if (Lx.hi[i] <= Ly.lo[j]) factor = std::pow(Ly.lo[j] / Lx.hi[i], Qe);
          else continue;

          BallRecovery b;
          b.x = x;
          b.r = Lx.hi[i];
          b.y = y;
          b.R = std::nextafter(Ly.lo[j], kInf);
          b.mu = Lx.mass[i];
          const double m0 = Ly.mass[j];
          const double msig = ball_measure(sp, y, P.sigma * b.R);

          if (m == RecoveryMode::D) {
            double best = 0;
            for (PointId z : Ly.members[j]) {
              if (z == x) continue;
              const double Rp = detail::separating_radius(reg, x, z, b.r);
              const auto bump = bump_function(reg, sp, x, 0, Rp, default_alpha(reg, s));
              const auto bg = bump_gradient(reg, sp, bump, s, p, P.q);
              const double v = std::pow(measured * std::pow(sp.d(x, z), s - Q / p) *
                                            std::pow(b.R, Q / p) * bg.level_norm, -p) * msig;
              if (v > best) {
                best = v;
                b.x0 = z;
              }
            }
            b.bound = best / m0;
            b.kappa = b.bound * factor;
            kappa_all = std::min(kappa_all, b.kappa);
            rep.per_ball.push_back(b);
            continue;
          }

          const bool half = m != RecoveryMode::A;
          if (half) {
            b.restricted = b.r <= c0 * half_mass_radius(sp, x, b.r);
            if (!b.restricted) continue;  // covered by the extension
          }
          const auto& cd = chain_for(x, i);
          if (!cd) continue;
          const auto& ch = cd->ch;
          double K = 0;
          for (int jj = 1; jj <= ch.J(); ++jj) {
            const double mj = ch.ball_mass[jj - 1], Nj = ch.norms[jj - 1];
            const double sc = std::ldexp(1.0, jj);
            switch (m) {
              case RecoveryMode::A:
                K = std::max(K, (std::pow(b.R, s) * Nj + cd->Lp[jj - 1]) / (sc * std::pow(mj, 1 / p)));
                break;
              case RecoveryMode::B: K = std::max(K, 2 * std::pow(b.R, s) * Nj / (sc * std::pow(mj, 1 / p))); break;
              case RecoveryMode::C:
                K = std::max(K, 2 * std::pow(b.R, s) * Nj / (P.c1 * sc * std::pow(mj, s / Q)));
                break;
              default: break;
            }
          }
          double t;
          if (m == RecoveryMode::C) {
            const double bq = P.beta * Q;
            t = bq / s;
            b.C_prime = std::pow(bq / (s * P.omega), 1 / P.omega) * std::pow(measured, s / bq) * K;
            b.theta = b.C_prime * std::pow(m0, s / bq) * std::pow(msig, -s / Q);
          } else {
            t = p_star(Q, p, s);
            b.C_prime = measured * K;
            b.theta = b.C_prime * std::pow(msig, -s / Q);
          }
          detail::check_hypothesis(sp, reg, b, ch, p, t);
          b.bound = iteration_bound(p, t, b.theta) / m0;
          b.kappa = b.bound * factor;
          (half ? kappa_res : kappa_all) = std::min(half ? kappa_res : kappa_all, b.kappa);
          rep.per_ball.push_back(b);
        }
      }
    }
  }
  if (m == RecoveryMode::B || m == RecoveryMode::C) {
    if (!std::isfinite(kappa_res)) throw Error(ErrorCode::PreconditionFailed, "no restricted pair");
    rep.kappa_restricted = kappa_res;
    rep.kappa_recovered = extend_restricted(kappa_res, lam, Qe);
    rep.notes.push_back("restricted pairs extended by lambda^exponent");
  } else {
    rep.kappa_recovered = std::isfinite(kappa_all) ? kappa_all : 1.0;
    rep.kappa_restricted = rep.kappa_recovered;
  }
  if (m == RecoveryMode::C)
    rep.notes.push_back("exponent degraded to Q beta/(beta-1) = " + std::to_string(Qe));
  rep.kappa_exact = doubling_analysis(sp, Qe).kappa_Q;
  rep.sandwich_holds = rep.kappa_recovered > 0 && rep.kappa_recovered <= rep.kappa_exact;
  return rep;
}

// ---------------------------------------------------------------------------
// triviality scan

struct SpaceFamily {
  std::string name;
  std::function<QuasiMetricSpace(int)> make;
};

struct TrivialityRow {
  int resolution = 0;
  double s = 0;
  double value = 0;
  std::size_t points = 0;
};

/// The two points realising the diameter (first such pair in index order).
inline std::pair<PointId, PointId> default_endpoints(const QuasiMetricSpace& sp) {
  std::pair<PointId, PointId> best{0, 1};
  double d = -1;
  for (PointId x = 0; x < sp.size(); ++x)
    for (PointId y = x + 1; y < sp.size(); ++y)
      if (sp.d(x, y) > d) {
        d = sp.d(x, y);
        best = {x, y};
      }
  return best;
}

inline double transition_value(const QuasiMetricSpace& sp, double s, double p, double q) {
  const auto [a, b] = default_endpoints(sp);
  Vector u = Vector::Zero(static_cast<Eigen::Index>(sp.size()));
  u(b) = 1;
  std::vector<bool> fixed(sp.size(), false);
  fixed[a] = fixed[b] = true;
  return minimal_transition(sp, u, fixed, {s, p, q, Kind::TriebelLizorkin}).value;
}

inline std::vector<TrivialityRow> triviality_scan(const SpaceFamily& fam, const std::vector<int>& resolutions,
                                                  const std::vector<double>& s_grid, double p, double q) {
  if (p < 1 || q < 1) throw Error(ErrorCode::Precondition, "the scan needs p, q >= 1");
  std::vector<TrivialityRow> rows;
  for (int res : resolutions) {
    const auto sp = fam.make(res);
    for (double s : s_grid) rows.push_back({res, s, transition_value(sp, s, p, q), sp.size()});
  }
  return rows;
}

}  // namespace qmm
