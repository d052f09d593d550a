#pragma once

#include <qmm/bumps.hpp>
#include <qmm/geometry.hpp>
#include <qmm/gradients.hpp>
#include <qmm/regularization.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

// Embedding inequalities evaluated term by term. Constants are never assumed: every check
// returns the bracketed quantities of the inequality and the caller fits the constant.

namespace qmm {

enum class Theorem { VLocal, LB, Doub, Eps, Global };
enum class Regime { Sobolev, Poincare, Trudinger, Holder };

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::VLocal: return "v";
    case Theorem::LB: return "lb";
    case Theorem::Doub: return "doub";
    case Theorem::Eps: return "eps";
    case Theorem::Global: return "global";
  }
  return "?";
}

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Sobolev: return "sobolev";
    case Regime::Poincare: return "poincare";
    case Regime::Trudinger: return "trudinger";
    case Regime::Holder: return "holder";
  }
  return "?";
}

inline std::optional<Theorem> parse_theorem(const std::string& s) {
  for (auto t : {Theorem::VLocal, Theorem::LB, Theorem::Doub, Theorem::Eps, Theorem::Global})
    if (s == to_string(t)) return t;
  return {};
}

inline std::optional<Regime> parse_regime(const std::string& s) {
  for (auto r : {Regime::Sobolev, Regime::Poincare, Regime::Trudinger, Regime::Holder})
    if (s == to_string(r)) return r;
  return {};
}

struct EmbeddingCase {
  Theorem theorem = Theorem::LB;
  Regime regime = Regime::Poincare;
  double s = 0.5, p = 1, q = kInf, Q = 1;
  double sigma = 1;
  double b = 0;        // V(sigma B0, Q, b); 0 means "measure it from the space"
  double epsilon = 0;  // Besov theorem only
  double c1 = 1, omega = 1;

  /// Exponent that plays the role of s in the exponent bookkeeping (epsilon for Besov).
  double smoothness() const { return theorem == Theorem::Eps ? epsilon : s; }

  SeminormSpec seminorm() const {
    switch (theorem) {
      case Theorem::VLocal: return {s, p, kInf, Kind::Sobolev};
      case Theorem::Eps: return {s, p, q, Kind::Besov};
      default: return {s, p, q, Kind::TriebelLizorkin};
    }
  }

  double p_star() const { return qmm::p_star(Q, p, smoothness()); }
};

inline void check_regime(const EmbeddingCase& c) {
  if (!(c.s > 0) || !(c.p > 0) || !(c.q > 0) || !(c.Q > 0))
    throw Error(ErrorCode::RegimeMismatch, "s, p, q, Q must be positive");
  if (c.theorem == Theorem::Eps && !(c.epsilon > 0 && c.epsilon < c.s))
    throw Error(ErrorCode::RegimeMismatch, "epsilon must lie in (0, s)");
  const double sp = c.smoothness() * c.p;
  switch (c.regime) {
    case Regime::Sobolev:
    case Regime::Poincare:
      if (!(sp < c.Q)) throw Error(ErrorCode::RegimeMismatch, "sobolev/poincare need s p < Q");
      break;
    case Regime::Trudinger:
      if (std::abs(sp - c.Q) > 1e-12 * c.Q)
        throw Error(ErrorCode::RegimeMismatch, "trudinger needs p = Q/s");
      if (c.theorem == Theorem::Global) throw Error(ErrorCode::RegimeMismatch, "no global trudinger form");
      break;
    case Regime::Holder:
      if (!(sp > c.Q)) throw Error(ErrorCode::RegimeMismatch, "holder needs p > Q/s");
      if (c.theorem == Theorem::Global) throw Error(ErrorCode::RegimeMismatch, "no global holder form");
      break;
  }
}

// ---------------------------------------------------------------------------
// seminorms on sub-balls

/// Memo of minimal seminorms keyed by (point set, restricted values, spec). Witness functions
/// are global vectors, so their restrictions to equal sets coincide and are solved once.
class SeminormCache {
 public:
  double get(const QuasiMetricSpace& sp, const PointSet& on, const Vector& u, const SeminormSpec& spec) {
    if (on.size() < 2) return 0;
    std::vector<double> vals;
    vals.reserve(on.size());
    for (PointId x : on) vals.push_back(u(x));
    Key key{on, vals, spec.s, spec.p, spec.q, static_cast<int>(spec.kind)};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const QuasiMetricSpace sub = sp.subspace(on);
    // TL with q = inf has the same minimum as the single-gradient program (sup over levels of
    // a fractional gradient is an s-gradient and vice versa), which is far smaller.
    SeminormSpec solve = spec;
    if (spec.kind == Kind::TriebelLizorkin && std::isinf(spec.q)) solve.kind = Kind::Sobolev;
    const Vector v_on = Vector::Map(vals.data(), static_cast<Eigen::Index>(vals.size()));
    double v = 0;
    if (solve.kind == Kind::Sobolev && solve.p == 1) {
      v = sobolev_l1_minimum(sub, v_on, solve.s);
    } else {
      opt::Options o;
      o.gap_rel = 1e-10;
      v = minimal_seminorm(sub, v_on, solve, o).value;
    }
    memo_.emplace(std::move(key), v);
    return v;
  }
  std::size_t size() const { return memo_.size(); }

 private:
  using Key = std::tuple<PointSet, std::vector<double>, double, double, double, int>;
  std::map<Key, double> memo_;
};

inline Gradient restrict_gradient(const Gradient& g, const PointSet& on) {
  auto take = [&](const Vector& v) {
    Vector out(static_cast<Eigen::Index>(on.size()));
    for (std::size_t i = 0; i < on.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(on[i]);
    return out;
  };
  if (auto* s = std::get_if<SingleGradient>(&g)) return SingleGradient{take(s->g)};
  FractionalGradient out;
  for (const auto& [k, v] : std::get<FractionalGradient>(g).levels) out.levels[k] = take(v);
  return out;
}

inline Vector restrict_values(const Vector& u, const PointSet& on) {
  Vector out(static_cast<Eigen::Index>(on.size()));
  for (std::size_t i = 0; i < on.size(); ++i) out(static_cast<Eigen::Index>(i)) = u(on[i]);
  return out;
}

/// Seminorm of u on `on`: from an explicit gradient (checked) or by minimisation.
inline double seminorm_on(const QuasiMetricSpace& sp, const PointSet& on, const Vector& u,
                          const SeminormSpec& spec, const Gradient* grad, SeminormCache* cache) {
  if (grad) {
    const QuasiMetricSpace sub = sp.subspace(on);
    const Gradient g = restrict_gradient(*grad, on);
    const Vector v = restrict_values(u, on);
    if (!verify_gradient(sub, v, spec.s, g).valid)
      throw Error(ErrorCode::Precondition, "supplied gradient is not a gradient of u on sigma B0");
    return gradient_norm(sub, g, spec);
  }
  SeminormCache local;
  return (cache ? *cache : local).get(sp, on, u, spec);
}

// ---------------------------------------------------------------------------
// left-hand sides

struct ScalarFit {
  double value = 0;
  double gamma = 0;
};

/// inf over gamma of (sum_{on} mu |u - gamma|^t)^(1/t), optionally averaged.
inline ScalarFit best_constant_fit(const QuasiMetricSpace& sp, const PointSet& on, const Vector& u,
                                   double t, bool averaged) {
  if (on.empty()) throw Error(ErrorCode::EmptyBall, "empty ball");
  const double m = averaged ? sp.measure(on) : 1.0;
  auto f = [&](double g) {
    double a = 0;
    for (PointId x : on) a += sp.mass(x) * std::pow(std::abs(u(x) - g), t);
    return a;
  };
  double lo = kInf, hi = -kInf;
  for (PointId x : on) {
    lo = std::min(lo, u(x));
    hi = std::max(hi, u(x));
  }
  ScalarFit best{kInf, lo};
  auto consider = [&](double g) {
    const double v = f(g);
    if (v < best.value) best = {v, g};
  };
  if (t < 1) {
    // concave between consecutive values: the minimum sits at one of them
    for (PointId x : on) consider(u(x));
  } else {
    const double phi = (std::sqrt(5.0) - 1) / 2;
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = f(d);
      }
    }
    consider(lo);
    consider(hi);
    consider((a + b) / 2);
    for (PointId x : on) consider(u(x));  // exact for t = 1 (weighted median)
  }
  best.value = std::pow(best.value / m, 1 / t);
  return best;
}

// ---------------------------------------------------------------------------
// local inequalities

struct LocalTerms {
  double lhs = 0;
  std::vector<double> rhs;  // the theorem's bracketed terms, constants stripped
  double gamma = 0;         // minimiser in the Poincare regime
  double seminorm = 0;      // norm on sigma B0 used in the terms
  double b = 0;             // V-condition constant used (theorems v and eps)
};

namespace detail {

struct BallSets {
  PointSet B0, sB0;
  double R0 = 0;
  double mass_sB0 = 0;
};

inline BallSets ball_sets(const QuasiMetricSpace& sp, const Ball& ball, double sigma) {
  if (!(ball.radius > 0) || !std::isfinite(ball.radius)) throw Error(ErrorCode::BadRadii, "R0 must be positive");
  if (!(sigma > 0)) throw Error(ErrorCode::Precondition, "sigma must be positive");
  BallSets bs;
  bs.R0 = ball.radius;
  bs.B0 = ball_members(sp, ball.center, ball.radius);
  bs.sB0 = ball_members(sp, ball.center, sigma * ball.radius);
  if (bs.B0.empty() || bs.sB0.empty()) throw Error(ErrorCode::EmptyBall, "empty ball");
  bs.mass_sB0 = sp.measure(bs.sB0);
  return bs;
}

inline double v_condition_b(const QuasiMetricSpace& sp, const EmbeddingCase& c, const Ball& ball) {
  if (c.b > 0) return c.b;
  return v_constant(sp, c.Q, ball.center, ball.radius, std::max(c.sigma, 1.0)).kappa;
}

inline bool uses_b(Theorem t) { return t == Theorem::VLocal || t == Theorem::Eps; }

}  // namespace detail

/// GBLS (sobolev) / GBLP (poincare) on the whole space.
inline LocalTerms global_check(const QuasiMetricSpace& sp, Regime mode, const Vector& u, double s,
                               double p, double q, double Q, const Gradient* grad = nullptr,
                               SeminormCache* cache = nullptr) {
  if (mode != Regime::Sobolev && mode != Regime::Poincare)
    throw Error(ErrorCode::RegimeMismatch, "global forms exist for sobolev and poincare only");
  if (!(s * p < Q)) throw Error(ErrorCode::RegimeMismatch, "global forms need s p < Q");
  const double ps = qmm::p_star(Q, p, s);
  const PointSet X = all_points(sp.size());
  LocalTerms t;
  t.seminorm = seminorm_on(sp, X, u, {s, p, q, Kind::TriebelLizorkin}, grad, cache);
  if (mode == Regime::Sobolev) {
    t.lhs = lp_norm(sp, u, ps, X);
    t.rhs = {t.seminorm, std::pow(diameter(sp), -s) * lp_norm(sp, u, p, X)};
  } else {
    const auto fit = best_constant_fit(sp, X, u, ps, false);
    t.lhs = fit.value;
    t.gamma = fit.gamma;
    t.rhs = {t.seminorm};
  }
  return t;
}

inline LocalTerms local_embedding_check(const QuasiMetricSpace& sp, const EmbeddingCase& c,
                                        const Ball& ball, const Vector& u,
                                        const Gradient* grad = nullptr, SeminormCache* cache = nullptr) {
  if (c.regime != Regime::Sobolev && c.regime != Regime::Poincare)
    throw Error(ErrorCode::RegimeMismatch, "local check covers sobolev and poincare");
  check_regime(c);
  if (c.theorem == Theorem::Global) return global_check(sp, c.regime, u, c.s, c.p, c.q, c.Q, grad, cache);

  const auto bs = detail::ball_sets(sp, ball, c.sigma);
  const double ps = c.p_star();
  const double R0 = bs.R0, p = c.p, Q = c.Q, s = c.s;
  LocalTerms t;
  t.seminorm = seminorm_on(sp, bs.sB0, u, c.seminorm(), grad, cache);
  const double Lp = lp_norm(sp, u, p, bs.sB0);
  const bool averaged = c.theorem != Theorem::Doub;
  if (c.regime == Regime::Sobolev) {
    t.lhs = averaged ? lp_average(sp, u, ps, bs.B0) : lp_norm(sp, u, ps, bs.B0);
  } else {
    const auto fit = best_constant_fit(sp, bs.B0, u, ps, averaged);
    t.lhs = fit.value;
    t.gamma = fit.gamma;
  }

  double lead = 0, tail = 0;  // factor on the seminorm, factor on the L^p term
  switch (c.theorem) {
    case Theorem::VLocal:
      // [mu(sB0)/(b R0^Q)]^(1/p) R0^s (avg g^p)^(1/p) = b^(-1/p) R0^(s - Q/p) ||g||_p
      t.b = detail::v_condition_b(sp, c, ball);
      lead = std::pow(t.b, -1 / p) * std::pow(R0, s - Q / p);
      tail = std::pow(bs.mass_sB0, -1 / p);
      break;
    case Theorem::LB:
      lead = std::pow(R0, s - Q / p);
      tail = std::pow(R0, -Q / p);
      break;
    case Theorem::Doub:
      lead = std::pow(bs.mass_sB0, -s / Q) * std::pow(R0, s);
      tail = std::pow(bs.mass_sB0, -s / Q);
      break;
    case Theorem::Eps:
      t.b = detail::v_condition_b(sp, c, ball);
      lead = std::pow(t.b, -1 / p) * std::pow(R0, s - Q / p);
      tail = std::pow(t.b, -1 / p) * std::pow(R0, -Q / p);
      break;
    case Theorem::Global: break;
  }
  t.rhs = {lead * t.seminorm};
  if (c.regime == Regime::Sobolev) t.rhs.push_back(tail * Lp);
  return t;
}

/// Average over B0 of exp((c1 |u - u_B0| / denominator)^omega); the denominator is passed in.
inline double trudinger_integral(const QuasiMetricSpace& sp, const PointSet& B0, const Vector& u,
                                 double c1, double omega, double denominator) {
  if (B0.empty()) throw Error(ErrorCode::EmptyBall, "empty ball");
  if (!(denominator > 0)) throw Error(ErrorCode::ZeroSeminorm, "denominator must be positive");
  const double m = sp.measure(B0);
  double avg = 0;
  for (PointId x : B0) avg += sp.mass(x) * u(x);
  avg /= m;
  double acc = 0;
  for (PointId x : B0) acc += sp.mass(x) * std::exp(std::pow(c1 * std::abs(u(x) - avg) / denominator, omega));
  return acc / m;
}

struct TrudingerTerms {
  double integral = 0;
  double denominator = 0;
  double seminorm = 0;
};

inline TrudingerTerms trudinger_check(const QuasiMetricSpace& sp, const EmbeddingCase& c, const Ball& ball,
                                      const Vector& u, const Gradient* grad = nullptr,
                                      SeminormCache* cache = nullptr) {
  if (c.regime != Regime::Trudinger) throw Error(ErrorCode::RegimeMismatch, "not the trudinger regime");
  check_regime(c);
  const auto bs = detail::ball_sets(sp, ball, c.sigma);
  TrudingerTerms t;
  t.seminorm = seminorm_on(sp, bs.sB0, u, c.seminorm(), grad, cache);
  if (!(t.seminorm > 0)) throw Error(ErrorCode::ZeroSeminorm, "u has zero seminorm on sigma B0");
  double omega = c.omega;
  switch (c.theorem) {
    case Theorem::VLocal:
      t.denominator = t.seminorm * std::pow(detail::v_condition_b(sp, c, ball), -c.s / c.Q);
      break;
    case Theorem::LB: t.denominator = t.seminorm; break;
    case Theorem::Doub:
      t.denominator = std::pow(bs.R0, c.s) * t.seminorm / std::pow(bs.mass_sB0, c.s / c.Q);
      break;
    case Theorem::Eps:
      t.denominator = std::pow(bs.R0, c.s - c.epsilon) * t.seminorm *
                      std::pow(detail::v_condition_b(sp, c, ball), -1 / c.p);
      omega = 1;
      break;
    case Theorem::Global: break;
  }
  t.integral = trudinger_integral(sp, bs.B0, u, c.c1, omega, t.denominator);
  return t;
}

struct HolderTerms {
  double max_ratio = 0;
  double factor = 0;    // the norm factor multiplying rho^(s - Q/p)
  double exponent = 0;  // s - Q/p
  PointId x = 0, y = 0;
};

inline HolderTerms holder_check(const QuasiMetricSpace& sp, const EmbeddingCase& c, const Ball& ball,
                                const Vector& u, const Gradient* grad = nullptr,
                                SeminormCache* cache = nullptr) {
  if (c.regime != Regime::Holder) throw Error(ErrorCode::RegimeMismatch, "not the holder regime");
  check_regime(c);
  HolderTerms h;
  h.exponent = c.s - c.Q / c.p;
  PointSet pairs_on;
  if (c.theorem == Theorem::LB) {
    pairs_on = all_points(sp.size());
    h.factor = seminorm_on(sp, pairs_on, u, c.seminorm(), grad, cache);
  } else {
    const auto bs = detail::ball_sets(sp, ball, c.sigma);
    pairs_on = bs.B0;
    const double N = seminorm_on(sp, bs.sB0, u, c.seminorm(), grad, cache);
    switch (c.theorem) {
      case Theorem::VLocal:
      case Theorem::Eps:
        h.factor = std::pow(detail::v_condition_b(sp, c, ball), -1 / c.p) * N;
        break;
      case Theorem::Doub:
        h.factor = std::pow(bs.R0, c.Q / c.p) / std::pow(bs.mass_sB0, 1 / c.p) * N;
        break;
      default: break;
    }
  }
  for (PointId x : pairs_on)
    for (PointId y : pairs_on) {
      if (x == y) continue;
      const double osc = std::abs(u(x) - u(y));
      if (osc == 0) continue;
      const double den = std::pow(sp.d(x, y), h.exponent) * h.factor;
      const double r = den > 0 ? osc / den : kInf;
      if (r > h.max_ratio) {
        h.max_ratio = r;
        h.x = x;
        h.y = y;
      }
    }
  return h;
}

// ---------------------------------------------------------------------------
// batteries and best constants

struct Witness {
  std::string name;
  Vector u;
};

using Battery = std::function<std::vector<Witness>(const Ball&)>;

struct BatteryOptions {
  bool plain_chain = true;
  double half_mass_c0 = 0;  // > 1 adds the half-mass chain with this c0
  double bump_lambda = 0;   // > 0 adds the single bump Phi_{0, lambda r / c}
  bool indicators = true;
  int randoms = 2;
  std::uint64_t seed = 1;
};

/// Chain functions of B(center, r) (plain or half-mass), empty when the construction refuses.
inline std::vector<Witness> chain_witnesses(const RegularizedMetric& reg, const QuasiMetricSpace& sp,
                                            const Ball& ball, double s, double p, double q,
                                            ChainVariant variant) {
  std::vector<Witness> out;
  const double r = std::min(ball.radius, diameter(sp));
  try {
    const auto ch = bump_chain(reg, sp, ball.center, r, s, p, q, variant);
    const std::string tag = variant.half_mass ? "half_mass_chain" : "chain";
    for (int j = 1; j <= ch.J(); ++j)
      out.push_back({tag + "[" + std::to_string(j) + "]", ch.functions[j - 1].values});
  } catch (const Error&) {
  }
  return out;
}

inline Battery default_battery(const RegularizedMetric& reg, const QuasiMetricSpace& sp,
                               const EmbeddingCase& c, BatteryOptions opt = {}) {
  const auto n = static_cast<Eigen::Index>(sp.size());
  std::vector<Witness> randoms;
  std::mt19937_64 gen(opt.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < opt.randoms; ++k) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = U(gen);
    randoms.push_back({"random#" + std::to_string(k), v});
  }
  return [&reg, &sp, c, opt, randoms, n](const Ball& ball) {
    std::vector<Witness> out;
    if (opt.plain_chain)
      for (auto& w : chain_witnesses(reg, sp, ball, c.s, c.p, c.q, {})) out.push_back(std::move(w));
    if (opt.half_mass_c0 > 1)
      for (auto& w : chain_witnesses(reg, sp, ball, c.s, c.p, c.q, {true, opt.half_mass_c0}))
        out.push_back(std::move(w));
    if (opt.bump_lambda > 0 && ball.radius <= diameter(sp)) {
      const double rr = opt.bump_lambda * ball.radius / std::max(reg.comparability, 1 + 0x1p-20);
      try {
        out.push_back({"bump0", bump_function(reg, sp, ball.center, 0, rr, default_alpha(reg, c.s)).values});
      } catch (const Error&) {
      }
    }
    if (opt.indicators) {
      auto indicator = [&](const PointSet& S) {
        Vector v = Vector::Zero(n);
        for (PointId x : S) v(x) = 1;
        return v;
      };
      out.push_back({"indicator(B0)", indicator(ball_members(sp, ball.center, ball.radius))});
      out.push_back({"indicator(B0/2)", indicator(ball_members(sp, ball.center, ball.radius / 2))});
      out.push_back({"point", indicator({ball.center})});
    }
    for (const auto& w : randoms) out.push_back(w);
    // drop duplicates, first name wins
    std::vector<Witness> uniq;
    for (auto& w : out) {
      bool dup = false;
      for (const auto& v : uniq) dup = dup || (v.u.size() == w.u.size() && v.u == w.u);
      if (!dup) uniq.push_back(std::move(w));
    }
    return uniq;
  };
}

/// Balls B(x, r) with r a distance from x up to diam, and r = diam.
inline std::vector<Ball> critical_balls(const QuasiMetricSpace& sp) {
  std::vector<Ball> out;
  const double diam = diameter(sp);
  for (PointId x = 0; x < sp.size(); ++x)
    for (double r : critical_radii(sp.rho(), x, diam)) out.push_back({x, r, false});
  return out;
}

struct BallEval {
  Ball ball;
  std::string witness;
  double lhs = 0;
  std::vector<double> rhs;
  double ratio = 0;
};

struct EmbeddingReport {
  EmbeddingCase c;
  std::vector<BallEval> per_ball;  // worst witness per ball, in ball order
  double best_constant = 0;
  bool unbounded = false;
  bool outside_theorem = false;
  std::optional<double> supplied;
  bool verdict = true;
  std::string witness;  // attains best_constant
  Ball witness_ball;
  std::vector<std::string> witness_functions;
  std::size_t evaluations = 0;
};

/// ratio of one (ball, witness) evaluation; nullopt when the witness is outside the regime's
/// hypotheses (zero seminorm in the Trudinger form).
inline std::optional<BallEval> evaluate(const QuasiMetricSpace& sp, const EmbeddingCase& c,
                                        const Ball& ball, const Witness& w, SeminormCache& cache) {
  BallEval e{ball, w.name, 0, {}, 0};
  switch (c.regime) {
    case Regime::Sobolev:
    case Regime::Poincare: {
      const auto t = local_embedding_check(sp, c, ball, w.u, nullptr, &cache);
      e.lhs = t.lhs;
      e.rhs = t.rhs;
      double den = 0;
      for (double v : t.rhs) den += v;
      e.ratio = e.lhs == 0 ? 0 : (den > 0 ? e.lhs / den : kInf);
      break;
    }
    case Regime::Trudinger: {
      try {
        const auto t = trudinger_check(sp, c, ball, w.u, nullptr, &cache);
        e.lhs = t.integral;
        e.rhs = {t.denominator};
        e.ratio = t.integral;
      } catch (const Error& err) {
        if (err.code() == ErrorCode::ZeroSeminorm) return {};
        throw;
      }
      break;
    }
    case Regime::Holder: {
      const auto h = holder_check(sp, c, ball, w.u, nullptr, &cache);
      e.lhs = h.max_ratio;
      e.rhs = {h.factor};
      e.ratio = h.max_ratio;
      break;
    }
  }
  return e;
}

inline EmbeddingReport best_constant(const QuasiMetricSpace& sp, const RegularizedMetric& reg,
                                     const EmbeddingCase& c, const std::vector<Ball>& balls,
                                     const Battery& battery, std::optional<double> supplied = {},
                                     SeminormCache* cache = nullptr) {
  if (balls.empty()) throw Error(ErrorCode::Precondition, "ball family is empty");
  check_regime(c);
  SeminormCache own;
  SeminormCache& memo = cache ? *cache : own;
  EmbeddingReport rep;
  rep.c = c;
  rep.supplied = supplied;
  rep.outside_theorem = c.theorem != Theorem::Global && c.sigma < reg.C_rho;
  // when the inequality does not depend on the ball, every ball's witnesses are tested once
  const bool ball_free =
      c.theorem == Theorem::Global || (c.theorem == Theorem::LB && c.regime == Regime::Holder);
  std::vector<Ball> family = balls;
  std::vector<Witness> pooled;
  if (ball_free) {
    for (const auto& ball : balls)
      for (auto& w : battery(ball)) {
        bool dup = false;
        for (const auto& v : pooled) dup = dup || v.u == w.u;
        if (!dup) pooled.push_back(std::move(w));
      }
    family = {balls.front()};
  }
  bool first = true;
  for (const auto& ball : family) {
    std::optional<BallEval> worst;
    for (const auto& w : ball_free ? pooled : battery(ball)) {
      auto e = evaluate(sp, c, ball, w, memo);
      if (!e) continue;
      ++rep.evaluations;
      if (!worst || e->ratio > worst->ratio) worst = std::move(e);
    }
    if (!worst) continue;
    if (first || worst->ratio > rep.best_constant) {
      rep.best_constant = worst->ratio;
      rep.witness = worst->witness;
      rep.witness_ball = ball;
      first = false;
    }
    if (std::find(rep.witness_functions.begin(), rep.witness_functions.end(), worst->witness) ==
        rep.witness_functions.end())
      rep.witness_functions.push_back(worst->witness);
    rep.per_ball.push_back(std::move(*worst));
  }
  rep.unbounded = std::isinf(rep.best_constant);
  rep.verdict = supplied ? rep.best_constant <= *supplied : !rep.unbounded;
  return rep;
}

}  // namespace qmm
