#pragma once

#include <qmm/barrier.hpp>
#include <qmm/space.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <variant>
#include <vector>

namespace qmm {

enum class Kind { TriebelLizorkin, Besov, Sobolev };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::TriebelLizorkin: return "TL";
    case Kind::Besov: return "Besov";
    case Kind::Sobolev: return "Sobolev";
  }
  return "?";
}

struct SeminormSpec {
  double s = 1;
  double p = 1;
  double q = kInf;
  Kind kind = Kind::TriebelLizorkin;
};

// ---------------------------------------------------------------------------
// dyadic levels

/// The unique k with 2^{-k-1} <= r < 2^{-k}; exact via the binary exponent.
inline int level_of(double r) {
  int e = 0;
  std::frexp(r, &e);  // r = m 2^e, m in [1/2, 1)
  return -e;
}

struct LevelDecomposition {
  Eigen::MatrixXi level;  // level(x, y) for the directed pair; diagonal unused
  std::set<int> active;
};

inline LevelDecomposition level_decomposition(const QuasiMetricSpace& sp) {
  LevelDecomposition L;
  const auto n = static_cast<Eigen::Index>(sp.size());
  L.level = Eigen::MatrixXi::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y)
      if (x != y) {
        L.level(x, y) = level_of(sp.rho()(x, y));
        L.active.insert(L.level(x, y));
      }
  return L;
}

// ---------------------------------------------------------------------------
// gradients

struct SingleGradient {
  Vector g;
};

/// k -> g_k; levels not stored are identically zero.
struct FractionalGradient {
  std::map<int, Vector> levels;
  double at(int k, PointId x) const {
    auto it = levels.find(k);
    return it == levels.end() ? 0.0 : it->second(static_cast<Eigen::Index>(x));
  }
};

using Gradient = std::variant<SingleGradient, FractionalGradient>;

struct GradientCheck {
  bool valid = true;
  double worst_violation = 0;
};

inline GradientCheck verify_gradient(const QuasiMetricSpace& sp, const Vector& u, double s,
                                     const SingleGradient& g) {
  GradientCheck c;
  c.worst_violation = -kInf;
  for (PointId x = 0; x < sp.size(); ++x)
    for (PointId y = 0; y < sp.size(); ++y) {
      if (x == y) continue;
      const double v = std::abs(u(x) - u(y)) - std::pow(sp.d(x, y), s) * (g.g(x) + g.g(y));
      c.worst_violation = std::max(c.worst_violation, v);
    }
  c.valid = c.worst_violation <= 1e-12;
  return c;
}

inline GradientCheck verify_gradient(const QuasiMetricSpace& sp, const Vector& u, double s,
                                     const FractionalGradient& g) {
  GradientCheck c;
  c.worst_violation = -kInf;
  for (PointId x = 0; x < sp.size(); ++x)
    for (PointId y = 0; y < sp.size(); ++y) {
      if (x == y) continue;
      const double r = sp.d(x, y);
      const int k = level_of(r);
      const double v = std::abs(u(x) - u(y)) - std::pow(r, s) * (g.at(k, x) + g.at(k, y));
      c.worst_violation = std::max(c.worst_violation, v);
    }
  c.valid = c.worst_violation <= 1e-12;
  return c;
}

inline GradientCheck verify_gradient(const QuasiMetricSpace& sp, const Vector& u, double s,
                                     const Gradient& g) {
  return std::visit([&](const auto& gg) { return verify_gradient(sp, u, s, gg); }, g);
}

inline SingleGradient canonical_single(const QuasiMetricSpace& sp, const Vector& u, double s) {
  SingleGradient g{Vector::Zero(static_cast<Eigen::Index>(sp.size()))};
  for (PointId x = 0; x < sp.size(); ++x)
    for (PointId y = 0; y < sp.size(); ++y)
      if (x != y) g.g(x) = std::max(g.g(x), std::abs(u(x) - u(y)) / std::pow(sp.d(x, y), s));
  return g;
}

inline FractionalGradient canonical_fractional(const QuasiMetricSpace& sp, const Vector& u,
                                               double s) {
  FractionalGradient g;
  const auto n = static_cast<Eigen::Index>(sp.size());
  for (PointId x = 0; x < sp.size(); ++x)
    for (PointId y = 0; y < sp.size(); ++y) {
      if (x == y) continue;
      const double r = sp.d(x, y);
      auto [it, fresh] = g.levels.try_emplace(level_of(r), Vector::Zero(n));
      it->second(x) = std::max(it->second(x), std::abs(u(x) - u(y)) / std::pow(r, s));
    }
  return g;
}

inline Gradient canonical_gradient(const QuasiMetricSpace& sp, const Vector& u,
                                   const SeminormSpec& spec) {
  if (spec.kind == Kind::Sobolev) return canonical_single(sp, u, spec.s);
  return canonical_fractional(sp, u, spec.s);
}

// ---------------------------------------------------------------------------
// norms

inline double lp_norm(const QuasiMetricSpace& sp, const Vector& f, double p, const PointSet& on) {
  if (std::isinf(p)) {
    double m = 0;
    for (auto x : on) m = std::max(m, std::abs(f(x)));
    return m;
  }
  double a = 0;
  for (auto x : on) a += sp.mass(x) * std::pow(std::abs(f(x)), p);
  return std::pow(a, 1.0 / p);
}

inline double lp_norm(const QuasiMetricSpace& sp, const Vector& f, double p) {
  return lp_norm(sp, f, p, all_points(sp.size()));
}

/// (average over `on` of |f|^p)^(1/p).
inline double lp_average(const QuasiMetricSpace& sp, const Vector& f, double p, const PointSet& on) {
  if (std::isinf(p)) return lp_norm(sp, f, p, on);
  return lp_norm(sp, f, p, on) / std::pow(sp.measure(on), 1.0 / p);
}

inline double mixed_norm(const QuasiMetricSpace& sp, const FractionalGradient& g, double p,
                         double q, Kind kind) {
  const auto n = sp.size();
  if (kind == Kind::Besov) {
    double acc = 0;
    for (const auto& [k, gk] : g.levels) {
      const double lk = lp_norm(sp, gk, p);
      acc = std::isinf(q) ? std::max(acc, lk) : acc + std::pow(lk, q);
    }
    return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
  }
  Vector pointwise = Vector::Zero(static_cast<Eigen::Index>(n));
  for (PointId x = 0; x < n; ++x) {
    double a = 0;
    for (const auto& [k, gk] : g.levels)
      a = std::isinf(q) ? std::max(a, gk(x)) : a + std::pow(gk(x), q);
    pointwise(x) = std::isinf(q) ? a : std::pow(a, 1.0 / q);
  }
  return lp_norm(sp, pointwise, p);
}

inline double gradient_norm(const QuasiMetricSpace& sp, const Gradient& g, const SeminormSpec& spec) {
  if (auto* s = std::get_if<SingleGradient>(&g)) return lp_norm(sp, s->g, spec.p);
  return mixed_norm(sp, std::get<FractionalGradient>(g), spec.p, spec.q, spec.kind);
}

inline double holder_seminorm(const Matrix& rho, const Vector& u, double alpha) {
  if (!(alpha > 0)) throw Error(ErrorCode::Precondition, "alpha must be positive");
  double h = 0;
  for (Eigen::Index x = 0; x < rho.rows(); ++x)
    for (Eigen::Index y = 0; y < rho.cols(); ++y)
      if (x != y) h = std::max(h, std::abs(u(x) - u(y)) / std::pow(rho(x, y), alpha));
  return h;
}

inline double p_star(double Q, double p, double s) {
  if (s * p >= Q) throw Error(ErrorCode::CriticalOrSupercritical, "p* needs s p < Q");
  return Q * p / (Q - s * p);
}

// ---------------------------------------------------------------------------
// minimal seminorm

struct SeminormResult {
  double value = 0;
  Gradient witness;
  double canonical_value = 0;
  bool converged = true;
  int newton_steps = 0;
  Vector u;  // the function the witness belongs to (differs from the input only when u was free)
};

namespace detail {

struct PairRow {
  int lvl;  // index into GradientProgram::levels
  PointId x, y;
  double w;  // rho^s of the tighter direction
};

/// Variables and objective of the minimal-gradient program for one SeminormSpec.
class GradientProgram {
 public:
  GradientProgram(const QuasiMetricSpace& sp, const SeminormSpec& spec) : sp_(sp), spec_(spec) {
    const auto n = sp.size();
    if (spec.kind == Kind::Sobolev) {
      levels_ = {0};
      for (PointId x = 0; x < n; ++x)
        for (PointId y = x + 1; y < n; ++y)
          pairs_.push_back({0, x, y, std::pow(std::min(sp.d(x, y), sp.d(y, x)), spec.s)});
      return;
    }
    std::map<std::tuple<int, PointId, PointId>, double> tight;
    for (PointId x = 0; x < n; ++x)
      for (PointId y = 0; y < n; ++y) {
        if (x == y) continue;
        const auto key = std::make_tuple(level_of(sp.d(x, y)), std::min(x, y), std::max(x, y));
        const double w = std::pow(sp.d(x, y), spec.s);
        auto [it, fresh] = tight.try_emplace(key, w);
        if (!fresh) it->second = std::min(it->second, w);
      }
    std::map<int, int> index;
    for (const auto& [key, w] : tight) index.emplace(std::get<0>(key), 0);
    for (auto& [k, i] : index) {
      i = static_cast<int>(levels_.size());
      levels_.push_back(k);
    }
    for (const auto& [key, w] : tight)
      pairs_.push_back({index[std::get<0>(key)], std::get<1>(key), std::get<2>(key), w});
  }

  const std::vector<int>& levels() const { return levels_; }
  const std::vector<PairRow>& pairs() const { return pairs_; }

  /// Allocate gradient variables for the given point sets per level, then auxiliaries.
  void layout(const std::vector<std::set<PointId>>& used, int extra_front = 0) {
    const auto n = sp_.size();
    var_.assign(levels_.size(), std::vector<int>(n, -1));
    nvar_ = extra_front;
    for (std::size_t l = 0; l < levels_.size(); ++l)
      for (PointId x : used[l]) var_[l][x] = nvar_++;
    ng_end_ = nvar_;
    tvar_.assign(n, -1);
    Tvar_ = -1;
    if (spec_.kind == Kind::TriebelLizorkin && std::isinf(spec_.q)) {
      for (PointId x = 0; x < n; ++x)
        for (std::size_t l = 0; l < levels_.size(); ++l)
          if (var_[l][x] >= 0 && tvar_[x] < 0) tvar_[x] = nvar_++;
    } else if (spec_.kind == Kind::Besov && std::isinf(spec_.q)) {
      Tvar_ = nvar_++;
    }
  }

  int nvar() const { return nvar_; }
  int var(std::size_t l, PointId x) const { return var_[l][x]; }

  /// Rows tying epigraph variables to the gradient variables, plus g >= 0.
  void structural_rows(std::vector<opt::LinearRow>& rows) const {
    for (std::size_t l = 0; l < levels_.size(); ++l)
      for (PointId x = 0; x < sp_.size(); ++x) {
        const int v = var_[l][x];
        if (v < 0) continue;
        rows.push_back({{{v, 1.0}}, 0.0});
        if (tvar_[x] >= 0) rows.push_back({{{tvar_[x], 1.0}, {v, -1.0}}, 0.0});
      }
  }

  std::vector<opt::SmoothFn> concave_terms() const {
    std::vector<opt::SmoothFn> out;
    if (Tvar_ < 0) return out;
    for (std::size_t l = 0; l < levels_.size(); ++l)
      out.push_back([this, l](const Vector& z, Vector* g, Matrix* H) {
        const double p = spec_.p;
        double W = 0;
        for (PointId x = 0; x < sp_.size(); ++x) {
          const int v = var_[l][x];
          if (v < 0) continue;
          W += sp_.mass(x) * std::pow(z(v), p);
          if (g) (*g)(v) -= p * sp_.mass(x) * std::pow(z(v), p - 1);
          if (H && p != 1) (*H)(v, v) -= p * (p - 1) * sp_.mass(x) * std::pow(z(v), p - 2);
        }
        if (g) (*g)(Tvar_) += 1;
        return z(Tvar_) - W;
      });
    return out;
  }

  opt::SmoothFn objective() const {
    return [this](const Vector& z, Vector* g, Matrix* H) { return eval(z, g, H); };
  }

  /// Fill auxiliaries so the point is strictly interior given strictly positive g variables.
  void lift_auxiliaries(Vector& z) const {
    for (PointId x = 0; x < sp_.size(); ++x)
      if (tvar_[x] >= 0) {
        double m = 0;
        for (std::size_t l = 0; l < levels_.size(); ++l)
          if (var_[l][x] >= 0) m = std::max(m, z(var_[l][x]));
        z(tvar_[x]) = 1.5 * m + 1e-3 * (m + 1e-300);
      }
    if (Tvar_ >= 0) {
      double m = 0;
      for (std::size_t l = 0; l < levels_.size(); ++l) {
        double W = 0;
        for (PointId x = 0; x < sp_.size(); ++x)
          if (var_[l][x] >= 0) W += sp_.mass(x) * std::pow(z(var_[l][x]), spec_.p);
        m = std::max(m, W);
      }
      z(Tvar_) = 1.5 * m + 1e-300;
    }
  }

  Gradient witness(const Vector& z) const {
    const auto n = static_cast<Eigen::Index>(sp_.size());
    if (spec_.kind == Kind::Sobolev) {
      SingleGradient g{Vector::Zero(n)};
      for (PointId x = 0; x < sp_.size(); ++x)
        if (var_[0][x] >= 0) g.g(x) = std::max(0.0, z(var_[0][x]));
      return g;
    }
    FractionalGradient g;
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      Vector gl = Vector::Zero(n);
      bool any = false;
      for (PointId x = 0; x < sp_.size(); ++x)
        if (var_[l][x] >= 0) {
          gl(x) = std::max(0.0, z(var_[l][x]));
          any = true;
        }
      if (any) g.levels[levels_[l]] = gl;
    }
    return g;
  }

 private:
  double eval(const Vector& z, Vector* g, Matrix* H) const {
    const double p = spec_.p, q = spec_.q;
    const auto n = sp_.size();
    const std::size_t L = levels_.size();
    const bool separable = spec_.kind == Kind::Sobolev || (!std::isinf(q) && q == p);
    double f = 0;
    if (separable) {
      for (std::size_t l = 0; l < L; ++l)
        for (PointId x = 0; x < n; ++x) {
          const int v = var_[l][x];
          if (v < 0) continue;
          const double m = sp_.mass(x);
          f += m * std::pow(z(v), p);
          if (g) (*g)(v) += p * m * std::pow(z(v), p - 1);
          if (H && p != 1) (*H)(v, v) += p * (p - 1) * m * std::pow(z(v), p - 2);
        }
      return f;
    }
    if (spec_.kind == Kind::TriebelLizorkin && std::isinf(q)) {
      for (PointId x = 0; x < n; ++x) {
        const int v = tvar_[x];
        if (v < 0) continue;
        const double m = sp_.mass(x);
        f += m * std::pow(z(v), p);
        if (g) (*g)(v) += p * m * std::pow(z(v), p - 1);
        if (H && p != 1) (*H)(v, v) += p * (p - 1) * m * std::pow(z(v), p - 2);
      }
      return f;
    }
    if (spec_.kind == Kind::TriebelLizorkin) {
      // sum_x mu(x) (sum_l g_l(x)^q)^(p/q)
      std::vector<int> vs;
      for (PointId x = 0; x < n; ++x) {
        vs.clear();
        for (std::size_t l = 0; l < L; ++l)
          if (var_[l][x] >= 0) vs.push_back(var_[l][x]);
        if (vs.empty()) continue;
        const double m = sp_.mass(x);
        double S = 0;
        for (int v : vs) S += std::pow(z(v), q);
        f += m * std::pow(S, p / q);
        if (g)
          for (int v : vs) (*g)(v) += m * p * std::pow(S, p / q - 1) * std::pow(z(v), q - 1);
        if (H)
          for (int a : vs) {
            for (int b : vs)
              (*H)(a, b) += m * p * (p - q) * std::pow(S, p / q - 2) * std::pow(z(a), q - 1) *
                            std::pow(z(b), q - 1);
            if (q != 1) (*H)(a, a) += m * p * (q - 1) * std::pow(S, p / q - 1) * std::pow(z(a), q - 2);
          }
      }
      return f;
    }
    if (Tvar_ >= 0) {
      if (g) (*g)(Tvar_) += 1;
      return z(Tvar_);
    }
    // Besov, finite q != p: sum_l W_l^(q/p), W_l = sum_x mu(x) g_l(x)^p
    const double r = q / p;
    for (std::size_t l = 0; l < L; ++l) {
      double W = 0;
      for (PointId x = 0; x < n; ++x)
        if (var_[l][x] >= 0) W += sp_.mass(x) * std::pow(z(var_[l][x]), p);
      if (W <= 0) continue;
      f += std::pow(W, r);
      if (!g && !H) continue;
      for (PointId x = 0; x < n; ++x) {
        const int a = var_[l][x];
        if (a < 0) continue;
        const double da = sp_.mass(x) * std::pow(z(a), p - 1);
        if (g) (*g)(a) += q * std::pow(W, r - 1) * da;
        if (!H) continue;
        for (PointId y = 0; y < n; ++y) {
          const int b = var_[l][y];
          if (b < 0) continue;
          (*H)(a, b) += q * (r - 1) * std::pow(W, r - 2) * p * sp_.mass(y) * std::pow(z(b), p - 1) * da;
        }
        if (p != 1) (*H)(a, a) += q * std::pow(W, r - 1) * sp_.mass(x) * (p - 1) * std::pow(z(a), p - 2);
      }
    }
    return f;
  }

  const QuasiMetricSpace& sp_;
  SeminormSpec spec_;
  std::vector<int> levels_;
  std::vector<PairRow> pairs_;
  std::vector<std::vector<int>> var_;
  std::vector<int> tvar_;
  int Tvar_ = -1;
  int nvar_ = 0;
  int ng_end_ = 0;
};

inline void require_convex(const SeminormSpec& spec) {
  if (spec.p < 1 || (spec.kind != Kind::Sobolev && spec.q < 1))
    throw Error(ErrorCode::NonconvexRegime, "minimisation needs p >= 1 and q >= 1");
}

/// Smallest tau in [0,1] making (1-tau) g + tau g_can satisfy all pair constraints.
inline Gradient restore_toward(const QuasiMetricSpace& sp, const Vector& u, double s,
                               const Gradient& g, const Gradient& can) {
  auto blend = [&](double tau) -> Gradient {
    if (auto* a = std::get_if<SingleGradient>(&g)) {
      const auto& b = std::get<SingleGradient>(can);
      return SingleGradient{(1 - tau) * a->g + tau * b.g};
    }
    const auto& a = std::get<FractionalGradient>(g);
    const auto& b = std::get<FractionalGradient>(can);
    FractionalGradient out;
    const auto n = static_cast<Eigen::Index>(sp.size());
    std::set<int> ks;
    for (const auto& [k, v] : a.levels) ks.insert(k);
    for (const auto& [k, v] : b.levels) ks.insert(k);
    for (int k : ks) {
      Vector va = a.levels.count(k) ? a.levels.at(k) : Vector::Zero(n);
      Vector vb = b.levels.count(k) ? b.levels.at(k) : Vector::Zero(n);
      out.levels[k] = (1 - tau) * va + tau * vb;
    }
    return out;
  };
  if (verify_gradient(sp, u, s, g).worst_violation <= 0) return g;
  double lo = 0, hi = 1;
  for (int it = 0; it < 60; ++it) {
    const double mid = (lo + hi) / 2;
    (verify_gradient(sp, u, s, blend(mid)).worst_violation <= 0 ? hi : lo) = mid;
  }
  return blend(hi);
}

}  // namespace detail

inline SeminormResult minimal_seminorm(const QuasiMetricSpace& sp, const Vector& u,
                                       const SeminormSpec& spec, const opt::Options& opt = {}) {
  detail::require_convex(spec);
  SeminormResult res;
  res.u = u;
  const Gradient can = canonical_gradient(sp, u, spec);
  res.canonical_value = gradient_norm(sp, can, spec);

  detail::GradientProgram prog(sp, spec);
  std::vector<std::set<PointId>> used(prog.levels().size());
  struct Need {
    std::size_t l;
    PointId x, y;
    double c;
  };
  std::vector<Need> need;
  double cmax = 0;
  for (const auto& pr : prog.pairs()) {
    const double c = std::abs(u(pr.x) - u(pr.y)) / pr.w;
    if (c <= 0) continue;
    need.push_back({static_cast<std::size_t>(pr.lvl), pr.x, pr.y, c});
    used[pr.lvl].insert(pr.x);
    used[pr.lvl].insert(pr.y);
    cmax = std::max(cmax, c);
  }
  if (need.empty()) {
    res.value = 0;
    res.witness = spec.kind == Kind::Sobolev
                      ? Gradient(SingleGradient{Vector::Zero(static_cast<Eigen::Index>(sp.size()))})
                      : Gradient(FractionalGradient{});
    return res;
  }
  prog.layout(used);
  std::vector<opt::LinearRow> rows;
  prog.structural_rows(rows);
  for (const auto& nd : need)
    rows.push_back({{{prog.var(nd.l, nd.x), 1.0}, {prog.var(nd.l, nd.y), 1.0}}, nd.c});

  Vector z = Vector::Zero(prog.nvar());
  for (const auto& nd : need)
    for (PointId w : {nd.x, nd.y}) {
      const int v = prog.var(nd.l, w);
      z(v) = std::max(z(v), nd.c);
    }
  for (std::size_t l = 0; l < prog.levels().size(); ++l)
    for (PointId x : used[l]) z(prog.var(l, x)) += 1e-2 * cmax;
  prog.lift_auxiliaries(z);

  const auto out = opt::minimize(prog.nvar(), prog.objective(), rows, prog.concave_terms(), z, opt);
  res.converged = out.converged;
  res.newton_steps = out.newton_steps;
  Gradient w = detail::restore_toward(sp, u, spec.s, prog.witness(out.z), can);
  const double v = gradient_norm(sp, w, spec);
  if (v <= res.canonical_value) {
    res.value = v;
    res.witness = std::move(w);
  } else {
    res.value = res.canonical_value;
    res.witness = can;
  }
  return res;
}

/// Exact minimum of sum mu_x g_x subject to g_x + g_y >= |u_x - u_y| / min(rho_xy, rho_yx)^s,
/// g >= 0 (the p = 1 single-gradient program). Splitting every point into a left and a right
/// copy gives a bipartite program with twice the optimum (average the copies to go back);
/// its dual is a transportation problem with capacities mu, solved by successive shortest
/// paths with Dijkstra on reduced costs.
inline double sobolev_l1_minimum(const QuasiMetricSpace& sp, const Vector& u, double s) {
  const int n = static_cast<int>(sp.size());
  const int V = 2 * n + 2, src = 0, snk = 2 * n + 1;
  Matrix cap = Matrix::Zero(V, V), cost = Matrix::Zero(V, V), flow = Matrix::Zero(V, V);
  std::vector<std::vector<int>> adj(V);
  auto arc = [&](int i, int j, double c, double k) {
    cap(i, j) = c;
    cost(i, j) = k;
    cost(j, i) = -k;
    adj[i].push_back(j);
    adj[j].push_back(i);
  };
  bool any = false;
  for (int x = 0; x < n; ++x) {
    arc(src, 1 + x, sp.mass(x), 0);
    arc(1 + n + x, snk, sp.mass(x), 0);
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      const double c = std::abs(u(x) - u(y)) / std::pow(std::min(sp.d(x, y), sp.d(y, x)), s);
      if (c > 0) {
        arc(1 + x, 1 + n + y, kInf, -c);
        any = true;
      }
    }
  if (!any) return 0;

  const double eps = 1e-15 * sp.mu().sum();
  auto residual = [&](int i, int j) { return cap(i, j) - flow(i, j) + flow(j, i); };
  // Initial potentials: shortest distances in the acyclic initial network.
  Vector pi = Vector::Zero(V);
  for (int y = 0; y < n; ++y) {
    double m = 0;
    for (int x = 0; x < n; ++x)
      if (cap(1 + x, 1 + n + y) > 0) m = std::min(m, cost(1 + x, 1 + n + y));
    pi(1 + n + y) = m;
    pi(snk) = std::min(pi(snk), m);
  }
  std::vector<double> dist(V);
  std::vector<int> prev(V);
  std::vector<char> done(V);
  for (int iter = 0; iter < 100 * V * V; ++iter) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    dist[src] = 0;
    for (;;) {
      int i = -1;
      for (int k = 0; k < V; ++k)
        if (!done[k] && dist[k] < kInf && (i < 0 || dist[k] < dist[i])) i = k;
      if (i < 0) break;
      done[i] = 1;
      for (int j : adj[i]) {
        if (done[j] || residual(i, j) <= eps) continue;
        const double rc = std::max(0.0, cost(i, j) + pi(i) - pi(j));
        if (dist[i] + rc < dist[j]) {
          dist[j] = dist[i] + rc;
          prev[j] = i;
        }
      }
    }
    if (!std::isfinite(dist[snk])) break;
    for (int k = 0; k < V; ++k)
      if (std::isfinite(dist[k])) pi(k) += dist[k];
    if (pi(snk) - pi(src) >= 0) break;  // no path of negative cost left
    double push = kInf;
    for (int j = snk; j != src; j = prev[j]) push = std::min(push, residual(prev[j], j));
    for (int j = snk; j != src; j = prev[j]) {
      const int i = prev[j];
      const double back = std::min(push, flow(j, i));  // cancel reverse flow first
      flow(j, i) -= back;
      flow(i, j) += push - back;
    }
  }
  double total = 0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y && cap(1 + x, 1 + n + y) > 0) total -= cost(1 + x, 1 + n + y) * flow(1 + x, 1 + n + y);
  return total / 2;
}

/// Joint minimisation over gradients and over u on the points not in `fixed` (values in u
/// at fixed points are kept). Used for transition problems where only u(a)=0, u(b)=1 matter.
inline SeminormResult minimal_transition(const QuasiMetricSpace& sp, const Vector& u_fixed,
                                         const std::vector<bool>& fixed, const SeminormSpec& spec,
                                         const opt::Options& opt = {}) {
  detail::require_convex(spec);
  const auto n = sp.size();
  detail::GradientProgram prog(sp, spec);
  std::vector<std::set<PointId>> used(prog.levels().size());
  for (const auto& pr : prog.pairs()) {
    used[pr.lvl].insert(pr.x);
    used[pr.lvl].insert(pr.y);
  }
  std::vector<int> uvar(n, -1);
  int nfree = 0;
  for (PointId x = 0; x < n; ++x)
    if (!fixed[x]) uvar[x] = nfree++;
  prog.layout(used, nfree);

  std::vector<opt::LinearRow> rows;
  prog.structural_rows(rows);
  for (const auto& pr : prog.pairs()) {
    const int gx = prog.var(pr.lvl, pr.x), gy = prog.var(pr.lvl, pr.y);
    for (double sign : {1.0, -1.0}) {
      // w (g_x + g_y) - sign (u_x - u_y) >= 0
      opt::LinearRow r{{{gx, pr.w}, {gy, pr.w}}, 0.0};
      if (uvar[pr.x] >= 0) r.a.push_back({uvar[pr.x], -sign});
      else r.b += sign * u_fixed(pr.x);
      if (uvar[pr.y] >= 0) r.a.push_back({uvar[pr.y], sign});
      else r.b -= sign * u_fixed(pr.y);
      rows.push_back(std::move(r));
    }
  }

  double lo = kInf, hi = -kInf;
  for (PointId x = 0; x < n; ++x)
    if (fixed[x]) {
      lo = std::min(lo, u_fixed(x));
      hi = std::max(hi, u_fixed(x));
    }
  Vector u0 = u_fixed;
  for (PointId x = 0; x < n; ++x)
    if (!fixed[x]) u0(x) = std::isfinite(lo) ? (lo + hi) / 2 : 0.0;
  Vector z = Vector::Zero(prog.nvar());
  for (PointId x = 0; x < n; ++x)
    if (uvar[x] >= 0) z(uvar[x]) = u0(x);
  double cmax = 0;
  for (const auto& pr : prog.pairs()) cmax = std::max(cmax, std::abs(u0(pr.x) - u0(pr.y)) / pr.w);
  const double base = cmax + 1e-2 * (cmax + 1);
  for (std::size_t l = 0; l < prog.levels().size(); ++l)
    for (PointId x : used[l]) z(prog.var(l, x)) = base;
  prog.lift_auxiliaries(z);

  const auto out = opt::minimize(prog.nvar(), prog.objective(), rows, prog.concave_terms(), z, opt);
  SeminormResult res;
  res.converged = out.converged;
  res.newton_steps = out.newton_steps;
  res.u = u_fixed;
  for (PointId x = 0; x < n; ++x)
    if (uvar[x] >= 0) res.u(x) = out.z(uvar[x]);
  res.witness = prog.witness(out.z);
  res.canonical_value = gradient_norm(sp, canonical_gradient(sp, res.u, spec), spec);
  res.value = gradient_norm(sp, res.witness, spec);
  return res;
}

}  // namespace qmm
