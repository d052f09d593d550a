#pragma once

// Independent reference computations used only by the tests. None of this calls into the
// solver code paths; everything is dense enumeration.

#include <qmm/space.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

using qmm::Matrix;
using qmm::Vector;

/// a . g >= b
struct Row {
  Vector a;
  double b;
};

/// min sum_i w_i g_i^p subject to rows, for p in {1, 2}, by enumerating active sets.
///   p = 2: every subset of at most n rows taken as equalities gives the weighted least-norm
///          point of an affine set; the optimum is one of them (its own active set, reduced to
///          an independent subset) and every feasible candidate is an upper bound.
///   p = 1: LP vertices, subsets of exactly n independent rows.
inline double min_power_sum(const Vector& w, const std::vector<Row>& rows, int p) {
  const int n = static_cast<int>(w.size());
  const int m = static_cast<int>(rows.size());
  double scale = 1e-300;
  for (const auto& r : rows) scale = std::max(scale, std::abs(r.b));
  const double tol = 1e-11 * scale;
  double best = qmm::kInf;

  auto feasible = [&](const Vector& g) {
    for (const auto& r : rows)
      if (r.a.dot(g) < r.b - tol) return false;
    return true;
  };

  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    const int k = std::popcount(mask);
    if (p == 1 ? k != n : k > n) continue;
    Matrix A(k, n);
    Vector b(k);
    int r = 0;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1) {
        A.row(r) = rows[i].a.transpose();
        b(r++) = rows[i].b;
      }
    Vector g;
    if (p == 1) {
      Eigen::FullPivLU<Matrix> lu(A);
      if (lu.rank() < n) continue;
      g = lu.solve(b);
    } else if (k == 0) {
      g = Vector::Zero(n);
    } else {
      const Vector winv = w.cwiseInverse();
      const Matrix M = A * winv.asDiagonal() * A.transpose();
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
      const Vector lam = cod.solve(b);
      g = winv.asDiagonal() * A.transpose() * lam;
      if ((A * g - b).cwiseAbs().maxCoeff() > tol) continue;
    }
    if (!g.allFinite() || !feasible(g)) continue;
    double v = 0;
    for (int i = 0; i < n; ++i) v += w(i) * (p == 1 ? g(i) : g(i) * g(i));
    best = std::min(best, v);
  }
  return best;
}

/// Pairwise constraints g_x + g_y >= c among a subset of points, plus g >= 0.
struct Block {
  std::vector<std::size_t> points;
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> pairs;
};

inline double solve_block(const qmm::QuasiMetricSpace& sp, const Block& blk, int p) {
  std::map<std::size_t, int> idx;
  for (auto x : blk.points) idx.emplace(x, static_cast<int>(idx.size()));
  const int n = static_cast<int>(idx.size());
  if (n == 0) return 0;
  Vector w(n);
  for (auto [x, i] : idx) w(i) = sp.mass(x);
  std::vector<Row> rows;
  for (int i = 0; i < n; ++i) {
    Vector a = Vector::Zero(n);
    a(i) = 1;
    rows.push_back({a, 0.0});
  }
  for (const auto& [xy, c] : blk.pairs) {
    Vector a = Vector::Zero(n);
    a(idx.at(xy.first)) += 1;
    a(idx.at(xy.second)) += 1;
    rows.push_back({a, c});
  }
  return min_power_sum(w, rows, p);
}

/// Dyadic level by repeated halving/doubling, independent of frexp.
inline int level_exact(double r) {
  int k = 0;
  double lo = 0.5, hi = 1.0;  // [2^{-k-1}, 2^{-k})
  while (r >= hi) { hi *= 2; lo *= 2; --k; }
  while (r < lo) { hi /= 2; lo /= 2; ++k; }
  return k;
}

/// Minimal Sobolev seminorm (p in {1,2}).
inline double sobolev(const qmm::QuasiMetricSpace& sp, const Vector& u, double s, int p) {
  Block blk;
  const auto n = sp.size();
  for (std::size_t x = 0; x < n; ++x) blk.points.push_back(x);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x + 1; y < n; ++y) {
      const double c = std::abs(u(x) - u(y)) / std::pow(std::min(sp.d(x, y), sp.d(y, x)), s);
      if (c > 0) blk.pairs.push_back({{x, y}, c});
    }
  return std::pow(solve_block(sp, blk, p), 1.0 / p);
}

/// Per-level optimal sums of mu g_k^p.
inline std::map<int, double> level_optima(const qmm::QuasiMetricSpace& sp, const Vector& u,
                                          double s, int p) {
  std::map<int, Block> blocks;
  const auto n = sp.size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      const double r = sp.d(x, y);
      const double c = std::abs(u(x) - u(y)) / std::pow(r, s);
      if (c <= 0) continue;
      auto& blk = blocks[level_exact(r)];
      blk.pairs.push_back({{x, y}, c});
      for (auto z : {x, y})
        if (std::find(blk.points.begin(), blk.points.end(), z) == blk.points.end())
          blk.points.push_back(z);
    }
  std::map<int, double> out;
  for (const auto& [k, blk] : blocks) out[k] = solve_block(sp, blk, p);
  return out;
}

/// q = p, both kinds: the mixed norm separates over levels.
inline double separable(const qmm::QuasiMetricSpace& sp, const Vector& u, double s, int p) {
  double acc = 0;
  for (const auto& [k, v] : level_optima(sp, u, s, p)) acc += v;
  return std::pow(acc, 1.0 / p);
}

/// Besov q = inf: levels decouple, the norm is the largest per-level optimum.
inline double besov_inf(const qmm::QuasiMetricSpace& sp, const Vector& u, double s, int p) {
  double m = 0;
  for (const auto& [k, v] : level_optima(sp, u, s, p)) m = std::max(m, std::pow(v, 1.0 / p));
  return m;
}

/// TL q = inf: with t_x = sup_k g_k(x) one may take g_k = t at every level, so the program is
/// min sum mu t^p subject to t_x + t_y >= |du| / rho^s for both directions of every pair.
inline double tl_inf(const qmm::QuasiMetricSpace& sp, const Vector& u, double s, int p) {
  return sobolev(sp, u, s, p);
}

// ---------------------------------------------------------------------------
// geometry by dense radius grids

/// Radii probed for balls centred at x: every distance from x and its neighbouring doubles,
/// halves of those, midpoints, and a uniform grid of `fine` points up to 1.01 diam.
inline std::vector<double> radius_grid(const qmm::QuasiMetricSpace& sp, std::size_t x, int fine = 400) {
  std::vector<double> d;
  for (std::size_t y = 0; y < sp.size(); ++y)
    if (y != x) d.push_back(sp.d(x, y));
  std::sort(d.begin(), d.end());
  std::vector<double> r;
  double diam = 0;
  for (std::size_t a = 0; a < sp.size(); ++a)
    for (std::size_t b = 0; b < sp.size(); ++b) diam = std::max(diam, sp.d(a, b));
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : {d[i], d[i] / 2})
      for (double w : {std::nextafter(v, 0.0), v, std::nextafter(v, qmm::kInf)}) r.push_back(w);
    if (i + 1 < d.size()) r.push_back((d[i] + d[i + 1]) / 2);
  }
  for (int k = 1; k <= fine; ++k) r.push_back(1.01 * diam * k / fine);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

inline double open_mass(const qmm::QuasiMetricSpace& sp, std::size_t x, double r) {
  double m = 0;
  for (std::size_t y = 0; y < sp.size(); ++y)
    if (sp.d(x, y) < r) m += sp.mass(y);
  return m;
}

/// Largest probed t <= r with mu(B(x,t)) <= mu(B(x,r))/2.
inline double half_mass(const qmm::QuasiMetricSpace& sp, std::size_t x, double r) {
  if (r == 0) return 0;
  const double half = open_mass(sp, x, r) / 2;
  double best = 0;
  for (double t : radius_grid(sp, x))
    if (t <= r && open_mass(sp, x, t) <= half) best = std::max(best, t);
  return best;
}

/// inf over centres and probed r in (0, diam] of mu(B(x,r)) / r^Q.
inline double ahlfors_kappa(const qmm::QuasiMetricSpace& sp, double Q) {
  double diam = 0;
  for (std::size_t a = 0; a < sp.size(); ++a)
    for (std::size_t b = 0; b < sp.size(); ++b) diam = std::max(diam, sp.d(a, b));
  double k = qmm::kInf;
  for (std::size_t x = 0; x < sp.size(); ++x)
    for (double r : radius_grid(sp, x))
      if (r > 0 && r <= diam) k = std::min(k, open_mass(sp, x, r) / std::pow(r, Q));
  return k;
}

/// sup over probed r of mu(B(x,2r)) / mu(B(x,r)).
inline double doubling_constant(const qmm::QuasiMetricSpace& sp) {
  double c = 0;
  for (std::size_t x = 0; x < sp.size(); ++x)
    for (double r : radius_grid(sp, x)) {
      const double m = open_mass(sp, x, r);
      if (m > 0) c = std::max(c, open_mass(sp, x, 2 * r) / m);
    }
  return c;
}

/// inf of mu(B(x,r)) / mu(B(y,R)) * (R/r)^Q over probed r <= R with B(x,r) inside B(y,R);
/// R ranges over the y-grid plus r.
inline double doubling_kappa(const qmm::QuasiMetricSpace& sp, double Q) {
  const std::size_t n = sp.size();
  std::vector<std::vector<double>> grids;
  for (std::size_t x = 0; x < n; ++x) grids.push_back(radius_grid(sp, x, 60));
  double k = qmm::kInf;
  for (std::size_t x = 0; x < n; ++x)
    for (double r : grids[x]) {
      std::vector<std::size_t> B;
      for (std::size_t z = 0; z < n; ++z)
        if (sp.d(x, z) < r) B.push_back(z);
      if (B.empty()) continue;
      const double mr = open_mass(sp, x, r);
      for (std::size_t y = 0; y < n; ++y) {
        // R = r itself: inside a y-constancy interval the ratio only grows with R
        std::vector<double> Rs = grids[y];
        Rs.push_back(r);
        for (double R : Rs) {
          if (R < r) continue;
          bool inside = true;
          for (auto z : B) inside = inside && sp.d(y, z) < R;
          if (!inside) continue;
          k = std::min(k, mr / open_mass(sp, y, R) * std::pow(R / r, Q));
        }
      }
    }
  return k;
}

/// Largest lambda with a point in B(x,r) \ B(x,lambda r) whenever some point lies outside
/// B(x,r), over probed r above the nearest-neighbour distance.
inline double perfectness_lambda(const qmm::QuasiMetricSpace& sp) {
  double lam = 1;
  for (std::size_t x = 0; x < sp.size(); ++x) {
    double nn = qmm::kInf, far = 0;
    for (std::size_t y = 0; y < sp.size(); ++y)
      if (y != x) {
        nn = std::min(nn, sp.d(x, y));
        far = std::max(far, sp.d(x, y));
      }
    for (double r : radius_grid(sp, x)) {
      if (r <= nn || r > far) continue;
      double inner = 0;  // farthest point strictly inside B(x,r)
      for (std::size_t y = 0; y < sp.size(); ++y)
        if (sp.d(x, y) < r) inner = std::max(inner, sp.d(x, y));
      lam = std::min(lam, inner / r);
    }
  }
  return lam;
}

/// Least C with rho(x,y) <= C max(rho(x,z), rho(z,y)).
inline double quasi_triangle(const Matrix& rho) {
  double c = 1;
  const auto n = rho.rows();
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y)
      for (Eigen::Index z = 0; z < n; ++z) {
        if (x == y) continue;
        const double m = std::max(rho(x, z), rho(z, y));
        if (m > 0) c = std::max(c, rho(x, y) / m);
      }
  return c;
}

inline double quasi_symmetry(const Matrix& rho) {
  double c = 1;
  for (Eigen::Index x = 0; x < rho.rows(); ++x)
    for (Eigen::Index y = 0; y < rho.cols(); ++y)
      if (x != y) c = std::max(c, rho(y, x) / rho(x, y));
  return c;
}

}  // namespace oracle
