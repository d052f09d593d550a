#include <qmm/generators.hpp>
#include <qmm/gradients.hpp>
#include <support/oracles.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace qmm;

namespace {

QuasiMetricSpace line(std::vector<double> xs, std::vector<double> mass = {}) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Matrix rho(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) rho(i, j) = std::abs(xs[i] - xs[j]);
  Vector mu = mass.empty() ? Vector(Vector::Ones(n)) : Vector(Vector::Map(mass.data(), n));
  return QuasiMetricSpace::validate("line", {}, rho, mu);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Levels, DyadicBoundaries) {
  EXPECT_EQ(level_of(1.0), -1);
  EXPECT_EQ(level_of(0.3), 1);
  EXPECT_EQ(level_of(0.25), 1);
  EXPECT_EQ(level_of(0.2499999), 2);
  EXPECT_EQ(level_of(3.0), -2);
  for (double r : {1e-9, 0.1, 0.5, 0.7, 1.5, 2.0, 17.0}) EXPECT_EQ(level_of(r), oracle::level_exact(r)) << r;
}

TEST(Levels, AsymmetricPairsMaySplit) {
  Matrix rho(2, 2);
  rho << 0, 0.4, 0.6, 0;
  auto sp = QuasiMetricSpace::validate("a", {}, rho, Vector::Ones(2));
  auto L = level_decomposition(sp);
  EXPECT_EQ(L.level(0, 1), 1);
  EXPECT_EQ(L.level(1, 0), 0);
  EXPECT_EQ(L.active.size(), 2u);
}

TEST(VerifyGradient, TwoPoint) {
  auto sp = line({0, 1});
  const Vector u = vec({0, 1});
  EXPECT_TRUE(verify_gradient(sp, u, 1.0, SingleGradient{vec({0.5, 0.5})}).valid);
  auto bad = verify_gradient(sp, u, 1.0, SingleGradient{vec({0.4, 0.5})});
  EXPECT_FALSE(bad.valid);
  EXPECT_NEAR(bad.worst_violation, 0.1, 1e-15);
  EXPECT_TRUE(verify_gradient(sp, vec({3, 3}), 1.0, SingleGradient{vec({0, 0})}).valid);
}

TEST(CanonicalGradient, Examples) {
  auto sp2 = line({0, 1});
  auto g2 = canonical_single(sp2, vec({0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(g2.g(0), 1);
  EXPECT_DOUBLE_EQ(g2.g(1), 1);
  auto sp3 = line({0, 1, 2});
  auto g3 = canonical_single(sp3, vec({0, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(g3.g(0), 0.5);
  EXPECT_DOUBLE_EQ(g3.g(1), 1);
  EXPECT_DOUBLE_EQ(g3.g(2), 1);
  auto sp = gen::random_space(5, 7, 0.5);
  Vector u = Vector::LinSpaced(7, -1, 2);
  EXPECT_TRUE(verify_gradient(sp, u, 0.7, canonical_fractional(sp, u, 0.7)).valid);
  EXPECT_LE(verify_gradient(sp, u, 0.7, canonical_single(sp, u, 0.7)).worst_violation, 0.0);
}

TEST(MixedNorm, Normalisation) {
  auto sp = gen::grid(4);  // total mass 1
  FractionalGradient g;
  g.levels[0] = Vector::Ones(4);
  for (double p : {0.5, 1.0, 3.0})
    for (double q : {0.5, 1.0, kInf}) {
      EXPECT_NEAR(mixed_norm(sp, g, p, q, Kind::TriebelLizorkin), 1, 1e-15);
      EXPECT_NEAR(mixed_norm(sp, g, p, q, Kind::Besov), 1, 1e-15);
    }
  const double c = 0.7;
  g.levels[0] = Vector::Constant(4, c);
  g.levels[3] = Vector::Constant(4, c);
  EXPECT_NEAR(mixed_norm(sp, g, 2, kInf, Kind::TriebelLizorkin), c, 1e-15);
  for (double p : {1.0, 2.0, 3.0}) {
    const double expect = c * std::pow(2.0, 1 / p);
    EXPECT_NEAR(mixed_norm(sp, g, p, p, Kind::TriebelLizorkin), expect, 1e-14);
    EXPECT_NEAR(mixed_norm(sp, g, p, p, Kind::Besov), expect, 1e-14);
  }
}

TEST(MixedNorm, MonotoneInQ) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  auto sp = gen::random_space(11, 6);
  for (int trial = 0; trial < 20; ++trial) {
    FractionalGradient g;
    for (int k = -1; k < 4; ++k) {
      Vector v(6);
      for (int i = 0; i < 6; ++i) v(i) = U(rng);
      g.levels[k] = v;
    }
    for (Kind kind : {Kind::TriebelLizorkin, Kind::Besov}) {
      double prev = kInf;
      for (double q : {0.5, 1.0, 2.0, 5.0, kInf}) {
        const double v = mixed_norm(sp, g, 1.5, q, kind);
        EXPECT_LE(v, prev * (1 + 1e-14));
        prev = v;
      }
    }
  }
}

TEST(Holder, Basics) {
  auto sp = line({0, 1});
  EXPECT_DOUBLE_EQ(holder_seminorm(sp.rho(), vec({0, 1}), 0.3), 1);
  EXPECT_DOUBLE_EQ(holder_seminorm(sp.rho(), vec({2, 2}), 0.3), 0);
}

TEST(PStar, Examples) {
  EXPECT_DOUBLE_EQ(p_star(2, 1, 1), 2);
  EXPECT_DOUBLE_EQ(p_star(1, 1, 0.5), 2);
  try {
    p_star(1, 2, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CriticalOrSupercritical);
  }
}

TEST(MinimalSeminorm, ConstantIsZero) {
  auto sp = gen::grid(5);
  auto r = minimal_seminorm(sp, Vector::Constant(5, 2.0), {0.5, 1, kInf, Kind::TriebelLizorkin});
  EXPECT_EQ(r.value, 0);
}

TEST(MinimalSeminorm, TwoPointClosedForm) {
  auto sp = line({0, 1});
  for (double s : {0.3, 1.0, 2.0}) {
    EXPECT_NEAR(minimal_seminorm(sp, vec({0, 1}), {s, 1, kInf, Kind::Sobolev}).value, 1, 1e-9);
    EXPECT_NEAR(minimal_seminorm(sp, vec({0, 1}), {s, 2, kInf, Kind::Sobolev}).value,
                1 / std::sqrt(2.0), 1e-9);
  }
}

TEST(MinimalSeminorm, ThreePointLineMatchesOracle) {
  auto sp = line({0, 1, 2});
  const Vector u = vec({0, 0, 1});
  const double o = oracle::sobolev(sp, u, 1, 1);
  auto r = minimal_seminorm(sp, u, {1, 1, kInf, Kind::Sobolev});
  EXPECT_LT(rel(r.value, o), 1e-6);
  EXPECT_TRUE(verify_gradient(sp, u, 1, r.witness).valid);
}

TEST(MinimalSeminorm, RefusesNonconvex) {
  auto sp = line({0, 1});
  for (SeminormSpec s : {SeminormSpec{1, 0.5, kInf, Kind::TriebelLizorkin},
                         SeminormSpec{1, 1, 0.5, Kind::Besov}}) {
    try {
      minimal_seminorm(sp, vec({0, 1}), s);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonconvexRegime);
    }
  }
}

TEST(MinimalSeminorm, OracleAgreementRandom) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 3 + trial % 3;
    auto sp = gen::random_space(100 + trial, n, trial % 2 ? 0.4 : 0.0);
    Vector u(n);
    for (int i = 0; i < n; ++i) u(i) = U(rng);
    const double s = 0.5 + 0.25 * (trial % 4);
    for (int p : {1, 2}) {
      const double P = p;
      struct Case {
        SeminormSpec spec;
        double expect;
      };
      std::vector<Case> cases = {
          {{s, P, kInf, Kind::Sobolev}, oracle::sobolev(sp, u, s, p)},
          {{s, P, kInf, Kind::TriebelLizorkin}, oracle::tl_inf(sp, u, s, p)},
          {{s, P, P, Kind::TriebelLizorkin}, oracle::separable(sp, u, s, p)},
          {{s, P, P, Kind::Besov}, oracle::separable(sp, u, s, p)},
          {{s, P, kInf, Kind::Besov}, oracle::besov_inf(sp, u, s, p)},
      };
      for (const auto& c : cases) {
        auto r = minimal_seminorm(sp, u, c.spec);
        EXPECT_LT(rel(r.value, c.expect), 1e-6)
            << "trial " << trial << " p " << p << " kind " << to_string(c.spec.kind) << " q "
            << c.spec.q << " got " << r.value << " oracle " << c.expect;
        EXPECT_TRUE(verify_gradient(sp, u, s, r.witness).valid);
        EXPECT_LE(r.value, r.canonical_value * (1 + 1e-15));
      }
    }
  }
}

TEST(MinimalSeminorm, MixedExponentsBetweenNeighbours) {
  // q between p and inf: TL value sits between the q=inf and q=p optima.
  auto sp = gen::random_space(9, 5);
  Vector u = vec({0, 0.3, -0.2, 1, 0.5});
  const double lo = minimal_seminorm(sp, u, {0.8, 2, kInf, Kind::TriebelLizorkin}).value;
  const double mid = minimal_seminorm(sp, u, {0.8, 2, 4, Kind::TriebelLizorkin}).value;
  const double hi = minimal_seminorm(sp, u, {0.8, 2, 2, Kind::TriebelLizorkin}).value;
  EXPECT_LE(lo, mid * (1 + 1e-7));
  EXPECT_LE(mid, hi * (1 + 1e-7));
  const double blo = minimal_seminorm(sp, u, {0.8, 2, kInf, Kind::Besov}).value;
  const double bmid = minimal_seminorm(sp, u, {0.8, 2, 3, Kind::Besov}).value;
  const double bhi = minimal_seminorm(sp, u, {0.8, 2, 2, Kind::Besov}).value;
  EXPECT_LE(blo, bmid * (1 + 1e-7));
  EXPECT_LE(bmid, bhi * (1 + 1e-7));
  const double tl13 = minimal_seminorm(sp, u, {0.8, 1, 3, Kind::TriebelLizorkin}).value;
  EXPECT_GT(tl13, 0);
}

TEST(MinimalSeminorm, Homogeneous) {
  auto sp = gen::random_space(4, 6);
  Vector u = Vector::LinSpaced(6, 0, 1);
  for (SeminormSpec spec : {SeminormSpec{0.6, 1, kInf, Kind::TriebelLizorkin},
                            SeminormSpec{0.6, 2, 2, Kind::Besov}}) {
    const double a = minimal_seminorm(sp, u, spec).value;
    const double b = minimal_seminorm(sp, -3.0 * u, spec).value;
    EXPECT_LT(rel(b, 3 * a), 1e-7);
  }
}

TEST(MinimalSeminorm, SnowflakeCovariance) {
  auto sp = gen::random_space(21, 6);
  Vector u = vec({0, 1, 0.2, -0.4, 0.9, 0.3});
  for (double beta : {0.5, 2.0}) {
    auto fl = gen::snowflake(sp, beta);
    const double a = minimal_seminorm(fl, u, {0.6, 2, kInf, Kind::Sobolev}).value;
    const double b = minimal_seminorm(sp, u, {0.6 * beta, 2, kInf, Kind::Sobolev}).value;
    EXPECT_LT(rel(a, b), 1e-12);
  }
}

TEST(MinimalSeminorm, BoundedLpEstimate) {
  // ||u||_{L^p(B)} <= C (diam^s (||g||_p + mu(B)^{1/p} g(y0)) + mu(B)^{1/p} |u(y0)|) with C = 1
  // holds for the canonical gradient: |u(x)| <= |u(y0)| + rho^s (g(x) + g(y0)).
  auto sp = gen::random_space(8, 8);
  Vector u = Vector::LinSpaced(8, -1, 3);
  const double s = 0.7, p = 2;
  auto g = canonical_single(sp, u, s);
  const double D = std::pow(diameter(sp), s), M = std::pow(sp.mu().sum(), 1 / p);
  for (PointId y0 = 0; y0 < 8; ++y0) {
    const double rhs = D * (lp_norm(sp, g.g, p) + M * g.g(y0)) + M * std::abs(u(y0));
    EXPECT_LE(lp_norm(sp, u, p), rhs);
  }
}

TEST(MinimalTransition, LineEndpoints) {
  // On the two-point line the transition problem is the plain one.
  auto sp = line({0, 1});
  std::vector<bool> fixed{true, true};
  auto r = minimal_transition(sp, vec({0, 1}), fixed, {1, 1, kInf, Kind::TriebelLizorkin});
  EXPECT_NEAR(r.value, 1, 1e-8);
  // Free interior point: the optimum is no larger than any fixed choice.
  auto sp3 = line({0, 0.5, 1});
  auto free = minimal_transition(sp3, vec({0, 0, 1}), {true, false, true},
                                 {1, 1, kInf, Kind::TriebelLizorkin});
  const double fixedv = minimal_seminorm(sp3, vec({0, 0.5, 1}), {1, 1, kInf, Kind::TriebelLizorkin}).value;
  EXPECT_LE(free.value, fixedv * (1 + 1e-7));
  EXPECT_TRUE(verify_gradient(sp3, free.u, 1, free.witness).worst_violation <= 1e-9);
}

TEST(SobolevL1, TransportationMatchesOracle) {
  for (int seed = 1; seed <= 15; ++seed) {
    auto sp = gen::random_space(300 + seed, 3 + seed % 4, seed % 2 ? 0.3 : 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    Vector u(static_cast<Eigen::Index>(sp.size()));
    for (auto& v : u) v = U(rng);
    const double s = 0.3 + 0.1 * (seed % 5);
    const double got = sobolev_l1_minimum(sp, u, s), want = oracle::sobolev(sp, u, s, 1);
    EXPECT_LE(rel(got, want), 1e-9) << seed;
  }
}
