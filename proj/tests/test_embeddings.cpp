#include <qmm/embeddings.hpp>
#include <qmm/generators.hpp>

#include <gtest/gtest.h>

using namespace qmm;

namespace {

QuasiMetricSpace two_point() {
  Matrix rho(2, 2);
  rho << 0, 1, 1, 0;
  return QuasiMetricSpace::validate("two", {}, rho, Vector::Ones(2));
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

EmbeddingCase make(Theorem t, Regime r, double s, double p, double q, double Q, double sigma = 1) {
  EmbeddingCase c;
  c.theorem = t;
  c.regime = r;
  c.s = s;
  c.p = p;
  c.q = q;
  c.Q = Q;
  c.sigma = sigma;
  return c;
}

}  // namespace

TEST(Regime, Parsing) {
  EXPECT_EQ(parse_theorem("doub"), Theorem::Doub);
  EXPECT_EQ(parse_regime("holder"), Regime::Holder);
  EXPECT_FALSE(parse_theorem("lebesgue"));
  for (auto t : {Theorem::VLocal, Theorem::LB, Theorem::Doub, Theorem::Eps, Theorem::Global})
    EXPECT_EQ(parse_theorem(to_string(t)), t);
}

TEST(Regime, Mismatches) {
  EXPECT_THROW(check_regime(make(Theorem::LB, Regime::Sobolev, 1, 2, kInf, 1)), Error);
  EXPECT_THROW(check_regime(make(Theorem::LB, Regime::Trudinger, 0.5, 1, kInf, 1)), Error);
  EXPECT_THROW(check_regime(make(Theorem::Global, Regime::Holder, 1, 2, kInf, 1)), Error);
  EXPECT_NO_THROW(check_regime(make(Theorem::LB, Regime::Trudinger, 0.5, 2, kInf, 1)));
  auto eps = make(Theorem::Eps, Regime::Sobolev, 0.5, 1, 2, 1);
  EXPECT_THROW(check_regime(eps), Error);
  eps.epsilon = 0.25;
  EXPECT_NO_THROW(check_regime(eps));
}

TEST(Local, ConstantHasZeroPoincareLhs) {
  auto sp = gen::grid(8);
  auto c = make(Theorem::LB, Regime::Poincare, 0.5, 1, kInf, 1, 2);
  auto t = local_embedding_check(sp, c, {3, 0.4, false}, Vector::Constant(8, 2.5));
  EXPECT_EQ(t.lhs, 0);
  EXPECT_EQ(t.gamma, 2.5);
  EXPECT_EQ(t.seminorm, 0);
}

TEST(Local, TwoPointExplicitGradient) {
  auto sp = two_point();
  const Vector u = vec({0, 1});
  FractionalGradient g;
  g.levels[-1] = vec({0.5, 0.5});
  const Gradient grad = g;
  auto c = make(Theorem::LB, Regime::Sobolev, 1, 0.5, kInf, 1);
  ASSERT_DOUBLE_EQ(c.p_star(), 1);
  const Ball B0{0, 1.5, false};
  auto t = local_embedding_check(sp, c, B0, u, &grad);
  EXPECT_DOUBLE_EQ(t.seminorm, 2);  // (2 * 0.5^(1/2))^2
  EXPECT_DOUBLE_EQ(t.lhs, 0.5);
  ASSERT_EQ(t.rhs.size(), 2u);
  EXPECT_NEAR(t.rhs[0], 2 / 1.5, 1e-15);
  EXPECT_NEAR(t.rhs[1], 1 / 2.25, 1e-15);

  c.regime = Regime::Poincare;
  auto pt = local_embedding_check(sp, c, B0, u, &grad);
  EXPECT_NEAR(pt.lhs, 0.5, 1e-12);
  EXPECT_EQ(pt.rhs.size(), 1u);

  FractionalGradient bad;
  bad.levels[-1] = vec({0.1, 0.1});
  const Gradient bg = bad;
  EXPECT_THROW(local_embedding_check(sp, c, B0, u, &bg), Error);
}

TEST(Local, DoublingFormIsNotAveraged) {
  auto sp = gen::grid(8);
  auto c = make(Theorem::Doub, Regime::Sobolev, 0.5, 1, kInf, 1, 2);
  Vector u = Vector::LinSpaced(8, 0, 1);
  auto t = local_embedding_check(sp, c, {2, 0.3, false}, u);
  EXPECT_NEAR(t.lhs, lp_norm(sp, u, c.p_star(), ball_members(sp, 2, 0.3)), 1e-15);
}

TEST(Local, VConditionMeasuredWhenAbsent) {
  auto sp = gen::grid(8);
  auto c = make(Theorem::VLocal, Regime::Sobolev, 0.5, 1, kInf, 1, 2);
  auto t = local_embedding_check(sp, c, {2, 0.3, false}, Vector::LinSpaced(8, 0, 1));
  EXPECT_NEAR(t.b, v_constant(sp, 1, 2, 0.3, 2).kappa, 0);
}

TEST(Trudinger, TwoPointIntegral) {
  auto sp = two_point();
  EXPECT_NEAR(trudinger_integral(sp, {0, 1}, vec({0, 1}), 1, 1, 1), std::exp(0.5), 1e-15);
  EXPECT_THROW(trudinger_integral(sp, {0, 1}, vec({0, 1}), 1, 1, 0), Error);
}

TEST(Trudinger, ScaleInvariant) {
  auto sp = gen::grid(8);
  auto c = make(Theorem::LB, Regime::Trudinger, 0.5, 2, kInf, 1, 2);
  const Vector u = Vector::LinSpaced(8, 0, 1).array().square();
  const double a = trudinger_check(sp, c, {3, 0.5, false}, u).integral;
  const double b = trudinger_check(sp, c, {3, 0.5, false}, Vector(2 * u)).integral;
  EXPECT_NEAR(a, b, 1e-9 * a);
  EXPECT_THROW(trudinger_check(sp, c, {3, 0.5, false}, Vector::Ones(8)), Error);
}

TEST(Holder, TwoPointRatio) {
  auto sp = two_point();
  auto c = make(Theorem::LB, Regime::Holder, 1, 2, kInf, 1);
  auto h = holder_check(sp, c, {0, 1.5, false}, vec({0, 1}));
  EXPECT_NEAR(h.factor, std::sqrt(0.5), 1e-9);
  EXPECT_NEAR(h.max_ratio, std::sqrt(2.0), 1e-9);
  EXPECT_EQ(holder_check(sp, c, {0, 1.5, false}, vec({3, 3})).max_ratio, 0);
}

TEST(Holder, SnowflakedLineFinite) {
  auto sp = gen::snowflake(gen::grid(6), 0.5);
  auto c = make(Theorem::LB, Regime::Holder, 0.5, 3, kInf, 1);  // s - Q/p = 1/6
  auto h = holder_check(sp, c, {0, 1, false}, Vector::LinSpaced(6, 0, 1));
  EXPECT_TRUE(std::isfinite(h.max_ratio));
  EXPECT_GT(h.max_ratio, 0);
}

TEST(Global, TwoPointClosedForms) {
  auto sp = two_point();
  auto s = global_check(sp, Regime::Sobolev, vec({0, 1}), 0.5, 1, kInf, 1);
  EXPECT_NEAR(s.lhs, 1, 1e-15);
  EXPECT_NEAR(s.seminorm, 1, 1e-12);
  EXPECT_NEAR(s.rhs[1], 1, 1e-15);
  auto p = global_check(sp, Regime::Poincare, vec({0, 1}), 0.5, 1, kInf, 1);
  EXPECT_NEAR(p.lhs, std::sqrt(0.5), 1e-12);
  EXPECT_EQ(global_check(sp, Regime::Poincare, vec({2, 2}), 0.5, 1, kInf, 1).lhs, 0);
}

TEST(Global, DiameterTermDominatesNearConstants) {
  auto sp = gen::grid(8);
  Vector u = Vector::Ones(8);
  u(3) += 1e-3;
  auto t = global_check(sp, Regime::Sobolev, u, 0.5, 1, kInf, 1);
  EXPECT_GT(t.rhs[1], 10 * t.rhs[0]);
}

TEST(Cache, TLInfinityMatchesSolver) {
  auto sp = gen::random_space(9, 6);
  SeminormCache cache;
  const Vector u = Vector::LinSpaced(6, -1, 2);
  for (double p : {1.0, 2.0}) {
    SeminormSpec spec{0.4, p, kInf, Kind::TriebelLizorkin};
    const double a = cache.get(sp, all_points(6), u, spec);
    const double b = minimal_seminorm(sp, u, spec).value;
    EXPECT_NEAR(a, b, 1e-7 * b);
  }
  EXPECT_EQ(cache.get(sp, {2}, u, {0.4, 1, kInf, Kind::TriebelLizorkin}), 0);
}

TEST(BestConstant, ConstantsOnlyGiveZero) {
  auto sp = gen::grid(8);
  auto reg = regularize(sp);
  auto c = make(Theorem::LB, Regime::Poincare, 0.5, 1, kInf, 1, reg.C_rho);
  Battery consts = [](const Ball&) { return std::vector<Witness>{{"one", Vector::Ones(8)}, {"two", Vector::Constant(8, 2)}}; };
  auto rep = best_constant(sp, reg, c, critical_balls(sp), consts);
  EXPECT_EQ(rep.best_constant, 0);
  EXPECT_FALSE(rep.unbounded);
  EXPECT_FALSE(rep.outside_theorem);
}

TEST(BestConstant, GridStableAcrossResolutions) {
  std::vector<double> C;
  for (int n : {8, 16}) {
    auto sp = gen::grid(n);
    auto reg = regularize(sp);
    auto c = make(Theorem::LB, Regime::Poincare, 0.5, 1, kInf, 1, reg.C_rho);
    auto rep = best_constant(sp, reg, c, critical_balls(sp), default_battery(reg, sp, c));
    EXPECT_FALSE(rep.unbounded);
    C.push_back(rep.best_constant);
  }
  EXPECT_LT(std::max(C[0], C[1]) / std::min(C[0], C[1]), 3);
}

TEST(BestConstant, ChainRatiosFiniteInSobolevRegime) {
  auto sp = gen::grid(16);
  auto reg = regularize(sp);
  auto c = make(Theorem::LB, Regime::Sobolev, 0.5, 1, kInf, 1, reg.C_rho);
  const Ball B{7, 0.5, false};
  SeminormCache cache;
  for (const auto& w : chain_witnesses(reg, sp, B, c.s, c.p, c.q, {})) {
    auto e = evaluate(sp, c, B, w, cache);
    ASSERT_TRUE(e);
    EXPECT_TRUE(std::isfinite(e->ratio)) << w.name;
    EXPECT_GT(e->ratio, 0) << w.name;
  }
}

TEST(BestConstant, OutsideTheoremFlag) {
  auto sp = gen::grid(8);
  auto reg = regularize(sp);
  auto c = make(Theorem::LB, Regime::Poincare, 0.5, 1, kInf, 1, 1);  // C_rho = 2
  auto rep = best_constant(sp, reg, c, {{0, 0.5, false}}, default_battery(reg, sp, c));
  EXPECT_TRUE(rep.outside_theorem);
}

TEST(BestConstant, SuppliedConstantVerdict) {
  auto sp = gen::grid(8);
  auto reg = regularize(sp);
  auto c = make(Theorem::LB, Regime::Poincare, 0.5, 1, kInf, 1, reg.C_rho);
  auto bat = default_battery(reg, sp, c);
  auto rep = best_constant(sp, reg, c, critical_balls(sp), bat);
  EXPECT_TRUE(best_constant(sp, reg, c, critical_balls(sp), bat, rep.best_constant * 1.01).verdict);
  EXPECT_FALSE(best_constant(sp, reg, c, critical_balls(sp), bat, rep.best_constant * 0.99).verdict);
}

TEST(BestConstant, BallFreeFormsPoolWitnesses) {
  // the LB Holder form does not depend on the ball: witnesses of every ball are tested once
  auto sp = gen::grid(6);
  auto reg = regularize(sp);
  auto c = make(Theorem::LB, Regime::Holder, 0.5, 3, kInf, 1, reg.C_rho);
  Battery per_ball = [&](const Ball& b) {
    Vector v = Vector::Zero(6);
    v(b.center) = 1;
    return std::vector<Witness>{{"delta" + std::to_string(b.center), v}};
  };
  auto rep = best_constant(sp, reg, c, critical_balls(sp), per_ball);
  EXPECT_EQ(rep.evaluations, 6u);
  EXPECT_EQ(rep.per_ball.size(), 1u);
}

TEST(Islands, IndicatorSeminormIsPositiveWheneverLhsIsNot) {
  // zero seminorm on sigma B0 forces u constant there, and sigma >= 1 makes B0 part of it
  auto sp = gen::islands({4, 4}, 10);
  auto reg = regularize(sp);
  auto c = make(Theorem::LB, Regime::Poincare, 0.5, 1, kInf, 1, reg.C_rho);
  Vector ind = Vector::Zero(8);
  for (int i = 0; i < 4; ++i) ind(i) = 1;
  SeminormCache cache;
  for (const auto& B : critical_balls(sp)) {
    auto t = local_embedding_check(sp, c, B, ind, nullptr, &cache);
    if (t.seminorm == 0) EXPECT_EQ(t.lhs, 0);
    if (t.lhs > 0) EXPECT_GT(t.seminorm, 0);
  }
}
