#include <evreflex/policy.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace evreflex;
using namespace evreflex::policy;

TEST(MotionVector, EmptyMaskIsZero) {
  tti::TtiMap t(4, 4, 0.1);
  const auto mv = obstacle_motion_vector(FlowField(4, 4), FloatMap(Semantics::DepthM, 4, 4, 2.0f), t,
                                         Mask(4, 4));
  EXPECT_EQ(mv.pixel_count, 0u);
  EXPECT_EQ(mv.value, Vec3::Zero());
}

TEST(MotionVector, SinglePixel) {
  tti::TtiMap t(4, 4, 0.1);
  t.values(2, 1) = 0.5f;
  t.valid(2, 1) = 1;
  Mask sel(4, 4);
  sel(2, 1) = 1;
  const auto mv = obstacle_motion_vector(FlowField(4, 4), FloatMap(Semantics::DepthM, 4, 4, 2.0f),
                                         t, sel);
  EXPECT_EQ(mv.pixel_count, 1u);
  EXPECT_NEAR((mv.value - Vec3(0, 0, 1.0)).norm(), 0.0, 1e-12);
}

TEST(MotionVector, MatchesLoopOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f), pos(0.5f, 4.0f);
  const int n = 12;
  FlowField f(n, n);
  FloatMap d(Semantics::DepthM, n, n);
  tti::TtiMap t(n, n, 0.1);
  Mask sel(n, n);
  for (std::size_t i = 0; i < sel.size(); ++i) {
    f.u[i] = u(rng);
    f.v[i] = u(rng);
    d.values[i] = rng() % 10 ? pos(rng) : 0.0f;
    t.values.values[i] = pos(rng);
    t.valid[i] = rng() % 5 ? 1 : 0;
    sel[i] = rng() % 2;
  }
  const Lifting lift{30.0, 28.0};
  Vec3 plain = Vec3::Zero(), lifted = Vec3::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (!sel[i] || !t.valid[i] || !depth_valid(d.values[i])) continue;
    const double z = d.values[i];
    plain += Vec3(f.u[i], f.v[i], z * t.values.values[i]);
    lifted += Vec3(f.u[i] * z / (30.0 * 0.1), f.v[i] * z / (28.0 * 0.1), z * t.values.values[i]);
    ++count;
  }
  const auto a = obstacle_motion_vector(f, d, t, sel);
  const auto b = obstacle_motion_vector(f, d, t, sel, lift);
  ASSERT_EQ(a.pixel_count, count);
  EXPECT_LT((a.value - plain / count).norm(), 1e-9);
  EXPECT_LT((b.value - lifted / count).norm(), 1e-9);
}

TEST(Evasion, CanonicalAndDegenerate) {
  const auto r = evasion_direction(Vec3(1, 0, 0), EgoMotion{Vec3(0, 0, 1)});
  EXPECT_FALSE(r.degenerate);
  EXPECT_LT((r.psi - Vec3(0, -1, 0)).norm(), 1e-12);
  const auto p = evasion_direction(Vec3(0, 0, 1), EgoMotion{Vec3(0, 0, 1)});
  EXPECT_TRUE(p.degenerate);
  EXPECT_LT((p.psi - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(Evasion, Properties) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 m(g(rng), g(rng), g(rng));
    const Vec3 v(g(rng), g(rng), g(rng));
    const auto r = evasion_direction(m, EgoMotion{v});
    ASSERT_FALSE(r.degenerate);
    EXPECT_NEAR(r.psi.norm(), 1.0, 1e-12);
    EXPECT_LT(std::abs(r.psi.dot(v)), 1e-6 * v.norm());
    EXPECT_LT(std::abs(r.psi.dot(m)), 1e-6 * m.norm());
    const auto s = evasion_direction(scale(rng) * m, EgoMotion{v});
    EXPECT_LT((s.psi - r.psi).norm(), 1e-9);
    // Mirror: with v along the optical axis, flipping X of the motion flips
    // the Y of psi.
    const Vec3 fwd(0, 0, std::abs(v.z()) + 0.1);
    const auto a = evasion_direction(m, EgoMotion{fwd});
    const auto b = evasion_direction(Vec3(-m.x(), m.y(), m.z()), EgoMotion{fwd});
    EXPECT_NEAR(b.psi.y(), -a.psi.y(), 1e-12);
  }
}

TEST(Evasion, EvadeCarriesPixelCount) {
  const auto r = evade(MotionVector{Vec3(0.2, 0.1, 1.0), 42}, EgoMotion{Vec3(0, 0, 1)});
  EXPECT_EQ(r.pixel_count, 42u);
  EXPECT_EQ(r.motion_vec, Vec3(0.2, 0.1, 1.0));
}
