#include "../scenes.hpp"

#include <evreflex/sim.hpp>
#include <evreflex/tti.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace evreflex;
using namespace evreflex::tti;

namespace {

FloatMap depth_map(int w, int h, float d) { return FloatMap(Semantics::DepthM, w, h, d); }

TtiMap random_tti(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<float> u(0.0f, 3.0f);
  TtiMap t(w, h, 0.1);
  for (auto& v : t.values.values.storage()) v = u(rng);
  for (auto& v : t.valid.storage()) v = rng() % 4 ? 1 : 0;
  return t;
}

} // namespace

TEST(SampleDepth, ExactOnPlanesAndInvalidOutside) {
  // Inverse depth linear in x: a slanted plane.
  FloatMap d(Semantics::DepthM, 8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) d(x, y) = static_cast<float>(1.0 / (0.5 + 0.02 * x + 0.01 * y));
  const auto s = sample_depth(d, 3.3, 4.6);
  ASSERT_TRUE(s.valid);
  EXPECT_NEAR(s.depth, 1.0 / (0.5 + 0.02 * 3.3 + 0.01 * 4.6), 1e-5);
  EXPECT_FALSE(sample_depth(d, -0.1, 2.0).valid);
  EXPECT_FALSE(sample_depth(d, 2.0, 7.5).valid);
  d(4, 4) = 0.0f;
  EXPECT_FALSE(sample_depth(d, 3.5, 3.5).valid);
}

TEST(GroundTruth, ScalarCases) {
  const auto same = ground_truth_inverse_tti(depth_map(5, 5, 2.0f), depth_map(5, 5, 2.0f),
                                             FlowField(5, 5, 0.3f, -0.2f), 0.1);
  for (float v : same.values.values.values()) EXPECT_EQ(v, 0.0f);

  const auto closing = ground_truth_inverse_tti(depth_map(5, 5, 2.1f), depth_map(5, 5, 2.0f),
                                                FlowField(5, 5), 0.1);
  EXPECT_NEAR(closing(2, 2), 0.5, 1e-5);
  EXPECT_EQ(closing.valid(2, 2), 1);

  const auto receding = ground_truth_inverse_tti(depth_map(5, 5, 2.0f), depth_map(5, 5, 2.2f),
                                                 FlowField(5, 5), 0.1);
  EXPECT_EQ(receding(2, 2), 0.0f);
}

TEST(GroundTruth, Errors) {
  EXPECT_THROW(ground_truth_inverse_tti(depth_map(3, 3, 1), depth_map(3, 3, 1), FlowField(3, 3), 0.0),
               Error);
  try {
    ground_truth_inverse_tti(depth_map(3, 3, 1), depth_map(3, 4, 1), FlowField(3, 3), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(StaticEstimator, ZeroRadialAndRotationalFields) {
  const int n = 21;
  const double c = 10.0;
  const auto d = depth_map(n, n, 2.0f);
  const auto zero = estimate_tti_static(FlowField(n, n), d, 0.1);
  for (float v : zero.values.values.values()) EXPECT_EQ(v, 0.0f);

  FlowField radial(n, n), rot(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      radial.u(x, y) = static_cast<float>(0.05 * (x - c));
      radial.v(x, y) = static_cast<float>(0.05 * (y - c));
      rot.u(x, y) = static_cast<float>(-(y - c) * 0.03);
      rot.v(x, y) = static_cast<float>((x - c) * 0.03);
    }
  }
  const auto tr = estimate_tti_static(radial, d, 0.1);
  const auto ts = estimate_tti_static(rot, d, 0.1);
  for (int y = 1; y < n - 1; ++y) {
    for (int x = 1; x < n - 1; ++x) {
      EXPECT_NEAR(tr(x, y), 0.5, 1e-5);
      EXPECT_NEAR(ts(x, y), 0.0, 1e-6);
    }
  }
}

TEST(DynamicEstimator, ScalarCases) {
  const auto still = estimate_tti_dynamic(FlowField(4, 4), depth_map(4, 4, 2), depth_map(4, 4, 2), 0.1);
  for (float v : still.values.values.values()) EXPECT_EQ(v, 0.0f);
  const auto closing =
      estimate_tti_dynamic(FlowField(4, 4), depth_map(4, 4, 2.0f), depth_map(4, 4, 1.9f), 0.1);
  EXPECT_NEAR(closing(1, 1), 0.5, 1e-5);
}

TEST(Producers, NonNegativeAndScaleWithInverseDt) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> du(1.0f, 3.0f), fu(-0.4f, 0.4f);
  // Smooth random depth so the resampling gate passes.
  auto smooth_depth = [&](float base) {
    FloatMap d(Semantics::DepthM, 12, 12);
    const float gx = fu(rng) * 0.02f, gy = fu(rng) * 0.02f;
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) d(x, y) = 1.0f / (1.0f / base + gx * x + gy * y);
    return d;
  };
  const auto d0 = smooth_depth(du(rng));
  const auto d1 = smooth_depth(du(rng));
  FlowField f(12, 12);
  for (auto& v : f.u.storage()) v = fu(rng);
  for (auto& v : f.v.storage()) v = fu(rng);
  const TtiMap a[3] = {ground_truth_inverse_tti(d0, d1, f, 0.1), estimate_tti_static(f, d1, 0.1),
                       estimate_tti_dynamic(f, d0, d1, 0.1)};
  const TtiMap b[3] = {ground_truth_inverse_tti(d0, d1, f, 0.05), estimate_tti_static(f, d1, 0.05),
                       estimate_tti_dynamic(f, d0, d1, 0.05)};
  for (int p = 0; p < 3; ++p) {
    for (std::size_t i = 0; i < a[p].valid.size(); ++i) {
      EXPECT_GE(a[p].values.values[i], 0.0f);
      EXPECT_NEAR(b[p].values.values[i], 2.0f * a[p].values.values[i], 1e-5);
    }
  }
}

TEST(DynamicEstimator, ReproducesGroundTruthOnSimulatorScene) {
  const auto seq = sim::simulate_sequence(scenes::approaching_sphere_scene(2.0, 0.3));
  const double dt = seq.scene.frame_interval();
  std::size_t joint = 0, close = 0;
  for (std::size_t k = 1; k + 1 < seq.frames.size(); ++k) {
    const auto est = estimate_tti_dynamic(seq.frames[k].flow_fwd, seq.frames[k].depth,
                                          seq.frames[k + 1].depth, dt);
    const auto& gt = seq.gt_tti_at_frame(k);
    for (std::size_t i = 0; i < gt.valid.size(); ++i) {
      if (!gt.valid[i] || !est.valid[i]) continue;
      ++joint;
      close += std::abs(est.values.values[i] - gt.values.values[i]) <= 1e-3 ? 1 : 0;
    }
  }
  EXPECT_GT(joint, 10000u);
  EXPECT_GE(static_cast<double>(close) / joint, 0.99);
}

TEST(StaticEstimator, WallApproachWithinTenPercent) {
  const auto seq = sim::simulate_sequence(scenes::wall_approach_scene(2.1, 1.0, 10.0));
  const auto& f = seq.frames[3];
  const auto est = estimate_tti_static(f.flow_fwd, f.depth, seq.scene.frame_interval());
  const auto& gt = seq.gt_tti_at_frame(3);
  for (int y = 2; y < 62; ++y)
    for (int x = 2; x < 62; ++x) EXPECT_NEAR(est(x, y), gt(x, y), 0.1 * gt(x, y));
}

TEST(TtiMse, Cases) {
  std::mt19937_64 rng(4);
  const auto gt = random_tti(rng, 9, 9);
  EXPECT_EQ(tti_mse(gt, gt), 0.0);
  TtiMap offset = gt;
  for (auto& v : offset.values.values.storage()) v += 0.1f;
  EXPECT_NEAR(tti_mse(offset, gt), 0.01, 1e-6);

  const auto pred = random_tti(rng, 9, 9);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.valid.size(); ++i) {
    if (pred.valid[i] && gt.valid[i]) {
      const double e = static_cast<double>(pred.values.values[i]) - gt.values.values[i];
      sum += e * e;
      ++n;
    }
  }
  EXPECT_NEAR(tti_mse(pred, gt), sum / n, 1e-9);

  TtiMap none(9, 9, 0.1);
  try {
    tti_mse(none, gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
  }
}

TEST(Threshold, DirectAndMonotone) {
  TtiMap t(3, 3, 0.1);
  for (auto& v : t.valid.storage()) v = 1;
  EXPECT_EQ(count_set(threshold_collision(t, 1.0)), 0u);
  t.values(1, 2) = 1.2f;
  const Mask m = threshold_collision(t, 1.0);
  EXPECT_EQ(count_set(m), 1u);
  EXPECT_EQ(m(1, 2), 1);

  std::mt19937_64 rng(5);
  for (int r = 0; r < 20; ++r) {
    const auto tr = random_tti(rng, 16, 16);
    const Mask tight = threshold_collision(tr, 0.5);
    const Mask loose = threshold_collision(tr, 1.0);
    for (std::size_t i = 0; i < tight.size(); ++i) {
      if (tight[i]) EXPECT_TRUE(loose[i]);
    }
  }
}
