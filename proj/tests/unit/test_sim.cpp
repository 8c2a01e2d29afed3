#include "../scenes.hpp"

#include <evreflex/flow.hpp>
#include <evreflex/io.hpp>
#include <evreflex/sim.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace evreflex;
using namespace evreflex::scenes;

namespace {

std::vector<Event> two_frame_events(const FloatMap& a, const FloatMap& b, double c) {
  const std::vector<sim::StampedImage> frames = {{0.0, &a}, {0.1, &b}};
  return sim::generate_events(frames, c);
}

} // namespace

TEST(GenerateEvents, ConstantSequenceIsSilent) {
  const FloatMap a(Semantics::Intensity, 6, 6, 0.4f);
  EXPECT_TRUE(two_frame_events(a, a, 0.15).empty());
}

TEST(GenerateEvents, StepUpCountMatchesLogRatio) {
  FloatMap a(Semantics::Intensity, 3, 3, 0.2f), b = a;
  b(1, 2) = 0.5f;
  const auto ev = two_frame_events(a, b, 0.15);
  const int expected = static_cast<int>(std::floor(
      std::log((0.5 + sim::kLogEps) / (0.2 + sim::kLogEps)) / 0.15));
  ASSERT_EQ(expected, 6);
  ASSERT_EQ(ev.size(), 6u);
  for (const auto& e : ev) {
    EXPECT_EQ(e.x, 1);
    EXPECT_EQ(e.y, 2);
    EXPECT_EQ(e.polarity, 1);
    EXPECT_GE(e.t, 0.0);
    EXPECT_LT(e.t, 0.1);
  }
}

TEST(GenerateEvents, StepDownIsNegativeOnly) {
  FloatMap a(Semantics::Intensity, 4, 4, 0.7f), b = a;
  b(0, 0) = 0.1f;
  b(3, 1) = 0.3f;
  const auto ev = two_frame_events(a, b, 0.15);
  ASSERT_FALSE(ev.empty());
  for (const auto& e : ev) EXPECT_EQ(e.polarity, -1);
}

TEST(GenerateEvents, ReversalSwapsPolarityCounts) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(0.05f, 1.0f);
  FloatMap a(Semantics::Intensity, 10, 10), b(Semantics::Intensity, 10, 10);
  for (auto& v : a.values.storage()) v = u(rng);
  for (auto& v : b.values.storage()) v = u(rng);
  const auto fwd = accumulate_events(two_frame_events(a, b, 0.15), {0.0, 0.1}, 10, 10);
  const auto rev = accumulate_events(two_frame_events(b, a, 0.15), {0.0, 0.1}, 10, 10);
  EXPECT_EQ(fwd.pos_count, rev.neg_count);
  EXPECT_EQ(fwd.neg_count, rev.pos_count);
}

TEST(GenerateEvents, ShapeMismatchRejected) {
  const FloatMap a(Semantics::Intensity, 4, 4), b(Semantics::Intensity, 4, 5);
  try {
    two_frame_events(a, b, 0.15);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(RenderFrame, StaticCameraHasZeroFlow) {
  SceneConfig s;
  const auto f = sim::render_frame(s, 0.5);
  for (std::size_t i = 0; i < f.flow_fwd.u.size(); ++i) {
    EXPECT_EQ(f.flow_fwd.u[i], 0.0f);
    EXPECT_EQ(f.flow_fwd.v[i], 0.0f);
  }
}

TEST(RenderFrame, ClosedRoomGivesPositiveDepthEverywhere) {
  const auto f = sim::render_frame(crossing_sphere_scene(), 1.0);
  for (float d : f.depth.values.values()) EXPECT_TRUE(depth_valid(d));
}

TEST(RenderFrame, SphereClassMatchesRayCast) {
  const auto scene = crossing_sphere_scene();
  const double t = 1.0;
  const auto f = sim::render_frame(scene, t);
  const auto pose = sim::camera_pose(scene, t);
  const auto& ob = scene.obstacles[0];
  const sim::Vec3 centre = ob.center_at(t);
  const auto& cam = scene.camera;
  std::size_t on_sphere = 0, checked = 0;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const sim::Vec3 d =
          (pose.rotation() * sim::Vec3((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0))
              .normalized();
      const sim::Vec3 oc = pose.position - centre;
      const double b = oc.dot(d);
      const double disc = b * b - (oc.squaredNorm() - ob.radius * ob.radius);
      if (std::abs(disc) < 1e-3) continue;  // grazing rays
      const bool hit = disc > 0.0 && -b - std::sqrt(disc) > 0.0;
      ++checked;
      on_sphere += hit ? 1 : 0;
      EXPECT_EQ(f.class_map(x, y) == 2.0f, hit) << x << "," << y;
    }
  }
  EXPECT_GT(on_sphere, 20u);
  EXPECT_GT(checked, 4000u);
}

TEST(RenderFrame, CameraOutsideRoomIsPoseError) {
  SceneConfig s;
  s.trajectory.waypoints = {{10.0, 0.0, 0.0}};
  try {
    sim::render_frame(s, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Pose);
  }
}

TEST(RenderFrame, ForwardBackwardFlowConsistency) {
  const auto scene = lateral_wall_scene(1.3);
  const auto f0 = sim::render_frame(scene, 0.3);
  const auto f1 = sim::render_frame(scene, 0.4);
  const auto back = flow::warp(f1.flow_bwd, f0.flow_fwd);
  std::size_t n = 0;
  for (std::size_t i = 0; i < back.valid.size(); ++i) {
    if (!back.valid[i]) continue;
    ++n;
    EXPECT_NEAR(back.out.u[i], -f0.flow_fwd.u[i], 0.1);
    EXPECT_NEAR(back.out.v[i], -f0.flow_fwd.v[i], 0.1);
  }
  EXPECT_GT(n, 3000u);
}

TEST(Simulate, CountsFollowDurationAndRate) {
  SceneConfig s;
  s.duration = 1.0;
  s.frame_rate = 10.0;
  s.trajectory.waypoints = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  const auto seq = sim::simulate_sequence(s);
  EXPECT_EQ(seq.frames.size(), 10u);
  EXPECT_EQ(seq.windows.size(), 9u);
  EXPECT_EQ(seq.gt_tti.size(), 9u);
}

TEST(Simulate, SameSeedIsByteIdentical) {
  SceneConfig s;
  s.random_obstacles = 2;
  s.random_waypoints = 3;
  s.rng_seed = 77;
  s.duration = 0.5;
  const auto a = sim::simulate_sequence(s);
  const auto b = sim::simulate_sequence(s);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    EXPECT_EQ(io::encode_map(a.frames[k].intensity), io::encode_map(b.frames[k].intensity));
    EXPECT_EQ(io::encode_flow(a.frames[k].flow_fwd), io::encode_flow(b.frames[k].flow_fwd));
  }
  for (std::size_t k = 0; k < a.windows.size(); ++k) {
    EXPECT_EQ(io::encode_events(a.windows[k], 64, 64), io::encode_events(b.windows[k], 64, 64));
  }
}

TEST(Simulate, WallApproachCentreTau) {
  const auto seq = sim::simulate_sequence(wall_approach_scene(2.1, 1.0, 10.0));
  EXPECT_NEAR(seq.frames[1].depth(32, 32), 2.0, 1e-4);
  EXPECT_NEAR(seq.gt_tti_at_frame(1)(32, 32), 0.5, 0.01);
}

TEST(Simulate, TangentialObstacleHasNearZeroTau) {
  SceneConfig s;
  s.trajectory.waypoints = {{0.0, 0.0, 0.0}};
  SphereObstacle ob;
  ob.radius = 0.3;
  ob.position = Vec3(2.0, 1.0, 0.5);
  ob.velocity = Vec3(0.0, -1.5, 0.0);
  s.obstacles.push_back(ob);
  const auto seq = sim::simulate_sequence(s);
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const auto& gt = seq.gt_tti_at_frame(k);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gt.valid.size(); ++i) {
      if (gt.valid[i] && seq.frames[k].class_map.values[i] == 2.0f) {
        sum += gt.values.values[i];
        ++n;
      }
    }
    if (n > 0) EXPECT_LT(sum / n, 1e-2);
  }
}

TEST(Simulate, EventsLandInTheirWindow) {
  const auto seq = sim::simulate_sequence(lateral_wall_scene());
  for (std::size_t k = 0; k < seq.windows.size(); ++k) {
    for (const auto& e : seq.windows[k]) {
      EXPECT_GE(e.t, seq.frames[k].t);
      EXPECT_LT(e.t, seq.frames[k + 1].t);
    }
    EXPECT_NO_THROW(seq.event_map(k));
  }
}
