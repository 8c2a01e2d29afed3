#pragma once

#include <evreflex/tti.hpp>
#include <evreflex/types.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace evreflex::sim {

using Vec3 = Eigen::Vector3d;

enum class TextureKind { Checker, Flat, Sine };

// Procedural albedo over surface coordinates in metres.
struct Texture {
  TextureKind kind = TextureKind::Checker;
  double base = 0.5;
  double amplitude = 0.6;
  double cell = 0.25;

  double sample(double a, double b) const;
};

struct SphereObstacle {
  double radius = 0.25;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  int class_id = static_cast<int>(ClassId::Flying);
  Texture texture{TextureKind::Checker, 0.5, 0.8, 0.1};

  Vec3 center_at(double t) const { return position + velocity * t; }
};

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double yaw_deg = 0.0;
};

// World frame: X-Y floor plane, Z up, floor at z = 0. The camera moves along
// the waypoint polyline at constant speed and yaw rate, holding still at the
// last waypoint.
struct TrajectorySpec {
  std::vector<Waypoint> waypoints{Waypoint{}};
  double speed = 0.5;
  double yaw_rate_deg = 45.0;
  double camera_height = 0.5;
};

struct RoomSpec {
  double half_x = 3.0;
  double half_y = 3.0;
  double height = 2.5;
};

struct SceneConfig {
  RoomSpec room;
  Texture wall_texture{TextureKind::Checker, 0.5, 0.6, 0.5};
  Texture floor_texture{TextureKind::Checker, 0.4, 0.5, 0.5};
  std::vector<SphereObstacle> obstacles;
  TrajectorySpec trajectory;

  // Randomised content, expanded deterministically from rng_seed.
  int random_obstacles = 0;
  double obstacle_speed_min = 0.5;
  double obstacle_speed_max = 3.0;
  double obstacle_radius_min = 0.1;
  double obstacle_radius_max = 0.3;
  int random_waypoints = 0;

  double frame_rate = 10.0;
  double duration = 1.0;
  CameraModel camera;
  double contrast_threshold = 0.15;
  std::uint64_t rng_seed = 1;
  int supersample = 2;

  double frame_interval() const { return 1.0 / frame_rate; }
  int frame_count() const;
  void validate() const;
};

// Replaces the random_* requests by explicit waypoints and obstacles.
SceneConfig resolve_random(const SceneConfig& scene);

struct Pose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;

  // Columns are the camera x (right), y (down), z (forward) axes in world.
  Eigen::Matrix3d rotation() const;
};

Pose camera_pose(const SceneConfig& scene, double t);

// Camera-frame linear velocity (Z = optical axis) at time t.
Vec3 ego_velocity(const SceneConfig& scene, double t);

struct Frame {
  double t = 0.0;
  FloatMap intensity;
  FloatMap depth;
  FloatMap class_map;
  FlowField flow_fwd;
  FlowField flow_bwd;
  Pose pose;
};

Frame render_frame(const SceneConfig& scene, double t);

struct StampedImage {
  double t = 0.0;
  const FloatMap* image = nullptr;
};

inline constexpr double kLogEps = 1e-3;

std::vector<Event> generate_events(std::span<const StampedImage> frames, double contrast_threshold);

struct Sequence {
  SceneConfig scene;  // resolved
  std::vector<Frame> frames;
  // windows[k] holds the events in [t_k, t_{k+1}).
  std::vector<std::vector<Event>> windows;
  // gt_tti[k - 1] is the ground truth for frame k (k >= 1).
  std::vector<tti::TtiMap> gt_tti;

  const tti::TtiMap& gt_tti_at_frame(std::size_t k) const { return gt_tti.at(k - 1); }
  EventMap event_map(std::size_t k) const;
};

Sequence simulate_sequence(const SceneConfig& scene);

} // namespace evreflex::sim
