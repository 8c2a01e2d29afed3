#include <evreflex/parallel.hpp>
#include <evreflex/sim.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace evreflex::sim {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

enum class Surface { WallX, WallY, Floor, Ceiling, Sphere, None };

struct Hit {
  double depth = std::numeric_limits<double>::infinity();  // ray parameter == Z-depth
  Surface surface = Surface::None;
  int sphere = -1;
  Vec3 point = Vec3::Zero();
};

// Uniform in [0, 1) from the raw generator output so the sequence does not
// depend on the standard library's distribution implementation.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  Waypoint from;
  Waypoint to;
};

std::vector<Segment> build_segments(const TrajectorySpec& spec) {
  std::vector<Segment> segments;
  double t = 0.0;
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    const auto& a = spec.waypoints[i - 1];
    const auto& b = spec.waypoints[i];
    const double dist = std::hypot(b.x - a.x, b.y - a.y);
    const double dyaw = std::abs(b.yaw_deg - a.yaw_deg);
    const double dur = std::max(spec.speed > 0.0 ? dist / spec.speed : 0.0,
                                spec.yaw_rate_deg > 0.0 ? dyaw / spec.yaw_rate_deg : 0.0);
    if (dur <= 0.0) continue;
    segments.push_back({t, t + dur, a, b});
    t += dur;
  }
  return segments;
}

Hit cast_ray(const SceneConfig& scene, double t, const Vec3& origin, const Vec3& dir) {
  Hit hit;
  const auto& room = scene.room;
  const double lo[3] = {-room.half_x, -room.half_y, 0.0};
  const double hi[3] = {room.half_x, room.half_y, room.height};
  for (int axis = 0; axis < 3; ++axis) {
    const double d = dir[axis];
    if (d == 0.0) continue;
    const double s = ((d > 0.0 ? hi[axis] : lo[axis]) - origin[axis]) / d;
    if (s > 0.0 && s < hit.depth) {
      hit.depth = s;
      hit.surface = axis == 0   ? Surface::WallX
                    : axis == 1 ? Surface::WallY
                    : d < 0.0   ? Surface::Floor
                                : Surface::Ceiling;
    }
  }
  for (std::size_t k = 0; k < scene.obstacles.size(); ++k) {
    const auto& ob = scene.obstacles[k];
    const Vec3 oc = origin - ob.center_at(t);
    const double a = dir.squaredNorm();
    const double b = 2.0 * dir.dot(oc);
    const double c = oc.squaredNorm() - ob.radius * ob.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    double s = (-b - sq) / (2.0 * a);
    if (s <= 0.0) s = (-b + sq) / (2.0 * a);
    if (s > 0.0 && s < hit.depth) {
      hit.depth = s;
      hit.surface = Surface::Sphere;
      hit.sphere = static_cast<int>(k);
    }
  }
  hit.point = origin + hit.depth * dir;
  return hit;
}

double shade(const SceneConfig& scene, double t, const Hit& hit) {
  const Vec3& p = hit.point;
  double value = 0.0;
  switch (hit.surface) {
    case Surface::WallX: value = scene.wall_texture.sample(p.y(), p.z()); break;
    case Surface::WallY: value = scene.wall_texture.sample(p.x(), p.z()); break;
    case Surface::Ceiling: value = scene.wall_texture.sample(p.x(), p.y()); break;
    case Surface::Floor: value = scene.floor_texture.sample(p.x(), p.y()); break;
    case Surface::Sphere: {
      const auto& ob = scene.obstacles[static_cast<std::size_t>(hit.sphere)];
      const Vec3 local = p - ob.center_at(t);
      const double lon = std::atan2(local.y(), local.x());
      const double lat = std::asin(std::clamp(local.z() / ob.radius, -1.0, 1.0));
      value = ob.texture.sample(ob.radius * lon, ob.radius * lat);
      break;
    }
    case Surface::None: value = 0.0; break;
  }
  return std::clamp(value, 0.0, 1.0);
}

int class_of(const SceneConfig& scene, const Hit& hit) {
  switch (hit.surface) {
    case Surface::Floor: return static_cast<int>(ClassId::Floor);
    case Surface::Sphere: return scene.obstacles[static_cast<std::size_t>(hit.sphere)].class_id;
    default: return static_cast<int>(ClassId::Static);
  }
}

void check_pose(const SceneConfig& scene, const Pose& pose, double t) {
  const auto& p = pose.position;
  const auto& room = scene.room;
  if (!(std::abs(p.x()) < room.half_x && std::abs(p.y()) < room.half_y && p.z() > 0.0 &&
        p.z() < room.height)) {
    throw Error(ErrorKind::Pose, "camera outside the room at t=" + std::to_string(t));
  }
}

} // namespace

double Texture::sample(double a, double b) const {
  switch (kind) {
    case TextureKind::Flat: return base;
    case TextureKind::Checker: {
      const auto ia = static_cast<long long>(std::floor(a / cell));
      const auto ib = static_cast<long long>(std::floor(b / cell));
      const bool odd = ((ia + ib) & 1LL) != 0;
      return base + (odd ? 0.5 : -0.5) * amplitude;
    }
    case TextureKind::Sine: {
      const double k = 2.0 * std::numbers::pi / cell;
      return base + 0.5 * amplitude * std::sin(k * a) * std::sin(k * b);
    }
  }
  return base;
}

int SceneConfig::frame_count() const {
  return static_cast<int>(std::llround(duration * frame_rate));
}

void SceneConfig::validate() const {
  camera.validate();
  if (!(frame_rate > 0.0)) throw Error(ErrorKind::Range, "frame_rate must be positive");
  if (!(duration > 0.0)) throw Error(ErrorKind::Range, "duration must be positive");
  if (!(contrast_threshold > 0.0)) {
    throw Error(ErrorKind::Range, "contrast_threshold must be positive");
  }
  if (!(room.half_x > 0.0 && room.half_y > 0.0 && room.height > 0.0)) {
    throw Error(ErrorKind::Range, "room extents must be positive");
  }
  if (supersample < 1) throw Error(ErrorKind::Range, "supersample must be >= 1");
  if (trajectory.waypoints.empty() && random_waypoints <= 0) {
    throw Error(ErrorKind::Range, "trajectory needs at least one waypoint");
  }
  if (trajectory.speed < 0.0 || trajectory.yaw_rate_deg < 0.0) {
    throw Error(ErrorKind::Range, "trajectory speeds must be non-negative");
  }
  for (const auto& ob : obstacles) {
    if (!(ob.radius > 0.0)) throw Error(ErrorKind::Range, "obstacle radius must be positive");
  }
  if (random_obstacles < 0 || random_waypoints < 0) {
    throw Error(ErrorKind::Range, "random counts must be non-negative");
  }
  if (!(obstacle_speed_min >= 0.0 && obstacle_speed_max >= obstacle_speed_min)) {
    throw Error(ErrorKind::Range, "obstacle speed range is empty");
  }
  if (!(obstacle_radius_min > 0.0 && obstacle_radius_max >= obstacle_radius_min)) {
    throw Error(ErrorKind::Range, "obstacle radius range is empty");
  }
}

SceneConfig resolve_random(const SceneConfig& scene) {
  SceneConfig out = scene;
  std::mt19937_64 rng(scene.rng_seed);
  const double margin = 0.5;
  const double rx = std::max(scene.room.half_x - margin, 0.1);
  const double ry = std::max(scene.room.half_y - margin, 0.1);
  if (scene.random_waypoints > 0) {
    out.trajectory.waypoints.clear();
    double yaw = uniform(rng, -180.0, 180.0);
    for (int i = 0; i < scene.random_waypoints; ++i) {
      const double x = uniform(rng, -rx, rx);
      const double y = uniform(rng, -ry, ry);
      yaw += uniform(rng, -45.0, 45.0);
      out.trajectory.waypoints.push_back({x, y, yaw});
    }
    out.random_waypoints = 0;
  }
  for (int i = 0; i < scene.random_obstacles; ++i) {
    // Aim each obstacle at where the camera will be at a random time, so it
    // periodically comes close.
    SphereObstacle ob;
    ob.radius = uniform(rng, scene.obstacle_radius_min, scene.obstacle_radius_max);
    const double t_meet = uniform(rng, 0.3, 1.0) * scene.duration;
    const Vec3 target = camera_pose(out, t_meet).position +
                        Vec3(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3),
                             uniform(rng, -0.2, 0.2));
    const double speed = uniform(rng, scene.obstacle_speed_min, scene.obstacle_speed_max);
    const double heading = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const Vec3 dir(std::cos(heading), std::sin(heading), uniform(rng, -0.2, 0.2));
    ob.velocity = speed * dir.normalized();
    ob.position = target - ob.velocity * t_meet;
    ob.texture.cell = uniform(rng, 0.05, 0.15);
    out.obstacles.push_back(ob);
  }
  out.random_obstacles = 0;
  return out;
}

Eigen::Matrix3d Pose::rotation() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix3d r;
  // x = right, y = down, z = forward
  r.col(0) = Vec3(s, -c, 0.0);
  r.col(1) = Vec3(0.0, 0.0, -1.0);
  r.col(2) = Vec3(c, s, 0.0);
  return r;
}

Pose camera_pose(const SceneConfig& scene, double t) {
  const auto& spec = scene.trajectory;
  Pose pose;
  if (spec.waypoints.empty()) {
    pose.position = Vec3(0.0, 0.0, spec.camera_height);
    return pose;
  }
  const auto segments = build_segments(spec);
  Waypoint w = spec.waypoints.front();
  if (!segments.empty()) {
    if (t >= segments.back().t1) {
      w = segments.back().to;
    } else if (t > segments.front().t0) {
      const auto it = std::upper_bound(segments.begin(), segments.end(), t,
                                       [](double v, const Segment& s) { return v < s.t1; });
      const double a = (t - it->t0) / (it->t1 - it->t0);
      w.x = it->from.x + a * (it->to.x - it->from.x);
      w.y = it->from.y + a * (it->to.y - it->from.y);
      w.yaw_deg = it->from.yaw_deg + a * (it->to.yaw_deg - it->from.yaw_deg);
    }
  }
  pose.position = Vec3(w.x, w.y, spec.camera_height);
  pose.yaw = w.yaw_deg * kDegToRad;
  return pose;
}

Vec3 ego_velocity(const SceneConfig& scene, double t) {
  const auto segments = build_segments(scene.trajectory);
  Vec3 world = Vec3::Zero();
  for (const auto& s : segments) {
    if (t >= s.t0 && t < s.t1) {
      const double dur = s.t1 - s.t0;
      world = Vec3((s.to.x - s.from.x) / dur, (s.to.y - s.from.y) / dur, 0.0);
      break;
    }
  }
  return camera_pose(scene, t).rotation().transpose() * world;
}

Frame render_frame(const SceneConfig& scene, double t) {
  if (!(t >= 0.0 && t <= scene.duration + 1e-9)) {
    throw Error(ErrorKind::InvalidArgument, "render_frame: t outside [0, duration]");
  }
  const auto& cam = scene.camera;
  const int w = cam.width;
  const int h = cam.height;
  const double dt = scene.frame_interval();

  Frame frame;
  frame.t = t;
  frame.pose = camera_pose(scene, t);
  check_pose(scene, frame.pose, t);
  frame.intensity = FloatMap(Semantics::Intensity, w, h);
  frame.depth = FloatMap(Semantics::DepthM, w, h);
  frame.class_map = FloatMap(Semantics::ClassId, w, h);
  frame.flow_fwd = FlowField(w, h);
  frame.flow_bwd = FlowField(w, h);

  const Eigen::Matrix3d rot = frame.pose.rotation();
  const Vec3 origin = frame.pose.position;
  const Pose pose_next = camera_pose(scene, t + dt);
  const Pose pose_prev = camera_pose(scene, t - dt);
  const Eigen::Matrix3d rot_next_t = pose_next.rotation().transpose();
  const Eigen::Matrix3d rot_prev_t = pose_prev.rotation().transpose();
  const int ss = scene.supersample;

  const Eigen::Matrix3d rot_t = rot.transpose();
  // Difference of two projections of the same point, so an unchanged pose
  // gives exactly zero flow.
  auto project_flow = [&](const Hit& hit, double t_other, const Eigen::Matrix3d& rot_other_t,
                          const Vec3& origin_other, float& fu, float& fv) {
    Vec3 p = hit.point;
    if (hit.surface == Surface::Sphere) {
      p += scene.obstacles[static_cast<std::size_t>(hit.sphere)].velocity * (t_other - t);
    }
    const Vec3 pc = rot_other_t * (p - origin_other);
    const Vec3 here = rot_t * (hit.point - origin);
    if (pc.z() <= 1e-9 || here.z() <= 1e-9) {
      fu = 0.0f;
      fv = 0.0f;
      return;
    }
    fu = static_cast<float>(cam.fx * (pc.x() / pc.z() - here.x() / here.z()));
    fv = static_cast<float>(cam.fy * (pc.y() / pc.z() - here.y() / here.z()));
  };

  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const Vec3 dc((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      const Hit hit = cast_ray(scene, t, origin, rot * dc);
      frame.depth(x, y) = static_cast<float>(hit.depth);
      frame.class_map(x, y) = static_cast<float>(class_of(scene, hit));
      project_flow(hit, t + dt, rot_next_t, pose_next.position, frame.flow_fwd.u(x, y),
                   frame.flow_fwd.v(x, y));
      project_flow(hit, t - dt, rot_prev_t, pose_prev.position, frame.flow_bwd.u(x, y),
                   frame.flow_bwd.v(x, y));

      double acc = 0.0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double ox = (sx + 0.5) / ss - 0.5;
          const double oy = (sy + 0.5) / ss - 0.5;
          const Vec3 d((x + ox - cam.cx) / cam.fx, (y + oy - cam.cy) / cam.fy, 1.0);
          acc += shade(scene, t, cast_ray(scene, t, origin, rot * d));
        }
      }
      frame.intensity(x, y) = static_cast<float>(acc / (ss * ss));
    }
  });
  return frame;
}

std::vector<Event> generate_events(std::span<const StampedImage> frames, double contrast_threshold) {
  if (frames.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "generate_events: need at least two frames");
  }
  if (!(contrast_threshold > 0.0)) {
    throw Error(ErrorKind::Range, "generate_events: contrast threshold must be positive");
  }
  const FloatMap& first = *frames.front().image;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    require_same_shape(first, *frames[k].image, "generate_events");
    if (!(frames[k].t > frames[k - 1].t)) {
      throw Error(ErrorKind::Unsorted, "generate_events: frame timestamps must increase");
    }
  }
  const int w = first.width();
  const int h = first.height();
  constexpr double kTolerance = 1e-9;
  const double c = contrast_threshold;

  std::vector<std::vector<Event>> rows(static_cast<std::size_t>(h));
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    auto& out = rows[row];
    for (int x = 0; x < w; ++x) {
      double ref = std::log(static_cast<double>(first(x, y)) + kLogEps);
      double prev = ref;
      for (std::size_t k = 1; k < frames.size(); ++k) {
        const double cur = std::log(static_cast<double>((*frames[k].image)(x, y)) + kLogEps);
        const double t0 = frames[k - 1].t;
        const double t1 = frames[k].t;
        if (std::abs(cur - prev) > kTolerance) {
          const double pol = cur > prev ? 1.0 : -1.0;
          const double t_last = std::nextafter(t1, t0);
          double cross = ref;
          for (;;) {
            cross += pol * c;
            const bool inside = pol > 0.0 ? (cross > prev && cross <= cur)
                                          : (cross < prev && cross >= cur);
            if (!inside) break;
            const double te = t0 + (cross - prev) / (cur - prev) * (t1 - t0);
            out.push_back(Event{std::min(te, t_last), static_cast<std::uint16_t>(x),
                                static_cast<std::uint16_t>(y),
                                static_cast<std::int8_t>(pol > 0.0 ? 1 : -1)});
            ref = cross;
          }
        }
        prev = cur;
      }
    }
  });

  std::vector<Event> events;
  for (auto& r : rows) events.insert(events.end(), r.begin(), r.end());
  std::sort(events.begin(), events.end(), event_before);
  return events;
}

EventMap Sequence::event_map(std::size_t k) const {
  return accumulate_events(windows.at(k), TimeWindow{frames.at(k).t, frames.at(k + 1).t},
                           scene.camera.width, scene.camera.height);
}

Sequence simulate_sequence(const SceneConfig& config) {
  config.validate();
  Sequence seq;
  seq.scene = resolve_random(config);
  const SceneConfig& scene = seq.scene;
  const int n = scene.frame_count();
  if (n < 2) throw Error(ErrorKind::Range, "sequence needs at least two frames");
  const double dt = scene.frame_interval();

  seq.frames.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    seq.frames[static_cast<std::size_t>(k)] = render_frame(scene, k * dt);
  }

  std::vector<StampedImage> stamped;
  stamped.reserve(seq.frames.size());
  for (const auto& f : seq.frames) stamped.push_back({f.t, &f.intensity});
  const auto events = generate_events(stamped, scene.contrast_threshold);

  seq.windows.resize(static_cast<std::size_t>(n - 1));
  std::size_t k = 0;
  for (const auto& e : events) {
    while (k + 1 < seq.windows.size() && e.t >= seq.frames[k + 1].t) ++k;
    seq.windows[k].push_back(e);
  }

  seq.gt_tti.reserve(static_cast<std::size_t>(n - 1));
  for (int j = 1; j < n; ++j) {
    const auto& prev = seq.frames[static_cast<std::size_t>(j - 1)];
    const auto& cur = seq.frames[static_cast<std::size_t>(j)];
    seq.gt_tti.push_back(tti::ground_truth_inverse_tti(prev.depth, cur.depth, cur.flow_bwd, dt));
  }
  return seq;
}

} // namespace evreflex::sim
