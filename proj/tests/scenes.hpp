#pragma once

// Scene builders shared by the unit and acceptance tests.

#include <evreflex/sim.hpp>

namespace evreflex::scenes {

using sim::SceneConfig;
using sim::SphereObstacle;
using sim::TextureKind;
using sim::Vec3;

// Camera facing +X, sliding sideways along -Y in front of the far wall so the
// image translates by `px_per_frame` pixels (64x64, f = 32).
inline SceneConfig lateral_wall_scene(double px_per_frame = 2.0, double wall_distance = 1.5) {
  SceneConfig s;
  s.room = {3.0, 3.0, 4.0};
  s.trajectory.camera_height = 2.0;  // wall fills the view, no floor or ceiling
  s.frame_rate = 10.0;
  s.duration = 1.0;
  const double step = px_per_frame * wall_distance / s.camera.fx;
  const double x = s.room.half_x - wall_distance;
  s.trajectory.waypoints = {{x, 0.5, 0.0}, {x, -0.5, 0.0}};
  s.trajectory.speed = step * s.frame_rate;
  return s;
}

// Camera driving straight at the +X wall, which fills the view.
inline SceneConfig wall_approach_scene(double start_distance, double speed, double frame_rate) {
  SceneConfig s;
  s.room = {3.0, 4.0, 6.0};
  s.trajectory.camera_height = 3.0;
  s.frame_rate = frame_rate;
  s.duration = 1.0;
  const double x0 = s.room.half_x - start_distance;
  s.trajectory.waypoints = {{x0, 0.0, 0.0}, {x0 + 1.5, 0.0, 0.0}};
  s.trajectory.speed = speed;
  return s;
}

// Same room with every surface one flat colour per surface type.
inline SceneConfig flat_wall_scene() {
  SceneConfig s = lateral_wall_scene();
  s.wall_texture = {TextureKind::Flat, 0.6, 0.0, 0.5};
  s.floor_texture = {TextureKind::Flat, 0.3, 0.0, 0.5};
  return s;
}

// Camera crossing the room while a sphere drifts through the view.
inline SceneConfig crossing_sphere_scene() {
  SceneConfig s;
  s.frame_rate = 20.0;
  s.duration = 2.5;
  s.trajectory.waypoints = {{-2.0, 0.3, 0.0}, {2.0, -0.3, 0.0}};
  s.trajectory.speed = 0.8;
  SphereObstacle ob;
  ob.radius = 0.3;
  ob.position = Vec3(1.5, 0.8, 0.6);
  ob.velocity = Vec3(-0.6, -0.5, 0.0);
  s.obstacles.push_back(ob);
  return s;
}

// Camera advancing slowly while a sphere flies at it from ahead with a
// lateral offset. `lateral` is the sideways start offset in metres.
inline SceneConfig approaching_sphere_scene(double speed, double lateral, double height = 0.5,
                                            double lateral_speed = 0.0) {
  SceneConfig s;
  s.frame_rate = 10.0;
  s.duration = 1.0;
  s.trajectory.waypoints = {{-1.5, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  s.trajectory.speed = 0.3;
  SphereObstacle ob;
  ob.radius = 0.3;
  ob.position = Vec3(2.0, lateral, height);
  ob.velocity = Vec3(-speed, lateral_speed, 0.0);
  s.obstacles.push_back(ob);
  return s;
}

} // namespace evreflex::scenes
