#include <evreflex/policy.hpp>

#include <Eigen/Geometry>

namespace evreflex::policy {

MotionVector obstacle_motion_vector(const FlowField& flow, const FloatMap& depth,
                                    const tti::TtiMap& tau, const Mask& selection,
                                    const std::optional<Lifting>& lifting) {
  require_same_shape(flow, depth, "obstacle_motion_vector");
  require_same_shape(depth, tau, "obstacle_motion_vector");
  require_same_shape(depth, selection, "obstacle_motion_vector");
  if (lifting && !(lifting->fx > 0.0 && lifting->fy > 0.0 && tau.dt > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "obstacle_motion_vector: lifting needs fx, fy, dt > 0");
  }

  MotionVector out;
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < selection.size(); ++i) {
    if (!selection[i] || !tau.valid[i]) continue;
    const double d = depth.values[i];
    if (!depth_valid(depth.values[i])) continue;
    double u = flow.u[i];
    double v = flow.v[i];
    if (lifting) {
      u *= d / (lifting->fx * tau.dt);
      v *= d / (lifting->fy * tau.dt);
    }
    sum += Vec3(u, v, d * tau.values.values[i]);
    ++out.pixel_count;
  }
  if (out.pixel_count > 0) out.value = sum / static_cast<double>(out.pixel_count);
  return out;
}

EvasionResult evasion_direction(const Vec3& motion_vec, const EgoMotion& ego) {
  EvasionResult r;
  r.motion_vec = motion_vec;
  const Vec3 c = motion_vec.cross(ego.v);
  if (c.norm() >= kDegenerateNorm) {
    r.psi = c.normalized();
    return r;
  }
  r.degenerate = true;
  Vec3 side = Vec3::UnitX();
  const double vv = ego.v.squaredNorm();
  if (vv > 0.0) side -= ego.v * (side.dot(ego.v) / vv);
  if (side.norm() >= kDegenerateNorm) r.psi = side.normalized();
  return r;
}

EvasionResult evade(const MotionVector& motion, const EgoMotion& ego) {
  EvasionResult r = evasion_direction(motion.value, ego);
  r.pixel_count = motion.pixel_count;
  return r;
}

} // namespace evreflex::policy
