#pragma once

#include <evreflex/tti.hpp>
#include <evreflex/types.hpp>

#include <Eigen/Core>

#include <optional>

namespace evreflex::policy {

using Vec3 = Eigen::Vector3d;

// Camera-frame velocity in m/s, Z along the optical axis.
struct EgoMotion {
  Vec3 v = Vec3::Zero();
};

struct MotionVector {
  Vec3 value = Vec3::Zero();
  std::size_t pixel_count = 0;
};

// Pixel-to-metric conversion of the flow components: u * d / fx / dt.
struct Lifting {
  double fx = 1.0;
  double fy = 1.0;
};

// Mean over selected pixels of (F_u, F_v, d * tau). Pixels count when the
// selection is set and both depth and tau are valid there. Without lifting the
// flow components stay in pixels per frame.
MotionVector obstacle_motion_vector(const FlowField& flow, const FloatMap& depth,
                                    const tti::TtiMap& tau, const Mask& selection,
                                    const std::optional<Lifting>& lifting = std::nullopt);

struct EvasionResult {
  Vec3 motion_vec = Vec3::Zero();
  Vec3 psi = Vec3::Zero();
  bool degenerate = false;
  std::size_t pixel_count = 0;
};

inline constexpr double kDegenerateNorm = 1e-9;

// psi = normalize(motion x v). When the cross product vanishes, psi falls back
// to camera +X with its component along v removed (zero if that vanishes too).
EvasionResult evasion_direction(const Vec3& motion_vec, const EgoMotion& ego);
EvasionResult evade(const MotionVector& motion, const EgoMotion& ego);

} // namespace evreflex::policy
