#pragma once

#include <evreflex/types.hpp>

namespace evreflex::tti {

// Inverse time-to-impact in s^-1. Values are clamped at zero (receding or
// static geometry carries no danger); invalid pixels hold 0.
struct TtiMap {
  FloatMap values{Semantics::InvTtiS, 0, 0};
  double dt = 0.0;
  Mask valid;

  TtiMap() = default;
  TtiMap(int width, int height, double frame_dt)
      : values(Semantics::InvTtiS, width, height), dt(frame_dt), valid(width, height) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  float operator()(int x, int y) const { return values(x, y); }
};

struct DepthSample {
  double depth = 0.0;
  bool valid = false;
};

// Resamples a depth map at a continuous pixel position with Catmull-Rom
// interpolation of inverse depth over the 4x4 stencil (exact on planes). Axes
// with an integer coordinate collapse to a single row/column. The sample is
// invalid outside the raster, when a stencil pixel has no depth, or when the
// stencil does not lie on one smooth surface (occlusion edges, creases).
DepthSample sample_depth(const FloatMap& depth, double x, double y);

// Largest |second difference| of inverse depth along a stencil row or column,
// relative to the centre value, for the stencil to count as one surface.
inline constexpr double kSurfaceSmoothness = 0.01;

TtiMap ground_truth_inverse_tti(const FloatMap& d_prev, const FloatMap& d_curr,
                                const FlowField& flow_to_prev, double dt);

// Flow-divergence estimator: div F / (2 dt), F in pixels per frame.
TtiMap estimate_tti_static(const FlowField& flow, const FloatMap& d_curr, double dt);

TtiMap estimate_tti_dynamic(const FlowField& flow, const FloatMap& d_curr,
                            const FloatMap& d_next, double dt);

double tti_mse(const TtiMap& pred, const TtiMap& gt);

Mask threshold_collision(const TtiMap& t, double horizon);

} // namespace evreflex::tti
