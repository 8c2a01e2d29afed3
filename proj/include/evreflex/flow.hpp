#pragma once

#include <evreflex/types.hpp>

#include <vector>

namespace evreflex::flow {

template <typename T>
struct Warped {
  T out;
  Mask valid;  // 0 where the sample fell outside the raster and was clamped
};

// out(i) = src(i + F(i)), bilinear, clamp-to-edge.
Warped<FloatMap> warp(const FloatMap& src, const FlowField& flow);
Warped<FlowField> warp(const FlowField& src, const FlowField& flow);

// rho(x) = (x^2 + eps^2)^alpha
double charbonnier(double x, double eps, double alpha);
Raster<float> charbonnier(const Raster<float>& x, double eps, double alpha);

enum class EventWeighting { Uniform, EventGated };

// Search direction of the descent loop. Gradient is the steepest-descent
// direction. Reweighted replaces each rho by its tangent quadratic, linearises
// the warp and solves the resulting sparse system by conjugate gradients; the
// loss itself is unchanged and every step is still backtracked on l_f.
enum class DescentMethod { Gradient, Reweighted };

struct FlowSolverConfig {
  double alpha = 0.5;  // smoothness weight
  double charbonnier_eps = 0.001;
  double charbonnier_alpha = 0.45;
  int pyramid_levels = 4;
  int iters_per_level = 200;
  double step_size = 1.0;
  EventWeighting event_weighting = EventWeighting::EventGated;
  double convergence_tol = 1e-6;
  DescentMethod method = DescentMethod::Reweighted;
  int linear_iters = 100;  // conjugate-gradient cap per reweighted step

  void validate() const;
};

// Sum over pixels of weight * rho(I_t(i) - I_t1(i + F(i))). Samples that land
// outside I_t1 contribute nothing. A null weight means weight 1 everywhere.
double photometric_loss(const FlowField& flow, const FloatMap& image_t, const FloatMap& image_t1,
                        const Raster<float>* weight, double eps, double alpha);

// Sum over unordered 4-neighbour pairs of rho(du) + rho(dv).
double smoothness_loss(const FlowField& flow, double eps, double alpha);

// Photometric weights implied by the config: the event mask when event-gated
// (required in that case), otherwise none.
const Raster<float>* photometric_weight(const FlowSolverConfig& cfg,
                                        const Raster<float>* event_weight);

Raster<float> mask_to_weight(const Mask& mask);

double total_loss(const FlowField& flow, const FloatMap& image_t, const FloatMap& image_t1,
                  const FlowSolverConfig& cfg, const Raster<float>* event_weight = nullptr);

// Analytic gradient of total_loss with respect to every flow component.
FlowField loss_gradient(const FlowField& flow, const FloatMap& image_t, const FloatMap& image_t1,
                        const FlowSolverConfig& cfg, const Raster<float>* event_weight = nullptr);

struct LevelReport {
  int level = 0;  // 0 = finest
  int width = 0;
  int height = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> accepted_losses;  // starts with the initial loss
};

struct FlowEstimate {
  FlowField flow;
  double loss = 0.0;
  std::vector<LevelReport> levels;  // coarsest first
};

FlowEstimate estimate_flow(const EventMap& events, const FloatMap& image_t,
                           const FloatMap& image_t1, const FlowSolverConfig& cfg);

// Same with an explicit photometric weight raster (null = uniform weighting).
FlowEstimate estimate_flow(const Raster<float>* event_weight, const FloatMap& image_t,
                           const FloatMap& image_t1, const FlowSolverConfig& cfg);

} // namespace evreflex::flow
