#pragma once

#include <evreflex/types.hpp>

#include <span>
#include <string>
#include <vector>

namespace evreflex::viz {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}
  std::uint8_t* at(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

// Hue encodes direction, saturation magnitude relative to the largest one;
// zero flow is white.
struct FlowRendering {
  RgbImage image;
  double max_magnitude = 0.0;
};
FlowRendering render_flow(const FlowField& flow);

// Positive events green, negative red, both yellow, none black.
RgbImage render_events(std::span<const Event> events, int width, int height);

// Linear gray ramp from lo (black) to hi (white); non-finite values are black.
RgbImage render_gray(const FloatMap& map, double lo, double hi);

std::string encode_ppm(const RgbImage& image);

} // namespace evreflex::viz
