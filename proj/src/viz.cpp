#include <evreflex/viz.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace evreflex::viz {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// HSV with value 1.
void hue_saturation(double hue, double sat, std::uint8_t* out) {
  const double h = std::fmod(hue, 1.0) * 6.0;
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = 1.0 - sat;
  const double q = 1.0 - sat * f;
  const double t = 1.0 - sat * (1.0 - f);
  double r = 1, g = 1, b = 1;
  switch (sector) {
    case 0: r = 1; g = t; b = p; break;
    case 1: r = q; g = 1; b = p; break;
    case 2: r = p; g = 1; b = t; break;
    case 3: r = p; g = q; b = 1; break;
    case 4: r = t; g = p; b = 1; break;
    default: r = 1; g = p; b = q; break;
  }
  out[0] = to_byte(r);
  out[1] = to_byte(g);
  out[2] = to_byte(b);
}

} // namespace

FlowRendering render_flow(const FlowField& flow) {
  FlowRendering out{RgbImage(flow.width(), flow.height()), 0.0};
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    const double m = std::hypot(static_cast<double>(flow.u[i]), static_cast<double>(flow.v[i]));
    if (std::isfinite(m)) out.max_magnitude = std::max(out.max_magnitude, m);
  }
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const double u = flow.u(x, y);
      const double v = flow.v(x, y);
      const double m = std::hypot(u, v);
      const double sat = out.max_magnitude > 0.0 && std::isfinite(m) ? m / out.max_magnitude : 0.0;
      const double hue = (std::atan2(v, u) + std::numbers::pi) / (2.0 * std::numbers::pi);
      hue_saturation(hue, sat, out.image.at(x, y));
    }
  }
  return out;
}

RgbImage render_events(std::span<const Event> events, int width, int height) {
  RgbImage img(width, height);
  for (const Event& e : events) {
    if (e.x >= width || e.y >= height) {
      throw Error(ErrorKind::CoordinateOutOfRange, "render_events: event outside the image");
    }
    std::uint8_t* px = img.at(e.x, e.y);
    if (e.polarity > 0) {
      px[1] = 255;
    } else {
      px[0] = 255;
    }
  }
  return img;
}

RgbImage render_gray(const FloatMap& map, double lo, double hi) {
  RgbImage img(map.width(), map.height());
  const double span = hi - lo;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const double v = map(x, y);
      std::uint8_t g = 0;
      if (std::isfinite(v)) g = span > 0.0 ? to_byte((v - lo) / span) : 0;
      std::uint8_t* px = img.at(x, y);
      px[0] = px[1] = px[2] = g;
    }
  }
  return img;
}

std::string encode_ppm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

} // namespace evreflex::viz
