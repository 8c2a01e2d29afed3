#include <evreflex/tti.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evreflex::tti {
namespace {

void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::InvalidArgument, "frame interval dt must be positive");
  }
}

// (value - reference) / (reference * dt), clamped at zero.
float closure_rate(double earlier, double later, double reference, double dt) {
  const double rate = (earlier - later) / (reference * dt);
  return static_cast<float>(std::max(0.0, rate));
}

} // namespace

DepthSample sample_depth(const FloatMap& depth, double x, double y) {
  const int w = depth.width();
  const int h = depth.height();
  if (w == 0 || h == 0) return {};
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return {};
  const int x0 = std::min(static_cast<int>(std::floor(x)), std::max(w - 2, 0));
  const int y0 = std::min(static_cast<int>(std::floor(y)), std::max(h - 2, 0));
  const double ax = x - x0;
  const double ay = y - y0;

  // Stencil offsets relative to (x0, y0) per axis.
  const bool cubic_x = ax > 0.0;
  const bool cubic_y = ay > 0.0;
  const int nx = cubic_x ? 4 : 1;
  const int ny = cubic_y ? 4 : 1;
  const int ox = cubic_x ? -1 : 0;
  const int oy = cubic_y ? -1 : 0;

  // Inverse depth with linear extrapolation one pixel past the border.
  auto inv_at = [&](int px, int py, double& out) -> bool {
    const int cx = std::clamp(px, 0, w - 1);
    const int cy = std::clamp(py, 0, h - 1);
    if (cx == px && cy == py) {
      const float d = depth(px, py);
      if (!depth_valid(d)) return false;
      out = 1.0 / static_cast<double>(d);
      return true;
    }
    const int sx = px < 0 ? 1 : (px >= w ? -1 : 0);
    const int sy = py < 0 ? 1 : (py >= h ? -1 : 0);
    if (!depth.values.contains(cx + sx, cy + sy)) return false;
    const float a = depth(cx, cy);
    const float b = depth(cx + sx, cy + sy);
    if (!depth_valid(a) || !depth_valid(b)) return false;
    out = 2.0 / static_cast<double>(a) - 1.0 / static_cast<double>(b);
    return out > 0.0;
  };

  double g[4][4] = {};
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!inv_at(x0 + ox + i, y0 + oy + j, g[j][i])) return {};
    }
  }

  auto rough = [](double a, double b, double c) {
    return std::abs(a - 2.0 * b + c) > kSurfaceSmoothness * b;
  };
  if (cubic_x) {
    for (int j = 0; j < ny; ++j) {
      if (rough(g[j][0], g[j][1], g[j][2]) || rough(g[j][1], g[j][2], g[j][3])) return {};
    }
  }
  if (cubic_y) {
    for (int i = 0; i < nx; ++i) {
      if (rough(g[0][i], g[1][i], g[2][i]) || rough(g[1][i], g[2][i], g[3][i])) return {};
    }
  }

  auto catmull_rom = [](const double* p, double t) {
    return p[1] + 0.5 * t *
                      (p[2] - p[0] +
                       t * (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3] +
                            t * (3.0 * (p[1] - p[2]) + p[3] - p[0])));
  };
  double rows[4];
  for (int j = 0; j < ny; ++j) rows[j] = cubic_x ? catmull_rom(g[j], ax) : g[j][0];
  const double inv = cubic_y ? catmull_rom(rows, ay) : rows[0];
  if (!(inv > 0.0)) return {};
  return {1.0 / inv, true};
}

TtiMap ground_truth_inverse_tti(const FloatMap& d_prev, const FloatMap& d_curr,
                                const FlowField& flow_to_prev, double dt) {
  require_dt(dt);
  require_same_shape(d_prev, d_curr, "ground_truth_inverse_tti");
  require_same_shape(d_curr, flow_to_prev, "ground_truth_inverse_tti");
  TtiMap out(d_curr.width(), d_curr.height(), dt);
  for (int y = 0; y < d_curr.height(); ++y) {
    for (int x = 0; x < d_curr.width(); ++x) {
      const float dc = d_curr(x, y);
      if (!depth_valid(dc)) continue;
      const auto prev =
          sample_depth(d_prev, x + flow_to_prev.u(x, y), y + flow_to_prev.v(x, y));
      if (!prev.valid) continue;
      out.values(x, y) = closure_rate(prev.depth, dc, dc, dt);
      out.valid(x, y) = 1;
    }
  }
  return out;
}

TtiMap estimate_tti_static(const FlowField& flow, const FloatMap& d_curr, double dt) {
  require_dt(dt);
  require_same_shape(flow, d_curr, "estimate_tti_static");
  const int w = flow.width();
  const int h = flow.height();
  TtiMap out(w, h, dt);

  // Central differences inside, one-sided at the borders.
  auto ddx = [&](const Raster<float>& f, int x, int y) -> double {
    if (w < 2) return 0.0;
    if (x == 0) return f(1, y) - f(0, y);
    if (x == w - 1) return f(w - 1, y) - f(w - 2, y);
    return 0.5 * (f(x + 1, y) - f(x - 1, y));
  };
  auto ddy = [&](const Raster<float>& f, int x, int y) -> double {
    if (h < 2) return 0.0;
    if (y == 0) return f(x, 1) - f(x, 0);
    if (y == h - 1) return f(x, h - 1) - f(x, h - 2);
    return 0.5 * (f(x, y + 1) - f(x, y - 1));
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!depth_valid(d_curr(x, y))) continue;
      const double div = ddx(flow.u, x, y) + ddy(flow.v, x, y);
      out.values(x, y) = static_cast<float>(std::max(0.0, div / (2.0 * dt)));
      out.valid(x, y) = 1;
    }
  }
  return out;
}

TtiMap estimate_tti_dynamic(const FlowField& flow, const FloatMap& d_curr,
                            const FloatMap& d_next, double dt) {
  require_dt(dt);
  require_same_shape(flow, d_curr, "estimate_tti_dynamic");
  require_same_shape(d_curr, d_next, "estimate_tti_dynamic");
  TtiMap out(d_curr.width(), d_curr.height(), dt);
  for (int y = 0; y < d_curr.height(); ++y) {
    for (int x = 0; x < d_curr.width(); ++x) {
      const float dc = d_curr(x, y);
      if (!depth_valid(dc)) continue;
      const auto next = sample_depth(d_next, x + flow.u(x, y), y + flow.v(x, y));
      if (!next.valid) continue;
      out.values(x, y) = closure_rate(dc, next.depth, dc, dt);
      out.valid(x, y) = 1;
    }
  }
  return out;
}

double tti_mse(const TtiMap& pred, const TtiMap& gt) {
  require_same_shape(pred, gt, "tti_mse");
  if (pred.dt != gt.dt) {
    throw Error(ErrorKind::InvalidArgument, "tti_mse: maps use different frame intervals");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.values.values.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    const double e = static_cast<double>(pred.values.values[i]) - gt.values.values[i];
    sum += e * e;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::UndefinedMetric, "tti_mse: no jointly valid pixels");
  return sum / static_cast<double>(n);
}

Mask threshold_collision(const TtiMap& t, double horizon) {
  if (!(horizon > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "threshold_collision: horizon must be positive");
  }
  const double level = 1.0 / horizon;
  Mask m(t.width(), t.height());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = (t.valid[i] && t.values.values[i] >= level) ? 1 : 0;
  }
  return m;
}

} // namespace evreflex::tti
