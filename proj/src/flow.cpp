#include <evreflex/flow.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace evreflex::flow {
namespace {

struct Bilinear {
  int x0, y0, x1, y1;
  double ax, ay;
  bool inside;
};

// Footprint of a continuous sample position; coordinates outside the raster
// are clamped to the border and flagged.
Bilinear footprint(int w, int h, double x, double y) {
  Bilinear b{};
  b.inside = x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1;
  const double cx = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(h - 1));
  b.x0 = std::min(static_cast<int>(std::floor(cx)), std::max(w - 2, 0));
  b.y0 = std::min(static_cast<int>(std::floor(cy)), std::max(h - 2, 0));
  b.x1 = std::min(b.x0 + 1, w - 1);
  b.y1 = std::min(b.y0 + 1, h - 1);
  b.ax = cx - b.x0;
  b.ay = cy - b.y0;
  return b;
}

template <typename Get>
double interpolate(const Bilinear& b, Get&& at) {
  return (1 - b.ay) * ((1 - b.ax) * at(b.x0, b.y0) + b.ax * at(b.x1, b.y0)) +
         b.ay * ((1 - b.ax) * at(b.x0, b.y1) + b.ax * at(b.x1, b.y1));
}

// d rho / dx
double charbonnier_derivative(double x, double eps, double alpha) {
  return 2.0 * alpha * x * std::pow(x * x + eps * eps, alpha - 1.0);
}

// Dense double-precision view of one pyramid level.
struct Level {
  int w = 0;
  int h = 0;
  std::vector<double> image_t;
  std::vector<double> image_t1;
  std::vector<double> weight;  // empty = uniform
};

struct Sample {
  bool used = false;
  double weight = 0.0;
  double r = 0.0;   // I_t(i) - I_t1(i + F(i))
  double gx = 0.0;  // dI_t1/dx of the bilinear interpolant
  double gy = 0.0;
};

// Tangent-quadratic weight of rho: rho(x) <= const + w * x^2 around x.
double reweight(double x, double eps, double alpha) {
  return alpha * std::pow(x * x + eps * eps, alpha - 1.0);
}

struct Objective {
  const Level& level;
  double eps;
  double exponent;
  double smooth_weight;

  Sample sample(std::size_t i, int x, int y, double u, double v) const {
    Sample s;
    s.weight = level.weight.empty() ? 1.0 : level.weight[i];
    if (s.weight == 0.0) return s;
    const int w = level.w;
    const Bilinear b = footprint(w, level.h, x + u, y + v);
    if (!b.inside) return s;
    auto at = [&](int px, int py) { return level.image_t1[static_cast<std::size_t>(py) * w + px]; };
    s.used = true;
    s.r = level.image_t[i] - interpolate(b, at);
    if (b.x1 != b.x0) {
      s.gx = (1 - b.ay) * (at(b.x1, b.y0) - at(b.x0, b.y0)) +
             b.ay * (at(b.x1, b.y1) - at(b.x0, b.y1));
    }
    if (b.y1 != b.y0) {
      s.gy = (1 - b.ax) * (at(b.x0, b.y1) - at(b.x0, b.y0)) +
             b.ax * (at(b.x1, b.y1) - at(b.x1, b.y0));
    }
    return s;
  }

  template <typename Pair>
  void for_each_pair(Pair&& pair) const {
    for (int y = 0; y < level.h; ++y) {
      for (int x = 0; x < level.w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * level.w + x;
        if (x + 1 < level.w) pair(i, i + 1, 0);
        if (y + 1 < level.h) pair(i, i + static_cast<std::size_t>(level.w), 1);
      }
    }
  }

  // Returns l_p + alpha * l_s; fills the gradient when gu/gv are non-null.
  double evaluate(const std::vector<double>& u, const std::vector<double>& v,
                  std::vector<double>* gu, std::vector<double>* gv) const {
    if (gu) {
      gu->assign(u.size(), 0.0);
      gv->assign(v.size(), 0.0);
    }
    double data = 0.0;
    for (int y = 0; y < level.h; ++y) {
      for (int x = 0; x < level.w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * level.w + x;
        const Sample s = sample(i, x, y, u[i], v[i]);
        if (!s.used) continue;
        data += s.weight * charbonnier(s.r, eps, exponent);
        if (gu) {
          // dr/dF = -grad I_t1
          const double dr = s.weight * charbonnier_derivative(s.r, eps, exponent);
          (*gu)[i] -= dr * s.gx;
          (*gv)[i] -= dr * s.gy;
        }
      }
    }

    double smooth = 0.0;
    for_each_pair([&](std::size_t i, std::size_t j, int) {
      const double du = u[j] - u[i];
      const double dv = v[j] - v[i];
      smooth += charbonnier(du, eps, exponent) + charbonnier(dv, eps, exponent);
      if (gu) {
        const double su = smooth_weight * charbonnier_derivative(du, eps, exponent);
        const double sv = smooth_weight * charbonnier_derivative(dv, eps, exponent);
        (*gu)[j] += su;
        (*gu)[i] -= su;
        (*gv)[j] += sv;
        (*gv)[i] -= sv;
      }
    });
    return data + smooth_weight * smooth;
  }

  // Minimiser offset of the reweighted, linearised model around (u, v):
  //   sum psi_i (r_i - J_i d_i)^2 + alpha sum phi_pq ((F + d)_p - (F + d)_q)^2
  // solved by block-Jacobi preconditioned conjugate gradients.
  void reweighted_step(const std::vector<double>& u, const std::vector<double>& v,
                       int max_iters, std::vector<double>& du, std::vector<double>& dv) const {
    const std::size_t n = u.size();
    const auto w = static_cast<std::size_t>(level.w);
    // Per-pixel 2x2 data blocks and pair weights (index = first pixel of the
    // pair; [0] horizontal, [1] vertical).
    std::vector<double> auu(n, 0.0), auv(n, 0.0), avv(n, 0.0);
    std::vector<double> bu(n, 0.0), bv(n, 0.0);
    std::vector<double> phi_u[2] = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<double> phi_v[2] = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};

    for (int y = 0; y < level.h; ++y) {
      for (int x = 0; x < level.w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const Sample s = sample(i, x, y, u[i], v[i]);
        if (!s.used) continue;
        const double psi = s.weight * reweight(s.r, eps, exponent);
        auu[i] = psi * s.gx * s.gx;
        auv[i] = psi * s.gx * s.gy;
        avv[i] = psi * s.gy * s.gy;
        bu[i] = psi * s.gx * s.r;
        bv[i] = psi * s.gy * s.r;
      }
    }
    for_each_pair([&](std::size_t i, std::size_t j, int dir) {
      const double pu = smooth_weight * reweight(u[j] - u[i], eps, exponent);
      const double pv = smooth_weight * reweight(v[j] - v[i], eps, exponent);
      phi_u[dir][i] = pu;
      phi_v[dir][i] = pv;
      bu[i] += pu * (u[j] - u[i]);
      bu[j] -= pu * (u[j] - u[i]);
      bv[i] += pv * (v[j] - v[i]);
      bv[j] -= pv * (v[j] - v[i]);
    });

    auto apply = [&](const std::vector<double>& pu, const std::vector<double>& pv,
                     std::vector<double>& qu, std::vector<double>& qv) {
      for (std::size_t i = 0; i < n; ++i) {
        qu[i] = auu[i] * pu[i] + auv[i] * pv[i];
        qv[i] = auv[i] * pu[i] + avv[i] * pv[i];
      }
      for_each_pair([&](std::size_t i, std::size_t j, int dir) {
        const double fu = phi_u[dir][i] * (pu[i] - pu[j]);
        const double fv = phi_v[dir][i] * (pv[i] - pv[j]);
        qu[i] += fu;
        qu[j] -= fu;
        qv[i] += fv;
        qv[j] -= fv;
      });
    };

    // Block-Jacobi preconditioner.
    std::vector<double> muu(n), muv(n), mvv(n), diag_u(auu), diag_v(avv);
    for_each_pair([&](std::size_t i, std::size_t j, int dir) {
      diag_u[i] += phi_u[dir][i];
      diag_u[j] += phi_u[dir][i];
      diag_v[i] += phi_v[dir][i];
      diag_v[j] += phi_v[dir][i];
    });
    for (std::size_t i = 0; i < n; ++i) {
      const double det = diag_u[i] * diag_v[i] - auv[i] * auv[i];
      if (det > 1e-300) {
        muu[i] = diag_v[i] / det;
        muv[i] = -auv[i] / det;
        mvv[i] = diag_u[i] / det;
      } else {
        muu[i] = diag_u[i] > 0.0 ? 1.0 / diag_u[i] : 0.0;
        mvv[i] = diag_v[i] > 0.0 ? 1.0 / diag_v[i] : 0.0;
        muv[i] = 0.0;
      }
    }
    auto precondition = [&](const std::vector<double>& ru, const std::vector<double>& rv,
                            std::vector<double>& zu, std::vector<double>& zv) {
      for (std::size_t i = 0; i < n; ++i) {
        zu[i] = muu[i] * ru[i] + muv[i] * rv[i];
        zv[i] = muv[i] * ru[i] + mvv[i] * rv[i];
      }
    };
    auto dot = [&](const std::vector<double>& a1, const std::vector<double>& a2,
                   const std::vector<double>& b1, const std::vector<double>& b2) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += a1[i] * b1[i] + a2[i] * b2[i];
      return acc;
    };

    du.assign(n, 0.0);
    dv.assign(n, 0.0);
    std::vector<double> ru(bu), rv(bv), zu(n), zv(n), pu(n), pv(n), qu(n), qv(n);
    precondition(ru, rv, zu, zv);
    pu = zu;
    pv = zv;
    double rz = dot(ru, rv, zu, zv);
    const double stop = 1e-20 * std::max(dot(bu, bv, bu, bv), 1e-300);
    for (int k = 0; k < max_iters && rz > 0.0; ++k) {
      apply(pu, pv, qu, qv);
      const double pq = dot(pu, pv, qu, qv);
      if (!(pq > 0.0)) break;
      const double a = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        du[i] += a * pu[i];
        dv[i] += a * pv[i];
        ru[i] -= a * qu[i];
        rv[i] -= a * qv[i];
      }
      if (dot(ru, rv, ru, rv) < stop) break;
      precondition(ru, rv, zu, zv);
      const double rz_next = dot(ru, rv, zu, zv);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) {
        pu[i] = zu[i] + beta * pu[i];
        pv[i] = zv[i] + beta * pv[i];
      }
    }
  }
};

std::vector<double> to_double(std::span<const float> src) {
  return std::vector<double>(src.begin(), src.end());
}

Level make_level(const FloatMap& image_t, const FloatMap& image_t1, const Raster<float>* weight) {
  Level level;
  level.w = image_t.width();
  level.h = image_t.height();
  level.image_t = to_double(image_t.values.values());
  level.image_t1 = to_double(image_t1.values.values());
  if (weight) level.weight = to_double(weight->values());
  return level;
}

std::vector<double> downsample(const std::vector<double>& src, int w, int h) {
  const int cw = (w + 1) / 2;
  const int ch = (h + 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(cw) * ch, 0.0);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      double acc = 0.0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = 2 * x + dx;
          const int sy = 2 * y + dy;
          if (sx < w && sy < h) {
            acc += src[static_cast<std::size_t>(sy) * w + sx];
            ++n;
          }
        }
      }
      out[static_cast<std::size_t>(y) * cw + x] = acc / n;
    }
  }
  return out;
}

Level downsample(const Level& fine) {
  Level coarse;
  coarse.w = (fine.w + 1) / 2;
  coarse.h = (fine.h + 1) / 2;
  coarse.image_t = downsample(fine.image_t, fine.w, fine.h);
  coarse.image_t1 = downsample(fine.image_t1, fine.w, fine.h);
  if (!fine.weight.empty()) coarse.weight = downsample(fine.weight, fine.w, fine.h);
  return coarse;
}

// Bilinear upsampling by two with displacements scaled by two.
std::vector<double> upsample(const std::vector<double>& coarse, int cw, int ch, int w, int h) {
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Bilinear b = footprint(cw, ch, (x + 0.5) / 2.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
      out[static_cast<std::size_t>(y) * w + x] =
          2.0 * interpolate(b, [&](int px, int py) {
            return coarse[static_cast<std::size_t>(py) * cw + px];
          });
    }
  }
  return out;
}

void check_inputs(const FlowField& flow, const FloatMap& image_t, const FloatMap& image_t1,
                  const Raster<float>* weight) {
  require_same_shape(image_t, image_t1, "flow: images");
  require_same_shape(flow, image_t, "flow: flow vs image");
  if (weight) require_same_shape(*weight, image_t, "flow: weight vs image");
}

constexpr double kMaxIncrement = 1.0;  // pixels per reweighted step

LevelReport solve_level(const Objective& objective, int level_index, std::vector<double>& u,
                        std::vector<double>& v, const FlowSolverConfig& cfg) {
  LevelReport report;
  report.level = level_index;
  report.width = objective.level.w;
  report.height = objective.level.h;

  auto diverged = [&](int iteration) {
    return Error(ErrorKind::SolverDivergence,
                 "estimate_flow: non-finite loss at pyramid level " + std::to_string(level_index) +
                     ", iteration " + std::to_string(iteration));
  };

  const bool reweighted = cfg.method == DescentMethod::Reweighted;
  std::vector<double> gu, gv, du, dv, tu(u.size()), tv(v.size());
  double loss = objective.evaluate(u, v, &gu, &gv);
  if (!std::isfinite(loss)) throw diverged(0);
  report.accepted_losses.push_back(loss);

  double step = cfg.step_size;
  for (int it = 0; it < cfg.iters_per_level; ++it) {
    if (reweighted) {
      objective.reweighted_step(u, v, cfg.linear_iters, du, dv);
      // The linearised warp is only trusted about a pixel away.
      for (std::size_t i = 0; i < du.size(); ++i) {
        const double len = std::hypot(du[i], dv[i]);
        if (len > kMaxIncrement) {
          du[i] *= kMaxIncrement / len;
          dv[i] *= kMaxIncrement / len;
        }
      }
      step = cfg.step_size;
    } else {
      du.resize(gu.size());
      dv.resize(gv.size());
      for (std::size_t i = 0; i < gu.size(); ++i) {
        du[i] = -gu[i];
        dv[i] = -gv[i];
      }
    }
    bool accepted = false;
    double trial = loss;
    while (step >= 1e-12 * cfg.step_size) {
      for (std::size_t i = 0; i < u.size(); ++i) {
        tu[i] = u[i] + step * du[i];
        tv[i] = v[i] + step * dv[i];
      }
      trial = objective.evaluate(tu, tv, nullptr, nullptr);
      if (!std::isfinite(trial)) throw diverged(it + 1);
      if (trial <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      report.converged = true;  // no descent left along the search direction
      break;
    }
    const double rel = (loss - trial) / std::max(std::abs(loss), 1e-300);
    u.swap(tu);
    v.swap(tv);
    loss = reweighted ? trial : objective.evaluate(u, v, &gu, &gv);
    report.accepted_losses.push_back(loss);
    report.iterations = it + 1;
    if (rel < cfg.convergence_tol) {
      report.converged = true;
      break;
    }
    if (!reweighted) step = std::min(2.0 * step, 1024.0 * cfg.step_size);
  }
  return report;
}

} // namespace

Warped<FloatMap> warp(const FloatMap& src, const FlowField& flow) {
  require_same_shape(src, flow, "warp");
  Warped<FloatMap> result{FloatMap(src.semantics, src.width(), src.height()),
                          Mask(src.width(), src.height())};
  const int w = src.width();
  const int h = src.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Bilinear b = footprint(w, h, x + flow.u(x, y), y + flow.v(x, y));
      result.out(x, y) = static_cast<float>(
          interpolate(b, [&](int px, int py) { return static_cast<double>(src(px, py)); }));
      result.valid(x, y) = b.inside ? 1 : 0;
    }
  }
  return result;
}

Warped<FlowField> warp(const FlowField& src, const FlowField& flow) {
  FloatMap u{Semantics::FlowU, 0, 0};
  u.values = src.u;
  FloatMap v{Semantics::FlowV, 0, 0};
  v.values = src.v;
  auto wu = warp(u, flow);
  auto wv = warp(v, flow);
  Warped<FlowField> result;
  result.out.u = std::move(wu.out.values);
  result.out.v = std::move(wv.out.values);
  result.valid = std::move(wu.valid);
  return result;
}

double charbonnier(double x, double eps, double alpha) {
  return std::pow(x * x + eps * eps, alpha);
}

Raster<float> charbonnier(const Raster<float>& x, double eps, double alpha) {
  Raster<float> out(x.width(), x.height());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<float>(charbonnier(static_cast<double>(x[i]), eps, alpha));
  }
  return out;
}

void FlowSolverConfig::validate() const {
  if (!(alpha >= 0.0)) throw Error(ErrorKind::Range, "flow: alpha must be >= 0");
  if (!(charbonnier_eps > 0.0)) throw Error(ErrorKind::Range, "flow: charbonnier_eps must be > 0");
  if (!(charbonnier_alpha > 0.0 && charbonnier_alpha < 1.0)) {
    throw Error(ErrorKind::Range, "flow: charbonnier_alpha must be in (0, 1)");
  }
  if (pyramid_levels < 1) throw Error(ErrorKind::Range, "flow: pyramid_levels must be >= 1");
  if (iters_per_level < 0) throw Error(ErrorKind::Range, "flow: iters_per_level must be >= 0");
  if (!(step_size > 0.0)) throw Error(ErrorKind::Range, "flow: step_size must be > 0");
  if (!(convergence_tol >= 0.0)) {
    throw Error(ErrorKind::Range, "flow: convergence_tol must be >= 0");
  }
  if (linear_iters < 1) throw Error(ErrorKind::Range, "flow: linear_iters must be >= 1");
}

double photometric_loss(const FlowField& flow, const FloatMap& image_t, const FloatMap& image_t1,
                        const Raster<float>* weight, double eps, double alpha) {
  check_inputs(flow, image_t, image_t1, weight);
  const Level level = make_level(image_t, image_t1, weight);
  const Objective objective{level, eps, alpha, 0.0};
  return objective.evaluate(to_double(flow.u.values()), to_double(flow.v.values()), nullptr,
                            nullptr);
}

double smoothness_loss(const FlowField& flow, double eps, double alpha) {
  Level level;
  level.w = flow.width();
  level.h = flow.height();
  level.weight.assign(flow.u.size(), 0.0);  // data term off
  const Objective objective{level, eps, alpha, 1.0};
  return objective.evaluate(to_double(flow.u.values()), to_double(flow.v.values()), nullptr,
                            nullptr);
}

Raster<float> mask_to_weight(const Mask& mask) {
  Raster<float> out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0f : 0.0f;
  return out;
}

const Raster<float>* photometric_weight(const FlowSolverConfig& cfg,
                                        const Raster<float>* event_weight) {
  if (cfg.event_weighting == EventWeighting::Uniform) return nullptr;
  if (!event_weight) {
    throw Error(ErrorKind::InvalidArgument, "flow: event-gated weighting needs an event mask");
  }
  return event_weight;
}

double total_loss(const FlowField& flow, const FloatMap& image_t, const FloatMap& image_t1,
                  const FlowSolverConfig& cfg, const Raster<float>* event_weight) {
  const Raster<float>* weight = photometric_weight(cfg, event_weight);
  check_inputs(flow, image_t, image_t1, weight);
  const Level level = make_level(image_t, image_t1, weight);
  const Objective objective{level, cfg.charbonnier_eps, cfg.charbonnier_alpha, cfg.alpha};
  return objective.evaluate(to_double(flow.u.values()), to_double(flow.v.values()), nullptr,
                            nullptr);
}

FlowField loss_gradient(const FlowField& flow, const FloatMap& image_t, const FloatMap& image_t1,
                        const FlowSolverConfig& cfg, const Raster<float>* event_weight) {
  const Raster<float>* weight = photometric_weight(cfg, event_weight);
  check_inputs(flow, image_t, image_t1, weight);
  const Level level = make_level(image_t, image_t1, weight);
  const Objective objective{level, cfg.charbonnier_eps, cfg.charbonnier_alpha, cfg.alpha};
  std::vector<double> gu, gv;
  objective.evaluate(to_double(flow.u.values()), to_double(flow.v.values()), &gu, &gv);
  FlowField grad(flow.width(), flow.height());
  for (std::size_t i = 0; i < gu.size(); ++i) {
    grad.u[i] = static_cast<float>(gu[i]);
    grad.v[i] = static_cast<float>(gv[i]);
  }
  return grad;
}

FlowEstimate estimate_flow(const Raster<float>* event_weight, const FloatMap& image_t,
                           const FloatMap& image_t1, const FlowSolverConfig& cfg) {
  cfg.validate();
  const Raster<float>* weight = photometric_weight(cfg, event_weight);
  require_same_shape(image_t, image_t1, "estimate_flow");
  if (weight) require_same_shape(*weight, image_t, "estimate_flow: event mask");

  std::vector<Level> pyramid;
  pyramid.push_back(make_level(image_t, image_t1, weight));
  while (static_cast<int>(pyramid.size()) < cfg.pyramid_levels && pyramid.back().w >= 4 &&
         pyramid.back().h >= 4) {
    pyramid.push_back(downsample(pyramid.back()));
  }

  FlowEstimate estimate;
  std::vector<double> u, v;
  for (int l = static_cast<int>(pyramid.size()) - 1; l >= 0; --l) {
    const Level& level = pyramid[static_cast<std::size_t>(l)];
    const std::size_t n = static_cast<std::size_t>(level.w) * level.h;
    if (u.empty()) {
      u.assign(n, 0.0);
      v.assign(n, 0.0);
    } else {
      const Level& coarse = pyramid[static_cast<std::size_t>(l) + 1];
      u = upsample(u, coarse.w, coarse.h, level.w, level.h);
      v = upsample(v, coarse.w, coarse.h, level.w, level.h);
    }
    const Objective objective{level, cfg.charbonnier_eps, cfg.charbonnier_alpha, cfg.alpha};
    estimate.levels.push_back(solve_level(objective, l, u, v, cfg));
    estimate.loss = estimate.levels.back().accepted_losses.back();
  }

  estimate.flow = FlowField(image_t.width(), image_t.height());
  for (std::size_t i = 0; i < u.size(); ++i) {
    estimate.flow.u[i] = static_cast<float>(u[i]);
    estimate.flow.v[i] = static_cast<float>(v[i]);
  }
  return estimate;
}

FlowEstimate estimate_flow(const EventMap& events, const FloatMap& image_t,
                           const FloatMap& image_t1, const FlowSolverConfig& cfg) {
  const Raster<float> weight = mask_to_weight(event_mask(events));
  return estimate_flow(&weight, image_t, image_t1, cfg);
}

} // namespace evreflex::flow
