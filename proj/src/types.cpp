#include <evreflex/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evreflex {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Unsorted: return "unsorted";
    case ErrorKind::OutOfWindow: return "out-of-window";
    case ErrorKind::EmptyWindow: return "empty-window";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Pose: return "pose";
    case ErrorKind::SolverDivergence: return "solver-divergence";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::VersionMismatch: return "version-mismatch";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::SizeMismatch: return "size-mismatch";
    case ErrorKind::CoordinateOutOfRange: return "coordinate-out-of-range";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::UnknownKey: return "unknown-key";
    case ErrorKind::Range: return "range";
    case ErrorKind::Io: return "io";
    case ErrorKind::MissingStream: return "missing-stream";
    case ErrorKind::KindMismatch: return "kind-mismatch";
  }
  return "unknown";
}

const char* to_string(Semantics s) {
  switch (s) {
    case Semantics::Intensity: return "intensity";
    case Semantics::DepthM: return "depth_m";
    case Semantics::InvTtiS: return "inv_tti_s";
    case Semantics::ClassId: return "class_id";
    case Semantics::FlowU: return "flow_u";
    case Semantics::FlowV: return "flow_v";
  }
  return "unknown";
}

bool depth_valid(float d) { return std::isfinite(d) && d > 0.0f; }

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::Range, "camera: width and height must be positive");
  }
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorKind::Range, "camera: focal lengths must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorKind::Range, "camera: principal point outside the image");
  }
}

bool event_before(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.polarity < b.polarity;
}

std::uint64_t EventMap::total_events() const {
  std::uint64_t n = 0;
  for (auto c : pos_count.values()) n += c;
  for (auto c : neg_count.values()) n += c;
  return n;
}

EventMap accumulate_events(std::span<const Event> events, TimeWindow window, int width,
                           int height) {
  if (!(window.t_end > window.t_start)) {
    throw Error(ErrorKind::EmptyWindow, "accumulate_events: window must have positive length");
  }
  EventMap em;
  em.window = window;
  em.pos_count = Raster<std::uint32_t>(width, height);
  em.neg_count = Raster<std::uint32_t>(width, height);
  em.pos_time = Raster<float>(width, height);
  em.neg_time = Raster<float>(width, height);

  const double span = window.length();
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < events.size(); ++k) {
    const Event& e = events[k];
    if (e.t < previous) {
      throw Error(ErrorKind::Unsorted,
                  "accumulate_events: events not sorted by time at index " + std::to_string(k));
    }
    previous = e.t;
    if (!(e.t >= window.t_start && e.t < window.t_end)) {
      throw Error(ErrorKind::OutOfWindow,
                  "accumulate_events: event " + std::to_string(k) + " at t=" +
                      std::to_string(e.t) + " outside window");
    }
    if (e.x >= width || e.y >= height) {
      throw Error(ErrorKind::CoordinateOutOfRange,
                  "accumulate_events: event " + std::to_string(k) + " outside the sensor");
    }
    const float tn = static_cast<float>((e.t - window.t_start) / span);
    if (e.polarity > 0) {
      em.pos_count(e.x, e.y) += 1;
      em.pos_time(e.x, e.y) = std::max(em.pos_time(e.x, e.y), tn);
    } else {
      em.neg_count(e.x, e.y) += 1;
      em.neg_time(e.x, e.y) = std::max(em.neg_time(e.x, e.y), tn);
    }
  }
  return em;
}

Mask event_mask(const EventMap& em) {
  Mask m(em.width(), em.height());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = (em.pos_count[i] + em.neg_count[i]) > 0 ? 1 : 0;
  }
  return m;
}

std::size_t count_set(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.values().begin(), m.values().end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

} // namespace evreflex
