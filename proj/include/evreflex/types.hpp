#pragma once

#include <evreflex/error.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evreflex {

// Dense row-major raster, top row first. Pixel (x, y) has its centre at the
// continuous coordinate (x, y).
template <typename T>
class Raster {
public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw Error(ErrorKind::InvalidArgument, "raster dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Raster<std::uint8_t>;

enum class Semantics : std::uint32_t {
  Intensity = 0,
  DepthM = 1,
  InvTtiS = 2,
  ClassId = 3,
  FlowU = 4,
  FlowV = 5,
};

const char* to_string(Semantics s);

struct FloatMap {
  Semantics semantics = Semantics::Intensity;
  Raster<float> values;

  FloatMap() = default;
  FloatMap(Semantics s, int width, int height, float fill = 0.0f)
      : semantics(s), values(width, height, fill) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  float operator()(int x, int y) const { return values(x, y); }
  float& operator()(int x, int y) { return values(x, y); }

  friend bool operator==(const FloatMap&, const FloatMap&) = default;
};

// Depth sentinel: 0 (or anything non-positive / non-finite) marks no return.
bool depth_valid(float d);

enum class ClassId : int { Static = 0, Floor = 1, Flying = 2 };

// Per-pixel displacement in pixels per frame interval.
struct FlowField {
  Raster<float> u;
  Raster<float> v;

  FlowField() = default;
  FlowField(int width, int height, float fu = 0.0f, float fv = 0.0f)
      : u(width, height, fu), v(width, height, fv) {}

  int width() const { return u.width(); }
  int height() const { return u.height(); }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct CameraModel {
  double fx = 32.0;
  double fy = 32.0;
  double cx = 31.5;
  double cy = 31.5;
  int width = 64;
  int height = 64;

  void validate() const;
};

struct Event {
  double t = 0.0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t polarity = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

// Strict weak ordering used for every event stream: (t, y, x, polarity).
bool event_before(const Event& a, const Event& b);

struct TimeWindow {
  double t_start = 0.0;
  double t_end = 0.0;
  double length() const { return t_end - t_start; }
};

// Four-channel accumulation of one window of events. Latest-timestamp
// channels hold (t - t_start) / (t_end - t_start); 0 marks "no event".
struct EventMap {
  TimeWindow window;
  Raster<std::uint32_t> pos_count;
  Raster<std::uint32_t> neg_count;
  Raster<float> pos_time;
  Raster<float> neg_time;

  int width() const { return pos_count.width(); }
  int height() const { return pos_count.height(); }
  std::uint64_t total_events() const;
};

EventMap accumulate_events(std::span<const Event> events, TimeWindow window, int width,
                           int height);

Mask event_mask(const EventMap& em);

std::size_t count_set(const Mask& m);

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::Shape, std::string(what) + ": raster dimensions differ (" +
                                      std::to_string(a.width()) + "x" +
                                      std::to_string(a.height()) + " vs " +
                                      std::to_string(b.width()) + "x" +
                                      std::to_string(b.height()) + ")");
  }
}

} // namespace evreflex
