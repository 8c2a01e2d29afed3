#include <evreflex/io.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace evreflex::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const char* texture_name(sim::TextureKind k) {
  switch (k) {
    case sim::TextureKind::Checker: return "checker";
    case sim::TextureKind::Flat: return "flat";
    case sim::TextureKind::Sine: return "sine";
  }
  return "checker";
}

class Parser {
public:
  RunConfig parse(std::string_view text) {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = std::min(text.find('\n', start), text.size());
      ++line_;
      handle_line(text.substr(start, end - start));
      start = end + 1;
    }
    finish();
    return config_;
  }

private:
  using Setter = std::function<void(std::string_view key, std::string_view value)>;

  [[noreturn]] void fail(ErrorKind kind, const std::string& what) const {
    throw Error(kind, "config line " + std::to_string(line_) + ": " + what);
  }

  double number(std::string_view key, std::string_view value) const {
    value = trim(value);
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(v)) {
      fail(ErrorKind::Parse, std::string(key) + ": expected a number, got '" +
                                 std::string(value) + "'");
    }
    return v;
  }

  long long integer(std::string_view key, std::string_view value) const {
    value = trim(value);
    long long v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
      fail(ErrorKind::Parse, std::string(key) + ": expected an integer, got '" +
                                 std::string(value) + "'");
    }
    return v;
  }

  std::vector<double> numbers(std::string_view key, std::string_view value, std::size_t n) const {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
      const auto comma = value.find(',', start);
      out.push_back(number(key, value.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (out.size() != n) {
      fail(ErrorKind::Parse, std::string(key) + ": expected " + std::to_string(n) +
                                 " comma-separated numbers");
    }
    return out;
  }

  void check(bool ok, std::string_view key, const char* rule) const {
    if (!ok) fail(ErrorKind::Range, std::string(key) + " " + rule);
  }

  double positive(std::string_view key, std::string_view value) const {
    const double v = number(key, value);
    check(v > 0.0, key, "must be > 0");
    return v;
  }
  double non_negative(std::string_view key, std::string_view value) const {
    const double v = number(key, value);
    check(v >= 0.0, key, "must be >= 0");
    return v;
  }
  double unit_interval(std::string_view key, std::string_view value) const {
    const double v = number(key, value);
    check(v >= 0.0 && v <= 1.0, key, "must be in [0, 1]");
    return v;
  }
  int int_at_least(std::string_view key, std::string_view value, long long lo) const {
    const long long v = integer(key, value);
    check(v >= lo && v <= std::numeric_limits<int>::max(), key,
          lo == 0 ? "must be a non-negative integer" : "must be a positive integer");
    return static_cast<int>(v);
  }

  sim::TextureKind texture_kind(std::string_view key, std::string_view value) const {
    value = trim(value);
    if (value == "checker") return sim::TextureKind::Checker;
    if (value == "flat") return sim::TextureKind::Flat;
    if (value == "sine") return sim::TextureKind::Sine;
    fail(ErrorKind::Range, std::string(key) + " must be checker, flat or sine");
  }

  std::map<std::string, Setter, std::less<>> texture_keys(sim::Texture& t) {
    return {
        {"kind", [this, &t](auto k, auto v) { t.kind = texture_kind(k, v); }},
        {"base", [this, &t](auto k, auto v) { t.base = unit_interval(k, v); }},
        {"amplitude", [this, &t](auto k, auto v) { t.amplitude = unit_interval(k, v); }},
        {"cell", [this, &t](auto k, auto v) { t.cell = positive(k, v); }},
    };
  }

  std::map<std::string, Setter, std::less<>> keys_for(const std::string& section) {
    sim::SceneConfig& s = config_.scene;
    flow::FlowSolverConfig& f = config_.flow;
    if (section.empty()) {
      return {
          {"frame_rate", [this, &s](auto k, auto v) { s.frame_rate = positive(k, v); }},
          {"duration", [this, &s](auto k, auto v) { s.duration = positive(k, v); }},
          {"contrast_threshold",
           [this, &s](auto k, auto v) { s.contrast_threshold = positive(k, v); }},
          {"rng_seed",
           [this, &s](auto k, auto v) {
             const long long n = integer(k, v);
             check(n >= 0, k, "must be >= 0");
             s.rng_seed = static_cast<std::uint64_t>(n);
           }},
          {"supersample", [this, &s](auto k, auto v) { s.supersample = int_at_least(k, v, 1); }},
          {"random_obstacles",
           [this, &s](auto k, auto v) { s.random_obstacles = int_at_least(k, v, 0); }},
          {"random_waypoints",
           [this, &s](auto k, auto v) { s.random_waypoints = int_at_least(k, v, 0); }},
          {"obstacle_speed_min",
           [this, &s](auto k, auto v) { s.obstacle_speed_min = non_negative(k, v); }},
          {"obstacle_speed_max",
           [this, &s](auto k, auto v) { s.obstacle_speed_max = non_negative(k, v); }},
          {"obstacle_radius_min",
           [this, &s](auto k, auto v) { s.obstacle_radius_min = positive(k, v); }},
          {"obstacle_radius_max",
           [this, &s](auto k, auto v) { s.obstacle_radius_max = positive(k, v); }},
      };
    }
    if (section == "camera") {
      CameraModel& c = s.camera;
      return {
          {"fx", [this, &c](auto k, auto v) { c.fx = positive(k, v); }},
          {"fy", [this, &c](auto k, auto v) { c.fy = positive(k, v); }},
          {"cx", [this, &c](auto k, auto v) { c.cx = non_negative(k, v); cx_set_ = true; }},
          {"cy", [this, &c](auto k, auto v) { c.cy = non_negative(k, v); cy_set_ = true; }},
          {"width", [this, &c](auto k, auto v) { c.width = int_at_least(k, v, 1); }},
          {"height", [this, &c](auto k, auto v) { c.height = int_at_least(k, v, 1); }},
      };
    }
    if (section == "room") {
      sim::RoomSpec& r = s.room;
      return {
          {"half_x", [this, &r](auto k, auto v) { r.half_x = positive(k, v); }},
          {"half_y", [this, &r](auto k, auto v) { r.half_y = positive(k, v); }},
          {"height", [this, &r](auto k, auto v) { r.height = positive(k, v); }},
      };
    }
    if (section == "wall_texture") return texture_keys(s.wall_texture);
    if (section == "floor_texture") return texture_keys(s.floor_texture);
    if (section == "trajectory") {
      sim::TrajectorySpec& t = s.trajectory;
      return {
          {"speed", [this, &t](auto k, auto v) { t.speed = non_negative(k, v); }},
          {"yaw_rate_deg", [this, &t](auto k, auto v) { t.yaw_rate_deg = non_negative(k, v); }},
          {"camera_height", [this, &t](auto k, auto v) { t.camera_height = positive(k, v); }},
          {"waypoint",
           [this, &t](auto k, auto v) {
             if (!waypoints_given_) t.waypoints.clear();
             waypoints_given_ = true;
             const auto n = numbers(k, v, 3);
             t.waypoints.push_back({n[0], n[1], n[2]});
           }},
      };
    }
    if (section == "obstacle") {
      sim::SphereObstacle& o = s.obstacles.back();
      auto keys = texture_keys(o.texture);
      std::map<std::string, Setter, std::less<>> out{
          {"radius", [this, &o](auto k, auto v) { o.radius = positive(k, v); }},
          {"position",
           [this, &o](auto k, auto v) {
             const auto n = numbers(k, v, 3);
             o.position = sim::Vec3(n[0], n[1], n[2]);
           }},
          {"velocity",
           [this, &o](auto k, auto v) {
             const auto n = numbers(k, v, 3);
             o.velocity = sim::Vec3(n[0], n[1], n[2]);
           }},
          {"class_id",
           [this, &o](auto k, auto v) {
             const long long id = integer(k, v);
             check(id >= 0 && id <= 2, k, "must be 0, 1 or 2");
             o.class_id = static_cast<int>(id);
           }},
      };
      for (auto& [name, setter] : keys) out.emplace("texture_" + name, std::move(setter));
      return out;
    }
    if (section == "flow") {
      return {
          {"alpha", [this, &f](auto k, auto v) { f.alpha = non_negative(k, v); }},
          {"charbonnier_eps", [this, &f](auto k, auto v) { f.charbonnier_eps = positive(k, v); }},
          {"charbonnier_alpha",
           [this, &f](auto k, auto v) {
             const double a = number(k, v);
             check(a > 0.0 && a < 1.0, k, "must be in (0, 1)");
             f.charbonnier_alpha = a;
           }},
          {"pyramid_levels",
           [this, &f](auto k, auto v) { f.pyramid_levels = int_at_least(k, v, 1); }},
          {"iters_per_level",
           [this, &f](auto k, auto v) { f.iters_per_level = int_at_least(k, v, 0); }},
          {"step_size", [this, &f](auto k, auto v) { f.step_size = positive(k, v); }},
          {"event_weighting",
           [this, &f](auto k, auto v) {
             v = trim(v);
             if (v == "uniform") {
               f.event_weighting = flow::EventWeighting::Uniform;
             } else if (v == "event_gated") {
               f.event_weighting = flow::EventWeighting::EventGated;
             } else {
               fail(ErrorKind::Range, std::string(k) + " must be uniform or event_gated");
             }
           }},
          {"convergence_tol",
           [this, &f](auto k, auto v) { f.convergence_tol = non_negative(k, v); }},
          {"method",
           [this, &f](auto k, auto v) {
             v = trim(v);
             if (v == "gradient") {
               f.method = flow::DescentMethod::Gradient;
             } else if (v == "reweighted") {
               f.method = flow::DescentMethod::Reweighted;
             } else {
               fail(ErrorKind::Range, std::string(k) + " must be gradient or reweighted");
             }
           }},
          {"linear_iters", [this, &f](auto k, auto v) { f.linear_iters = int_at_least(k, v, 1); }},
      };
    }
    fail(ErrorKind::UnknownKey, "unknown section [" + section + "]");
  }

  void handle_line(std::string_view raw) {
    const auto hash = raw.find('#');
    const std::string_view line = trim(raw.substr(0, hash));
    if (line.empty()) return;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Parse, "unterminated section header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (name == "obstacle") {
        config_.scene.obstacles.emplace_back();
      } else if (!seen_sections_.insert(name).second) {
        fail(ErrorKind::Parse, "section [" + name + "] appears twice");
      }
      section_ = name;
      keys_ = keys_for(section_);
      seen_keys_.clear();
      return;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::Parse, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorKind::Parse, "missing key before '='");
    if (keys_.empty() && section_.empty()) keys_ = keys_for(section_);
    const auto it = keys_.find(key);
    if (it == keys_.end()) {
      fail(ErrorKind::UnknownKey,
           "unknown key '" + key + "'" + (section_.empty() ? "" : " in [" + section_ + "]"));
    }
    if (key != "waypoint" && !seen_keys_.insert(key).second) {
      fail(ErrorKind::Parse, "key '" + key + "' given twice");
    }
    if (value.empty()) fail(ErrorKind::Parse, "key '" + key + "' has no value");
    it->second(key, value);
  }

  void finish() {
    CameraModel& c = config_.scene.camera;
    if (!cx_set_) c.cx = (c.width - 1) / 2.0;
    if (!cy_set_) c.cy = (c.height - 1) / 2.0;
    try {
      config_.scene.validate();
      config_.flow.validate();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("config: ") + e.what());
    }
  }

  RunConfig config_;
  int line_ = 0;
  std::string section_;
  std::map<std::string, Setter, std::less<>> keys_;
  std::set<std::string> seen_sections_;
  std::set<std::string> seen_keys_;
  bool waypoints_given_ = false;
  bool cx_set_ = false;
  bool cy_set_ = false;
};

void dump_texture(std::string& out, const std::string& prefix, const sim::Texture& t) {
  out += prefix + "kind = " + texture_name(t.kind) + "\n";
  out += prefix + "base = " + format_number(t.base) + "\n";
  out += prefix + "amplitude = " + format_number(t.amplitude) + "\n";
  out += prefix + "cell = " + format_number(t.cell) + "\n";
}

std::string triple(const sim::Vec3& v) {
  return format_number(v.x()) + ", " + format_number(v.y()) + ", " + format_number(v.z());
}

} // namespace

RunConfig parse_config(std::string_view text) { return Parser().parse(text); }

RunConfig read_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_config(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string dump_config(const RunConfig& config) {
  const sim::SceneConfig& s = config.scene;
  const flow::FlowSolverConfig& f = config.flow;
  auto kv = [](const char* k, const std::string& v) { return std::string(k) + " = " + v + "\n"; };
  auto num = [&](const char* k, double v) { return kv(k, format_number(v)); };
  auto integer = [&](const char* k, long long v) { return kv(k, std::to_string(v)); };

  std::string out;
  out += num("frame_rate", s.frame_rate);
  out += num("duration", s.duration);
  out += num("contrast_threshold", s.contrast_threshold);
  out += kv("rng_seed", std::to_string(s.rng_seed));
  out += integer("supersample", s.supersample);
  out += integer("random_obstacles", s.random_obstacles);
  out += integer("random_waypoints", s.random_waypoints);
  out += num("obstacle_speed_min", s.obstacle_speed_min);
  out += num("obstacle_speed_max", s.obstacle_speed_max);
  out += num("obstacle_radius_min", s.obstacle_radius_min);
  out += num("obstacle_radius_max", s.obstacle_radius_max);

  out += "\n[camera]\n";
  out += num("fx", s.camera.fx);
  out += num("fy", s.camera.fy);
  out += num("cx", s.camera.cx);
  out += num("cy", s.camera.cy);
  out += integer("width", s.camera.width);
  out += integer("height", s.camera.height);

  out += "\n[room]\n";
  out += num("half_x", s.room.half_x);
  out += num("half_y", s.room.half_y);
  out += num("height", s.room.height);

  out += "\n[wall_texture]\n";
  dump_texture(out, "", s.wall_texture);
  out += "\n[floor_texture]\n";
  dump_texture(out, "", s.floor_texture);

  out += "\n[trajectory]\n";
  out += num("speed", s.trajectory.speed);
  out += num("yaw_rate_deg", s.trajectory.yaw_rate_deg);
  out += num("camera_height", s.trajectory.camera_height);
  for (const auto& w : s.trajectory.waypoints) {
    out += kv("waypoint", format_number(w.x) + ", " + format_number(w.y) + ", " +
                              format_number(w.yaw_deg));
  }

  for (const auto& o : s.obstacles) {
    out += "\n[obstacle]\n";
    out += num("radius", o.radius);
    out += kv("position", triple(o.position));
    out += kv("velocity", triple(o.velocity));
    out += integer("class_id", o.class_id);
    dump_texture(out, "texture_", o.texture);
  }

  out += "\n[flow]\n";
  out += num("alpha", f.alpha);
  out += num("charbonnier_eps", f.charbonnier_eps);
  out += num("charbonnier_alpha", f.charbonnier_alpha);
  out += integer("pyramid_levels", f.pyramid_levels);
  out += integer("iters_per_level", f.iters_per_level);
  out += num("step_size", f.step_size);
  out += kv("event_weighting",
            f.event_weighting == flow::EventWeighting::Uniform ? "uniform" : "event_gated");
  out += num("convergence_tol", f.convergence_tol);
  out += kv("method", f.method == flow::DescentMethod::Gradient ? "gradient" : "reweighted");
  out += integer("linear_iters", f.linear_iters);
  return out;
}

} // namespace evreflex::io
