#include <evreflex/eval.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace evreflex::eval {

FlowError flow_aee(const FlowField& pred, const FlowField& gt, const Mask* mask) {
  require_same_shape(pred, gt, "flow_aee");
  if (mask) require_same_shape(*mask, gt, "flow_aee: mask");
  FlowError out;
  double sum = 0.0;
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < gt.u.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double du = static_cast<double>(pred.u[i]) - gt.u[i];
    const double dv = static_cast<double>(pred.v[i]) - gt.v[i];
    const double ee = std::hypot(du, dv);
    sum += ee;
    if (ee > kOutlierPx) ++outliers;
    ++out.pixels;
  }
  if (out.pixels == 0) throw Error(ErrorKind::UndefinedMetric, "flow_aee: empty pixel selection");
  out.aee = sum / static_cast<double>(out.pixels);
  out.outlier_pct = 100.0 * static_cast<double>(outliers) / static_cast<double>(out.pixels);
  return out;
}

Scores scores_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  Scores s{tp, fp, fn};
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

ClassScores& ClassScores::operator+=(const ClassScores& other) {
  for (const auto& [id, s] : other.per_class) {
    const Scores& mine = per_class[id];
    per_class[id] = scores_from_counts(mine.tp + s.tp, mine.fp + s.fp, mine.fn + s.fn);
  }
  overall = scores_from_counts(overall.tp + other.overall.tp, overall.fp + other.overall.fp,
                               overall.fn + other.overall.fn);
  return *this;
}

ClassScores prf1(const Mask& pred, const Mask& gt, const FloatMap& class_map,
                 const Mask* scored) {
  require_same_shape(pred, gt, "prf1");
  require_same_shape(gt, class_map, "prf1: class map");
  if (scored) require_same_shape(gt, *scored, "prf1: scored mask");
  struct Counts {
    std::uint64_t tp = 0, fp = 0, fn = 0;
  };
  std::map<int, Counts> counts{{0, {}}, {1, {}}, {2, {}}};
  Counts all;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (scored && !(*scored)[i]) continue;
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    if (!p && !g) continue;
    Counts& c = counts[static_cast<int>(std::lround(class_map.values[i]))];
    if (p && g) {
      ++c.tp;
      ++all.tp;
    } else if (p) {
      ++c.fp;
      ++all.fp;
    } else {
      ++c.fn;
      ++all.fn;
    }
  }
  ClassScores out;
  for (const auto& [id, c] : counts) out.per_class[id] = scores_from_counts(c.tp, c.fp, c.fn);
  out.overall = scores_from_counts(all.tp, all.fp, all.fn);
  return out;
}

Mask depth_baseline(const FloatMap& depth, double threshold_m) {
  if (!(threshold_m > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "depth_baseline: threshold must be positive");
  }
  Mask m(depth.width(), depth.height());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const float d = depth.values[i];
    m[i] = (depth_valid(d) && d < threshold_m) ? 1 : 0;
  }
  return m;
}

double angle_error(const Vec3& pred, const Vec3& gt) {
  const double np = pred.norm();
  const double ng = gt.norm();
  if (!(np > 0.0) || !(ng > 0.0)) {
    throw Error(ErrorKind::UndefinedMetric, "angle_error: zero-length vector");
  }
  const double c = std::clamp(pred.dot(gt) / (np * ng), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

AaeReport aae_report(std::span<const MotionSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::UndefinedMetric, "aae_report: no samples");
  AaeReport out;
  out.samples = samples.size();
  std::vector<double> errors;
  errors.reserve(samples.size());
  for (const auto& s : samples) errors.push_back(angle_error(s.pred, s.gt));
  out.aae = std::accumulate(errors.begin(), errors.end(), 0.0) /
            static_cast<double>(errors.size());

  if (samples.size() >= kTop10MinSamples) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return samples[a].gt.norm() > samples[b].gt.norm();
    });
    const std::size_t k = (samples.size() + 9) / 10;
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += errors[order[i]];
    out.aae_top10 = sum / static_cast<double>(k);
    out.top10_samples = k;
  }
  return out;
}

void Report::add(std::string name, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  lines_.emplace_back(std::move(name), buf);
}

void Report::add_undefined(std::string name) { lines_.emplace_back(std::move(name), "undefined"); }

void Report::add_count(std::string name, std::uint64_t value) {
  lines_.emplace_back(std::move(name), std::to_string(value));
}

std::string Report::to_text() const {
  std::string out;
  for (const auto& [name, value] : lines_) out += name + "\t" + value + "\n";
  return out;
}

} // namespace evreflex::eval
