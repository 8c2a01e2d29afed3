#pragma once

#include <evreflex/types.hpp>

#include <Eigen/Core>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evreflex::eval {

inline constexpr double kOutlierPx = 3.0;

struct FlowError {
  double aee = 0.0;          // px
  double outlier_pct = 0.0;  // % of pixels with EE > 3 px
  std::size_t pixels = 0;
};

// Null mask = every pixel. Throws UndefinedMetric on an empty selection.
FlowError flow_aee(const FlowField& pred, const FlowField& gt, const Mask* mask = nullptr);

struct Scores {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::uint64_t support() const { return tp + fn; }
};

// Recomputes precision / recall / f1 from the counts; undefined ratios are 0.
Scores scores_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

struct ClassScores {
  std::map<int, Scores> per_class;  // always holds the simulator ids 0, 1, 2
  Scores overall;

  // Adds the counts of another frame and recomputes the ratios.
  ClassScores& operator+=(const ClassScores& other);
};

// Each class is scored on its own pixels, overall on all pixels. When
// `scored` is given, pixels outside it (e.g. where the ground truth is
// undefined) are ignored entirely.
ClassScores prf1(const Mask& pred, const Mask& gt, const FloatMap& class_map,
                 const Mask* scored = nullptr);

Mask depth_baseline(const FloatMap& depth, double threshold_m);

using Vec3 = Eigen::Vector3d;

// Degrees; throws UndefinedMetric if either vector is zero.
double angle_error(const Vec3& pred, const Vec3& gt);

struct MotionSample {
  Vec3 pred = Vec3::Zero();
  Vec3 gt = Vec3::Zero();
};

struct AaeReport {
  double aae = 0.0;
  std::optional<double> aae_top10;  // needs at least kTop10MinSamples
  std::size_t samples = 0;
  std::size_t top10_samples = 0;
};

inline constexpr std::size_t kTop10MinSamples = 10;

// The top decile is ceil(n / 10) samples with the largest ground-truth
// magnitude; equal magnitudes keep sample order.
AaeReport aae_report(std::span<const MotionSample> samples);

// Ordered name/value lines, rendered as `name<TAB>value`.
class Report {
public:
  void add(std::string name, double value);
  void add_undefined(std::string name);
  void add_count(std::string name, std::uint64_t value);
  std::string to_text() const;

  const std::vector<std::pair<std::string, std::string>>& lines() const { return lines_; }

private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

} // namespace evreflex::eval
