#include <evreflex/eval.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace evreflex;
using namespace evreflex::eval;

namespace {

Mask random_mask(std::mt19937_64& rng, int w, int h, int one_in) {
  Mask m(w, h);
  for (auto& v : m.storage()) v = rng() % one_in == 0 ? 1 : 0;
  return m;
}

FloatMap random_classes(std::mt19937_64& rng, int w, int h) {
  FloatMap c(Semantics::ClassId, w, h);
  for (auto& v : c.values.storage()) v = static_cast<float>(rng() % 3);
  return c;
}

} // namespace

TEST(FlowAee, TrivialCases) {
  std::mt19937_64 rng(1);
  FlowField gt(6, 5);
  for (auto& v : gt.u.storage()) v = static_cast<float>(rng() % 7);
  const auto same = flow_aee(gt, gt);
  EXPECT_EQ(same.aee, 0.0);
  EXPECT_EQ(same.outlier_pct, 0.0);
  FlowField off = gt;
  for (auto& v : off.u.storage()) v += 3.0f;
  for (auto& v : off.v.storage()) v += 4.0f;
  const auto e = flow_aee(off, gt);
  EXPECT_NEAR(e.aee, 5.0, 1e-6);
  EXPECT_EQ(e.outlier_pct, 100.0);
  EXPECT_EQ(e.pixels, 30u);
}

TEST(FlowAee, LoopOracleAndMeanDecomposition) {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> g(0.0f, 3.0f);
  FlowField a(10, 10), b(10, 10);
  for (auto* r : {&a.u, &a.v, &b.u, &b.v})
    for (auto& v : r->storage()) v = g(rng);
  const Mask m = random_mask(rng, 10, 10, 3);
  Mask rest(10, 10);
  for (std::size_t i = 0; i < m.size(); ++i) rest[i] = m[i] ? 0 : 1;
  double sum = 0.0, outl = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const double ee = std::hypot(static_cast<double>(a.u[i]) - b.u[i], static_cast<double>(a.v[i]) - b.v[i]);
    sum += ee;
    outl += ee > kOutlierPx ? 1 : 0;
    ++n;
  }
  const auto e = flow_aee(a, b, &m);
  EXPECT_NEAR(e.aee, sum / n, 1e-9);
  EXPECT_NEAR(e.outlier_pct, 100.0 * outl / n, 1e-9);
  // The full-frame mean is the pixel-weighted mean of the two halves.
  const auto all = flow_aee(a, b);
  const auto other = flow_aee(a, b, &rest);
  EXPECT_NEAR(all.aee * all.pixels, e.aee * e.pixels + other.aee * other.pixels, 1e-9);
}

TEST(FlowAee, EmptyMaskIsUndefined) {
  const Mask none(4, 4);
  try {
    flow_aee(FlowField(4, 4), FlowField(4, 4), &none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
  }
}

TEST(Prf1, PerfectAndEmptyPrediction) {
  std::mt19937_64 rng(3);
  const auto cls = random_classes(rng, 16, 16);
  const Mask gt = random_mask(rng, 16, 16, 4);
  const auto perfect = prf1(gt, gt, cls);
  for (const auto& [id, s] : perfect.per_class) {
    if (s.support() == 0) continue;
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
    EXPECT_EQ(s.f1, 1.0);
  }
  const auto none = prf1(Mask(16, 16), gt, cls);
  EXPECT_EQ(none.overall.recall, 0.0);
  EXPECT_EQ(none.overall.f1, 0.0);
}

TEST(Prf1, ConfusionLoopOracle) {
  std::mt19937_64 rng(4);
  for (int r = 0; r < 20; ++r) {
    const auto cls = random_classes(rng, 16, 16);
    const Mask pred = random_mask(rng, 16, 16, 3);
    const Mask gt = random_mask(rng, 16, 16, 3);
    const Mask scored = random_mask(rng, 16, 16, 1 + r % 2);
    const auto s = prf1(pred, gt, cls, r % 2 ? &scored : nullptr);
    std::uint64_t tp[3] = {}, fp[3] = {}, fn[3] = {};
    std::uint64_t positives = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (r % 2 && !scored[i]) continue;
      const int c = static_cast<int>(cls.values[i]);
      tp[c] += pred[i] && gt[i];
      fp[c] += pred[i] && !gt[i];
      fn[c] += !pred[i] && gt[i];
      positives += gt[i];
    }
    for (int c = 0; c < 3; ++c) {
      const auto& got = s.per_class.at(c);
      EXPECT_EQ(got.tp, tp[c]);
      EXPECT_EQ(got.fp, fp[c]);
      EXPECT_EQ(got.fn, fn[c]);
      const auto want = scores_from_counts(tp[c], fp[c], fn[c]);
      EXPECT_EQ(got.f1, want.f1);
      for (double v : {got.precision, got.recall, got.f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
    EXPECT_EQ(s.overall.tp + s.overall.fn, positives);
  }
}

TEST(Prf1, AccumulationAddsCounts) {
  std::mt19937_64 rng(5);
  const auto cls = random_classes(rng, 8, 8);
  const Mask a = random_mask(rng, 8, 8, 2), b = random_mask(rng, 8, 8, 2);
  ClassScores total = prf1(a, b, cls);
  total += prf1(b, a, cls);
  const auto& s = total.overall;
  const auto one = prf1(a, b, cls).overall;
  EXPECT_EQ(s.tp, 2 * one.tp);
  EXPECT_EQ(s.fp, one.fp + one.fn);
  EXPECT_EQ(s.f1, scores_from_counts(s.tp, s.fp, s.fn).f1);
}

TEST(DepthBaseline, CasesAndMonotonicity) {
  FloatMap d(Semantics::DepthM, 5, 5, 2.0f);
  EXPECT_EQ(count_set(depth_baseline(d, 0.5)), 0u);
  d(3, 1) = 0.3f;
  const Mask m = depth_baseline(d, 0.5);
  EXPECT_EQ(count_set(m), 1u);
  EXPECT_EQ(m(3, 1), 1);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 3.0f);
  for (auto& v : d.values.storage()) v = u(rng);
  const Mask small = depth_baseline(d, 0.5), large = depth_baseline(d, 1.5);
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (small[i]) EXPECT_TRUE(large[i]);
  }
}

TEST(AngleError, Cases) {
  EXPECT_NEAR(angle_error(Vec3(1, 2, 3), Vec3(1, 2, 3)), 0.0, 1e-6);
  EXPECT_NEAR(angle_error(Vec3(1, 0, 0), Vec3(0, 1, 0)), 90.0, 1e-12);
  EXPECT_NEAR(angle_error(Vec3(1, 2, 3), Vec3(-2, -4, -6)), 180.0, 1e-6);
  try {
    angle_error(Vec3::Zero(), Vec3(1, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
  }
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    const double a = angle_error(Vec3(g(rng), g(rng), g(rng)), Vec3(g(rng), g(rng), g(rng)));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 180.0);
  }
}

TEST(AaeReport, ConstructedDecile) {
  std::vector<MotionSample> s(10, MotionSample{Vec3(1, 0, 0), Vec3(1, 0, 0)});
  EXPECT_EQ(aae_report(s).aae, 0.0);
  EXPECT_EQ(*aae_report(s).aae_top10, 0.0);
  s[6] = MotionSample{Vec3(0, 5, 0), Vec3(5, 0, 0)};
  const auto r = aae_report(s);
  EXPECT_NEAR(r.aae, 9.0, 1e-9);
  ASSERT_TRUE(r.aae_top10);
  EXPECT_NEAR(*r.aae_top10, 90.0, 1e-9);
  EXPECT_EQ(r.top10_samples, 1u);
}

TEST(AaeReport, TooFewSamplesHasNoTopDecile) {
  std::vector<MotionSample> s(kTop10MinSamples - 1, MotionSample{Vec3(1, 0, 0), Vec3(1, 1, 0)});
  const auto r = aae_report(s);
  EXPECT_NEAR(r.aae, 45.0, 1e-9);
  EXPECT_FALSE(r.aae_top10);
}

TEST(AaeReport, SortAndAverageOracle) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<MotionSample> s(57);
  for (auto& m : s) m = {Vec3(g(rng), g(rng), g(rng)), Vec3(g(rng), g(rng), g(rng))};
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return s[a].gt.norm() > s[b].gt.norm(); });
  double all = 0.0, top = 0.0;
  for (const auto& m : s) all += angle_error(m.pred, m.gt);
  const std::size_t k = 6;  // ceil(57 / 10)
  for (std::size_t i = 0; i < k; ++i) top += angle_error(s[order[i]].pred, s[order[i]].gt);
  const auto r = aae_report(s);
  EXPECT_NEAR(r.aae, all / s.size(), 1e-9);
  EXPECT_NEAR(*r.aae_top10, top / k, 1e-9);
}

TEST(ReportText, TabSeparatedLines) {
  Report r;
  r.add("a", 0.5);
  r.add_undefined("b");
  r.add_count("c", 12);
  EXPECT_EQ(r.to_text(), "a\t0.5\nb\tundefined\nc\t12\n");
}
