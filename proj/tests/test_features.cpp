#include <gtest/gtest.h>

#include <random>
#include <cstring>
#include <set>

#include "idt_oracle.hpp"
#include "support.hpp"

using namespace verge;
using namespace verge::test;

namespace {

std::size_t fidx(const std::string& name) {
  const auto& m = feature_manifest();
  const auto it = std::find(m.begin(), m.end(), name);
  if (it == m.end()) throw std::runtime_error("no feature " + name);
  return static_cast<std::size_t>(it - m.begin());
}

}  // namespace

TEST(Windows, TwoSecondsGiveFive) {
  const auto rec = recording_of(still(120, {0, 0}));
  EXPECT_NEAR(rec.span_ms(), 2000.0, 1e-9);
  const auto w = generate_windows(rec, 1000, 250);
  ASSERT_EQ(w.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(w[k].start_ms, 250.0 * static_cast<double>(k), 1e-9);
    EXPECT_NEAR(w[k].end_ms - w[k].start_ms, 1000.0, 1e-9);
    EXPECT_EQ(w[k].end - w[k].begin, 60u);
    EXPECT_EQ(w[k].valid_ratio, 1.0);
  }
  EXPECT_EQ(generate_windows(rec, 1000).size(), 5u);  // default step is a quarter window
}

TEST(Windows, ExactAndShortSpans) {
  EXPECT_EQ(generate_windows(recording_of(still(60, {0, 0})), 1000).size(), 1u);
  EXPECT_TRUE(generate_windows(recording_of(still(54, {0, 0})), 1000).empty());
  EXPECT_THROW(generate_windows(recording_of(still(54, {0, 0})), 0), InvalidArgument);
}

TEST(Windows, ValidRatioCountsBothEyes) {
  auto s = still(60, {0, 0});
  for (std::size_t k = 0; k < 15; ++k) s[k].left_valid = false;
  for (std::size_t k = 15; k < 30; ++k) s[k].right_valid = false;
  const auto w = generate_windows(recording_of(s), 1000);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0].valid_ratio, 0.5);
}

TEST(Manifest, CountsAndGroups) {
  const auto& m = feature_manifest();
  EXPECT_EQ(m.size(), 120u);
  EXPECT_EQ(std::set<std::string>(m.begin(), m.end()).size(), 120u);
  std::size_t verg = 0, fix = 0, sac = 0, blink = 0;
  for (const auto& n : m) {
    verg += n.rfind("verg_", 0) == 0;
    fix += n.rfind("fix_", 0) == 0;
    sac += n.rfind("sac_", 0) == 0;
    blink += n.rfind("blink_", 0) == 0;
  }
  EXPECT_EQ(verg, 17u);
  EXPECT_EQ(fix, 13u);
  EXPECT_EQ(sac, 86u);
  EXPECT_EQ(blink, 4u);
  EXPECT_EQ(subset_indices(FeatureSubset::Vergence).size(), 17u);
  EXPECT_EQ(subset_indices(FeatureSubset::Classic).size(), 103u);
  EXPECT_EQ(subset_manifest(FeatureSubset::Classic).front(), "fix_left_radius_mean");
  EXPECT_EQ(parse_subset("vergence"), FeatureSubset::Vergence);
  EXPECT_THROW(parse_subset("nope"), InvalidArgument);
}

TEST(Features, StillGazeIsOneLongFixation) {
  const auto rec = recording_of(still(60, {400, 300}));
  const auto w = generate_windows(rec, 1000);
  const auto fv = extract_features(rec, w[0], FeatureConfig{});
  EXPECT_EQ(fv.values.size(), 120u);
  EXPECT_EQ(fv.values[fidx("fix_count")], 1.0);
  EXPECT_NEAR(fv.values[fidx("fix_total_duration")], 59 * kPeriod, 1e-9);
  EXPECT_NEAR(fv.values[fidx("fix_duration_mean")], 59 * kPeriod, 1e-9);
  EXPECT_EQ(fv.values[fidx("fix_sac_duration_ratio")], 0.0);
  for (std::size_t i = fidx("sac_left_duration_mean"); i < 120; ++i) EXPECT_EQ(fv.values[i], 0.0) << feature_manifest()[i];
  EXPECT_EQ(fv.values[fidx("verg_pair_disparity_mean")], 0.0);
  EXPECT_EQ(fv.values[fidx("verg_eye_screen_dist_mean")], 600.0);
  EXPECT_EQ(fv.values[fidx("verg_pd_mean")], 63.0);
}

TEST(Features, HorizontalProportionAndTurnAngles) {
  const Point2 stops[] = {{100, 500}, {300, 500}, {300, 300}, {500, 300}};
  auto pos = [&](std::size_t k) -> Point2 {
    const std::size_t seg = k / 12, off = k % 12;
    if (seg >= 3 || off < 10) return stops[std::min<std::size_t>(seg, 3)];
    return midpoint(stops[seg], stops[seg + 1]);
  };
  const auto s = binocular(46, pos, pos);
  const auto v = compute_features(s, FeatureConfig{});
  EXPECT_EQ(v[fidx("sac_left_count")], 3.0);
  EXPECT_NEAR(v[fidx("sac_left_horizontal_prop")], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(v[fidx("sac_left_angle_x_max")], 90.0, 1e-9);
  EXPECT_NEAR(v[fidx("sac_left_angle_prev_mean")], 90.0, 1e-9);
  EXPECT_EQ(v[fidx("sac_left_angle_prev_sd")], 0.0);
  EXPECT_EQ(v[fidx("fix_count")], 4.0);
  const double fix_total = v[fidx("fix_total_duration")];
  const double sac_total = (v[fidx("sac_left_total_duration")] + v[fidx("sac_right_total_duration")]) / 2;
  EXPECT_NEAR(v[fidx("fix_sac_duration_ratio")], fix_total / sac_total, 1e-12);
}

TEST(Features, BlinkGroup) {
  auto s = still(60, {200, 200});
  for (std::size_t k = 20; k < 32; ++k) s[k].left_valid = s[k].right_valid = false;
  const auto v = compute_features(s, FeatureConfig{});
  EXPECT_EQ(v[fidx("blink_count")], 1.0);
  EXPECT_NEAR(v[fidx("blink_total_duration")], 200.0, 1e-9);
  EXPECT_NEAR(v[fidx("blink_duration_mean")], 200.0, 1e-9);
}

TEST(Features, FiniteDeterministicAndConsistentBlocks) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto rec = recording_of(random_trace(rng, 240));
    rec.samples = resample(rec, 60).samples;
    for (const auto& w : generate_windows(rec, 1000)) {
      const auto a = extract_features(rec, w, FeatureConfig{});
      const auto b = extract_features(rec, w, FeatureConfig{});
      ASSERT_EQ(std::memcmp(a.values.data(), b.values.data(), sizeof(double) * 120), 0);
      const auto& m = feature_manifest();
      for (std::size_t i = 0; i < 120; ++i) {
        ASSERT_TRUE(std::isfinite(a.values[i])) << m[i];
        if (m[i].ends_with("_median")) {
          const double med = a.values[i], lo = a.values[i + 1], hi = a.values[i + 2], range = a.values[i + 3];
          EXPECT_LE(lo, med);
          EXPECT_LE(med, hi);
          EXPECT_NEAR(range, hi - lo, 1e-9);
        }
      }
      EXPECT_EQ(a.low_quality(), w.valid_ratio < 0.5);
      EXPECT_EQ(a.vergence().size(), 17u);
    }
  }
}

TEST(Features, VergenceOnlyPathMatchesFullVector) {
  std::mt19937_64 rng(8);
  auto rec = recording_of(random_trace(rng, 180));
  const auto w = generate_windows(rec, 1000);
  const auto full = extract_features(rec, w[1], FeatureConfig{});
  const auto v = vergence_features(std::span(rec.samples).subspan(w[1].begin, w[1].end - w[1].begin), FeatureConfig{});
  for (std::size_t i = 0; i < 17; ++i) EXPECT_EQ(v[i], full.values[i]);
}
