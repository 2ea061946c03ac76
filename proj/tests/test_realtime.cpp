#include <gtest/gtest.h>

#include <chrono>
#include <numeric>

#include "support.hpp"

using namespace verge;
using namespace verge::test;

namespace {

Prediction said(bool positive) {
  return positive ? Prediction{kPositiveClass, 0, 1.0} : Prediction{"SpontaneousOnTask", 1, 1.0};
}

// Replays a fixed sequence of labels, one per classified frame.
WindowClassifier scripted(std::vector<bool> labels) {
  auto state = std::make_shared<std::pair<std::vector<bool>, std::size_t>>(std::move(labels), 0);
  return [state](const VergenceFeatures&) {
    auto& [seq, at] = *state;
    const bool v = at < seq.size() ? seq[at] : false;
    ++at;
    return said(v);
  };
}

// Label and score both come straight from the features, so batch and
// streaming results can be compared exactly.
Prediction by_disparity_sd(const VergenceFeatures& f) {
  Prediction p = said(f[1] > 5.0);
  p.score = std::accumulate(f.begin(), f.end(), 0.0);
  return p;
}

Recording synth_recording(std::uint64_t seed, double duration_ms = 20000) {
  SynthSpec s;
  s.seed = seed;
  s.duration_ms = duration_ms;
  s.episodes = alternating_plan(duration_ms, seed, 3000, 5000);
  return generate(s).recording;
}

std::vector<std::optional<AlertEvent>> run_rule(const std::vector<bool>& labels, double dt = 20.0) {
  AlertRule rule;
  std::vector<std::optional<AlertEvent>> out;
  for (std::size_t k = 0; k < labels.size(); ++k) out.push_back(rule.push(static_cast<double>(k) * dt, labels[k]));
  return out;
}

std::size_t count_alerts(const std::vector<std::optional<AlertEvent>>& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const auto& a) { return a.has_value(); }));
}

}  // namespace

TEST(AlertRule, FiftyNineIsNotEnough) {
  std::vector<bool> l(59, true);
  l.push_back(false);
  EXPECT_EQ(count_alerts(run_rule(l)), 0u);
}

TEST(AlertRule, SixtiethFrameFires) {
  const auto out = run_rule(std::vector<bool>(60, true));
  EXPECT_EQ(count_alerts(out), 1u);
  ASSERT_TRUE(out[59].has_value());
  EXPECT_EQ(out[59]->t_ms, 59 * 20.0);
  EXPECT_EQ(out[59]->window_start_ms, 0.0);
  EXPECT_EQ(out[59]->alert_duration_ms, 500.0);
}

TEST(AlertRule, OneAlertPerRunWithinCooldown) {
  EXPECT_EQ(count_alerts(run_rule(std::vector<bool>(120, true))), 1u);
}

TEST(AlertRule, FiresAgainAfterCooldown) {
  // First alert at 1180 ms; cooldown ends at 6180 ms = frame 309.
  const auto out = run_rule(std::vector<bool>(320, true));
  EXPECT_EQ(count_alerts(out), 2u);
  EXPECT_TRUE(out[309].has_value());
  EXPECT_FALSE(out[308].has_value());
}

TEST(AlertRule, NegativeResetsRun) {
  std::vector<bool> l(50, true);
  l.push_back(false);
  l.insert(l.end(), 59, true);
  EXPECT_EQ(count_alerts(run_rule(l)), 0u);
  l.push_back(true);
  EXPECT_EQ(count_alerts(run_rule(l)), 1u);
}

TEST(Engine, AlertAfterSixtyPositiveFrames) {
  // The first classification happens on frame 60, when the buffer is full.
  std::vector<bool> labels(59, true);
  labels.push_back(false);
  labels.insert(labels.end(), 60, true);
  StreamEngine engine(scripted(labels));
  const auto s = still(59 + labels.size(), {500, 500});
  std::vector<std::size_t> fired;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto o = engine.push(s[k]);
    EXPECT_EQ(o.prediction.has_value(), k >= 59);
    if (o.alert) fired.push_back(k);
  }
  ASSERT_EQ(fired.size(), 1u);
  EXPECT_EQ(fired[0], s.size() - 1);
}

TEST(Engine, DropsOutOfOrderFrames) {
  StreamEngine engine(scripted({}));
  auto s = still(3, {0, 0});
  engine.push(s[0]);
  engine.push(s[2]);
  engine.push(s[1]);
  engine.push(s[2]);
  EXPECT_EQ(engine.dropped_frames(), 2u);
  EXPECT_EQ(engine.buffered_frames(), 2u);
}

TEST(Engine, RejectsEmptyWindow) {
  EngineConfig cfg;
  cfg.window_ms = 5;
  EXPECT_THROW(StreamEngine(scripted({}), cfg), InvalidArgument);
}

TEST(Engine, StreamingMatchesBatch) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto rec = resample(synth_recording(seed, 8000), 60.0);
    EngineConfig cfg;
    cfg.features.period_ms = 1000.0 / 60.0;
    const auto batch = batch_frame_labels(rec, by_disparity_sd, cfg);
    StreamEngine engine(by_disparity_sd, cfg);
    std::size_t compared = 0;
    for (std::size_t k = 0; k < rec.samples.size(); ++k) {
      const auto o = engine.push(rec.samples[k]);
      ASSERT_EQ(o.prediction.has_value(), batch[k].has_value()) << "frame " << k;
      if (!o.prediction) continue;
      EXPECT_EQ(o.prediction->label, batch[k]->label) << "frame " << k;
      EXPECT_EQ(o.prediction->score, batch[k]->score) << "frame " << k;
      ++compared;
    }
    EXPECT_EQ(compared, rec.samples.size() - 59);
  }
}

TEST(Engine, StreamingMatchesBatchWithDropouts) {
  auto raw = synth_recording(4, 6000);
  for (std::size_t k = 100; k < 103; ++k) raw.samples[k].left_valid = false;
  for (std::size_t k = 200; k < 215; ++k) raw.samples[k].left_valid = raw.samples[k].right_valid = false;
  const auto rec = resample(raw, 60.0);
  const auto batch = batch_frame_labels(rec, by_disparity_sd);
  StreamEngine engine(by_disparity_sd);
  for (std::size_t k = 0; k < rec.samples.size(); ++k) {
    const auto o = engine.push(rec.samples[k]);
    ASSERT_EQ(o.prediction.has_value(), batch[k].has_value());
    if (o.prediction) EXPECT_EQ(o.prediction->score, batch[k]->score) << "frame " << k;
  }
}

TEST(Replay, EmptyRecordingGivesNoAlerts) {
  Recording empty;
  EXPECT_TRUE(stream_alerts(empty, scripted({})).empty());
}

TEST(Replay, PacesAtRequestedSpeed) {
  const auto rec = recording_of(still(61, {100, 100}));
  std::size_t frames = 0;
  const auto t0 = std::chrono::steady_clock::now();
  replay(rec, 4.0, [&](const GazeSample&) { ++frames; });
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(frames, 61u);
  EXPECT_GE(ms, 1000.0 / 4.0 - 1.0);
  EXPECT_LT(ms, 1000.0);
}

TEST(Replay, AlertsFromScriptedStream) {
  const auto rec = recording_of(still(200, {300, 300}));
  const auto alerts = stream_alerts(rec, scripted(std::vector<bool>(200, true)));
  ASSERT_EQ(alerts.size(), 1u);
  EXPECT_NEAR(alerts[0].t_ms, 118 * kPeriod, 1e-9);
  const auto j = nlohmann::json::parse(alert_to_jsonl(alerts[0]));
  EXPECT_EQ(j["kind"], "alert");
}

TEST(ForestClassifier, NeedsVergenceOnlyModel) {
  ForestModel m;
  m.classes = {"InternalThought", "SpontaneousOnTask"};
  m.feature_manifest = {"verg_pair_disparity_sd", "fix_count"};
  EXPECT_THROW(forest_window_classifier(m), DataError);
  m.feature_manifest = {"verg_pair_disparity_sd"};
  DecisionTree t;
  TreeNode root;
  root.feature = 0;
  root.threshold = 5.0;
  root.left = 1;
  root.right = 2;
  TreeNode lo, hi;
  lo.counts = {0, 3};
  hi.counts = {3, 0};
  t.nodes = {root, lo, hi};
  m.trees = {t};
  const auto c = forest_window_classifier(m);
  VergenceFeatures f{};
  f[1] = 9.0;
  EXPECT_EQ(c(f).label, "InternalThought");
  f[1] = 1.0;
  EXPECT_EQ(c(f).label, "SpontaneousOnTask");
}
