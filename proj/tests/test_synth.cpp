#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>

#include "support.hpp"

using namespace verge;

namespace {

SynthSpec on_task_only(double duration_ms, std::uint64_t seed) {
  SynthSpec s;
  s.seed = seed;
  s.duration_ms = duration_ms;
  return s;
}

// Probability that a random positive outranks a random negative.
double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos)
    for (double n : neg) wins += p > n ? 1.0 : p == n ? 0.5 : 0.0;
  return wins / static_cast<double>(pos.size() * neg.size());
}

}  // namespace

TEST(Synth, OnTaskDisparityMean) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto out = generate(on_task_only(10000, seed));
    const auto ps = pair_stats(out.recording.samples);
    EXPECT_NEAR(ps.disparity_mean_px, 10.0, 0.5) << seed;
    EXPECT_NEAR(ps.disparity_sd_px, 2.0, 0.3) << seed;
  }
}

TEST(Synth, SameSeedSameRecording) {
  auto spec = on_task_only(5000, 9);
  spec.episodes = alternating_plan(5000, 9, 1000, 2000);
  const auto a = generate(spec);
  const auto b = generate(spec);
  EXPECT_EQ(serialize_jsonl(a.recording.samples), serialize_jsonl(b.recording.samples));
  EXPECT_EQ(a.segments, b.segments);
  spec.seed = 10;
  EXPECT_NE(serialize_jsonl(generate(spec).recording.samples), serialize_jsonl(a.recording.samples));
}

TEST(Synth, GridAndValidity) {
  const auto out = generate(on_task_only(2000, 4));
  const auto& s = out.recording.samples;
  ASSERT_EQ(s.size(), 120u);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_DOUBLE_EQ(s[k].t_ms, static_cast<double>(k) * 1000.0 / 60.0);
    EXPECT_TRUE(s[k].left_valid && s[k].right_valid);
    ASSERT_TRUE(s[k].left_eye_mm && s[k].right_eye_mm);
    EXPECT_DOUBLE_EQ(s[k].right_eye_mm->x - s[k].left_eye_mm->x, 63.0);
    EXPECT_LT(s[k].left.x, s[k].right.x + 20.0);
  }
  EXPECT_DOUBLE_EQ(out.recording.span_ms(), 2000.0);
}

TEST(Synth, EpisodesBecomeSegments) {
  auto spec = on_task_only(30000, 5);
  spec.episodes = alternating_plan(30000, 5);
  const auto out = generate(spec);
  ASSERT_EQ(out.segments.size(), spec.episodes.size());
  for (std::size_t i = 0; i < spec.episodes.size(); ++i) {
    EXPECT_EQ(out.segments[i].cls, spec.episodes[i].cls);
    EXPECT_EQ(out.segments[i].start_ms, spec.episodes[i].start_ms);
    EXPECT_EQ(out.segments[i].end_ms, spec.episodes[i].end_ms);
  }
  EXPECT_EQ(spec.episodes.front().start_ms, 0.0);
  EXPECT_EQ(spec.episodes.back().end_ms, 30000.0);
  for (std::size_t i = 1; i < spec.episodes.size(); ++i) {
    EXPECT_EQ(spec.episodes[i].start_ms, spec.episodes[i - 1].end_ms);
    EXPECT_NE(spec.episodes[i].cls, spec.episodes[i - 1].cls);
  }
}

TEST(Synth, PathIndependentOfPlan) {
  auto a = on_task_only(3000, 6);
  auto b = a;
  b.episodes = {{SegmentClass::InternalThought, 1000, 2000}};
  const auto ra = generate(a).recording.samples;
  const auto rb = generate(b).recording.samples;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    const auto ca = gaze_point(ra[k], Eye::Cyclopean);
    const auto cb = gaze_point(rb[k], Eye::Cyclopean);
    ASSERT_TRUE(ca && cb);
    if (ra[k].t_ms < 1000) EXPECT_EQ(ra[k].left, rb[k].left);
    EXPECT_NEAR(ca->x, cb->x, 1e-9);
    EXPECT_NEAR(ca->y, cb->y, 1e-9);
  }
}

TEST(Synth, DisparitySdSeparatesClasses) {
  auto spec = on_task_only(120000, 11);
  spec.episodes = alternating_plan(spec.duration_ms, spec.seed);
  const auto out = generate(spec);
  const PipelineConfig cfg;
  const auto rows = extract_rows(preprocess(out.recording, cfg), 1000, 250, cfg, out.segments);
  const auto& names = feature_manifest();
  const auto col = static_cast<std::size_t>(std::find(names.begin(), names.end(), "verg_pair_disparity_sd") - names.begin());
  std::vector<double> pos, neg;
  for (const auto& r : rows) {
    if (r.label == "InternalThought") pos.push_back(r.values[col]);
    else if (!r.label.empty()) neg.push_back(r.values[col]);
  }
  ASSERT_GT(pos.size(), 50u);
  ASSERT_GT(neg.size(), 50u);
  EXPECT_GT(auc(pos, neg), 0.95);
}

TEST(Synth, InvalidPlansRejected) {
  auto s = on_task_only(10000, 1);
  s.episodes = {{SegmentClass::InternalThought, 500, 400}};
  EXPECT_THROW(generate(s), InvalidArgument);
  s.episodes = {{SegmentClass::InternalThought, 0, 3000}, {SegmentClass::InternalThought, 2000, 4000}};
  EXPECT_THROW(generate(s), InvalidArgument);
  s.episodes = {{SegmentClass::InternalThought, 9000, 11000}};
  EXPECT_THROW(generate(s), InvalidArgument);
  s.episodes.clear();
  s.duration_ms = 0;
  EXPECT_THROW(generate(s), InvalidArgument);
}

TEST(SynthDataset, NamesAndSeeds) {
  EXPECT_EQ(participant_name(0), "p01");
  EXPECT_EQ(participant_name(11), "p12");
  SynthDatasetSpec d;
  d.participants = 3;
  d.duration_ms = 20000;
  const auto data = synth_dataset(d);
  ASSERT_EQ(data.size(), 3u);
  EXPECT_EQ(data[2].recording.participant_id, "p03");
  EXPECT_NE(serialize_jsonl(data[0].recording.samples), serialize_jsonl(data[1].recording.samples));
  d.participants = 0;
  EXPECT_THROW(synth_dataset(d), InvalidArgument);
}

TEST(SynthDataset, WriteAndLoadBack) {
  SynthDatasetSpec d;
  d.participants = 2;
  d.duration_ms = 12000;
  const auto data = synth_dataset(d);
  const auto dir = std::filesystem::temp_directory_path() / ("verge_synth_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  write_synth_dataset(dir, data);
  EXPECT_TRUE(std::filesystem::exists(dir / "screen.json"));
  const auto loaded = load_dataset(dir);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[0].recording.participant_id, "p01");
  EXPECT_EQ(loaded[0].segments, data[0].segments);
  EXPECT_EQ(loaded[1].recording.samples.size(), data[1].recording.samples.size());
  EXPECT_EQ(serialize_jsonl(loaded[1].recording.samples), serialize_jsonl(data[1].recording.samples));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_dataset(dir), DataError);
}
