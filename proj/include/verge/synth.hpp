#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "verge/annotate.hpp"
#include "verge/error.hpp"
#include "verge/gaze.hpp"

namespace verge {

struct SynthClassParams {
  double disparity_mean_px = 10.0;
  double disparity_sd_px = 2.0;
  double drift_px = 0.0;  // amplitude of a slow (0.5 Hz) swing of the disparity mean
};

struct SynthEpisode {
  SegmentClass cls = SegmentClass::DeliberateOnTask;
  double start_ms = 0.0;
  double end_ms = 0.0;
};

struct SynthSpec {
  std::uint64_t seed = 1;
  std::string participant_id = "p0";
  double duration_ms = 60000.0;
  double rate_hz = 60.0;
  std::vector<SynthEpisode> episodes;  // time outside episodes is on-task
  SynthClassParams on_task{10.0, 2.0, 0.0};
  SynthClassParams internal{12.0, 12.0, 3.0};
  double dwell_ms = 600.0;       // mean fixation dwell
  double saccade_ms = 50.0;      // ramp between targets
  double fixation_jitter_px = 0.5;
  ScreenConfig screen;
  bool eye_positions = true;
  double eye_distance_mm = 600.0;
  double pupillary_distance_mm = 63.0;

  void validate() const {
    if (!(duration_ms > 0.0) || !(rate_hz > 0.0)) throw InvalidArgument("synth: duration and rate must be positive");
    double prev_end = 0.0;
    for (const auto& e : episodes) {
      if (!(e.start_ms < e.end_ms)) throw InvalidArgument("synth: episode with start >= end");
      if (e.start_ms < prev_end) throw InvalidArgument("synth: episodes overlap or are unordered");
      if (e.start_ms < 0.0 || e.end_ms > duration_ms) throw InvalidArgument("synth: episode outside the recording");
      prev_end = e.end_ms;
    }
    screen.validate();
  }
};

// Alternating on-task / internal-thought episodes with uniform lengths in
// [min_ms, max_ms], starting on-task and covering the whole duration.
inline std::vector<SynthEpisode> alternating_plan(double duration_ms, std::uint64_t seed, double min_ms = 4000.0,
                                                  double max_ms = 8000.0) {
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5ull);
  std::uniform_real_distribution<double> len(min_ms, max_ms);
  std::vector<SynthEpisode> plan;
  bool internal = false;
  for (double t = 0.0; t < duration_ms;) {
    const double end = std::min(duration_ms, t + std::round(len(rng)));
    plan.push_back({internal ? SegmentClass::InternalThought : SegmentClass::DeliberateOnTask, t, end});
    t = end;
    internal = !internal;
  }
  return plan;
}

struct SynthOutput {
  Recording recording;
  std::vector<LabeledSegment> segments;
};

// Binocular gaze on a fixed-rate grid. The cyclopean path (fixations and
// saccades between random targets) comes from one RNG stream and does not
// depend on the episode plan; only the left/right disparity does.
inline SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  SynthOutput out;
  auto& rec = out.recording;
  rec.participant_id = spec.participant_id;
  rec.task_tag = "synthetic";
  rec.screen = spec.screen;
  rec.nominal_rate_hz = spec.rate_hz;

  std::mt19937_64 path_rng(spec.seed);
  std::mt19937_64 disp_rng(spec.seed ^ 0x5DEECE66Dull);
  std::uniform_real_distribution<double> tx(200.0, spec.screen.width_px - 200.0);
  std::uniform_real_distribution<double> ty(150.0, spec.screen.height_px - 150.0);
  std::uniform_real_distribution<double> dwell(0.5 * spec.dwell_ms, 1.5 * spec.dwell_ms);
  std::normal_distribution<double> unit(0.0, 1.0);

  const double period = 1000.0 / spec.rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_ms / period));
  rec.samples.reserve(n);

  Point2 current{tx(path_rng), ty(path_rng)};
  Point2 next{tx(path_rng), ty(path_rng)};
  double fix_end = dwell(path_rng);
  std::size_t ep = 0;

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * period;
    while (t >= fix_end + spec.saccade_ms) {
      current = next;
      next = {tx(path_rng), ty(path_rng)};
      fix_end += spec.saccade_ms + dwell(path_rng);
    }
    Point2 c = current;
    if (t >= fix_end) {
      const double w = (t - fix_end) / spec.saccade_ms;
      c = {current.x + (next.x - current.x) * w, current.y + (next.y - current.y) * w};
    }
    const double jx = unit(path_rng) * spec.fixation_jitter_px;
    const double jy = unit(path_rng) * spec.fixation_jitter_px;

    while (ep < spec.episodes.size() && t >= spec.episodes[ep].end_ms) ++ep;
    const bool internal = ep < spec.episodes.size() && t >= spec.episodes[ep].start_ms &&
                          spec.episodes[ep].cls == SegmentClass::InternalThought;
    const auto& p = internal ? spec.internal : spec.on_task;
    const double drift = p.drift_px * std::sin(2.0 * std::numbers::pi * 0.5 * t / 1000.0);
    const double d = p.disparity_mean_px + drift + unit(disp_rng) * p.disparity_sd_px;

    GazeSample s;
    s.t_ms = t;
    s.left = {c.x - d / 2.0 + jx, c.y + jy};
    s.right = {c.x + d / 2.0 + jx, c.y + jy};
    s.left_valid = s.right_valid = true;
    if (spec.eye_positions) {
      const double half = spec.pupillary_distance_mm / 2.0;
      s.left_eye_mm = Point3{-half, 0.0, spec.eye_distance_mm};
      s.right_eye_mm = Point3{half, 0.0, spec.eye_distance_mm};
    }
    rec.samples.push_back(std::move(s));
  }

  for (std::size_t i = 0; i < spec.episodes.size(); ++i) {
    const auto& e = spec.episodes[i];
    out.segments.push_back({e.cls, e.start_ms, e.end_ms, "synth:" + std::to_string(i), true});
  }
  return out;
}

}  // namespace verge
