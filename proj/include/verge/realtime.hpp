#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "verge/error.hpp"
#include "verge/features.hpp"
#include "verge/forest.hpp"
#include "verge/gaze.hpp"
#include "verge/pipeline.hpp"

namespace verge {

struct AlertEvent {
  double t_ms = 0.0;
  double window_start_ms = 0.0;
  double window_end_ms = 0.0;
  double score = 0.0;
  double alert_duration_ms = 500.0;
};

inline std::string alert_to_jsonl(const AlertEvent& a) {
  return nlohmann::ordered_json{{"kind", "alert"}, {"t_ms", a.t_ms}, {"score", a.score}}.dump() + "\n";
}

struct AlertRuleParams {
  std::size_t frames = 60;  // consecutive positive frame labels required
  double cooldown_ms = 5000.0;
  double alert_duration_ms = 500.0;
};

// Fires when the last `frames` frame labels are all positive and the
// cooldown since the previous alert has elapsed.
class AlertRule {
public:
  explicit AlertRule(AlertRuleParams p = {}) : p_(p) {}

  std::optional<AlertEvent> push(double t_ms, bool positive, double score = 1.0) {
    if (!positive) {
      run_ = 0;
      return std::nullopt;
    }
    if (run_ == 0) run_start_ms_ = t_ms;
    ++run_;
    if (run_ < p_.frames) return std::nullopt;
    if (cooldown_until_ms_ && t_ms < *cooldown_until_ms_) return std::nullopt;
    cooldown_until_ms_ = t_ms + p_.cooldown_ms;
    return AlertEvent{t_ms, run_start_ms_, t_ms, score, p_.alert_duration_ms};
  }

  std::optional<double> cooldown_until_ms() const { return cooldown_until_ms_; }

private:
  AlertRuleParams p_;
  std::size_t run_ = 0;
  double run_start_ms_ = 0.0;
  std::optional<double> cooldown_until_ms_;
};

using WindowClassifier = std::function<Prediction(const VergenceFeatures&)>;

// Wraps a forest trained on (a subset of) the vergence features.
inline WindowClassifier forest_window_classifier(const ForestModel& model) {
  std::vector<std::size_t> cols;
  const auto& all = feature_manifest();
  for (const auto& name : model.feature_manifest) {
    auto it = std::find(all.begin(), all.begin() + kVergenceFeatureCount, name);
    if (it == all.begin() + kVergenceFeatureCount)
      throw DataError("realtime engine needs a vergence-only model; found feature " + name);
    cols.push_back(static_cast<std::size_t>(it - all.begin()));
  }
  return [m = std::make_shared<const ForestModel>(model), cols](const VergenceFeatures& f) {
    std::vector<double> x(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) x[i] = f[cols[i]];
    return m->predict(x);
  };
}

struct EngineConfig {
  double rate_hz = 60.0;
  double window_ms = 1000.0;
  bool smooth = true;
  OneEuroParams filter;
  FeatureConfig features;
  AlertRuleParams alert;

  std::size_t window_frames() const { return static_cast<std::size_t>(std::llround(window_ms * rate_hz / 1000.0)); }
};

struct FrameOutcome {
  std::optional<Prediction> prediction;  // empty until the buffer holds a full window
  std::optional<AlertEvent> alert;
};

// Per-frame streaming classifier: each accepted frame is smoothed, appended
// to a one-window ring buffer and, once the buffer is full, labelled with
// the classification of the window ending at it.
class StreamEngine {
public:
  StreamEngine(WindowClassifier classifier, EngineConfig cfg = {})
      : classify_(std::move(classifier)), cfg_(cfg), smooth_(cfg.filter), rule_(cfg.alert),
        ring_(cfg.window_frames()) {
    if (ring_.empty()) throw InvalidArgument("engine window holds no frames");
  }

  FrameOutcome push(const GazeSample& raw) {
    FrameOutcome out;
    if (last_t_ms_ && !(raw.t_ms > *last_t_ms_)) {
      ++dropped_;
      return out;
    }
    last_t_ms_ = raw.t_ms;
    ring_[head_] = cfg_.smooth ? smooth_(raw) : raw;
    head_ = (head_ + 1) % ring_.size();
    if (filled_ < ring_.size()) ++filled_;
    if (filled_ < ring_.size()) {
      rule_.push(raw.t_ms, false);
      return out;
    }
    window_.clear();
    for (std::size_t i = 0; i < ring_.size(); ++i) window_.push_back(ring_[(head_ + i) % ring_.size()]);
    out.prediction = classify_(vergence_features(window_, cfg_.features));
    const bool positive = out.prediction->label == kPositiveClass;
    out.alert = rule_.push(raw.t_ms, positive, out.prediction->score);
    return out;
  }

  std::optional<AlertEvent> push_frame(const GazeSample& raw) { return push(raw).alert; }

  std::size_t dropped_frames() const { return dropped_; }
  std::size_t buffered_frames() const { return filled_; }
  const EngineConfig& config() const { return cfg_; }

private:
  WindowClassifier classify_;
  EngineConfig cfg_;
  GazeSmoother smooth_;
  AlertRule rule_;
  std::vector<GazeSample> ring_;
  std::vector<GazeSample> window_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
  std::size_t dropped_ = 0;
  std::optional<double> last_t_ms_;
};

// Frame labels computed offline: the recording is smoothed as a whole, cut
// into windows stepped by one frame and classified through the regular
// feature extractor. Frames before the first full window get no label.
inline std::vector<std::optional<Prediction>> batch_frame_labels(const Recording& resampled,
                                                                 const WindowClassifier& classifier,
                                                                 const EngineConfig& cfg = {}) {
  const Recording rec = cfg.smooth ? one_euro_filter(resampled, cfg.filter) : resampled;
  std::vector<std::optional<Prediction>> labels(rec.samples.size());
  const auto windows = generate_windows(rec, cfg.window_ms, 1000.0 / cfg.rate_hz);
  for (const auto& w : windows) {
    if (w.end == 0 || w.end - w.begin != cfg.window_frames()) continue;
    const auto fv = extract_features(rec, w, cfg.features);
    VergenceFeatures v{};
    std::copy_n(fv.values.begin(), kVergenceFeatureCount, v.begin());
    labels[w.end - 1] = classifier(v);
  }
  return labels;
}

// Emits the frames of a recording paced at `speed` times real time
// (speed <= 0: as fast as possible).
inline void replay(const Recording& rec, double speed, const std::function<void(const GazeSample&)>& sink) {
  if (rec.samples.empty()) return;
  const auto start = std::chrono::steady_clock::now();
  const double t0 = rec.samples.front().t_ms;
  for (const auto& s : rec.samples) {
    if (speed > 0.0) {
      const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double, std::milli>((s.t_ms - t0) / speed));
      std::this_thread::sleep_until(due);
    }
    sink(s);
  }
}

// Alerts from streaming a resampled recording through a fresh engine.
inline std::vector<AlertEvent> stream_alerts(const Recording& resampled, const WindowClassifier& classifier,
                                             const EngineConfig& cfg = {}, double speed = 0.0) {
  StreamEngine engine(classifier, cfg);
  std::vector<AlertEvent> out;
  replay(resampled, speed, [&](const GazeSample& s) {
    if (auto a = engine.push_frame(s)) out.push_back(*a);
  });
  return out;
}

}  // namespace verge
