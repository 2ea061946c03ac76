#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "verge/annotate.hpp"
#include "verge/detail/text.hpp"
#include "verge/error.hpp"
#include "verge/evaluation.hpp"
#include "verge/forest.hpp"
#include "verge/gaze.hpp"
#include "verge/pipeline.hpp"
#include "verge/synth.hpp"

namespace verge {

// A directory of per-participant recordings:
//   <pid>.jsonl | <pid>.csv      gaze samples
//   <pid>.segments.json          labelled segments
//   screen.json                  optional, shared display geometry
struct Participant {
  Recording recording;
  std::vector<LabeledSegment> segments;
  std::size_t malformed_lines = 0;
};

struct SynthDatasetSpec {
  std::uint64_t seed = 1;
  std::size_t participants = 6;
  double duration_ms = 60000.0;
  double sigma_on_px = 2.0;
  double sigma_it_px = 12.0;
  double min_episode_ms = 4000.0;
  double max_episode_ms = 8000.0;
};

inline std::string participant_name(std::size_t i) {
  std::string n = std::to_string(i + 1);
  return "p" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

inline SynthSpec synth_participant_spec(const SynthDatasetSpec& d, std::size_t i) {
  SynthSpec s;
  s.seed = detail::splitmix64(d.seed + i + 1);
  s.participant_id = participant_name(i);
  s.duration_ms = d.duration_ms;
  s.episodes = alternating_plan(d.duration_ms, s.seed, d.min_episode_ms, d.max_episode_ms);
  s.on_task.disparity_sd_px = d.sigma_on_px;
  s.internal.disparity_sd_px = d.sigma_it_px;
  return s;
}

inline std::vector<SynthOutput> synth_dataset(const SynthDatasetSpec& d) {
  if (d.participants == 0) throw InvalidArgument("synth: need at least one participant");
  std::vector<SynthOutput> out;
  for (std::size_t i = 0; i < d.participants; ++i) out.push_back(generate(synth_participant_spec(d, i)));
  return out;
}

inline void write_participant(const std::filesystem::path& dir, const Recording& rec,
                              std::span<const LabeledSegment> segments) {
  std::filesystem::create_directories(dir);
  detail::write_file((dir / (rec.participant_id + ".jsonl")).string(), serialize_jsonl(rec.samples));
  detail::write_file((dir / (rec.participant_id + ".segments.json")).string(), serialize_segments(segments));
}

inline void write_synth_dataset(const std::filesystem::path& dir, std::span<const SynthOutput> data) {
  for (const auto& p : data) write_participant(dir, p.recording, p.segments);
  if (!data.empty())
    detail::write_file((dir / "screen.json").string(), screen_to_json(data.front().recording.screen).dump(2) + "\n");
}

// One gaze file; segments come from a sibling <stem>.segments.json if present.
inline Participant load_participant(const std::filesystem::path& file, const ScreenConfig& screen) {
  auto parsed = parse_recording(file.string(), format_from_path(file.string()), screen);
  Participant p;
  p.recording = std::move(parsed.recording);
  p.recording.participant_id = file.stem().string();
  p.malformed_lines = parsed.malformed_lines.size();
  const auto seg = file.parent_path() / (p.recording.participant_id + ".segments.json");
  if (std::filesystem::exists(seg)) p.segments = load_segments(seg.string());
  return p;
}

// Loads every recording in `dir`, sorted by participant id.
inline std::vector<Participant> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
  ScreenConfig screen;
  if (std::filesystem::exists(dir / "screen.json")) screen = load_screen((dir / "screen.json").string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (!e.is_regular_file() || name == "screen.json" || name.ends_with(".segments.json")) continue;
    if (name.ends_with(".jsonl") || name.ends_with(".csv")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError(dir.string() + ": no gaze recordings");
  std::vector<Participant> out;
  for (const auto& f : files) out.push_back(load_participant(f, screen));
  return out;
}

inline double step_for(double window_ms, int step_divisor) {
  if (step_divisor <= 0) throw InvalidArgument("step divisor must be positive");
  return window_ms / step_divisor;
}

// Preprocessed feature rows of all participants for one window size.
inline std::vector<FeatureRow> dataset_rows(std::span<const Participant> data, double window_ms, int step_divisor,
                                            const PipelineConfig& cfg = {}) {
  std::vector<FeatureRow> rows;
  for (const auto& p : data) {
    auto r = extract_rows(preprocess(p.recording, cfg), window_ms, step_for(window_ms, step_divisor), cfg, p.segments);
    rows.insert(rows.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  return rows;
}

inline const std::vector<double>& default_window_sizes() {
  static const std::vector<double> w{250.0, 500.0, 750.0, 1000.0};
  return w;
}

struct RowPrediction {
  std::string participant_id;
  double window_start_ms = 0.0;
  std::string label;
  double score = 0.0;
};

// Low-quality windows are not classified.
inline std::vector<RowPrediction> predict_rows(const ForestModel& model, std::span<const FeatureRow> rows) {
  std::vector<RowPrediction> out;
  for (const auto& r : rows) {
    if (r.valid_ratio < kMinValidRatio) continue;
    const auto p = model.predict(select_features(r.values, model.feature_manifest));
    out.push_back({r.participant_id, r.window_start_ms, p.label, p.score});
  }
  return out;
}

inline std::string predictions_to_csv(std::span<const RowPrediction> preds) {
  std::string out = "participant_id,window_start_ms,label,score\n";
  for (const auto& p : preds)
    out += p.participant_id + "," + detail::format_double(p.window_start_ms) + "," + p.label + "," +
           detail::format_double(p.score) + "\n";
  return out;
}

struct EvalGrid {
  std::vector<double> window_sizes = default_window_sizes();
  std::vector<FeatureSubset> subsets{FeatureSubset::Full, FeatureSubset::Vergence, FeatureSubset::Classic};
  int step_divisor = 4;
  bool zeror_baseline = true;  // one ZeroR report per window size
  EvalConfig base;
  PipelineConfig pipeline;
};

// LOPO reports over window sizes x feature subsets.
inline std::vector<EvalReport> eval_grid(std::span<const Participant> data, const EvalGrid& grid) {
  std::vector<EvalReport> out;
  for (double w : grid.window_sizes) {
    const auto rows = dataset_rows(data, w, grid.step_divisor, grid.pipeline);
    for (auto subset : grid.subsets) {
      EvalConfig cfg = grid.base;
      cfg.window_ms = w;
      cfg.subset = subset;
      cfg.classifier = ClassifierKind::Forest;
      out.push_back(lopo_eval(rows, cfg));
    }
    if (grid.zeror_baseline) {
      EvalConfig cfg = grid.base;
      cfg.window_ms = w;
      cfg.classifier = ClassifierKind::ZeroR;
      out.push_back(lopo_eval(rows, cfg));
    }
  }
  return out;
}

}  // namespace verge
