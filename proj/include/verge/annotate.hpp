#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "verge/error.hpp"
#include "verge/features.hpp"
#include "verge/geometry.hpp"

namespace verge {

enum class SegmentClass { InternalThought, DeliberateOnTask, SpontaneousOnTask };

inline const char* class_name(SegmentClass c) {
  switch (c) {
    case SegmentClass::InternalThought: return "InternalThought";
    case SegmentClass::DeliberateOnTask: return "DeliberateOnTask";
    case SegmentClass::SpontaneousOnTask: return "SpontaneousOnTask";
  }
  return "?";
}

inline SegmentClass parse_class(std::string_view s) {
  if (s == "InternalThought") return SegmentClass::InternalThought;
  if (s == "DeliberateOnTask") return SegmentClass::DeliberateOnTask;
  if (s == "SpontaneousOnTask") return SegmentClass::SpontaneousOnTask;
  throw DataError("unknown segment class: " + std::string(s));
}

// --- blur schedule -------------------------------------------------------

inline constexpr double kMinOnsetGapMs = 10000.0;
inline constexpr double kMaxOnsetGapMs = 20000.0;
inline constexpr int kBlurAperturePx = 15;

struct BlurSchedule {
  std::string session_id;
  double alpha = 1.0;
  int aperture_px = kBlurAperturePx;
  std::vector<double> onsets_ms;
  std::uint64_t rng_seed = 0;
  double video_duration_ms = 0.0;
};

// Gaussian blur sigma t_ms after a blur onset: sigma = alpha * t (seconds).
inline double blur_sigma(double alpha, double elapsed_ms) { return alpha * std::max(0.0, elapsed_ms) / 1000.0; }

// Onsets separated by uniform 10-20 s gaps, assuming each blur is dismissed
// at its onset. The runtime shifts later onsets by the actual deblur time.
inline BlurSchedule make_schedule(double video_duration_ms, double alpha, std::uint64_t seed,
                                  std::string session_id = {}) {
  if (!(video_duration_ms > kMaxOnsetGapMs)) throw InvalidArgument("make_schedule: video shorter than 20 s");
  if (!(alpha > 0.0)) throw InvalidArgument("make_schedule: alpha must be positive");
  BlurSchedule s;
  s.session_id = std::move(session_id);
  s.alpha = alpha;
  s.rng_seed = seed;
  s.video_duration_ms = video_duration_ms;
  std::mt19937_64 rng(seed);
  // 53 random bits mapped onto [0, 1].
  auto gap = [&] {
    const double u = static_cast<double>(rng() >> 11) / static_cast<double>((1ull << 53) - 1);
    return kMinOnsetGapMs + u * (kMaxOnsetGapMs - kMinOnsetGapMs);
  };
  for (double t = gap(); t < video_duration_ms; t += gap()) s.onsets_ms.push_back(t);
  return s;
}

inline nlohmann::ordered_json schedule_to_json(const BlurSchedule& s) {
  return {{"session_id", s.session_id},   {"alpha", s.alpha},       {"aperture_px", s.aperture_px},
          {"onsets_ms", s.onsets_ms},     {"rng_seed", s.rng_seed}, {"video_duration_ms", s.video_duration_ms}};
}

inline BlurSchedule schedule_from_json(const nlohmann::json& j) {
  BlurSchedule s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.alpha = j.at("alpha").get<double>();
    s.aperture_px = j.at("aperture_px").get<int>();
    s.onsets_ms = j.at("onsets_ms").get<std::vector<double>>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.video_duration_ms = j.value("video_duration_ms", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schedule: ") + e.what());
  }
  return s;
}

// --- deblur events and labels --------------------------------------------

struct DeblurEvent {
  double blur_start_ms = 0.0;
  double deblur_ms = 0.0;

  double t_deblur_ms() const { return deblur_ms - blur_start_ms; }
};

struct LabeledSegment {
  SegmentClass cls = SegmentClass::InternalThought;
  double start_ms = 0.0;
  double end_ms = 0.0;
  std::string source;  // e.g. "deblur:3" or "session"
  bool engaged = true;

  double duration_ms() const { return end_ms - start_ms; }
  friend bool operator==(const LabeledSegment&, const LabeledSegment&) = default;
};

struct LabelParams {
  double discrimination_ms = 1200.0;  // T_d
  double reaction_ms = 300.0;         // T_r
  double engaged_max_deblur_ms = 1500.0;
  double spontaneous_ms = 1500.0;
  double max_internal_ms = 10000.0;
};

// Internal thought runs from T_d after blur onset to T_r before the deblur;
// the following spontaneous on-task segment starts where it ends. Quick
// deblurs (<= 1.5 s) yield only an engaged spontaneous segment. Internal
// thought candidates longer than 10 s are dropped as outliers.
inline std::vector<LabeledSegment> derive_labels(std::span<const DeblurEvent> events, const LabelParams& p = {}) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!(events[i].t_deblur_ms() > 0.0))
      throw DataError("deblur event " + std::to_string(i) + " has non-positive T_deblur");
    if (i > 0 && events[i].blur_start_ms < events[i - 1].deblur_ms)
      throw DataError("deblur events " + std::to_string(i - 1) + " and " + std::to_string(i) + " overlap");
  }
  std::vector<LabeledSegment> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string src = "deblur:" + std::to_string(i);
    const double refocus = e.deblur_ms - p.reaction_ms;
    const double t = e.t_deblur_ms();
    if (t <= p.engaged_max_deblur_ms) {
      out.push_back({SegmentClass::SpontaneousOnTask, refocus, refocus + p.spontaneous_ms, src, true});
      continue;
    }
    if (t > p.discrimination_ms + p.reaction_ms) {
      const double start = e.blur_start_ms + p.discrimination_ms;
      if (refocus - start <= p.max_internal_ms) out.push_back({SegmentClass::InternalThought, start, refocus, src, false});
    }
    out.push_back({SegmentClass::SpontaneousOnTask, refocus, refocus + p.spontaneous_ms, src, false});
  }
  return out;
}

// A segment covering a whole recording (session-level annotation).
inline LabeledSegment session_segment(const Recording& rec, SegmentClass cls) {
  if (rec.samples.empty()) throw InvalidArgument("session_segment: empty recording");
  return {cls, rec.samples.front().t_ms, rec.samples.front().t_ms + rec.span_ms(), "session", true};
}

struct ParsedEventLog {
  std::vector<DeblurEvent> events;
  std::vector<double> alphas;  // per event, from its blur_start line
  std::size_t ignored_deblurs = 0;
};

// Pairs blur_start / deblur lines of one event log. A deblur without a
// pending blur is ignored; a trailing blur without deblur is dropped.
inline ParsedEventLog parse_event_log(std::string_view text, const std::string& source_name = "<events>") {
  ParsedEventLog out;
  std::optional<std::pair<double, double>> pending;  // (t_ms, alpha)
  std::size_t line_no = 0;
  std::size_t pos = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw DataError(where + ": invalid JSON");
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw DataError(where + ": missing kind");
    const auto kind = j["kind"].get<std::string>();
    if (kind == "session_end") continue;
    if (!j.contains("t_ms") || !j["t_ms"].is_number()) throw DataError(where + ": missing t_ms");
    const double t = j["t_ms"].get<double>();
    if (t < last_t) throw DataError(where + ": timestamps go backwards");
    last_t = t;
    if (kind == "blur_start") {
      double alpha = 1.0;
      if (j.contains("alpha") && j["alpha"].is_number()) alpha = j["alpha"].get<double>();
      pending = {t, alpha};
    } else if (kind == "deblur") {
      if (!pending) {
        ++out.ignored_deblurs;
        continue;
      }
      if (t <= pending->first) throw DataError(where + ": deblur at or before its blur onset");
      out.events.push_back({pending->first, t});
      out.alphas.push_back(pending->second);
      pending.reset();
    } else {
      throw DataError(where + ": unknown event kind " + kind);
    }
  }
  return out;
}

inline nlohmann::ordered_json segments_to_json(std::span<const LabeledSegment> segs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : segs)
    arr.push_back({{"class", class_name(s.cls)},
                   {"start_ms", s.start_ms},
                   {"end_ms", s.end_ms},
                   {"source", s.source},
                   {"engaged", s.engaged}});
  return {{"segments", arr}};
}

inline std::string serialize_segments(std::span<const LabeledSegment> segs) {
  return segments_to_json(segs).dump(2) + "\n";
}

inline std::vector<LabeledSegment> segments_from_json(const nlohmann::json& j) {
  std::vector<LabeledSegment> out;
  try {
    for (const auto& s : j.at("segments")) {
      LabeledSegment seg;
      seg.cls = parse_class(s.at("class").get<std::string>());
      seg.start_ms = s.at("start_ms").get<double>();
      seg.end_ms = s.at("end_ms").get<double>();
      seg.source = s.value("source", std::string());
      seg.engaged = s.value("engaged", true);
      if (!(seg.start_ms < seg.end_ms)) throw DataError("segment with start >= end");
      out.push_back(std::move(seg));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("segments: ") + e.what());
  }
  return out;
}

inline std::vector<LabeledSegment> load_segments(const std::string& path) {
  try {
    return segments_from_json(nlohmann::json::parse(detail::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

// --- statistics ------------------------------------------------------------

struct DeblurHistogram {
  double bin_ms = 0.0;
  std::vector<std::size_t> counts;  // bin i covers [i*bin, (i+1)*bin)
  std::size_t internal_count = 0;
  double internal_mean_ms = 0.0;
  double internal_sd_ms = 0.0;
};

inline DeblurHistogram deblur_histogram(std::span<const DeblurEvent> events, double bin_ms,
                                        const LabelParams& p = {}) {
  if (!(bin_ms > 0.0)) throw InvalidArgument("deblur_histogram: bin must be positive");
  DeblurHistogram h;
  h.bin_ms = bin_ms;
  std::vector<double> internal;
  for (const auto& e : events) {
    const double t = e.t_deblur_ms();
    const auto bin = static_cast<std::size_t>(std::floor(std::max(0.0, t) / bin_ms));
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
    const double conservative = t - p.discrimination_ms - p.reaction_ms;
    if (t > p.engaged_max_deblur_ms && conservative > 0.0 && conservative <= p.max_internal_ms)
      internal.push_back(conservative);
  }
  const auto ms = mean_sd(internal);
  h.internal_count = internal.size();
  h.internal_mean_ms = ms.mean;
  h.internal_sd_ms = ms.sd;
  return h;
}

// A window takes the class of the segment covering at least `coverage` of
// it (the largest such overlap wins); other windows stay unlabelled.
inline std::vector<std::optional<SegmentClass>> label_windows(std::span<const Window> windows,
                                                              std::span<const LabeledSegment> segments,
                                                              double coverage = 0.8) {
  std::vector<std::optional<SegmentClass>> out(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    double best = 0.0;
    for (const auto& s : segments) {
      const double ov = std::min(w.end_ms, s.end_ms) - std::max(w.start_ms, s.start_ms);
      if (ov <= 0.0) continue;
      if (ov >= coverage * w.size_ms - 1e-9 && ov > best) {
        best = ov;
        out[i] = s.cls;
      }
    }
  }
  return out;
}

}  // namespace verge
