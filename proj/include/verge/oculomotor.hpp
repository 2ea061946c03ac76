#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "verge/gaze.hpp"
#include "verge/point.hpp"

namespace verge {

struct IdtParams {
  double duration_ms = 80.0;
  double dispersion_px = 80.0;
};

struct Fixation {
  Eye eye = Eye::Cyclopean;
  double start_ms = 0.0;
  double end_ms = 0.0;
  Point2 centroid;
  std::size_t first = 0;  // sample index range [first, last]
  std::size_t last = 0;

  double duration_ms() const { return end_ms - start_ms; }
  double midpoint_ms() const { return (start_ms + end_ms) / 2.0; }
};

struct Saccade {
  Eye eye = Eye::Left;
  double start_ms = 0.0;
  double end_ms = 0.0;
  double length_px = 0.0;
  double velocity_px_s = 0.0;
  double angle_deg = 0.0;  // [-180, 180), y up

  double duration_ms() const { return end_ms - start_ms; }
};

struct Blink {
  double start_ms = 0.0;
  double end_ms = 0.0;

  double duration_ms() const { return end_ms - start_ms; }
};

inline constexpr double kMinBlinkMs = 75.0;
inline constexpr double kMaxBlinkMs = 400.0;

// (xmax - xmin) + (ymax - ymin)
inline double dispersion(std::span<const Point2> pts) {
  if (pts.empty()) return 0.0;
  double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  return (xmax - xmin) + (ymax - ymin);
}

// Dispersion-threshold identification. A candidate window starting at i
// first covers the minimum duration; if its dispersion is within the
// threshold it grows one sample at a time until the next sample would break
// the threshold (or is invalid). Invalid samples never belong to a fixation.
inline std::vector<Fixation> detect_fixations_idt(std::span<const GazeSample> samples, Eye eye,
                                                  IdtParams params = {}) {
  std::vector<Fixation> out;
  const std::size_t n = samples.size();
  std::vector<std::optional<Point2>> pts(n);
  for (std::size_t k = 0; k < n; ++k) pts[k] = gaze_point(samples[k], eye);

  constexpr double eps = 1e-9;
  std::size_t i = 0;
  while (i < n) {
    if (!pts[i]) {
      ++i;
      continue;
    }
    // Smallest j covering the duration threshold.
    std::size_t j = i;
    while (j < n && samples[j].t_ms - samples[i].t_ms < params.duration_ms - eps) ++j;
    if (j >= n) break;

    double xmin = pts[i]->x, xmax = xmin, ymin = pts[i]->y, ymax = ymin;
    std::optional<std::size_t> invalid_at;
    for (std::size_t k = i; k <= j; ++k) {
      if (!pts[k]) {
        invalid_at = k;
        break;
      }
      xmin = std::min(xmin, pts[k]->x);
      xmax = std::max(xmax, pts[k]->x);
      ymin = std::min(ymin, pts[k]->y);
      ymax = std::max(ymax, pts[k]->y);
    }
    if (invalid_at) {
      i = *invalid_at + 1;
      continue;
    }
    if ((xmax - xmin) + (ymax - ymin) > params.dispersion_px) {
      ++i;
      continue;
    }
    while (j + 1 < n && pts[j + 1]) {
      const auto& p = *pts[j + 1];
      const double nx0 = std::min(xmin, p.x), nx1 = std::max(xmax, p.x);
      const double ny0 = std::min(ymin, p.y), ny1 = std::max(ymax, p.y);
      if ((nx1 - nx0) + (ny1 - ny0) > params.dispersion_px) break;
      xmin = nx0;
      xmax = nx1;
      ymin = ny0;
      ymax = ny1;
      ++j;
    }
    Fixation f;
    f.eye = eye;
    f.first = i;
    f.last = j;
    f.start_ms = samples[i].t_ms;
    f.end_ms = samples[j].t_ms;
    double sx = 0.0, sy = 0.0;
    for (std::size_t k = i; k <= j; ++k) {
      sx += pts[k]->x;
      sy += pts[k]->y;
    }
    const auto cnt = static_cast<double>(j - i + 1);
    f.centroid = {sx / cnt, sy / cnt};
    out.push_back(f);
    i = j + 1;
  }
  return out;
}

struct BlinkScan {
  std::vector<Blink> blinks;
  std::vector<Blink> losses;  // both-invalid spans longer than kMaxBlinkMs
};

// Maximal spans where both eyes are invalid. A span lasts from its first
// invalid sample to the next sample (one period past the last one at the end
// of the data).
inline BlinkScan detect_blinks(std::span<const GazeSample> samples, double period_ms = 1000.0 / 60.0) {
  BlinkScan out;
  const std::size_t n = samples.size();
  std::size_t i = 0;
  while (i < n) {
    if (samples[i].left_valid || samples[i].right_valid) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !samples[j].left_valid && !samples[j].right_valid) ++j;
    Blink b;
    b.start_ms = samples[i].t_ms;
    b.end_ms = j < n ? samples[j].t_ms : samples[n - 1].t_ms + period_ms;
    const double d = b.duration_ms();
    constexpr double eps = 1e-6;
    if (d > kMaxBlinkMs + eps)
      out.losses.push_back(b);
    else if (d >= kMinBlinkMs - eps)
      out.blinks.push_back(b);
    i = j;
  }
  return out;
}

namespace detail {

inline bool overlaps_any(double a, double b, std::span<const Blink> spans) {
  return std::any_of(spans.begin(), spans.end(),
                     [&](const Blink& s) { return s.start_ms < b && a < s.end_ms; });
}

inline Saccade make_saccade(Eye eye, double t0, double t1, Point2 from, Point2 to) {
  Saccade s;
  s.eye = eye;
  s.start_ms = t0;
  s.end_ms = t1;
  s.length_px = distance(from, to);
  const double dur_s = (t1 - t0) / 1000.0;
  s.velocity_px_s = dur_s > 0.0 ? s.length_px / dur_s : 0.0;
  s.angle_deg = screen_angle_deg(from, to);
  return s;
}

}  // namespace detail

// One saccade per gap between consecutive same-eye fixations, provided the
// gap holds a valid sample of that eye and does not overlap a blink or a
// tracking loss. Gaps at the edges of the data use the first/last valid gap
// sample as the missing endpoint.
inline std::vector<Saccade> detect_saccades(std::span<const Fixation> fixations, std::span<const GazeSample> samples,
                                            Eye eye, std::span<const Blink> excluded = {}) {
  std::vector<Saccade> out;
  if (fixations.empty() || samples.empty()) return out;

  auto first_valid = [&](std::size_t lo, std::size_t hi) -> std::optional<std::size_t> {
    for (std::size_t k = lo; k < hi; ++k)
      if (gaze_point(samples[k], eye)) return k;
    return std::nullopt;
  };
  auto last_valid = [&](std::size_t lo, std::size_t hi) -> std::optional<std::size_t> {
    for (std::size_t k = hi; k-- > lo;)
      if (gaze_point(samples[k], eye)) return k;
    return std::nullopt;
  };

  // Leading edge.
  if (auto k = first_valid(0, fixations.front().first)) {
    const double t0 = samples[*k].t_ms;
    const double t1 = fixations.front().start_ms;
    if (!detail::overlaps_any(t0, t1, excluded))
      out.push_back(detail::make_saccade(eye, t0, t1, *gaze_point(samples[*k], eye), fixations.front().centroid));
  }
  for (std::size_t f = 0; f + 1 < fixations.size(); ++f) {
    const auto& a = fixations[f];
    const auto& b = fixations[f + 1];
    if (!first_valid(a.last + 1, b.first)) continue;
    if (detail::overlaps_any(a.end_ms, b.start_ms, excluded)) continue;
    out.push_back(detail::make_saccade(eye, a.end_ms, b.start_ms, a.centroid, b.centroid));
  }
  // Trailing edge.
  if (auto k = last_valid(fixations.back().last + 1, samples.size())) {
    const double t0 = fixations.back().end_ms;
    const double t1 = samples[*k].t_ms;
    if (!detail::overlaps_any(t0, t1, excluded))
      out.push_back(detail::make_saccade(eye, t0, t1, fixations.back().centroid, *gaze_point(samples[*k], eye)));
  }
  return out;
}

// Greedy matching of left/right fixations whose intervals overlap by at least
// half of the shorter one. Larger overlaps are matched first; ties go to the
// earlier left, then the earlier right fixation.
inline std::vector<std::pair<Fixation, Fixation>> pair_fixations(std::span<const Fixation> left,
                                                                 std::span<const Fixation> right) {
  struct Candidate {
    double overlap;
    std::size_t l, r;
  };
  std::vector<Candidate> cands;
  for (std::size_t a = 0; a < left.size(); ++a) {
    for (std::size_t b = 0; b < right.size(); ++b) {
      const double ov = std::min(left[a].end_ms, right[b].end_ms) - std::max(left[a].start_ms, right[b].start_ms);
      const double shorter = std::min(left[a].duration_ms(), right[b].duration_ms());
      if (ov < 0.0) continue;
      if (ov >= 0.5 * shorter) cands.push_back({ov, a, b});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    if (left[x.l].start_ms != left[y.l].start_ms) return left[x.l].start_ms < left[y.l].start_ms;
    return right[x.r].start_ms < right[y.r].start_ms;
  });
  std::vector<bool> used_l(left.size()), used_r(right.size());
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  for (const auto& c : cands) {
    if (used_l[c.l] || used_r[c.r]) continue;
    used_l[c.l] = used_r[c.r] = true;
    chosen.emplace_back(c.l, c.r);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::pair<Fixation, Fixation>> out;
  out.reserve(chosen.size());
  for (auto [a, b] : chosen) out.emplace_back(left[a], right[b]);
  return out;
}

struct OculomotorEvents {
  std::vector<Fixation> left_fixations;
  std::vector<Fixation> right_fixations;
  std::vector<Fixation> cyclopean_fixations;
  std::vector<Saccade> left_saccades;
  std::vector<Saccade> right_saccades;
  std::vector<Blink> blinks;
  std::vector<Blink> losses;
};

inline OculomotorEvents detect_events(std::span<const GazeSample> samples, IdtParams idt = {},
                                      double period_ms = 1000.0 / 60.0) {
  OculomotorEvents ev;
  ev.left_fixations = detect_fixations_idt(samples, Eye::Left, idt);
  ev.right_fixations = detect_fixations_idt(samples, Eye::Right, idt);
  ev.cyclopean_fixations = detect_fixations_idt(samples, Eye::Cyclopean, idt);
  auto scan = detect_blinks(samples, period_ms);
  ev.blinks = std::move(scan.blinks);
  ev.losses = std::move(scan.losses);
  std::vector<Blink> excluded = ev.blinks;
  excluded.insert(excluded.end(), ev.losses.begin(), ev.losses.end());
  ev.left_saccades = detect_saccades(ev.left_fixations, samples, Eye::Left, excluded);
  ev.right_saccades = detect_saccades(ev.right_fixations, samples, Eye::Right, excluded);
  return ev;
}

// Debug dump, one JSON object per event.
inline std::string events_to_jsonl(const OculomotorEvents& ev) {
  std::string out;
  auto fix = [&](const Fixation& f) {
    nlohmann::ordered_json j{{"kind", "fixation"},  {"eye", eye_name(f.eye)},     {"start_ms", f.start_ms},
                             {"end_ms", f.end_ms},   {"cx", f.centroid.x},         {"cy", f.centroid.y},
                             {"first", f.first},     {"last", f.last}};
    out += j.dump() + "\n";
  };
  for (const auto* list : {&ev.left_fixations, &ev.right_fixations, &ev.cyclopean_fixations})
    for (const auto& f : *list) fix(f);
  for (const auto* list : {&ev.left_saccades, &ev.right_saccades}) {
    for (const auto& s : *list) {
      nlohmann::ordered_json j{{"kind", "saccade"},        {"eye", eye_name(s.eye)},        {"start_ms", s.start_ms},
                               {"end_ms", s.end_ms},        {"length_px", s.length_px},      {"velocity_px_s", s.velocity_px_s},
                               {"angle_deg", s.angle_deg}};
      out += j.dump() + "\n";
    }
  }
  for (const auto& b : ev.blinks)
    out += nlohmann::ordered_json{{"kind", "blink"}, {"start_ms", b.start_ms}, {"end_ms", b.end_ms}}.dump() + "\n";
  return out;
}

}  // namespace verge
