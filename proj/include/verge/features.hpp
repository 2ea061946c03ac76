#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "verge/error.hpp"
#include "verge/gaze.hpp"
#include "verge/geometry.hpp"
#include "verge/oculomotor.hpp"
#include "verge/stats.hpp"

namespace verge {

struct Window {
  double start_ms = 0.0;
  double end_ms = 0.0;
  double size_ms = 0.0;
  std::size_t begin = 0;  // sample index range [begin, end)
  std::size_t end = 0;
  double valid_ratio = 0.0;
};

// Windows start at t0 + k*step for k = 0 .. floor((span - size)/step). A
// window holds the samples with start <= t < start + size.
inline std::vector<Window> generate_windows(const Recording& rec, double size_ms, double step_ms = 0.0) {
  if (!(size_ms > 0.0)) throw InvalidArgument("window size must be positive");
  if (step_ms <= 0.0) step_ms = size_ms / 4.0;
  std::vector<Window> out;
  const double span = rec.span_ms();
  if (rec.samples.empty() || span + 1e-9 < size_ms) return out;

  constexpr double eps = 1e-6;
  const auto& s = rec.samples;
  const double t0 = s.front().t_ms;
  const auto count = static_cast<std::size_t>(std::floor((span - size_ms) / step_ms + 1e-9)) + 1;
  out.reserve(count);
  std::size_t lo = 0, hi = 0;
  for (std::size_t k = 0; k < count; ++k) {
    Window w;
    w.start_ms = t0 + static_cast<double>(k) * step_ms;
    w.end_ms = w.start_ms + size_ms;
    w.size_ms = size_ms;
    while (lo < s.size() && s[lo].t_ms < w.start_ms - eps) ++lo;
    if (hi < lo) hi = lo;
    while (hi < s.size() && s[hi].t_ms < w.end_ms - eps) ++hi;
    w.begin = lo;
    w.end = hi;
    std::size_t valid = 0;
    for (std::size_t i = lo; i < hi; ++i) valid += s[i].both_valid() ? 1 : 0;
    w.valid_ratio = hi > lo ? static_cast<double>(valid) / static_cast<double>(hi - lo) : 0.0;
    out.push_back(w);
  }
  return out;
}

inline constexpr std::size_t kVergenceFeatureCount = 17;
inline constexpr std::size_t kFixationFeatureCount = 13;
inline constexpr std::size_t kSaccadeFeatureCount = 86;
inline constexpr std::size_t kBlinkFeatureCount = 4;
inline constexpr std::size_t kFeatureCount =
    kVergenceFeatureCount + kFixationFeatureCount + kSaccadeFeatureCount + kBlinkFeatureCount;
static_assert(kFeatureCount == 120);

inline constexpr double kMinValidRatio = 0.5;

// Horizontal saccades lie within this many degrees of the +x axis.
inline constexpr double kHorizontalSaccadeDeg = 30.0;

enum class FeatureSubset { Full, Vergence, Classic };

inline const char* subset_name(FeatureSubset s) {
  switch (s) {
    case FeatureSubset::Full: return "full";
    case FeatureSubset::Vergence: return "vergence";
    case FeatureSubset::Classic: return "classic";
  }
  return "?";
}

inline FeatureSubset parse_subset(std::string_view s) {
  if (s == "full") return FeatureSubset::Full;
  if (s == "vergence" || s == "vergence_only") return FeatureSubset::Vergence;
  if (s == "classic" || s == "classic_only") return FeatureSubset::Classic;
  throw InvalidArgument("unknown feature subset: " + std::string(s));
}

namespace detail {

inline void append_desc_names(std::vector<std::string>& names, const std::string& prefix) {
  for (const char* s : {"mean", "sd", "median", "min", "max", "range", "kurtosis", "skewness"})
    names.push_back(prefix + "_" + s);
}

inline std::vector<std::string> build_manifest() {
  std::vector<std::string> n;
  for (const char* s :
       {"verg_pair_disparity_mean", "verg_pair_disparity_sd", "verg_focus_dist_mean", "verg_focus_dist_sd",
        "verg_fix_centroid_dist_mean", "verg_fix_centroid_dist_sd", "verg_fix_center_dist_mean",
        "verg_fix_center_dist_sd", "verg_fix_norm_center_dist_mean", "verg_fix_norm_center_dist_sd",
        "verg_pair_angle_mean", "verg_pair_angle_sd", "verg_fix_centroid_angle_mean", "verg_fix_center_angle_mean",
        "verg_eye_screen_dist_mean", "verg_pd_mean", "verg_pd_sd"})
    n.emplace_back(s);
  n.emplace_back("fix_left_radius_mean");
  n.emplace_back("fix_right_radius_mean");
  append_desc_names(n, "fix_duration");
  n.emplace_back("fix_total_duration");
  n.emplace_back("fix_count");
  n.emplace_back("fix_sac_duration_ratio");
  for (const char* eye : {"left", "right"})
    for (const char* q : {"duration", "length", "velocity"}) append_desc_names(n, std::string("sac_") + eye + "_" + q);
  for (const char* eye : {"left", "right"}) {
    n.push_back(std::string("sac_") + eye + "_total_duration");
    n.push_back(std::string("sac_") + eye + "_count");
  }
  for (const char* eye : {"left", "right"})
    for (const char* q : {"angle_x", "angle_prev"}) append_desc_names(n, std::string("sac_") + eye + "_" + q);
  n.emplace_back("sac_left_horizontal_prop");
  n.emplace_back("sac_right_horizontal_prop");
  n.emplace_back("blink_duration_mean");
  n.emplace_back("blink_duration_sd");
  n.emplace_back("blink_total_duration");
  n.emplace_back("blink_count");
  return n;
}

}  // namespace detail

// Canonical ordered feature names (vergence, fixation, saccade, blink).
inline const std::vector<std::string>& feature_manifest() {
  static const std::vector<std::string> names = detail::build_manifest();
  return names;
}

inline std::vector<std::size_t> subset_indices(FeatureSubset subset) {
  std::size_t lo = 0, hi = kFeatureCount;
  if (subset == FeatureSubset::Vergence) hi = kVergenceFeatureCount;
  if (subset == FeatureSubset::Classic) lo = kVergenceFeatureCount;
  std::vector<std::size_t> idx;
  for (std::size_t i = lo; i < hi; ++i) idx.push_back(i);
  return idx;
}

inline std::vector<std::string> subset_manifest(FeatureSubset subset) {
  std::vector<std::string> out;
  for (auto i : subset_indices(subset)) out.push_back(feature_manifest()[i]);
  return out;
}

struct FeatureConfig {
  IdtParams idt;
  GeometryConfig geometry;
  double period_ms = 1000.0 / 60.0;
};

using VergenceFeatures = std::array<double, kVergenceFeatureCount>;

// The 17 vergence and distance features of one window.
inline VergenceFeatures vergence_features(std::span<const GazeSample> samples, std::span<const Fixation> left_fix,
                                          std::span<const Fixation> right_fix, const FeatureConfig& cfg) {
  VergenceFeatures f{};
  const auto ps = pair_stats(samples, cfg.geometry);
  f[0] = ps.disparity_mean_px;
  f[1] = ps.disparity_sd_px;
  f[2] = ps.focus_dist_mean_mm;
  f[3] = ps.focus_dist_sd_mm;

  std::vector<double> cdist, kdist, norm, cang, kang;
  for (const auto& pair : pair_fixations(left_fix, right_fix)) {
    const auto v = fixation_vergence(pair, samples);
    cdist.push_back(v.centroid_dist_px);
    kdist.push_back(v.circle_center_dist_px);
    norm.push_back(v.normalized_center_dist);
    cang.push_back(v.centroid_angle_deg);
    kang.push_back(v.center_angle_deg);
  }
  const auto a = mean_sd(cdist);
  const auto b = mean_sd(kdist);
  const auto c = mean_sd(norm);
  f[4] = a.mean;
  f[5] = a.sd;
  f[6] = b.mean;
  f[7] = b.sd;
  f[8] = c.mean;
  f[9] = c.sd;
  f[10] = ps.angle_mean_deg;
  f[11] = ps.angle_sd_deg;
  f[12] = mean_sd(cang).mean;
  f[13] = mean_sd(kang).mean;
  const auto eg = eye_geometry(samples, cfg.geometry);
  f[14] = eg.eye_distance_mean_mm;
  f[15] = eg.pupillary_distance_mean_mm;
  f[16] = eg.pupillary_distance_sd_mm;
  for (double& x : f)
    if (!std::isfinite(x)) x = 0.0;
  return f;
}

inline VergenceFeatures vergence_features(std::span<const GazeSample> samples, const FeatureConfig& cfg) {
  const auto left = detect_fixations_idt(samples, Eye::Left, cfg.idt);
  const auto right = detect_fixations_idt(samples, Eye::Right, cfg.idt);
  return vergence_features(samples, left, right, cfg);
}

struct FeatureVector {
  Window window;
  std::array<double, kFeatureCount> values{};

  bool low_quality() const { return window.valid_ratio < kMinValidRatio; }
  std::span<const double> vergence() const { return std::span(values).first(kVergenceFeatureCount); }
};

namespace detail {

inline void put_desc(std::array<double, kFeatureCount>& v, std::size_t& at, std::span<const double> xs) {
  const auto d = desc_stats(xs);
  for (double x : {d.mean, d.sd, d.median, d.min, d.max, d.range, d.kurtosis, d.skewness}) v[at++] = x;
}

}  // namespace detail

// All 120 features over the samples of one window. Events are detected on
// the window's own samples, so every event lies inside the window.
inline std::array<double, kFeatureCount> compute_features(std::span<const GazeSample> samples,
                                                          const FeatureConfig& cfg) {
  std::array<double, kFeatureCount> v{};
  const auto ev = detect_events(samples, cfg.idt, cfg.period_ms);

  const auto verg = vergence_features(samples, ev.left_fixations, ev.right_fixations, cfg);
  std::size_t at = 0;
  for (double x : verg) v[at++] = x;

  // Fixation group.
  auto mean_radius = [&](const std::vector<Fixation>& fixes, Eye eye) {
    std::vector<double> r;
    for (const auto& f : fixes) r.push_back(min_enclosing_circle(fixation_points(f, samples, eye)).radius_px);
    return mean_sd(r).mean;
  };
  v[at++] = mean_radius(ev.left_fixations, Eye::Left);
  v[at++] = mean_radius(ev.right_fixations, Eye::Right);
  std::vector<double> fdur;
  for (const auto& f : ev.cyclopean_fixations) fdur.push_back(f.duration_ms());
  detail::put_desc(v, at, fdur);
  double fix_total = 0.0;
  for (double d : fdur) fix_total += d;
  v[at++] = fix_total;
  v[at++] = static_cast<double>(fdur.size());
  auto sac_total = [](const std::vector<Saccade>& s) {
    double t = 0.0;
    for (const auto& x : s) t += x.duration_ms();
    return t;
  };
  const double sac_mean_total = (sac_total(ev.left_saccades) + sac_total(ev.right_saccades)) / 2.0;
  v[at++] = sac_mean_total > 0.0 ? fix_total / sac_mean_total : 0.0;

  // Saccade group.
  const std::vector<Saccade>* per_eye[] = {&ev.left_saccades, &ev.right_saccades};
  for (const auto* sacs : per_eye) {
    std::vector<double> dur, len, vel;
    for (const auto& s : *sacs) {
      dur.push_back(s.duration_ms());
      len.push_back(s.length_px);
      vel.push_back(s.velocity_px_s);
    }
    detail::put_desc(v, at, dur);
    detail::put_desc(v, at, len);
    detail::put_desc(v, at, vel);
  }
  for (const auto* sacs : per_eye) {
    v[at++] = sac_total(*sacs);
    v[at++] = static_cast<double>(sacs->size());
  }
  for (const auto* sacs : per_eye) {
    std::vector<double> ax, aprev;
    for (std::size_t i = 0; i < sacs->size(); ++i) {
      ax.push_back((*sacs)[i].angle_deg);
      if (i > 0) aprev.push_back(std::abs(wrap_degrees((*sacs)[i].angle_deg - (*sacs)[i - 1].angle_deg)));
    }
    detail::put_desc(v, at, ax);
    detail::put_desc(v, at, aprev);
  }
  for (const auto* sacs : per_eye) {
    std::size_t horiz = 0;
    for (const auto& s : *sacs)
      if (std::abs(s.angle_deg) <= kHorizontalSaccadeDeg) ++horiz;
    v[at++] = sacs->empty() ? 0.0 : static_cast<double>(horiz) / static_cast<double>(sacs->size());
  }

  // Blink group.
  std::vector<double> bdur;
  for (const auto& b : ev.blinks) bdur.push_back(b.duration_ms());
  const auto bs = mean_sd(bdur);
  double btotal = 0.0;
  for (double d : bdur) btotal += d;
  v[at++] = bs.mean;
  v[at++] = bs.sd;
  v[at++] = btotal;
  v[at++] = static_cast<double>(bdur.size());

  for (double& x : v)
    if (!std::isfinite(x)) x = 0.0;
  return v;
}

inline FeatureVector extract_features(const Recording& rec, const Window& window, const FeatureConfig& cfg) {
  FeatureVector fv;
  fv.window = window;
  const auto samples = std::span(rec.samples).subspan(window.begin, window.end - window.begin);
  fv.values = compute_features(samples, cfg);
  return fv;
}

}  // namespace verge
