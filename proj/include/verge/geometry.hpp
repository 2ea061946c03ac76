#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "verge/error.hpp"
#include "verge/gaze.hpp"
#include "verge/oculomotor.hpp"
#include "verge/point.hpp"

namespace verge {

// Inputs of the planar visual-focus model.
struct GeometryConfig {
  double pixel_pitch_mm = kReferencePixelPitchMm;
  double default_eye_distance_mm = 600.0;
  double default_pupillary_distance_mm = 63.0;

  static GeometryConfig from_screen(const ScreenConfig& screen) {
    GeometryConfig g;
    g.pixel_pitch_mm = screen.pixel_pitch_mm();
    return g;
  }
};

// Mean and sample standard deviation (n - 1); zero when undefined.
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(std::span<const double> xs) {
  MeanSd r;
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return r;
}

// Displacement (mm) of the visual focus from the screen plane; positive means
// behind the screen. Uncrossed gaze (left estimate left of the right one)
// is divergence, everything else convergence. Divergent disparities at or
// beyond the pupillary distance saturate at ten times the viewing distance.
inline double focus_displacement(Point2 left, Point2 right, double eye_distance_mm, double pupillary_distance_mm,
                                 double pitch_mm) {
  if (!(eye_distance_mm > 0.0) || !(pupillary_distance_mm > 0.0) || !(pitch_mm > 0.0))
    throw InvalidArgument("focus_displacement: distances and pitch must be positive");
  const double e = pitch_mm * distance(left, right);
  if (e == 0.0) return 0.0;
  if (left.x < right.x) {
    if (e >= pupillary_distance_mm) return 10.0 * eye_distance_mm;
    return e * eye_distance_mm / (pupillary_distance_mm - e);
  }
  return -e * eye_distance_mm / (pupillary_distance_mm + e);
}

struct EyeGeometry {
  double eye_distance_mean_mm = 0.0;
  double eye_distance_sd_mm = 0.0;
  double pupillary_distance_mean_mm = 0.0;
  double pupillary_distance_sd_mm = 0.0;
};

// Per-sample viewing distance and pupillary distance, if both 3-D eye
// positions are known.
inline std::optional<std::pair<double, double>> sample_eye_geometry(const GazeSample& s) {
  if (!s.left_eye_mm || !s.right_eye_mm) return std::nullopt;
  return std::pair{(s.left_eye_mm->z + s.right_eye_mm->z) / 2.0, distance(*s.left_eye_mm, *s.right_eye_mm)};
}

inline EyeGeometry eye_geometry(std::span<const GazeSample> samples, const GeometryConfig& cfg = {}) {
  std::vector<double> d, pd;
  for (const auto& s : samples) {
    if (auto g = sample_eye_geometry(s)) {
      d.push_back(g->first);
      pd.push_back(g->second);
    }
  }
  if (d.empty()) return {cfg.default_eye_distance_mm, 0.0, cfg.default_pupillary_distance_mm, 0.0};
  const auto ds = mean_sd(d);
  const auto ps = mean_sd(pd);
  return {ds.mean, ds.sd, ps.mean, ps.sd};
}

struct VergenceSampleStats {
  double disparity_mean_px = 0.0;
  double disparity_sd_px = 0.0;
  double angle_mean_deg = 0.0;
  double angle_sd_deg = 0.0;
  double focus_dist_mean_mm = 0.0;
  double focus_dist_sd_mm = 0.0;
  std::size_t n_pairs = 0;
};

// Statistics over all samples where both eyes are valid.
inline VergenceSampleStats pair_stats(std::span<const GazeSample> samples, const GeometryConfig& cfg = {}) {
  std::vector<double> disp, angle, focus;
  for (const auto& s : samples) {
    if (!s.both_valid()) continue;
    disp.push_back(distance(s.left, s.right));
    angle.push_back(screen_angle_deg(s.left, s.right));
    double d = cfg.default_eye_distance_mm;
    double pd = cfg.default_pupillary_distance_mm;
    if (auto g = sample_eye_geometry(s)) std::tie(d, pd) = *g;
    focus.push_back(focus_displacement(s.left, s.right, d, pd, cfg.pixel_pitch_mm));
  }
  VergenceSampleStats r;
  r.n_pairs = disp.size();
  if (disp.empty()) return r;
  const auto a = mean_sd(disp);
  const auto b = mean_sd(angle);
  const auto c = mean_sd(focus);
  r.disparity_mean_px = a.mean;
  r.disparity_sd_px = a.sd;
  r.angle_mean_deg = b.mean;
  r.angle_sd_deg = b.sd;
  r.focus_dist_mean_mm = c.mean;
  r.focus_dist_sd_mm = c.sd;
  return r;
}

struct EnclosingCircle {
  Point2 center;
  double radius_px = 0.0;

  bool contains(Point2 p, double tol = 1e-9) const {
    return distance(center, p) <= radius_px * (1.0 + 1e-12) + tol;
  }
};

namespace detail {

inline EnclosingCircle circle_from(Point2 a, Point2 b) {
  const Point2 c = midpoint(a, b);
  return {c, std::max(distance(c, a), distance(c, b))};
}

inline EnclosingCircle circle_from(Point2 a, Point2 b, Point2 c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double scale = std::max({std::abs(bx), std::abs(by), std::abs(cx), std::abs(cy), 1.0});
  if (std::abs(d) <= 1e-12 * scale * scale) {
    // Collinear: the farthest pair spans the other point.
    auto best = circle_from(a, b);
    for (auto cand : {circle_from(a, c), circle_from(b, c)})
      if (cand.radius_px > best.radius_px) best = cand;
    return best;
  }
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const Point2 center{a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
  return {center, std::max({distance(center, a), distance(center, b), distance(center, c)})};
}

}  // namespace detail

// Smallest circle containing every point (Welzl, iterative form). Points are
// visited in a fixed pseudo-random order so results are reproducible.
inline EnclosingCircle min_enclosing_circle(std::span<const Point2> points) {
  if (points.empty()) throw InvalidArgument("min_enclosing_circle: no points");
  std::vector<Point2> p(points.begin(), points.end());
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (std::size_t i = p.size(); i > 1; --i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    std::swap(p[i - 1], p[(state >> 33) % i]);
  }
  EnclosingCircle c{p[0], 0.0};
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (c.contains(p[i])) continue;
    c = {p[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (c.contains(p[j])) continue;
      c = detail::circle_from(p[i], p[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (c.contains(p[k])) continue;
        c = detail::circle_from(p[i], p[j], p[k]);
      }
    }
  }
  return c;
}

struct FixationVergence {
  double centroid_dist_px = 0.0;
  double centroid_angle_deg = 0.0;
  double circle_center_dist_px = 0.0;
  double center_angle_deg = 0.0;
  double normalized_center_dist = 0.0;
  double left_radius_px = 0.0;
  double right_radius_px = 0.0;
};

inline std::vector<Point2> fixation_points(const Fixation& f, std::span<const GazeSample> samples, Eye eye) {
  std::vector<Point2> pts;
  for (std::size_t k = f.first; k <= f.last && k < samples.size(); ++k)
    if (auto p = gaze_point(samples[k], eye)) pts.push_back(*p);
  if (pts.empty()) pts.push_back(f.centroid);
  return pts;
}

inline FixationVergence fixation_vergence(const std::pair<Fixation, Fixation>& pair,
                                          std::span<const GazeSample> samples) {
  const auto& [lf, rf] = pair;
  FixationVergence v;
  v.centroid_dist_px = distance(lf.centroid, rf.centroid);
  v.centroid_angle_deg = screen_angle_deg(lf.centroid, rf.centroid);
  const auto lc = min_enclosing_circle(fixation_points(lf, samples, Eye::Left));
  const auto rc = min_enclosing_circle(fixation_points(rf, samples, Eye::Right));
  v.left_radius_px = lc.radius_px;
  v.right_radius_px = rc.radius_px;
  v.circle_center_dist_px = distance(lc.center, rc.center);
  v.center_angle_deg = screen_angle_deg(lc.center, rc.center);
  const double radii = lc.radius_px + rc.radius_px;
  v.normalized_center_dist = radii > 0.0 ? v.circle_center_dist_px / radii : 0.0;
  return v;
}

}  // namespace verge
