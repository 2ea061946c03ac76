#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "verge/verge.hpp"

namespace verge::test {

inline constexpr double kPeriod = 1000.0 / 60.0;

// Both eyes valid, left/right given per sample index, 60 Hz from t=0.
inline std::vector<GazeSample> binocular(std::size_t n, const std::function<Point2(std::size_t)>& left,
                                         const std::function<Point2(std::size_t)>& right) {
  std::vector<GazeSample> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k].t_ms = static_cast<double>(k) * kPeriod;
    out[k].left = left(k);
    out[k].right = right(k);
    out[k].left_valid = out[k].right_valid = true;
  }
  return out;
}

inline std::vector<GazeSample> still(std::size_t n, Point2 p) {
  return binocular(n, [p](std::size_t) { return p; }, [p](std::size_t) { return p; });
}

inline Recording recording_of(std::vector<GazeSample> samples, std::string pid = "p") {
  Recording r;
  r.participant_id = std::move(pid);
  r.samples = std::move(samples);
  return r;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

}  // namespace verge::test
