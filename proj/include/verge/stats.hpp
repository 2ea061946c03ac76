#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace verge {

struct DescStats {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double range = 0.0;
  double kurtosis = 0.0;  // excess
  double skewness = 0.0;

  static constexpr std::size_t kCount = 8;
};

// Sample SD uses n - 1. Skewness and excess kurtosis use population central
// moments and are zero for degenerate inputs (n < 3, n < 4, or zero spread).
inline DescStats desc_stats(std::span<const double> xs) {
  DescStats r;
  const std::size_t n = xs.size();
  if (n == 0) return r;

  std::vector<double> v(xs.begin(), xs.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  r.median = *mid;
  if (n % 2 == 0) r.median = (r.median + *std::max_element(v.begin(), mid)) / 2.0;

  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  r.min = *lo;
  r.max = *hi;
  r.range = r.max - r.min;

  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(n);

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - r.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  if (n >= 2) r.sd = std::sqrt(m2 / static_cast<double>(n - 1));
  const double nn = static_cast<double>(n);
  m2 /= nn;
  m3 /= nn;
  m4 /= nn;
  if (m2 > 0.0) {
    if (n >= 3) r.skewness = m3 / std::pow(m2, 1.5);
    if (n >= 4) r.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return r;
}

}  // namespace verge
