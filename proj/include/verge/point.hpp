#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace verge {

// Screen coordinates in pixels: origin top-left, x right, y down.
struct Point2 {
  double x = std::numeric_limits<double>::quiet_NaN();
  double y = std::numeric_limits<double>::quiet_NaN();

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

inline double distance(const Point3& a, const Point3& b) {
  return std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y) + (b.z - a.z) * (b.z - a.z));
}

inline Point2 midpoint(Point2 a, Point2 b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }

// Maps any angle in degrees into [-180, 180).
inline double wrap_degrees(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  r -= 180.0;
  return r >= 180.0 ? r - 360.0 : r;
}

// Direction of the vector from -> to in degrees, with screen y flipped so that
// +90 points up.
inline double screen_angle_deg(Point2 from, Point2 to) {
  const double dx = to.x - from.x;
  const double dy_up = -(to.y - from.y);
  if (dx == 0.0 && dy_up == 0.0) return 0.0;
  return wrap_degrees(std::atan2(dy_up, dx) * 180.0 / std::numbers::pi);
}

}  // namespace verge
