#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "verge/detail/text.hpp"
#include "verge/error.hpp"
#include "verge/one_euro.hpp"
#include "verge/point.hpp"

namespace verge {

// Physical display geometry. The pixel pitch converts on-screen disparities
// to millimetres.
struct ScreenConfig {
  int width_px = 1680;
  int height_px = 1050;
  double width_mm = 473.76;
  double height_mm = 296.1;

  double pixel_pitch_mm() const { return width_mm / width_px; }

  void validate() const {
    if (width_px <= 0 || height_px <= 0) throw InvalidArgument("screen size in pixels must be positive");
    if (!(width_mm > 0.0) || !(height_mm > 0.0)) throw InvalidArgument("screen size in mm must be positive");
  }

  friend bool operator==(const ScreenConfig&, const ScreenConfig&) = default;
};

// Pixel pitch of the 22 inch, 1680x1050 reference display.
inline constexpr double kReferencePixelPitchMm = 0.283;

inline ScreenConfig screen_from_json(const nlohmann::json& j) {
  ScreenConfig s;
  try {
    s.width_px = j.at("width_px").get<int>();
    s.height_px = j.at("height_px").get<int>();
    s.width_mm = j.at("width_mm").get<double>();
    s.height_mm = j.at("height_mm").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("screen config: ") + e.what());
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("screen config: ") + e.what());
  }
  return s;
}

inline nlohmann::ordered_json screen_to_json(const ScreenConfig& s) {
  return {{"width_px", s.width_px}, {"height_px", s.height_px}, {"width_mm", s.width_mm}, {"height_mm", s.height_mm}};
}

inline ScreenConfig load_screen(const std::string& path) {
  const auto text = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return screen_from_json(j);
}

struct GazeSample {
  double t_ms = 0.0;
  Point2 left;
  Point2 right;
  bool left_valid = false;
  bool right_valid = false;
  std::optional<Point3> left_eye_mm;
  std::optional<Point3> right_eye_mm;

  bool both_valid() const { return left_valid && right_valid; }
};

// NaN-aware comparison used for round-trip checks.
inline bool same_sample(const GazeSample& a, const GazeSample& b) {
  auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return a.t_ms == b.t_ms && same(a.left.x, b.left.x) && same(a.left.y, b.left.y) && same(a.right.x, b.right.x) &&
         same(a.right.y, b.right.y) && a.left_valid == b.left_valid && a.right_valid == b.right_valid &&
         a.left_eye_mm == b.left_eye_mm && a.right_eye_mm == b.right_eye_mm;
}

enum class Eye { Left, Right, Cyclopean };

inline const char* eye_name(Eye e) {
  switch (e) {
    case Eye::Left: return "left";
    case Eye::Right: return "right";
    case Eye::Cyclopean: return "cyclopean";
  }
  return "?";
}

// Gaze point of one eye, or the midpoint for the cyclopean eye (which needs
// both eyes valid).
inline std::optional<Point2> gaze_point(const GazeSample& s, Eye eye) {
  switch (eye) {
    case Eye::Left: return s.left_valid ? std::optional(s.left) : std::nullopt;
    case Eye::Right: return s.right_valid ? std::optional(s.right) : std::nullopt;
    case Eye::Cyclopean: return s.both_valid() ? std::optional(midpoint(s.left, s.right)) : std::nullopt;
  }
  return std::nullopt;
}

struct Recording {
  std::string participant_id;
  std::string task_tag;
  ScreenConfig screen;
  std::vector<GazeSample> samples;
  double nominal_rate_hz = 60.0;

  double period_ms() const { return 1000.0 / nominal_rate_hz; }

  // Time covered by the samples, counting the last sample's own period.
  double span_ms() const {
    if (samples.empty()) return 0.0;
    return samples.back().t_ms - samples.front().t_ms + period_ms();
  }
};

enum class GazeFormat { Jsonl, Csv };

struct ParsedRecording {
  Recording recording;
  std::vector<std::size_t> malformed_lines;  // 1-based
};

namespace detail {

inline std::optional<Point3> eye_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("eye position must be [x,y,z]");
  for (const auto& v : j)
    if (!v.is_number()) throw DataError("eye position must be numeric");
  Point3 p{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!(p.z > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y)) throw DataError("eye position z must be > 0");
  return p;
}

inline double required_number(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) throw DataError(std::string("missing numeric field ") + key);
  return it->get<double>();
}

inline bool required_bool(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_boolean()) throw DataError(std::string("missing boolean field ") + key);
  return it->get<bool>();
}

inline Point2 eye_point(const nlohmann::json& obj, const char* kx, const char* ky, bool valid) {
  if (!valid) {
    // Coordinates of an invalid eye are kept only when both are numbers.
    auto x = obj.find(kx);
    auto y = obj.find(ky);
    if (x == obj.end() || y == obj.end() || !x->is_number() || !y->is_number()) return {};
    return {x->get<double>(), y->get<double>()};
  }
  Point2 p{required_number(obj, kx), required_number(obj, ky)};
  if (valid && !p.finite()) throw DataError("valid eye with non-finite coordinates");
  return p;
}

inline GazeSample sample_from_json(const nlohmann::json& obj) {
  if (!obj.is_object()) throw DataError("line is not a JSON object");
  GazeSample s;
  s.t_ms = required_number(obj, "t_ms");
  if (!std::isfinite(s.t_ms)) throw DataError("non-finite t_ms");
  s.left_valid = required_bool(obj, "lv");
  s.right_valid = required_bool(obj, "rv");
  s.left = eye_point(obj, "lx", "ly", s.left_valid);
  s.right = eye_point(obj, "rx", "ry", s.right_valid);
  if (auto it = obj.find("le"); it != obj.end() && !it->is_null()) s.left_eye_mm = eye_from_json(*it);
  if (auto it = obj.find("re"); it != obj.end() && !it->is_null()) s.right_eye_mm = eye_from_json(*it);
  return s;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  const auto t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  return std::nullopt;
}

class CsvSampleReader {
public:
  explicit CsvSampleReader(std::string_view header) {
    const auto cols = split(header, ',');
    for (std::size_t i = 0; i < cols.size(); ++i) names_.push_back(trim(cols[i]));
    for (const char* key : {"t_ms", "lx", "ly", "rx", "ry", "lv", "rv"})
      if (index(key) < 0) throw DataError(std::string("CSV header lacks column ") + key);
  }

  GazeSample read(std::string_view line) const {
    const auto cells = split(line, ',');
    if (cells.size() != names_.size()) throw DataError("column count mismatch");
    auto cell = [&](const char* key) -> std::string {
      const int i = index(key);
      return i < 0 ? std::string() : trim(cells[static_cast<std::size_t>(i)]);
    };
    auto number = [&](const char* key) -> std::optional<double> {
      const auto c = cell(key);
      if (c.empty()) return std::nullopt;
      auto v = parse_double(c);
      if (!v) throw DataError(std::string("bad number in column ") + key);
      return v;
    };
    GazeSample s;
    auto t = number("t_ms");
    if (!t || !std::isfinite(*t)) throw DataError("missing t_ms");
    s.t_ms = *t;
    auto lv = parse_bool(cell("lv"));
    auto rv = parse_bool(cell("rv"));
    if (!lv || !rv) throw DataError("bad validity flag");
    s.left_valid = *lv;
    s.right_valid = *rv;
    auto point = [&](const char* kx, const char* ky, bool valid) -> Point2 {
      auto x = number(kx);
      auto y = number(ky);
      if (!x || !y) {
        if (valid) throw DataError("valid eye missing coordinates");
        return {};
      }
      Point2 p{*x, *y};
      if (valid && !p.finite()) throw DataError("valid eye with non-finite coordinates");
      return p;
    };
    s.left = point("lx", "ly", s.left_valid);
    s.right = point("rx", "ry", s.right_valid);
    auto eye = [&](const char* kx, const char* ky, const char* kz) -> std::optional<Point3> {
      auto x = number(kx);
      auto y = number(ky);
      auto z = number(kz);
      if (!x && !y && !z) return std::nullopt;
      if (!x || !y || !z || !(*z > 0.0)) throw DataError("incomplete eye position");
      return Point3{*x, *y, *z};
    };
    s.left_eye_mm = eye("le_x", "le_y", "le_z");
    s.right_eye_mm = eye("re_x", "re_y", "re_z");
    return s;
  }

private:
  int index(std::string_view key) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == key) return static_cast<int>(i);
    return -1;
  }
  std::vector<std::string> names_;
};

}  // namespace detail

// Parses gaze samples from text. Malformed lines are skipped and reported;
// more than 10% malformed lines is a hard error.
inline ParsedRecording parse_recording_text(std::string_view text, GazeFormat format, const ScreenConfig& screen,
                                            const std::string& source_name = "<input>") {
  screen.validate();
  ParsedRecording out;
  out.recording.screen = screen;
  std::size_t data_lines = 0;
  std::optional<detail::CsvSampleReader> csv;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (detail::trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (format == GazeFormat::Csv && !csv) {
      csv.emplace(line);
      if (end == text.size()) break;
      continue;
    }
    ++data_lines;
    try {
      GazeSample s;
      if (format == GazeFormat::Jsonl) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
          throw DataError("invalid JSON");
        }
        s = detail::sample_from_json(j);
      } else {
        s = csv->read(line);
      }
      auto& samples = out.recording.samples;
      if (!samples.empty() && !(s.t_ms > samples.back().t_ms)) throw DataError("non-increasing timestamp");
      samples.push_back(std::move(s));
    } catch (const DataError&) {
      out.malformed_lines.push_back(line_no);
    }
    if (end == text.size()) break;
  }

  if (data_lines == 0) throw DataError(source_name + ": no samples");
  if (out.malformed_lines.size() * 10 > data_lines) {
    std::string msg = source_name + ": too many malformed lines (" + std::to_string(out.malformed_lines.size()) +
                      " of " + std::to_string(data_lines) + "): ";
    for (std::size_t i = 0; i < out.malformed_lines.size() && i < 20; ++i) {
      if (i) msg += ",";
      msg += std::to_string(out.malformed_lines[i]);
    }
    if (out.malformed_lines.size() > 20) msg += ",...";
    throw DataError(msg);
  }
  if (out.recording.samples.empty()) throw DataError(source_name + ": no samples");
  return out;
}

inline GazeFormat format_from_path(std::string_view path) {
  return path.ends_with(".csv") ? GazeFormat::Csv : GazeFormat::Jsonl;
}

inline ParsedRecording parse_recording(const std::string& path, GazeFormat format, const ScreenConfig& screen) {
  return parse_recording_text(detail::read_file(path), format, screen, path);
}

inline nlohmann::ordered_json sample_to_json(const GazeSample& s) {
  nlohmann::ordered_json j;
  j["t_ms"] = s.t_ms;
  if (s.left.finite()) {
    j["lx"] = s.left.x;
    j["ly"] = s.left.y;
  }
  if (s.right.finite()) {
    j["rx"] = s.right.x;
    j["ry"] = s.right.y;
  }
  j["lv"] = s.left_valid;
  j["rv"] = s.right_valid;
  if (s.left_eye_mm) j["le"] = {s.left_eye_mm->x, s.left_eye_mm->y, s.left_eye_mm->z};
  if (s.right_eye_mm) j["re"] = {s.right_eye_mm->x, s.right_eye_mm->y, s.right_eye_mm->z};
  return j;
}

inline std::string serialize_jsonl(std::span<const GazeSample> samples) {
  std::string out;
  for (const auto& s : samples) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

inline std::string serialize_csv(std::span<const GazeSample> samples) {
  using detail::format_double;
  std::string out = "t_ms,lx,ly,rx,ry,lv,rv,le_x,le_y,le_z,re_x,re_y,re_z\n";
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& s : samples) {
    out += format_double(s.t_ms) + "," + num(s.left.x) + "," + num(s.left.y) + "," + num(s.right.x) + "," +
           num(s.right.y) + "," + (s.left_valid ? "true" : "false") + "," + (s.right_valid ? "true" : "false");
    for (const auto& eye : {s.left_eye_mm, s.right_eye_mm}) {
      if (eye)
        out += "," + format_double(eye->x) + "," + format_double(eye->y) + "," + format_double(eye->z);
      else
        out += ",,,";
    }
    out += '\n';
  }
  return out;
}

// Longest source gap (ms) that resampling interpolates across.
inline constexpr double kMaxBridgedGapMs = 100.0;

// Resamples onto the grid t0 + k*1000/rate. Each eye is interpolated between
// its nearest valid source samples on either side; a grid point stays invalid
// when those are further than kMaxBridgedGapMs apart.
inline Recording resample(const Recording& rec, double rate_hz) {
  if (!(rate_hz > 0.0)) throw InvalidArgument("resample: rate must be positive");
  const auto& src = rec.samples;
  if (src.size() < 2) throw InvalidArgument("resample: need at least 2 samples");

  const std::size_t n = src.size();
  const auto none = static_cast<std::ptrdiff_t>(-1);
  // prev_valid[i]: last valid index <= i; next_valid[i]: first valid index >= i.
  auto scan = [&](auto valid_of) {
    std::vector<std::ptrdiff_t> prev(n, none), next(n, none);
    std::ptrdiff_t last = none;
    for (std::size_t i = 0; i < n; ++i) {
      if (valid_of(src[i])) last = static_cast<std::ptrdiff_t>(i);
      prev[i] = last;
    }
    last = none;
    for (std::size_t i = n; i-- > 0;) {
      if (valid_of(src[i])) last = static_cast<std::ptrdiff_t>(i);
      next[i] = last;
    }
    return std::pair{prev, next};
  };
  const auto [lprev, lnext] = scan([](const GazeSample& s) { return s.left_valid; });
  const auto [rprev, rnext] = scan([](const GazeSample& s) { return s.right_valid; });

  Recording out;
  out.participant_id = rec.participant_id;
  out.task_tag = rec.task_tag;
  out.screen = rec.screen;
  out.nominal_rate_hz = rate_hz;

  const double t0 = src.front().t_ms;
  const double t_end = src.back().t_ms;
  const double period = 1000.0 / rate_hz;
  const auto count = static_cast<std::size_t>(std::floor((t_end - t0) / period + 1e-9)) + 1;
  out.samples.reserve(count);

  auto lerp = [](Point2 a, Point2 b, double w) { return Point2{a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w}; };

  std::size_t i = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = std::min(t0 + static_cast<double>(k) * period, t_end);
    while (i + 1 < n && src[i + 1].t_ms <= t) ++i;
    const bool on_knot = src[i].t_ms == t;

    GazeSample g;
    g.t_ms = t;
    auto fill = [&](bool GazeSample::*valid, Point2 GazeSample::*pt, const std::vector<std::ptrdiff_t>& prev,
                    const std::vector<std::ptrdiff_t>& next) {
      if (on_knot && src[i].*valid) {
        g.*pt = src[i].*pt;
        g.*valid = true;
        return;
      }
      const std::ptrdiff_t p = prev[i];
      const std::ptrdiff_t q = (i + 1 < n) ? next[i + 1] : none;
      if (p == none || q == none) return;
      const auto& a = src[static_cast<std::size_t>(p)];
      const auto& b = src[static_cast<std::size_t>(q)];
      if (b.t_ms - a.t_ms > kMaxBridgedGapMs) return;
      g.*pt = lerp(a.*pt, b.*pt, (t - a.t_ms) / (b.t_ms - a.t_ms));
      g.*valid = true;
    };
    fill(&GazeSample::left_valid, &GazeSample::left, lprev, lnext);
    fill(&GazeSample::right_valid, &GazeSample::right, rprev, rnext);

    auto eye_pos = [&](std::optional<Point3> GazeSample::*field) -> std::optional<Point3> {
      if (on_knot || i + 1 >= n) return src[i].*field;
      const auto& a = src[i].*field;
      const auto& b = src[i + 1].*field;
      if (!a || !b) return std::nullopt;
      const double w = (t - src[i].t_ms) / (src[i + 1].t_ms - src[i].t_ms);
      return Point3{a->x + (b->x - a->x) * w, a->y + (b->y - a->y) * w, a->z + (b->z - a->z) * w};
    };
    g.left_eye_mm = eye_pos(&GazeSample::left_eye_mm);
    g.right_eye_mm = eye_pos(&GazeSample::right_eye_mm);
    out.samples.push_back(std::move(g));
  }
  return out;
}

// Causal per-channel 1 euro smoothing of both eyes. Invalid samples pass
// through and restart the affected eye's filters.
class GazeSmoother {
public:
  explicit GazeSmoother(OneEuroParams params = {}) : lx_(params), ly_(params), rx_(params), ry_(params) {}

  GazeSample operator()(GazeSample s) {
    if (s.left_valid) {
      s.left = {lx_.filter(s.left.x, s.t_ms), ly_.filter(s.left.y, s.t_ms)};
    } else {
      lx_.reset();
      ly_.reset();
    }
    if (s.right_valid) {
      s.right = {rx_.filter(s.right.x, s.t_ms), ry_.filter(s.right.y, s.t_ms)};
    } else {
      rx_.reset();
      ry_.reset();
    }
    return s;
  }

private:
  OneEuroFilter lx_, ly_, rx_, ry_;
};

inline Recording one_euro_filter(const Recording& rec, OneEuroParams params = {}) {
  Recording out = rec;
  GazeSmoother smooth(params);
  for (auto& s : out.samples) s = smooth(s);
  return out;
}

}  // namespace verge
