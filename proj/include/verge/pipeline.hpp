#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "verge/annotate.hpp"
#include "verge/detail/text.hpp"
#include "verge/features.hpp"
#include "verge/forest.hpp"
#include "verge/gaze.hpp"

namespace verge {

struct PipelineConfig {
  double rate_hz = 60.0;
  OneEuroParams filter;
  IdtParams idt;
  double label_coverage = 0.8;

  FeatureConfig features_for(const ScreenConfig& screen) const {
    FeatureConfig f;
    f.idt = idt;
    f.geometry = GeometryConfig::from_screen(screen);
    f.period_ms = 1000.0 / rate_hz;
    return f;
  }
};

// Resample to the fixed rate, then smooth.
inline Recording preprocess(const Recording& rec, const PipelineConfig& cfg = {}) {
  return one_euro_filter(resample(rec, cfg.rate_hz), cfg.filter);
}

struct FeatureRow {
  std::string participant_id;
  double window_start_ms = 0.0;
  double window_size_ms = 0.0;
  std::string label;  // empty when unlabelled
  double valid_ratio = 0.0;
  std::array<double, kFeatureCount> values{};
  bool auxiliary = false;  // training-only rows, never held out
};

// Feature rows of every window of a preprocessed recording. Labels come from
// `segments` when given.
inline std::vector<FeatureRow> extract_rows(const Recording& rec, double window_ms, double step_ms,
                                            const PipelineConfig& cfg,
                                            std::span<const LabeledSegment> segments = {}) {
  const auto windows = generate_windows(rec, window_ms, step_ms);
  const auto labels = label_windows(windows, segments, cfg.label_coverage);
  const auto fcfg = cfg.features_for(rec.screen);
  std::vector<FeatureRow> rows;
  rows.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    FeatureRow r;
    r.participant_id = rec.participant_id;
    r.window_start_ms = windows[i].start_ms;
    r.window_size_ms = windows[i].size_ms;
    r.valid_ratio = windows[i].valid_ratio;
    if (labels[i]) r.label = class_name(*labels[i]);
    r.values = extract_features(rec, windows[i], fcfg).values;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string feature_csv_header() {
  std::string h;
  for (const auto& n : feature_manifest()) h += n + ",";
  h += "participant_id,window_start_ms,window_size_ms,label,valid_ratio\n";
  return h;
}

inline std::string feature_csv_row(const FeatureRow& r) {
  using detail::format_double;
  std::string line;
  for (double v : r.values) line += format_double(v) + ",";
  line += r.participant_id + "," + format_double(r.window_start_ms) + "," + format_double(r.window_size_ms) + "," +
          r.label + "," + format_double(r.valid_ratio) + "\n";
  return line;
}

inline std::string serialize_feature_csv(std::span<const FeatureRow> rows) {
  std::string out = feature_csv_header();
  for (const auto& r : rows) out += feature_csv_row(r);
  return out;
}

inline std::vector<FeatureRow> parse_feature_csv(std::string_view text, const std::string& source_name = "<csv>") {
  std::vector<FeatureRow> rows;
  std::size_t pos = 0, line_no = 0;
  std::vector<int> feature_col;  // manifest index -> column
  int pid_col = -1, start_col = -1, size_col = -1, label_col = -1, valid_col = -1;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, ',');
    for (auto& c : cells) c = detail::trim(c);
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (!have_header) {
      have_header = true;
      auto find = [&](std::string_view name) {
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (cells[i] == name) return static_cast<int>(i);
        return -1;
      };
      for (const auto& n : feature_manifest()) {
        const int c = find(n);
        if (c < 0) throw DataError(where + ": missing feature column " + n);
        feature_col.push_back(c);
      }
      pid_col = find("participant_id");
      start_col = find("window_start_ms");
      size_col = find("window_size_ms");
      label_col = find("label");
      valid_col = find("valid_ratio");
      if (pid_col < 0 || start_col < 0 || size_col < 0 || label_col < 0 || valid_col < 0)
        throw DataError(where + ": missing metadata columns");
      continue;
    }
    auto num = [&](int col) {
      auto v = detail::parse_double(cells.at(static_cast<std::size_t>(col)));
      if (!v) throw DataError(where + ": bad number in column " + std::to_string(col + 1));
      return *v;
    };
    if (cells.size() < feature_col.size()) throw DataError(where + ": too few columns");
    FeatureRow r;
    for (std::size_t i = 0; i < feature_col.size(); ++i) r.values[i] = num(feature_col[i]);
    r.participant_id = cells.at(static_cast<std::size_t>(pid_col));
    r.window_start_ms = num(start_col);
    r.window_size_ms = num(size_col);
    r.label = cells.at(static_cast<std::size_t>(label_col));
    r.valid_ratio = num(valid_col);
    rows.push_back(std::move(r));
  }
  if (!have_header) throw DataError(source_name + ": empty feature file");
  return rows;
}

// Labelled, good-quality rows as a training dataset over a feature subset.
// Class order is sorted by name.
inline Dataset rows_to_dataset(std::span<const FeatureRow> rows, FeatureSubset subset,
                               std::vector<std::size_t>* kept = nullptr) {
  Dataset d;
  d.features = subset_manifest(subset);
  const auto idx = subset_indices(subset);
  std::vector<std::string> classes;
  for (const auto& r : rows)
    if (!r.label.empty() && r.valid_ratio >= kMinValidRatio) classes.push_back(r.label);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  d.classes = classes;
  d.x = Matrix(0, idx.size());
  std::vector<double> buf(idx.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.label.empty() || r.valid_ratio < kMinValidRatio) continue;
    for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = r.values[idx[k]];
    d.x.push_row(buf);
    d.y.push_back(static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), r.label) - classes.begin()));
    if (kept) kept->push_back(i);
  }
  return d;
}

// Picks a model's features out of a full 120-value row by manifest name.
inline std::vector<double> select_features(const std::array<double, kFeatureCount>& values,
                                           std::span<const std::string> manifest) {
  const auto& all = feature_manifest();
  std::vector<double> out;
  out.reserve(manifest.size());
  for (const auto& name : manifest) {
    auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw DataError("model uses unknown feature " + name);
    out.push_back(values[static_cast<std::size_t>(it - all.begin())]);
  }
  return out;
}

}  // namespace verge
