#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "verge/detail/text.hpp"
#include "verge/error.hpp"
#include "verge/forest.hpp"
#include "verge/geometry.hpp"
#include "verge/metrics.hpp"
#include "verge/pipeline.hpp"

namespace verge {

enum class ClassifierKind { Forest, ZeroR };

inline const char* classifier_name(ClassifierKind k) { return k == ClassifierKind::Forest ? "forest" : "zeror"; }

struct EvalConfig {
  FeatureSubset subset = FeatureSubset::Full;
  ClassifierKind classifier = ClassifierKind::Forest;
  ForestParams forest;
  std::vector<std::optional<int>> depth_grid = default_depth_grid();
  double window_ms = 0.0;  // reporting only
};

struct FoldResult {
  std::string participant_id;
  std::vector<std::string> train_participants;
  std::optional<int> depth;
  Confusion confusion;
  double weighted_f1 = 0.0;
  std::vector<std::size_t> predictions;  // per held-out row, ordered by window start
};

struct EvalReport {
  EvalConfig config;
  std::vector<std::string> classes;
  std::vector<FoldResult> folds;
  double mean_f1 = 0.0;  // unweighted mean over participants
  double sd_f1 = 0.0;
  Confusion pooled;
  double pooled_f1 = 0.0;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

// Leave-one-participant-out evaluation. Rows without a label or with
// valid_ratio below 0.5 are ignored. Auxiliary rows join every training
// fold except their own participant's and are never tested. Per-fold seeds
// come from the participant id, so the report does not depend on row or
// participant order.
inline EvalReport lopo_eval(std::span<const FeatureRow> rows, const EvalConfig& cfg) {
  std::vector<const FeatureRow*> usable;
  for (const auto& r : rows)
    if (!r.label.empty() && r.valid_ratio >= kMinValidRatio) usable.push_back(&r);
  // Canonical order, so input order cannot reach the bootstrap.
  std::stable_sort(usable.begin(), usable.end(), [](const FeatureRow* a, const FeatureRow* b) {
    return std::tie(a->participant_id, a->auxiliary, a->window_size_ms, a->window_start_ms, a->label, a->values) <
           std::tie(b->participant_id, b->auxiliary, b->window_size_ms, b->window_start_ms, b->label, b->values);
  });

  std::set<std::string> participants, class_set;
  for (const auto* r : usable) {
    class_set.insert(r->label);
    if (!r->auxiliary) participants.insert(r->participant_id);
  }
  if (participants.size() < 2) throw DataError("lopo_eval: need at least two participants with labelled windows");

  EvalReport rep;
  rep.config = cfg;
  rep.classes.assign(class_set.begin(), class_set.end());
  rep.pooled = Confusion(rep.classes.size());

  const auto idx = subset_indices(cfg.subset);
  auto to_dataset = [&](const std::vector<const FeatureRow*>& part) {
    Dataset d;
    d.classes = rep.classes;
    d.features = subset_manifest(cfg.subset);
    d.x = Matrix(0, idx.size());
    std::vector<double> buf(idx.size());
    for (const auto* r : part) {
      for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = r->values[idx[k]];
      d.x.push_row(buf);
      d.y.push_back(static_cast<std::size_t>(std::lower_bound(rep.classes.begin(), rep.classes.end(), r->label) -
                                             rep.classes.begin()));
    }
    return d;
  };

  std::vector<double> f1s;
  for (const auto& held_out : participants) {
    std::vector<const FeatureRow*> train_rows, test_rows;
    std::set<std::string> train_ids;
    for (const auto* r : usable) {
      if (r->participant_id == held_out) {
        if (!r->auxiliary) test_rows.push_back(r);
      } else {
        train_rows.push_back(r);
        train_ids.insert(r->participant_id);
      }
    }
    if (test_rows.empty()) throw DataError("lopo_eval: participant " + held_out + " has no instances");
    const auto train = to_dataset(train_rows);
    const auto test = to_dataset(test_rows);

    FoldResult fold;
    fold.participant_id = held_out;
    fold.train_participants.assign(train_ids.begin(), train_ids.end());
    fold.confusion = Confusion(rep.classes.size());
    if (cfg.classifier == ClassifierKind::ZeroR) {
      const auto model = train_zeror(train);
      for (std::size_t r = 0; r < test.rows(); ++r) fold.predictions.push_back(model.predict().class_index);
    } else {
      ForestParams p = cfg.forest;
      p.seed = detail::splitmix64(cfg.forest.seed ^ detail::fnv1a(held_out));
      if (!cfg.depth_grid.empty()) {
        fold.depth = tune_depth(train, cfg.depth_grid, p);
        p.max_depth = fold.depth;
      } else {
        fold.depth = p.max_depth;
      }
      const auto model = train_forest(train, p);
      for (std::size_t r = 0; r < test.rows(); ++r) fold.predictions.push_back(model.predict(test.x.row(r)).class_index);
    }
    for (std::size_t r = 0; r < test.rows(); ++r) fold.confusion.add(test.y[r], fold.predictions[r]);
    fold.weighted_f1 = weighted_f1(fold.confusion);
    rep.pooled += fold.confusion;
    f1s.push_back(fold.weighted_f1);
    rep.folds.push_back(std::move(fold));
  }
  const auto ms = mean_sd(f1s);
  rep.mean_f1 = ms.mean;
  rep.sd_f1 = ms.sd;
  rep.pooled_f1 = weighted_f1(rep.pooled);
  return rep;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["config"] = {{"window_ms", r.config.window_ms},
                 {"feature_subset", subset_name(r.config.subset)},
                 {"classifier", classifier_name(r.config.classifier)},
                 {"n_trees", r.config.forest.n_trees},
                 {"seed", r.config.forest.seed}};
  j["classes"] = r.classes;
  auto folds = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"participant_id", f.participant_id},
                     {"train_participants", f.train_participants},
                     {"max_depth", f.depth ? nlohmann::ordered_json(*f.depth) : nlohmann::ordered_json(nullptr)},
                     {"n_test", f.confusion.total()},
                     {"confusion", f.confusion.counts},
                     {"weighted_f1", f.weighted_f1}});
  }
  j["folds"] = folds;
  j["mean_weighted_f1"] = r.mean_f1;
  j["sd_weighted_f1"] = r.sd_f1;
  j["pooled_confusion"] = r.pooled.counts;
  j["pooled_weighted_f1"] = r.pooled_f1;
  return j;
}

inline std::string reports_to_json(std::span<const EvalReport> reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return nlohmann::ordered_json{{"reports", arr}}.dump(2) + "\n";
}

inline std::string reports_to_csv(std::span<const EvalReport> reports) {
  using detail::format_double;
  std::string out = "window_ms,feature_subset,classifier,participant_id,n_test,weighted_f1\n";
  for (const auto& r : reports)
    for (const auto& f : r.folds)
      out += format_double(r.config.window_ms) + "," + subset_name(r.config.subset) + "," +
             classifier_name(r.config.classifier) + "," + f.participant_id + "," + std::to_string(f.confusion.total()) +
             "," + format_double(f.weighted_f1) + "\n";
  return out;
}

// Mean weighted F1 (SD) keyed by window size (rows) and feature subset /
// classifier (columns).
inline std::string reports_to_table(std::span<const EvalReport> reports) {
  std::vector<std::string> cols;
  std::vector<double> windows;
  std::map<std::pair<double, std::string>, const EvalReport*> cell;
  for (const auto& r : reports) {
    std::string col = std::string(subset_name(r.config.subset)) + "/" + classifier_name(r.config.classifier);
    if (std::find(cols.begin(), cols.end(), col) == cols.end()) cols.push_back(col);
    if (std::find(windows.begin(), windows.end(), r.config.window_ms) == windows.end())
      windows.push_back(r.config.window_ms);
    cell[{r.config.window_ms, col}] = &r;
  }
  std::sort(windows.begin(), windows.end());
  char buf[64];
  std::string out = "window_ms";
  for (const auto& c : cols) {
    std::snprintf(buf, sizeof(buf), " | %-18s", c.c_str());
    out += buf;
  }
  out += "\n";
  for (double w : windows) {
    std::snprintf(buf, sizeof(buf), "%9.0f", w);
    out += buf;
    for (const auto& c : cols) {
      auto it = cell.find({w, c});
      if (it == cell.end())
        std::snprintf(buf, sizeof(buf), " | %-18s", "-");
      else
        std::snprintf(buf, sizeof(buf), " | %.3f (%.3f)      ", it->second->mean_f1, it->second->sd_f1);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace verge
