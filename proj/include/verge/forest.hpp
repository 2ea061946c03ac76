#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "verge/error.hpp"
#include "verge/metrics.hpp"

namespace verge {

inline constexpr const char* kPositiveClass = "InternalThought";

// Row-major dense matrix of feature values.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return cols_ ? data_.size() / cols_ : 0; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return std::span(data_).subspan(r * cols_, cols_); }

  void push_row(std::span<const double> values) {
    if (data_.empty() && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw InvalidArgument("row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
  }

  Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix m(0, cols_);
    m.data_.reserve(idx.size() * cols_);
    for (auto i : idx) m.data_.insert(m.data_.end(), row(i).begin(), row(i).end());
    return m;
  }

private:
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Labelled training data; y holds indices into classes.
struct Dataset {
  Matrix x;
  std::vector<std::size_t> y;
  std::vector<std::string> classes;
  std::vector<std::string> features;

  std::size_t rows() const { return y.size(); }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset d;
    d.x = x.select_rows(idx);
    d.classes = classes;
    d.features = features;
    for (auto i : idx) d.y.push_back(y[i]);
    return d;
  }

  std::size_t distinct_classes() const {
    std::vector<bool> seen(classes.size());
    std::size_t n = 0;
    for (auto c : y)
      if (!seen[c]) {
        seen[c] = true;
        ++n;
      }
    return n;
  }
};

// int(log2(m) + 1)
inline std::size_t default_features_per_split(std::size_t m) {
  if (m == 0) return 0;
  return static_cast<std::size_t>(std::log2(static_cast<double>(m)) + 1.0);
}

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<int> max_depth;  // unbounded when empty
  std::uint64_t seed = 0;
  std::optional<std::size_t> features_per_split;
};

struct TreeNode {
  int feature = -1;  // leaf when negative
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<std::uint32_t> counts;  // leaf class counts

  bool leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const {
    std::size_t at = 0;
    while (!nodes[at].leaf()) {
      const auto& n = nodes[at];
      at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[at];
  }

  // Majority class at the leaf; ties go to the lowest class index.
  std::size_t vote(std::span<const double> x) const {
    const auto& c = leaf_for(x).counts;
    return static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
  }
};

struct Prediction {
  std::string label;
  std::size_t class_index = 0;
  double score = 0.0;
};

struct ForestModel {
  static constexpr int kFormatVersion = 1;

  std::vector<DecisionTree> trees;
  ForestParams params;
  std::size_t features_per_split = 0;
  std::vector<std::string> feature_manifest;
  std::vector<std::string> classes;
  std::optional<double> oob_accuracy;

  std::size_t n_features() const { return feature_manifest.size(); }

  // Majority vote across trees; score is the winning vote share. Vote ties
  // favour the positive class when it is among the tied classes.
  Prediction predict(std::span<const double> x) const {
    if (x.size() != feature_manifest.size())
      throw InvalidArgument("predict: expected " + std::to_string(feature_manifest.size()) + " features, got " +
                            std::to_string(x.size()));
    std::vector<std::size_t> votes(classes.size(), 0);
    for (const auto& t : trees) ++votes[t.vote(x)];
    const auto best = *std::max_element(votes.begin(), votes.end());
    std::size_t winner = static_cast<std::size_t>(std::find(votes.begin(), votes.end(), best) - votes.begin());
    for (std::size_t c = 0; c < classes.size(); ++c)
      if (votes[c] == best && classes[c] == kPositiveClass) winner = c;
    return {classes[winner], winner, trees.empty() ? 0.0 : static_cast<double>(best) / static_cast<double>(trees.size())};
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Unbiased integer in [0, n).
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

class TreeBuilder {
public:
  TreeBuilder(const Dataset& data, std::size_t features_per_split, std::optional<int> max_depth, std::mt19937_64& rng)
      : data_(data), k_(features_per_split), max_depth_(max_depth), rng_(rng), n_classes_(data.classes.size()) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    tree_ = &tree;
    grow(rows, 0);
    return tree;
  }

private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
  };

  std::vector<std::uint32_t> class_counts(std::span<const std::size_t> rows) const {
    std::vector<std::uint32_t> c(n_classes_, 0);
    for (auto r : rows) ++c[data_.y[r]];
    return c;
  }

  // Maximises sum(cl^2)/nl + sum(cr^2)/nr, i.e. minimises the weighted Gini
  // impurity of the children.
  void best_for_feature(std::span<const std::size_t> rows, std::size_t f, const std::vector<std::uint32_t>& total,
                        Split& best) {
    buf_.clear();
    for (auto r : rows) buf_.emplace_back(data_.x.at(r, f), data_.y[r]);
    std::sort(buf_.begin(), buf_.end());
    if (buf_.front().first == buf_.back().first) return;

    std::vector<double> left(n_classes_, 0.0);
    std::vector<double> right(total.begin(), total.end());
    const double n = static_cast<double>(buf_.size());
    double sl = 0.0;  // sum of squared left counts
    double sr = 0.0;
    for (double c : right) sr += c * c;
    for (std::size_t i = 0; i + 1 < buf_.size(); ++i) {
      const auto c = buf_[i].second;
      sl += 2.0 * left[c] + 1.0;
      sr -= 2.0 * right[c] - 1.0;
      left[c] += 1.0;
      right[c] -= 1.0;
      if (buf_[i].first == buf_[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1);
      const double score = sl / nl + sr / (n - nl);
      if (score > best.score + 1e-12 * std::max(1.0, std::abs(best.score))) {
        best.score = score;
        best.feature = static_cast<int>(f);
        best.threshold = buf_[i].first + (buf_[i + 1].first - buf_[i].first) / 2.0;
      }
    }
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_->nodes.size());
    tree_->nodes.emplace_back();
    auto counts = class_counts(rows);
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || rows.size() < 2 || (max_depth_ && depth >= *max_depth_)) {
      tree_->nodes[static_cast<std::size_t>(id)].counts = std::move(counts);
      return id;
    }

    const std::size_t m = data_.x.cols();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < m; ++i) std::swap(order[i], order[i + uniform_index(rng_, m - i)]);

    Split best;
    const std::size_t k = std::min(k_, m);
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    for (auto f : chosen) best_for_feature(rows, f, counts, best);
    // Constant features only: keep drawing until one can split.
    for (std::size_t i = k; best.feature < 0 && i < m; ++i) best_for_feature(rows, order[i], counts, best);

    if (best.feature < 0) {
      tree_->nodes[static_cast<std::size_t>(id)].counts = std::move(counts);
      return id;
    }

    std::vector<std::size_t> lrows, rrows;
    for (auto r : rows) (data_.x.at(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? lrows : rrows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(lrows, depth + 1);
    const int r = grow(rrows, depth + 1);
    auto& node = tree_->nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Dataset& data_;
  std::size_t k_;
  std::optional<int> max_depth_;
  std::mt19937_64& rng_;
  std::size_t n_classes_;
  DecisionTree* tree_ = nullptr;
  std::vector<std::pair<double, std::size_t>> buf_;
};

inline void validate_training_data(const Dataset& data) {
  if (data.rows() == 0) throw InvalidArgument("train: empty dataset");
  if (data.x.rows() != data.rows()) throw InvalidArgument("train: label count mismatch");
  for (auto c : data.y)
    if (c >= data.classes.size()) throw InvalidArgument("train: label index out of range");
  if (data.distinct_classes() < 2) throw InvalidArgument("train: need at least two classes");
  for (std::size_t r = 0; r < data.x.rows(); ++r)
    for (double v : data.x.row(r))
      if (!std::isfinite(v)) throw InvalidArgument("train: non-finite feature value in row " + std::to_string(r));
}

}  // namespace detail

// Bagged CART trees with Gini splits. Each tree draws its own RNG stream from
// (seed, tree index), so the model does not depend on thread scheduling.
inline ForestModel train_forest(const Dataset& data, const ForestParams& params = {}) {
  detail::validate_training_data(data);
  ForestModel model;
  model.params = params;
  model.feature_manifest = data.features;
  if (model.feature_manifest.size() != data.x.cols()) {
    model.feature_manifest.clear();
    for (std::size_t i = 0; i < data.x.cols(); ++i) model.feature_manifest.push_back("f" + std::to_string(i));
  }
  model.classes = data.classes;
  model.features_per_split = params.features_per_split.value_or(default_features_per_split(data.x.cols()));
  if (model.features_per_split == 0) model.features_per_split = 1;
  model.trees.resize(params.n_trees);

  const std::size_t n = data.rows();
  std::vector<std::vector<std::uint8_t>> in_bag(params.n_trees);
  auto train_one = [&](std::size_t t) {
    std::mt19937_64 rng(detail::splitmix64(params.seed ^ detail::splitmix64(t + 1)));
    std::vector<std::size_t> rows(n);
    in_bag[t].assign(n, 0);
    for (auto& r : rows) {
      r = detail::uniform_index(rng, n);
      in_bag[t][r] = 1;
    }
    detail::TreeBuilder builder(data, model.features_per_split, params.max_depth, rng);
    model.trees[t] = builder.build(std::move(rows));
  };

  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), params.n_trees);
  if (workers <= 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) train_one(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < params.n_trees; t += workers) train_one(t);
      });
    for (auto& th : pool) th.join();
  }

  // Out-of-bag accuracy over rows left out by at least one tree.
  std::size_t scored = 0, correct = 0;
  std::vector<std::size_t> votes(data.classes.size());
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    bool any = false;
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      if (in_bag[t][r]) continue;
      ++votes[model.trees[t].vote(data.x.row(r))];
      any = true;
    }
    if (!any) continue;
    ++scored;
    if (static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin()) == data.y[r]) ++correct;
  }
  if (scored) model.oob_accuracy = static_cast<double>(correct) / static_cast<double>(scored);
  return model;
}

inline nlohmann::ordered_json forest_to_json(const ForestModel& m) {
  nlohmann::ordered_json j;
  j["version"] = ForestModel::kFormatVersion;
  nlohmann::ordered_json p;
  p["n_trees"] = m.params.n_trees;
  p["max_depth"] = m.params.max_depth ? nlohmann::ordered_json(*m.params.max_depth) : nlohmann::ordered_json(nullptr);
  p["features_per_split"] = m.features_per_split;
  p["seed"] = m.params.seed;
  j["params"] = p;
  j["feature_manifest"] = m.feature_manifest;
  j["classes"] = m.classes;
  j["oob_accuracy"] = m.oob_accuracy ? nlohmann::ordered_json(*m.oob_accuracy) : nlohmann::ordered_json(nullptr);
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : m.trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      if (n.leaf())
        nodes.push_back({{"counts", n.counts}});
      else
        nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

inline std::string serialize_forest(const ForestModel& m) { return forest_to_json(m).dump() + "\n"; }

inline ForestModel forest_from_json(const nlohmann::json& j) {
  ForestModel m;
  try {
    const int version = j.at("version").get<int>();
    if (version > ForestModel::kFormatVersion)
      throw DataError("model format version " + std::to_string(version) + " is newer than supported");
    const auto& p = j.at("params");
    m.params.n_trees = p.at("n_trees").get<std::size_t>();
    if (!p.at("max_depth").is_null()) m.params.max_depth = p.at("max_depth").get<int>();
    m.features_per_split = p.at("features_per_split").get<std::size_t>();
    m.params.features_per_split = m.features_per_split;
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.feature_manifest = j.at("feature_manifest").get<std::vector<std::string>>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("oob_accuracy") && !j["oob_accuracy"].is_null()) m.oob_accuracy = j["oob_accuracy"].get<double>();
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        if (jn.contains("counts")) {
          n.counts = jn["counts"].get<std::vector<std::uint32_t>>();
          if (n.counts.size() != m.classes.size()) throw DataError("leaf class count mismatch");
        } else {
          n.feature = jn.at("f").get<int>();
          n.threshold = jn.at("t").get<double>();
          n.left = jn.at("l").get<int>();
          n.right = jn.at("r").get<int>();
        }
        t.nodes.push_back(std::move(n));
      }
      const auto sz = static_cast<int>(t.nodes.size());
      for (const auto& n : t.nodes) {
        if (n.leaf()) continue;
        if (static_cast<std::size_t>(n.feature) >= m.feature_manifest.size() || n.left <= 0 || n.left >= sz ||
            n.right <= 0 || n.right >= sz)
          throw DataError("malformed tree node");
      }
      if (t.nodes.empty()) throw DataError("empty tree");
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  return m;
}

inline ForestModel parse_forest(std::string_view text) {
  try {
    return forest_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

// Always predicts the training majority class (ties: lexicographically
// smallest label).
struct ZeroRModel {
  std::vector<std::string> classes;
  std::vector<double> priors;
  std::size_t majority = 0;

  Prediction predict(std::span<const double> = {}) const { return {classes[majority], majority, priors[majority]}; }
};

inline ZeroRModel train_zeror(const Dataset& data) {
  if (data.rows() == 0) throw InvalidArgument("zeror: empty dataset");
  ZeroRModel z;
  z.classes = data.classes;
  std::vector<std::size_t> counts(data.classes.size(), 0);
  for (auto c : data.y) ++counts[c];
  for (auto c : counts) z.priors.push_back(static_cast<double>(c) / static_cast<double>(data.rows()));
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[z.majority] || (counts[c] == counts[z.majority] && z.classes[c] < z.classes[z.majority]))
      z.majority = c;
  }
  return z;
}

inline const std::vector<std::optional<int>>& default_depth_grid() {
  static const std::vector<std::optional<int>> grid{4, 8, 12, 16, 24, std::nullopt};
  return grid;
}

struct DepthScore {
  std::optional<int> depth;
  double mean_f1 = 0.0;
  std::size_t folds_used = 0;
};

// Stratified k-fold assignment: each class is shuffled and dealt round-robin.
inline std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> fold(data.rows(), 0);
  std::mt19937_64 rng(detail::splitmix64(seed));
  std::size_t next = 0;
  for (std::size_t c = 0; c < data.classes.size(); ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < data.rows(); ++r)
      if (data.y[r] == c) idx.push_back(r);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[detail::uniform_index(rng, i)]);
    for (auto r : idx) fold[r] = next++ % k;
  }
  return fold;
}

// Picks the depth with the highest mean weighted F1 under stratified 5-fold
// CV (ties: smallest depth, unbounded counting as largest). Folds whose
// training or held-out part holds a single class are skipped.
inline std::optional<int> tune_depth(const Dataset& data, std::span<const std::optional<int>> grid,
                                     const ForestParams& base, std::vector<DepthScore>* scores = nullptr) {
  if (grid.empty()) throw InvalidArgument("tune_depth: empty depth grid");
  std::vector<std::optional<int>> depths(grid.begin(), grid.end());
  std::stable_sort(depths.begin(), depths.end(), [](const auto& a, const auto& b) {
    if (!a) return false;
    if (!b) return true;
    return *a < *b;
  });
  if (depths.size() == 1) return depths.front();

  constexpr std::size_t kFolds = 5;
  const auto fold = stratified_folds(data, kFolds, base.seed);
  std::optional<int> best_depth = depths.front();
  double best = -1.0;
  for (const auto& depth : depths) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < kFolds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t r = 0; r < data.rows(); ++r) (fold[r] == f ? te : tr).push_back(r);
      if (te.empty()) continue;
      const auto train = data.subset(tr);
      const auto test = data.subset(te);
      if (train.distinct_classes() < 2 || test.distinct_classes() < 2) continue;
      ForestParams p = base;
      p.max_depth = depth;
      p.seed = detail::splitmix64(base.seed + f);
      const auto model = train_forest(train, p);
      Confusion cm(data.classes.size());
      for (std::size_t r = 0; r < test.rows(); ++r) cm.add(test.y[r], model.predict(test.x.row(r)).class_index);
      sum += weighted_f1(cm);
      ++used;
    }
    const double mean = used ? sum / static_cast<double>(used) : -1.0;
    if (scores) scores->push_back({depth, mean, used});
    if (mean > best) {
      best = mean;
      best_depth = depth;
    }
  }
  return best_depth;
}

}  // namespace verge
