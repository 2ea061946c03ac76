#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "verge/error.hpp"

namespace verge {

// counts[true_class][predicted_class]
struct Confusion {
  std::vector<std::vector<std::uint64_t>> counts;

  explicit Confusion(std::size_t n_classes = 0) : counts(n_classes, std::vector<std::uint64_t>(n_classes, 0)) {}

  std::size_t classes() const { return counts.size(); }
  void add(std::size_t truth, std::size_t predicted) { ++counts.at(truth).at(predicted); }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts)
      for (auto c : row) n += c;
    return n;
  }

  Confusion& operator+=(const Confusion& o) {
    if (o.classes() != classes()) throw InvalidArgument("confusion size mismatch");
    for (std::size_t i = 0; i < classes(); ++i)
      for (std::size_t j = 0; j < classes(); ++j) counts[i][j] += o.counts[i][j];
    return *this;
  }
};

// Per-class F1 averaged with weights proportional to true-class support.
inline double weighted_f1(const Confusion& c) {
  const std::size_t k = c.classes();
  const double n = static_cast<double>(c.total());
  if (n == 0.0) throw InvalidArgument("weighted_f1: empty confusion matrix");
  double score = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double support = 0.0, predicted = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      support += static_cast<double>(c.counts[i][j]);
      predicted += static_cast<double>(c.counts[j][i]);
    }
    const double tp = static_cast<double>(c.counts[i][i]);
    const double precision = predicted > 0.0 ? tp / predicted : 0.0;
    const double recall = support > 0.0 ? tp / support : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    score += support / n * f1;
  }
  return score;
}

inline double accuracy(const Confusion& c) {
  const double n = static_cast<double>(c.total());
  if (n == 0.0) return 0.0;
  double diag = 0.0;
  for (std::size_t i = 0; i < c.classes(); ++i) diag += static_cast<double>(c.counts[i][i]);
  return diag / n;
}

}  // namespace verge
