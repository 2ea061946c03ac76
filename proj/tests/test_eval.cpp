#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "verge/evaluation.hpp"

using namespace verge;

namespace {

// Rows whose vergence features tell the class apart; the rest is noise.
std::vector<FeatureRow> toy_rows(std::size_t participants, std::size_t per, double positive_share,
                                 std::uint64_t seed, bool informative = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<FeatureRow> rows;
  for (std::size_t p = 0; p < participants; ++p) {
    for (std::size_t i = 0; i < per; ++i) {
      FeatureRow r;
      r.participant_id = "p" + std::to_string(p + 1);
      r.window_start_ms = 250.0 * static_cast<double>(i);
      r.window_size_ms = 1000.0;
      r.valid_ratio = 1.0;
      const bool pos = static_cast<double>(i) < positive_share * static_cast<double>(per);
      r.label = pos ? "InternalThought" : "SpontaneousOnTask";
      for (auto& v : r.values) v = noise(rng);
      if (informative)
        for (std::size_t k = 0; k < kVergenceFeatureCount; ++k) r.values[k] = (pos ? 10.0 : -10.0) + noise(rng);
      rows.push_back(r);
    }
  }
  return rows;
}

EvalConfig quick(FeatureSubset subset = FeatureSubset::Vergence) {
  EvalConfig c;
  c.subset = subset;
  c.forest.n_trees = 15;
  c.forest.seed = 3;
  c.depth_grid = {4};
  c.window_ms = 1000.0;
  return c;
}

}  // namespace

TEST(WeightedF1, ConstantPredictorOnBalancedData) {
  Confusion c(2);
  c.counts = {{50, 0}, {50, 0}};
  EXPECT_NEAR(weighted_f1(c), 1.0 / 3.0, 1e-12);
}

TEST(WeightedF1, HalfRight) {
  Confusion c(2);
  c.counts = {{25, 25}, {25, 25}};
  EXPECT_NEAR(weighted_f1(c), 0.5, 1e-12);
}

TEST(WeightedF1, DiagonalIsOne) {
  Confusion c(3);
  c.counts = {{4, 0, 0}, {0, 7, 0}, {0, 0, 1}};
  EXPECT_DOUBLE_EQ(weighted_f1(c), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(c), 1.0);
}

TEST(WeightedF1, EmptyThrows) { EXPECT_THROW(weighted_f1(Confusion(2)), InvalidArgument); }

TEST(WeightedF1, MatchesHandComputation) {
  Confusion c(2);
  c.counts = {{30, 10}, {20, 40}};
  const double p0 = 30.0 / 50.0, r0 = 30.0 / 40.0, p1 = 40.0 / 50.0, r1 = 40.0 / 60.0;
  const double f0 = 2 * p0 * r0 / (p0 + r0), f1 = 2 * p1 * r1 / (p1 + r1);
  EXPECT_NEAR(weighted_f1(c), 0.4 * f0 + 0.6 * f1, 1e-12);
}

TEST(Lopo, ZeroRClosedForm) {
  // 40% positive everywhere: ZeroR always says on-task, F1 = 0.6 * 0.75.
  const auto rows = toy_rows(4, 50, 0.4, 1);
  auto cfg = quick();
  cfg.classifier = ClassifierKind::ZeroR;
  const auto rep = lopo_eval(rows, cfg);
  ASSERT_EQ(rep.folds.size(), 4u);
  for (const auto& f : rep.folds) EXPECT_NEAR(f.weighted_f1, 0.45, 1e-12);
  EXPECT_NEAR(rep.mean_f1, 0.45, 1e-12);
  EXPECT_NEAR(rep.sd_f1, 0.0, 1e-12);
}

TEST(Lopo, OneFoldPerParticipantDisjoint) {
  const auto rows = toy_rows(5, 30, 0.5, 2);
  const auto rep = lopo_eval(rows, quick());
  ASSERT_EQ(rep.folds.size(), 5u);
  std::set<std::string> held;
  for (const auto& f : rep.folds) {
    held.insert(f.participant_id);
    EXPECT_EQ(f.train_participants.size(), 4u);
    EXPECT_EQ(std::count(f.train_participants.begin(), f.train_participants.end(), f.participant_id), 0);
    EXPECT_EQ(f.confusion.total(), 30u);
  }
  EXPECT_EQ(held.size(), 5u);
  EXPECT_EQ(rep.pooled.total(), 150u);
}

TEST(Lopo, PerfectFeatureScoresOne) {
  const auto rep = lopo_eval(toy_rows(4, 40, 0.5, 3), quick());
  for (const auto& f : rep.folds) EXPECT_DOUBLE_EQ(f.weighted_f1, 1.0);
  EXPECT_DOUBLE_EQ(rep.pooled_f1, 1.0);
}

TEST(Lopo, InvariantToRowOrder) {
  auto rows = toy_rows(4, 30, 0.5, 4, false);
  const auto a = reports_to_json(std::vector{lopo_eval(rows, quick())});
  std::mt19937_64 rng(9);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto b = reports_to_json(std::vector{lopo_eval(rows, quick())});
  EXPECT_EQ(a, b);
}

TEST(Lopo, AuxiliaryRowsNeverTestedNorTrainOwnFold) {
  const auto rows = toy_rows(3, 30, 0.5, 5, false);
  const auto base = lopo_eval(rows, quick());
  auto with_aux = rows;
  for (const auto& r : rows) {
    if (r.participant_id != "p1") continue;
    auto dup = r;
    dup.auxiliary = true;
    dup.label = "InternalThought";
    with_aux.push_back(dup);
  }
  const auto rep = lopo_eval(with_aux, quick());
  ASSERT_EQ(rep.folds.size(), 3u);
  EXPECT_EQ(rep.folds[0].participant_id, "p1");
  EXPECT_EQ(rep.folds[0].predictions, base.folds[0].predictions);
  EXPECT_EQ(rep.folds[0].confusion.total(), 30u);
}

TEST(Lopo, SkipsUnlabelledAndLowQualityRows) {
  auto rows = toy_rows(3, 20, 0.5, 6);
  rows[0].label.clear();
  rows[1].valid_ratio = 0.2;
  const auto rep = lopo_eval(rows, quick());
  EXPECT_EQ(rep.folds[0].confusion.total(), 18u);
}

TEST(Lopo, NeedsTwoParticipants) {
  EXPECT_THROW(lopo_eval(toy_rows(1, 20, 0.5, 7), quick()), DataError);
}

TEST(Report, JsonCsvAndTable) {
  const auto rows = toy_rows(3, 20, 0.5, 10);
  std::vector<EvalReport> reps{lopo_eval(rows, quick())};
  auto z = quick();
  z.classifier = ClassifierKind::ZeroR;
  reps.push_back(lopo_eval(rows, z));

  const auto j = nlohmann::json::parse(reports_to_json(reps));
  ASSERT_EQ(j["reports"].size(), 2u);
  const auto& r0 = j["reports"][0];
  EXPECT_EQ(r0["config"]["feature_subset"], "vergence");
  EXPECT_EQ(r0["config"]["classifier"], "forest");
  EXPECT_EQ(r0["folds"].size(), 3u);
  EXPECT_EQ(r0["folds"][0]["max_depth"], 4);
  EXPECT_EQ(j["reports"][1]["config"]["classifier"], "zeror");

  const auto csv = reports_to_csv(reps);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "window_ms,feature_subset,classifier,participant_id,n_test,weighted_f1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_NE(csv.find("1000,vergence,forest,p1,20,1\n"), std::string::npos);

  const auto table = reports_to_table(reps);
  EXPECT_NE(table.find("vergence/forest"), std::string::npos);
  EXPECT_NE(table.find("vergence/zeror"), std::string::npos);
  EXPECT_NE(table.find("1.000 (0.000)"), std::string::npos);
}
