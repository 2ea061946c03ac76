#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>

#include "verge/verge.hpp"

using namespace verge;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run verge_cli(const std::string& args) {
  const std::string cmd = std::string(VERGE_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int st = ::pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("verge_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string slurp(const fs::path& p) { return detail::read_file(p.string()); }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(Cli, SynthIsByteIdentical) {
  ASSERT_EQ(verge_cli("synth --seed 7 --duration-ms 60000 -o " + path("a")).code, 0);
  ASSERT_EQ(verge_cli("synth --seed 7 --duration-ms 60000 -o " + path("b")).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 6u * 2 + 1);
  EXPECT_EQ(slurp(dir_ / "a" / "p03.jsonl"), serialize_jsonl(synth_dataset({7, 6, 60000})[2].recording.samples));
}

TEST_F(Cli, ExtractTwoSecondsGivesFiveRows) {
  ASSERT_EQ(verge_cli("synth --seed 1 --duration-ms 2000 --participants 1 -o " + path("d")).code, 0);
  ASSERT_EQ(verge_cli("extract " + path("d/p01.jsonl") + " --window-ms 1000 -o " + path("f.csv")).code, 0);
  const auto rows = parse_feature_csv(slurp(path("f.csv")));
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].window_start_ms, 250.0 * static_cast<double>(i));
  // Several window sizes need --out-dir.
  EXPECT_EQ(verge_cli("extract " + path("d/p01.jsonl") + " -o " + path("g.csv")).code, 1);
  ASSERT_EQ(verge_cli("extract --data-dir " + path("d") + " --window-ms 500 --window-ms 1000 --out-dir " + path("o")).code,
            0);
  EXPECT_TRUE(fs::exists(path("o/features_500ms.csv")));
  EXPECT_EQ(parse_feature_csv(slurp(path("o/features_1000ms.csv"))).size(), 5u);
}

TEST_F(Cli, ExtractMatchesLibrary) {
  ASSERT_EQ(verge_cli("synth --seed 2 --duration-ms 10000 --participants 2 -o " + path("d")).code, 0);
  const auto out = verge_cli("extract --data-dir " + path("d") + " --window-ms 750 -o -");
  ASSERT_EQ(out.code, 0);
  const auto data = load_dataset(dir_ / "d");
  EXPECT_EQ(out.out, serialize_feature_csv(dataset_rows(data, 750, 4)));
}

TEST_F(Cli, EvalReportsSixFolds) {
  ASSERT_EQ(verge_cli("synth --seed 7 --duration-ms 20000 -o " + path("d")).code, 0);
  const auto r = verge_cli("eval --data-dir " + path("d") +
                           " --window-ms 1000 --features vergence --trees 10 --no-tune -o " + path("r.json") +
                           " --csv " + path("r.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("vergence/forest"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(path("r.json")));
  ASSERT_EQ(j["reports"].size(), 2u);
  EXPECT_EQ(j["reports"][0]["folds"].size(), 6u);
  EXPECT_EQ(j["reports"][1]["config"]["classifier"], "zeror");
  EXPECT_EQ(count_lines(slurp(path("r.csv"))), 1u + 12u);
}

TEST_F(Cli, LabelMatchesLibrary) {
  const std::string log =
      "{\"kind\":\"blur_start\",\"t_ms\":10000,\"alpha\":1}\n{\"kind\":\"deblur\",\"t_ms\":13000}\n"
      "{\"kind\":\"blur_start\",\"t_ms\":30000,\"alpha\":1}\n{\"kind\":\"deblur\",\"t_ms\":31000}\n";
  detail::write_file(path("e.jsonl"), log);
  const auto r = verge_cli("label " + path("e.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, serialize_segments(derive_labels(parse_event_log(log).events)));
  LabelParams p;
  p.discrimination_ms = 1000;
  p.reaction_ms = 200;
  ASSERT_EQ(verge_cli("label " + path("e.jsonl") + " --td-ms 1000 --tr-ms 200 -o " + path("s.json")).code, 0);
  EXPECT_EQ(slurp(path("s.json")), serialize_segments(derive_labels(parse_event_log(log).events, p)));
}

TEST_F(Cli, TrainAndPredictMatchLibrary) {
  ASSERT_EQ(verge_cli("synth --seed 3 --duration-ms 20000 --participants 2 -o " + path("d")).code, 0);
  ASSERT_EQ(verge_cli("extract --data-dir " + path("d") + " --window-ms 1000 -o " + path("f.csv")).code, 0);
  ASSERT_EQ(verge_cli("train " + path("f.csv") + " --features vergence --trees 12 --seed 5 -o " + path("m.json")).code, 0);
  const auto rows = parse_feature_csv(slurp(path("f.csv")));
  ForestParams fp;
  fp.n_trees = 12;
  fp.seed = 5;
  const auto model = train_forest(rows_to_dataset(rows, FeatureSubset::Vergence), fp);
  EXPECT_EQ(slurp(path("m.json")), serialize_forest(model));

  const auto pr = verge_cli("predict --model " + path("m.json") + " " + path("f.csv"));
  ASSERT_EQ(pr.code, 0);
  EXPECT_EQ(pr.out, predictions_to_csv(predict_rows(model, rows)));

  // The alert command accepts a vergence-only model and replays a file.
  const auto al = verge_cli("alert --model " + path("m.json") + " " + path("d/p01.jsonl"));
  EXPECT_EQ(al.code, 0);
  for (std::size_t pos = 0; pos < al.out.size();) {
    const auto end = al.out.find('\n', pos);
    EXPECT_EQ(nlohmann::json::parse(al.out.substr(pos, end - pos))["kind"], "alert");
    pos = end + 1;
  }
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(verge_cli("").code, 1);
  EXPECT_EQ(verge_cli("frobnicate").code, 1);
  EXPECT_EQ(verge_cli("synth --duration-ms abc").code, 1);
  EXPECT_EQ(verge_cli("label " + path("missing.jsonl")).code, 2);
  detail::write_file(path("bad.jsonl"), "{\"kind\":\"blur_start\",\"t_ms\":5}\n{\"kind\":\"deblur\",\"t_ms\":1}\n");
  EXPECT_EQ(verge_cli("label " + path("bad.jsonl")).code, 2);
  detail::write_file(path("f.csv"), "participant_id,window_start_ms\n");
  EXPECT_EQ(verge_cli("train " + path("f.csv") + " --features nonsense -o " + path("m.json")).code, 1);
  EXPECT_EQ(verge_cli("eval --data-dir " + path("nowhere")).code, 2);
  EXPECT_EQ(verge_cli("alert --model " + path("m.json")).code, 1);
  EXPECT_EQ(verge_cli("predict --model " + path("m.json") + " " + path("f.csv")).code, 2);
  EXPECT_EQ(verge_cli("--help").code, 0);
}
