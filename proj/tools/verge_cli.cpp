// verge: command-line front end for the verge library.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "verge/verge.hpp"

namespace fs = std::filesystem;
using namespace verge;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  detail::write_file(path, text);
}

ScreenConfig screen_or_default(const std::string& path) { return path.empty() ? ScreenConfig{} : load_screen(path); }

std::string window_tag(double w) { return detail::format_double(w) + "ms"; }

struct Common {
  std::vector<double> windows;
  int step_divisor = 4;
  std::string subset = "full";
  std::size_t trees = 100;
  std::uint64_t seed = 1;
};

void add_window_flags(CLI::App* cmd, Common& c, bool many) {
  auto* opt = cmd->add_option("--window-ms", c.windows, many ? "window sizes (default 250 500 750 1000)" : "window size");
  opt->check(CLI::PositiveNumber);
  if (!many) opt->expected(1);
  cmd->add_option("--step-divisor", c.step_divisor, "step = window / divisor")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verge: internal-thought detection from eye vergence"};
  app.require_subcommand(1);
  Common c;
  const std::string data_dir_default = env_or("VERGE_DATA_DIR", "data");

  // synth
  SynthDatasetSpec synth;
  std::string synth_out = data_dir_default;
  auto* s = app.add_subcommand("synth", "generate a synthetic labelled dataset");
  s->add_option("--seed", synth.seed);
  s->add_option("--duration-ms", synth.duration_ms)->check(CLI::PositiveNumber);
  s->add_option("--participants", synth.participants)->check(CLI::PositiveNumber);
  s->add_option("--sigma-on", synth.sigma_on_px, "on-task disparity SD (px)");
  s->add_option("--sigma-it", synth.sigma_it_px, "internal-thought disparity SD (px)");
  s->add_option("-o,--out-dir", synth_out);

  // extract
  std::vector<std::string> gaze_files;
  std::string screen_path, extract_out, extract_dir, extract_data;
  auto* x = app.add_subcommand("extract", "gaze recordings -> feature CSV per window size");
  x->add_option("gaze", gaze_files, "gaze files (.jsonl or .csv)");
  x->add_option("--data-dir", extract_data, "use every recording in a dataset directory");
  x->add_option("--screen", screen_path, "screen geometry JSON");
  add_window_flags(x, c, true);
  x->add_option("-o,--out", extract_out, "output CSV (single window size; - for stdout)");
  x->add_option("--out-dir", extract_dir, "writes features_<w>ms.csv per window size");

  // label
  std::string events_path, label_out;
  LabelParams lp;
  auto* l = app.add_subcommand("label", "blur/deblur event log -> labelled segments JSON");
  l->add_option("events", events_path, "event log (JSONL)")->required();
  l->add_option("--td-ms", lp.discrimination_ms, "blur discrimination time");
  l->add_option("--tr-ms", lp.reaction_ms, "reaction time");
  l->add_option("-o,--out", label_out);

  // train
  std::string train_csv, model_out;
  std::optional<int> max_depth;
  bool tune = false;
  auto* t = app.add_subcommand("train", "feature CSV -> forest model JSON");
  t->add_option("features_csv", train_csv)->required();
  t->add_option("--features", c.subset, "full|vergence|classic");
  t->add_option("--trees", c.trees)->check(CLI::PositiveNumber);
  t->add_option("--seed", c.seed);
  t->add_option("--max-depth", max_depth)->check(CLI::PositiveNumber);
  t->add_flag("--tune", tune, "pick max depth by stratified 5-fold CV");
  t->add_option("-o,--out", model_out)->required();

  // eval
  std::string eval_dir = data_dir_default, eval_out, eval_csv;
  std::vector<std::string> eval_subsets;
  bool no_tune = false, no_baseline = false;
  auto* e = app.add_subcommand("eval", "leave-one-participant-out evaluation over a dataset directory");
  e->add_option("--data-dir", eval_dir);
  add_window_flags(e, c, true);
  e->add_option("--features", eval_subsets, "subsets to evaluate (default all)");
  e->add_option("--trees", c.trees)->check(CLI::PositiveNumber);
  e->add_option("--seed", c.seed);
  e->add_flag("--no-tune", no_tune, "skip inner depth tuning (unbounded depth)");
  e->add_flag("--no-baseline", no_baseline, "skip the ZeroR reports");
  e->add_option("-o,--out", eval_out, "report JSON");
  e->add_option("--csv", eval_csv, "per-fold CSV");

  // predict
  std::string model_path, predict_csv, predict_out;
  auto* p = app.add_subcommand("predict", "model + feature CSV -> window labels");
  p->add_option("--model", model_path)->required();
  p->add_option("features_csv", predict_csv)->required();
  p->add_option("-o,--out", predict_out);

  // alert
  std::string alert_gaze, alert_tcp, alert_out;
  double speed = 0.0;
  auto* a = app.add_subcommand("alert", "stream gaze through the realtime engine, print alerts");
  a->add_option("--model", model_path)->required();
  a->add_option("gaze", alert_gaze, "gaze file to replay");
  a->add_option("--tcp", alert_tcp, "host:port sending JSONL gaze lines");
  a->add_option("--screen", screen_path);
  a->add_option("--speed", speed, "replay speed (0 = as fast as possible)")->check(CLI::NonNegativeNumber);
  a->add_option("-o,--out", alert_out);

  // serve
  std::string bind = env_or("VERGE_BIND", "127.0.0.1:8080"), serve_dir = data_dir_default, ui_dir;
  CollectorConfig cc;
  auto* v = app.add_subcommand("serve", "run the event-log collector");
  v->add_option("--bind", bind, "host:port (env VERGE_BIND)");
  v->add_option("--data-dir", serve_dir, "(env VERGE_DATA_DIR)");
  v->add_option("--ui-dir", ui_dir, "static UI assets");
  v->add_option("--alpha", cc.default_alpha, "default blur speed")->check(CLI::PositiveNumber);
  v->add_option("--duration-ms", cc.default_duration_ms, "default video length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 1;
  }

  try {
    const auto windows = c.windows.empty() ? default_window_sizes() : c.windows;

    if (*s) {
      write_synth_dataset(synth_out, synth_dataset(synth));
    } else if (*x) {
      const auto screen = screen_or_default(screen_path);
      std::vector<Participant> data;
      if (!extract_data.empty()) data = load_dataset(extract_data);
      for (const auto& f : gaze_files) data.push_back(load_participant(f, screen));
      if (data.empty()) throw InvalidArgument("extract: no gaze input");
      if (extract_dir.empty() && windows.size() != 1) throw InvalidArgument("extract: several window sizes need --out-dir");
      for (double w : windows) {
        const auto text = serialize_feature_csv(dataset_rows(data, w, c.step_divisor));
        emit(extract_dir.empty() ? extract_out : (fs::path(extract_dir) / ("features_" + window_tag(w) + ".csv")).string(),
             text);
      }
      for (const auto& d : data)
        if (d.malformed_lines) std::cerr << d.recording.participant_id << ": skipped " << d.malformed_lines << " malformed lines\n";
    } else if (*l) {
      const auto log = parse_event_log(detail::read_file(events_path), events_path);
      const auto segs = derive_labels(log.events, lp);
      emit(label_out, serialize_segments(segs));
      std::cerr << log.events.size() << " deblur events, " << segs.size() << " segments\n";
    } else if (*t) {
      const auto subset = parse_subset(c.subset);
      const auto rows = parse_feature_csv(detail::read_file(train_csv), train_csv);
      const auto data = rows_to_dataset(rows, subset);
      ForestParams fp;
      fp.n_trees = c.trees;
      fp.seed = c.seed;
      fp.max_depth = max_depth;
      if (tune) fp.max_depth = tune_depth(data, default_depth_grid(), fp);
      emit(model_out, serialize_forest(train_forest(data, fp)));
    } else if (*e) {
      EvalGrid grid;
      grid.window_sizes = windows;
      grid.step_divisor = c.step_divisor;
      if (!eval_subsets.empty()) {
        grid.subsets.clear();
        for (const auto& name : eval_subsets) grid.subsets.push_back(parse_subset(name));
      }
      grid.zeror_baseline = !no_baseline;
      grid.base.forest.n_trees = c.trees;
      grid.base.forest.seed = c.seed;
      if (no_tune) grid.base.depth_grid.clear();
      const auto data = load_dataset(eval_dir);
      const auto reports = eval_grid(data, grid);
      if (!eval_out.empty()) emit(eval_out, reports_to_json(reports));
      if (!eval_csv.empty()) emit(eval_csv, reports_to_csv(reports));
      std::cout << reports_to_table(reports);
    } else if (*p) {
      const auto model = parse_forest(detail::read_file(model_path));
      const auto rows = parse_feature_csv(detail::read_file(predict_csv), predict_csv);
      emit(predict_out, predictions_to_csv(predict_rows(model, rows)));
    } else if (*a) {
      if (alert_gaze.empty() == alert_tcp.empty()) throw InvalidArgument("alert: give exactly one of a gaze file or --tcp");
      const auto model = parse_forest(detail::read_file(model_path));
      const auto screen = screen_or_default(screen_path);
      PipelineConfig pc;
      EngineConfig ec;
      ec.features = pc.features_for(screen);
      const auto classifier = forest_window_classifier(model);
      if (!alert_gaze.empty()) {
        const auto rec = resample(load_participant(alert_gaze, screen).recording, pc.rate_hz);
        std::string text;
        for (const auto& ev : stream_alerts(rec, classifier, ec, speed)) text += alert_to_jsonl(ev);
        emit(alert_out, text);
      } else {
        const auto [host, port] = parse_bind(alert_tcp);
        TcpLineReader src(host, port);
        StreamEngine engine(classifier, ec);
        std::unique_ptr<std::ofstream> file;
        if (!alert_out.empty() && alert_out != "-") file = std::make_unique<std::ofstream>(alert_out);
        std::ostream& out = file ? *file : std::cout;
        std::size_t line_no = 0, bad = 0;
        while (auto line = src.next_line()) {
          ++line_no;
          if (detail::trim(*line).empty()) continue;
          try {
            if (auto ev = engine.push_frame(parse_sample_line(*line))) out << alert_to_jsonl(*ev) << std::flush;
          } catch (const DataError& err) {
            ++bad;
            std::cerr << alert_tcp << ":" << line_no << ": " << err.what() << "\n";
          }
        }
        if (engine.dropped_frames() || bad)
          std::cerr << "dropped " << engine.dropped_frames() << " out-of-order frames, " << bad << " bad lines\n";
      }
    } else if (*v) {
      std::tie(cc.host, cc.port) = parse_bind(bind);
      cc.data_dir = serve_dir;
      if (!ui_dir.empty()) cc.ui_dir = ui_dir;
      Collector collector(cc);
      std::cerr << "collector on " << cc.host << ":" << cc.port << ", data in " << serve_dir << "\n";
      collector.run();
    }
  } catch (const InvalidArgument& err) {
    std::cerr << "verge: " << err.what() << "\n";
    return 1;
  } catch (const DataError& err) {
    std::cerr << "verge: " << err.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "verge: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "verge: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
