#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "verge/annotate.hpp"
#include "verge/detail/text.hpp"
#include "verge/error.hpp"
#include "verge/evaluation.hpp"

namespace verge {

struct CollectorConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> ui_dir;
  double default_duration_ms = 600000.0;
  double default_alpha = 1.0;
};

// Parses "host:port" (port alone means 127.0.0.1).
inline std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  std::string host = "127.0.0.1";
  std::string port = bind;
  if (colon != std::string::npos) {
    host = bind.substr(0, colon);
    port = bind.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::invalid_argument("port");
    return {host.empty() ? "127.0.0.1" : host, p};
  } catch (const std::exception&) {
    throw InvalidArgument("bad bind address: " + bind);
  }
}

// Sink for the blur experiment UI: stores session event logs and hands out
// blur schedules.
//
//   GET  /healthz
//   GET  /api/sessions/{id}/schedule[?alpha=&duration_ms=&seed=]
//   POST /api/sessions/{id}/events   (JSONL body)
class Collector {
public:
  explicit Collector(CollectorConfig cfg) : cfg_(std::move(cfg)) {
    std::filesystem::create_directories(sessions_dir());
    routes();
  }

  ~Collector() { stop(); }

  Collector(const Collector&) = delete;
  Collector& operator=(const Collector&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start() {
    int port = cfg_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(cfg_.host);
    } else if (!server_.bind_to_port(cfg_.host, port)) {
      port = -1;
    }
    if (port < 0) throw DataError("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  // Serves on the calling thread until stop() is called elsewhere.
  void run() {
    if (!server_.listen(cfg_.host, cfg_.port)) throw DataError("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::filesystem::path sessions_dir() const { return cfg_.data_dir / "sessions"; }
  std::filesystem::path events_path(const std::string& id) const { return sessions_dir() / id / "events.jsonl"; }
  std::filesystem::path schedule_path(const std::string& id) const { return sessions_dir() / id / "schedule.json"; }

private:
  static bool valid_event(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) return false;
    const auto kind = j["kind"].get<std::string>();
    if (kind != "blur_start" && kind != "deblur" && kind != "session_end") return false;
    if (!j.contains("t_ms") || !j["t_ms"].is_number()) return false;
    if (j.contains("alpha") && !j["alpha"].is_number()) return false;
    return true;
  }

  void routes() {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok\n", "text/plain"); });

    server_.Post(R"(/api/sessions/([A-Za-z0-9_\-]{1,64})/events)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   const std::string id = req.matches[1];
                   std::string batch;
                   std::size_t pos = 0;
                   const std::string_view body = req.body;
                   while (pos < body.size()) {
                     auto end = body.find('\n', pos);
                     if (end == std::string_view::npos) end = body.size();
                     const auto line = detail::trim(body.substr(pos, end - pos));
                     pos = end + 1;
                     if (line.empty()) continue;
                     nlohmann::json j;
                     try {
                       j = nlohmann::json::parse(line);
                     } catch (const nlohmann::json::exception&) {
                       return bad_request(res, "malformed JSON");
                     }
                     if (!valid_event(j)) return bad_request(res, "invalid event");
                     batch += line + "\n";
                   }
                   if (batch.empty()) return bad_request(res, "empty body");
                   std::lock_guard lock(mutex_);
                   std::filesystem::create_directories(events_path(id).parent_path());
                   std::ofstream out(events_path(id), std::ios::binary | std::ios::app);
                   out.write(batch.data(), static_cast<std::streamsize>(batch.size()));
                   out.flush();
                   if (!out) {
                     res.status = 500;
                     return;
                   }
                   res.status = 204;
                 });

    server_.Get(R"(/api/sessions/([A-Za-z0-9_\-]{1,64})/schedule)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  auto param = [&](const char* key) -> std::optional<double> {
                    if (!req.has_param(key)) return std::nullopt;
                    return detail::parse_double(req.get_param_value(key));
                  };
                  const auto alpha = param("alpha");
                  const auto duration = param("duration_ms");
                  const auto seed = param("seed");
                  if ((req.has_param("alpha") && !alpha) || (req.has_param("duration_ms") && !duration) ||
                      (req.has_param("seed") && !seed))
                    return bad_request(res, "bad query parameter");

                  std::lock_guard lock(mutex_);
                  const auto path = schedule_path(id);
                  if (std::filesystem::exists(path)) {
                    const auto stored_text = detail::read_file(path.string());
                    const auto stored = schedule_from_json(nlohmann::json::parse(stored_text));
                    const bool clash = (alpha && *alpha != stored.alpha) ||
                                       (duration && *duration != stored.video_duration_ms) ||
                                       (seed && static_cast<std::uint64_t>(*seed) != stored.rng_seed);
                    if (clash) {
                      res.status = 409;
                      res.set_content("{\"error\":\"session id already has a different schedule\"}\n",
                                      "application/json");
                      return;
                    }
                    res.set_content(stored_text, "application/json");
                    return;
                  }
                  BlurSchedule s;
                  try {
                    s = make_schedule(duration.value_or(cfg_.default_duration_ms), alpha.value_or(cfg_.default_alpha),
                                      seed ? static_cast<std::uint64_t>(*seed) : detail::fnv1a(id), id);
                  } catch (const InvalidArgument& e) {
                    return bad_request(res, e.what());
                  }
                  const auto text = schedule_to_json(s).dump() + "\n";
                  std::filesystem::create_directories(path.parent_path());
                  detail::write_file(path.string(), text);
                  res.set_content(text, "application/json");
                });

    if (cfg_.ui_dir && std::filesystem::is_directory(*cfg_.ui_dir)) server_.set_mount_point("/", cfg_.ui_dir->string());
  }

  static void bad_request(httplib::Response& res, const std::string& why) {
    res.status = 400;
    res.set_content(nlohmann::json{{"error", why}}.dump() + "\n", "application/json");
  }

  CollectorConfig cfg_;
  httplib::Server server_;
  std::thread thread_;
  std::mutex mutex_;
};

}  // namespace verge
