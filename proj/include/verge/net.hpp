#pragma once

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <string>

#include <json.hpp>

#include "verge/error.hpp"
#include "verge/gaze.hpp"

namespace verge {

// Blocking line reader on a TCP connection. Used as a live gaze source:
// the peer sends one JSONL gaze sample per line.
class TcpLineReader {
public:
  TcpLineReader(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
      throw DataError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    for (auto* ai = res; ai; ai = ai->ai_next) {
      fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw DataError("cannot connect to " + host + ":" + service + ": " + std::strerror(errno));
  }

  ~TcpLineReader() {
    if (fd_ >= 0) ::close(fd_);
  }

  TcpLineReader(const TcpLineReader&) = delete;
  TcpLineReader& operator=(const TcpLineReader&) = delete;

  // Next line without its terminator; nullopt once the peer closes.
  std::optional<std::string> next_line() {
    for (;;) {
      if (auto nl = buf_.find('\n'); nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const auto n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (buf_.empty()) return std::nullopt;
        std::string rest;
        rest.swap(buf_);
        return rest;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

private:
  int fd_ = -1;
  std::string buf_;
};

// One JSONL gaze line, same schema as the recording files.
inline GazeSample parse_sample_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw DataError("invalid JSON");
  }
  return detail::sample_from_json(j);
}

}  // namespace verge
