#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

namespace xborder::testing {

// Minimal blocking WebSocket subscriber for the event stream.
class WsClient {
 public:
  WsClient(const std::string& host, std::uint16_t port, const std::string& path = "/");
  ~WsClient();
  // Next text frame, or nullopt on timeout / close.
  std::optional<std::string> read(std::chrono::milliseconds timeout);
  void write(const std::string& text);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xborder::testing
