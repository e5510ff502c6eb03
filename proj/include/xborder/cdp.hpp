#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xborder::cdp {

using Json = nlohmann::json;

// The browser answered a command with an "error" object.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string method, const std::string& message, int code)
      : std::runtime_error(method + ": " + message), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConnectionClosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One WebSocket to a browser's debugging endpoint. Commands may carry a
// flat-mode sessionId to address an attached target. Events are delivered
// on the connection's I/O thread; handlers must not block on call().
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  using EventHandler =
      std::function<void(const std::string& method, const Json& params, const std::string& session)>;

  // ws://host:port/devtools/browser/<id>
  static std::shared_ptr<Connection> open(const std::string& ws_url,
                                          std::chrono::milliseconds timeout);
  ~Connection();

  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  // Blocks for the reply and returns its "result" object.
  Json call(std::string_view method, Json params = Json::object(), const std::string& session = {},
            std::chrono::milliseconds timeout = std::chrono::seconds(15));

  // Fire-and-forget; safe to use from inside an event handler.
  void send(std::string_view method, Json params = Json::object(), const std::string& session = {});

  // Events for `session` ("" = browser target). Pass kAllSessions to see
  // every event.
  static constexpr std::string_view kAllSessions = "*";
  std::uint64_t subscribe(std::string session, EventHandler handler);
  void unsubscribe(std::uint64_t token);

  void set_close_handler(std::function<void()> handler);
  bool is_open() const;
  void close();

 private:
  struct Impl;
  explicit Connection(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace xborder::cdp
