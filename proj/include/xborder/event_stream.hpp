#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "xborder/blacklist.hpp"
#include "xborder/browser_backend.hpp"

namespace xborder {

inline constexpr std::uint16_t kDefaultStreamPort = 8765;

// Receives one serialized message (a JSON object followed by '\n').
class EventPublisher {
 public:
  virtual ~EventPublisher() = default;
  virtual void publish(const std::string& line) = 0;
};

// Local WebSocket endpoint broadcasting every published line to all
// connected subscribers as a text frame. Messages published while nobody
// is connected are dropped; anything subscribers send is ignored.
class EventStreamServer final : public EventPublisher {
 public:
  // Port 0 picks an ephemeral port; see port().
  explicit EventStreamServer(std::uint16_t port = kDefaultStreamPort,
                             const std::string& bind_address = "127.0.0.1");
  ~EventStreamServer() override;

  EventStreamServer(const EventStreamServer&) = delete;
  EventStreamServer& operator=(const EventStreamServer&) = delete;

  void publish(const std::string& line) override;
  std::uint16_t port() const;
  std::size_t subscriber_count() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LiveCounts {
  std::size_t pages = 0;
  std::size_t requests = 0;
  std::size_t bad_requests = 0;
  std::map<std::string, std::size_t> by_company;
  std::map<std::string, std::size_t> by_country;
  std::map<std::string, std::size_t> by_group;
};

// Classifies interactive-session traffic as it arrives and publishes
// "page", "request", "bad_request" and "summary" messages. A summary with
// the running counts follows every bad_request.
class LiveMonitor {
 public:
  LiveMonitor(const Blacklist& blacklist, const AttributionMap& attribution,
              EventPublisher& publisher);

  void on_page(const PageVisit& visit);
  void on_request(const SessionRequest& request);
  SessionEvents sink();
  LiveCounts counts() const;

 private:
  void emit(std::string_view type, nlohmann::json payload);
  nlohmann::json summary_payload() const;

  const Blacklist& blacklist_;
  const AttributionMap& attribution_;
  EventPublisher& publisher_;
  mutable std::mutex mutex_;
  LiveCounts counts_;
};

// {"type": ..., "payload": ...}\n
std::string format_stream_message(std::string_view type, const nlohmann::json& payload);

// Opens an interactive browser session wired through a LiveMonitor to
// `endpoint`, optionally loads `start_url`, runs `on_open` (scripted
// navigation, tests) and blocks until the session closes. Returns the
// final counts.
LiveCounts stream_events(BrowserOptions options, EventPublisher& endpoint,
                         const Blacklist& blacklist, const AttributionMap& attribution,
                         const std::optional<std::string>& start_url = std::nullopt,
                         const std::function<void(InteractiveSession&)>& on_open = {});

}  // namespace xborder
