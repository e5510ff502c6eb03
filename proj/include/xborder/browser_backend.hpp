#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xborder/capture.hpp"

namespace xborder {

namespace cdp {
class Connection;
}

// Environment variable naming the Chromium-family binary.
inline constexpr const char* kBrowserEnvVar = "XBORDER_BROWSER";

struct BrowserOptions {
  // Falls back to $XBORDER_BROWSER, then chromium/chrome names on PATH.
  std::optional<std::string> binary;
  // Attach to an already running browser (ws://.../devtools/browser/...)
  // instead of launching one.
  std::optional<std::string> attach_endpoint;
  bool headless = true;
  std::uint16_t debug_port = 0;  // 0 lets the browser pick
  std::vector<std::string> extra_args;
  std::chrono::milliseconds startup_timeout{20000};
};

std::optional<std::string> locate_browser(const std::optional<std::string>& explicit_path);

// A launched browser with a throw-away profile directory. Terminating the
// process and deleting the profile happen in the destructor.
class BrowserProcess {
 public:
  // Throws BrowserUnavailable with a remediation hint.
  static std::unique_ptr<BrowserProcess> launch(const BrowserOptions& options);
  ~BrowserProcess();

  BrowserProcess(const BrowserProcess&) = delete;
  BrowserProcess& operator=(const BrowserProcess&) = delete;

  const std::string& ws_endpoint() const { return ws_endpoint_; }
  bool running() const;

 private:
  BrowserProcess() = default;
  int pid_ = -1;
  std::string profile_dir_;
  std::string ws_endpoint_;
};

// Captures through the browser's debugging protocol: each page load gets a
// fresh browser context (no cookies or cache shared between loads) and
// records every Network.requestWillBeSent, including those of
// out-of-process frames and workers, until the load event plus the settle
// period.
class BrowserBackend final : public CaptureBackend {
 public:
  explicit BrowserBackend(BrowserOptions options = {});
  ~BrowserBackend() override;

  CaptureResult capture_page(const std::string& url, const CaptureTimeouts& timeouts) override;
  BackendKind kind() const override { return BackendKind::Browser; }

 private:
  std::unique_ptr<BrowserProcess> process_;
  std::shared_ptr<cdp::Connection> connection_;
};

// Maps a Network.ResourceType string to our hint set.
ResourceHint hint_from_cdp_type(std::string_view type, bool main_frame);

struct PageVisit {
  std::string page_url;
  Timestamp observed_at{};
};

struct SessionRequest {
  CapturedRequest request;
  std::string page_url;  // page active when the request was observed
};

struct SessionEvents {
  std::function<void(const PageVisit&)> on_page;
  std::function<void(const SessionRequest&)> on_request;
};

// A browser window a person navigates freely; every outgoing request is
// forwarded to the sink as observed. Callbacks run on the connection's
// I/O thread, in observation order.
class InteractiveSession {
 public:
  ~InteractiveSession();

  // Loads `url` in the session's first tab (used for scripted sessions).
  void navigate(const std::string& url);
  void close();
  bool closed() const;
  // Returns when close() was called or the browser went away.
  void wait_closed();
  bool wait_closed_for(std::chrono::milliseconds timeout);

  struct State;

 private:
  friend std::unique_ptr<InteractiveSession> open_interactive_session(BrowserOptions,
                                                                      SessionEvents);
  InteractiveSession() = default;
  std::unique_ptr<BrowserProcess> process_;
  std::shared_ptr<cdp::Connection> connection_;
  std::shared_ptr<State> state_;
};

using SessionHandle = std::unique_ptr<InteractiveSession>;

// Throws BrowserUnavailable when no browser can be launched or reached.
SessionHandle open_interactive_session(BrowserOptions options, SessionEvents sink);

}  // namespace xborder
