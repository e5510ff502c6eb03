#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xborder/timestamp.hpp"

namespace xborder {

enum class ResourceHint { Document, Script, Stylesheet, Image, Font, Media, Frame, Xhr, Other };

std::string_view to_string(ResourceHint h);
std::optional<ResourceHint> parse_resource_hint(std::string_view text);

struct CapturedRequest {
  std::string request_url;
  ResourceHint resource_hint = ResourceHint::Other;
  Timestamp observed_at{};

  bool operator==(const CapturedRequest&) const = default;
};

enum class CaptureOutcome { Ok, Error };
enum class BackendKind { Browser, Static };

std::string_view to_string(BackendKind b);
std::optional<BackendKind> parse_backend_kind(std::string_view text);

struct CaptureResult {
  std::string target_url;
  CaptureOutcome outcome = CaptureOutcome::Ok;
  std::vector<CapturedRequest> requests;  // empty when outcome == Error
  std::optional<std::string> error_message;
  BackendKind backend = BackendKind::Static;
  std::chrono::milliseconds duration{0};

  bool ok() const { return outcome == CaptureOutcome::Ok; }

  static CaptureResult failure(std::string target, BackendKind backend, std::string message,
                               std::chrono::milliseconds duration);
};

struct CaptureTimeouts {
  std::chrono::milliseconds nav_timeout{30000};
  // Upper bound on the post-load listening period.
  std::chrono::milliseconds settle_timeout{3000};
  // The post-load period ends early once no request arrived for this long.
  std::chrono::milliseconds quiet_window{500};
};

// Slack allowed on top of nav_timeout + settle_timeout before a capture is
// abandoned.
inline constexpr std::chrono::milliseconds kCaptureGrace{5000};

// Only the schemes that open a network connection are recorded.
bool is_network_url(std::string_view url);

// Loads one page and reports the requests it triggered. Implementations
// never throw from capture_page; every failure is an Error result.
class CaptureBackend {
 public:
  virtual ~CaptureBackend() = default;
  virtual CaptureResult capture_page(const std::string& url, const CaptureTimeouts& timeouts) = 0;
  virtual BackendKind kind() const = 0;
};

}  // namespace xborder
