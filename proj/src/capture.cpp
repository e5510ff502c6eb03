#include "xborder/capture.hpp"

#include "xborder/url.hpp"

namespace xborder {

std::string_view to_string(ResourceHint h) {
  switch (h) {
    case ResourceHint::Document: return "DOCUMENT";
    case ResourceHint::Script: return "SCRIPT";
    case ResourceHint::Stylesheet: return "STYLESHEET";
    case ResourceHint::Image: return "IMAGE";
    case ResourceHint::Font: return "FONT";
    case ResourceHint::Media: return "MEDIA";
    case ResourceHint::Frame: return "FRAME";
    case ResourceHint::Xhr: return "XHR";
    case ResourceHint::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<ResourceHint> parse_resource_hint(std::string_view text) {
  for (auto h : {ResourceHint::Document, ResourceHint::Script, ResourceHint::Stylesheet,
                 ResourceHint::Image, ResourceHint::Font, ResourceHint::Media, ResourceHint::Frame,
                 ResourceHint::Xhr, ResourceHint::Other})
    if (to_string(h) == text) return h;
  return std::nullopt;
}

std::string_view to_string(BackendKind b) { return b == BackendKind::Browser ? "browser" : "static"; }

std::optional<BackendKind> parse_backend_kind(std::string_view text) {
  const auto lower = url::to_lower_ascii(text);
  if (lower == "browser") return BackendKind::Browser;
  if (lower == "static") return BackendKind::Static;
  return std::nullopt;
}

CaptureResult CaptureResult::failure(std::string target, BackendKind backend, std::string message,
                                     std::chrono::milliseconds duration) {
  CaptureResult r;
  r.target_url = std::move(target);
  r.outcome = CaptureOutcome::Error;
  r.error_message = std::move(message);
  r.backend = backend;
  r.duration = duration;
  return r;
}

bool is_network_url(std::string_view text) {
  const auto parsed = url::parse(text);
  if (!parsed || !parsed->has_authority || parsed->host.empty()) return false;
  const auto& s = parsed->scheme;
  return s == "http" || s == "https" || s == "ws" || s == "wss";
}

}  // namespace xborder
