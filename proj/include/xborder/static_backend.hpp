#pragma once

#include <optional>
#include <string>

#include "xborder/capture.hpp"

namespace xborder {

inline constexpr std::string_view kToolVersion = "0.3.0";
std::string default_user_agent();

struct StaticBackendOptions {
  std::string user_agent = default_user_agent();
  int max_redirects = 5;
  // Extra CA bundle, e.g. for a locally served TLS fixture.
  std::optional<std::string> ca_cert_file;
};

// Fetches the document over plain HTTP(S) and derives the sub-resource list
// from its markup. The main-document request (one per redirect hop) comes
// first, followed by extract_static_resources() output.
class StaticBackend final : public CaptureBackend {
 public:
  explicit StaticBackend(StaticBackendOptions options = {});

  CaptureResult capture_page(const std::string& url, const CaptureTimeouts& timeouts) override;
  BackendKind kind() const override { return BackendKind::Static; }

 private:
  StaticBackendOptions options_;
};

}  // namespace xborder
