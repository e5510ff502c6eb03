#include <doctest.h>

#include <algorithm>
#include <chrono>

#include "support/fixture_server.hpp"
#include "support/test_paths.hpp"
#include "xborder/browser_backend.hpp"
#include "xborder/error.hpp"

using namespace xborder;
using namespace std::chrono_literals;
using xborder::testing::FixtureServer;
using xborder::testing::browser_from_env;
using xborder::testing::fixture_path;

namespace {

bool has_url(const CaptureResult& r, const std::string& u) {
  return std::any_of(r.requests.begin(), r.requests.end(),
                     [&](const CapturedRequest& q) { return q.request_url == u; });
}

#define REQUIRE_BROWSER()                                      \
  const std::string browser_bin = browser_from_env();         \
  if (browser_bin.empty()) {                                  \
    MESSAGE("XBORDER_BROWSER not set, browser check skipped"); \
    return;                                                   \
  }

BrowserOptions options_for(const std::string& bin) {
  BrowserOptions o;
  o.binary = bin;
  return o;
}

}  // namespace

TEST_CASE("cdp resource types map onto hints") {
  CHECK(hint_from_cdp_type("Document", true) == ResourceHint::Document);
  CHECK(hint_from_cdp_type("Document", false) == ResourceHint::Frame);
  CHECK(hint_from_cdp_type("Script", false) == ResourceHint::Script);
  CHECK(hint_from_cdp_type("Stylesheet", false) == ResourceHint::Stylesheet);
  CHECK(hint_from_cdp_type("Image", false) == ResourceHint::Image);
  CHECK(hint_from_cdp_type("Font", false) == ResourceHint::Font);
  CHECK(hint_from_cdp_type("Media", false) == ResourceHint::Media);
  CHECK(hint_from_cdp_type("XHR", false) == ResourceHint::Xhr);
  CHECK(hint_from_cdp_type("Fetch", false) == ResourceHint::Xhr);
  CHECK(hint_from_cdp_type("Ping", false) == ResourceHint::Other);
}

TEST_CASE("missing browser binary is reported, not crashed on") {
  BrowserOptions o;
  o.binary = "/nonexistent/chromium";
  CHECK_THROWS_AS(BrowserProcess::launch(o), BrowserUnavailable);
}

TEST_CASE("browser capture of a fixture site") {
  REQUIRE_BROWSER();
  FixtureServer server(fixture_path("corpus/sites"));
  BrowserBackend backend(options_for(browser_bin));
  const auto base = server.base_url();
  const auto r = backend.capture_page(base + "/s03/", {10000ms, 2000ms, 500ms});
  REQUIRE_MESSAGE(r.ok(), r.error_message.value_or(""));
  CHECK(r.backend == BackendKind::Browser);
  REQUIRE_FALSE(r.requests.empty());
  CHECK(r.requests[0].request_url == base + "/s03/");
  CHECK(r.requests[0].resource_hint == ResourceHint::Document);
  CHECK(has_url(r, base + "/s03/style.css"));
  CHECK(has_url(r, base + "/s03/app.js"));
  CHECK(has_url(r, "https://www.youtube.com/iframe_api"));
  CHECK(has_url(r, "https://www.youtube.com/embed/dQw4w9WgXcQ"));
}

TEST_CASE("browser capture sees worker traffic and runtime requests") {
  REQUIRE_BROWSER();
  FixtureServer server(fixture_path("corpus/sites"));
  server.set_page("/dyn/", R"(<!doctype html><title>dyn</title><script>
    new Worker('/dyn/worker.js');
    setTimeout(function () {
      var i = new Image(); i.src = 'https://d0late.cloudfront.net/pixel.gif';
    }, 200);
  </script>)");
  server.set_page("/dyn/worker.js", "fetch('https://cdn.jsdelivr.net/npm/from-worker.js').catch(function(){});",
                  "application/javascript");
  BrowserBackend backend(options_for(browser_bin));
  const auto r = backend.capture_page(server.base_url() + "/dyn/", {10000ms, 3000ms, 800ms});
  REQUIRE_MESSAGE(r.ok(), r.error_message.value_or(""));
  CHECK(has_url(r, server.base_url() + "/dyn/worker.js"));
  CHECK(has_url(r, "https://cdn.jsdelivr.net/npm/from-worker.js"));
  CHECK(has_url(r, "https://d0late.cloudfront.net/pixel.gif"));
}

TEST_CASE("every browser capture starts with an empty cache") {
  REQUIRE_BROWSER();
  FixtureServer server(fixture_path("corpus/sites"));
  BrowserBackend backend(options_for(browser_bin));
  for (int i = 0; i < 2; ++i) {
    const auto r = backend.capture_page(server.base_url() + "/s01/", {10000ms, 1000ms, 300ms});
    REQUIRE(r.ok());
  }
  const auto log = server.request_log();
  CHECK(std::count(log.begin(), log.end(), "/s01/style.css") == 2);
}

TEST_CASE("browser navigation failure carries the browser's error text") {
  REQUIRE_BROWSER();
  BrowserBackend backend(options_for(browser_bin));
  const auto r = backend.capture_page("http://no-such-host.invalid/", {10000ms, 1000ms, 300ms});
  CHECK_FALSE(r.ok());
  CHECK(r.requests.empty());
  CHECK(r.error_message == std::string("net::ERR_NAME_NOT_RESOLVED"));
}

TEST_CASE("browser capture is bounded on a stalled server") {
  REQUIRE_BROWSER();
  FixtureServer server(fixture_path("corpus/sites"));
  server.hold("/s02/");
  BrowserBackend backend(options_for(browser_bin));
  const CaptureTimeouts t{1500ms, 500ms, 200ms};
  const auto start = std::chrono::steady_clock::now();
  const auto r = backend.capture_page(server.base_url() + "/s02/", t);
  const auto took = std::chrono::steady_clock::now() - start;
  CHECK_FALSE(r.ok());
  CHECK(took <= t.nav_timeout + t.settle_timeout + kCaptureGrace);
  server.release();
  // backend stays usable afterwards
  const auto again = backend.capture_page(server.base_url() + "/s01/", {10000ms, 500ms, 200ms});
  CHECK(again.ok());
}
