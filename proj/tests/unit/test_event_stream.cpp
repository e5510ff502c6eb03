#include <doctest.h>

#include <atomic>
#include <thread>

#include "support/fixture_server.hpp"
#include "support/test_paths.hpp"
#include "support/ws_client.hpp"
#include "xborder/event_stream.hpp"

using namespace xborder;
using namespace std::chrono_literals;
using nlohmann::json;
using xborder::testing::FixtureServer;
using xborder::testing::WsClient;
using xborder::testing::fixture_path;

namespace {

const Timestamp kT0{std::chrono::milliseconds{1700000000000LL}};

class Recorder final : public EventPublisher {
 public:
  void publish(const std::string& line) override {
    std::lock_guard lock(mutex);
    lines.push_back(line);
  }
  std::vector<json> messages() {
    std::lock_guard lock(mutex);
    std::vector<json> out;
    for (const auto& l : lines) out.push_back(json::parse(l));
    return out;
  }
  std::size_t count(const std::string& type) {
    std::size_t n = 0;
    for (const auto& m : messages()) n += m.at("type") == type;
    return n;
  }
  std::mutex mutex;
  std::vector<std::string> lines;
};

struct World {
  Blacklist bl = Blacklist::load_file(fixture_path("blacklist.json"));
  AttributionMap attr = AttributionMap::load_file(fixture_path("attribution.csv"));
};

}  // namespace

TEST_CASE("message framing is one JSON object per line") {
  const auto line = format_stream_message("page", {{"page_url", "http://a.example/"}});
  CHECK(line == "{\"payload\":{\"page_url\":\"http://a.example/\"},\"type\":\"page\"}\n");
}

TEST_CASE("live monitor classifies and summarises") {
  World w;
  Recorder rec;
  LiveMonitor mon(w.bl, w.attr, rec);
  mon.on_page({"http://comune.example/", kT0});
  mon.on_request({{"http://comune.example/", ResourceHint::Document, kT0}, "http://comune.example/"});
  mon.on_request({{"https://www.youtube.com/embed/x", ResourceHint::Frame, kT0}, "http://comune.example/"});

  for (const auto& l : rec.lines) {
    CHECK(l.back() == '\n');
    CHECK(std::count(l.begin(), l.end(), '\n') == 1);
  }
  const auto msgs = rec.messages();
  std::vector<std::string> types;
  for (const auto& m : msgs) types.push_back(m.at("type"));
  CHECK(types == std::vector<std::string>{"page", "request", "request", "bad_request", "summary"});

  const auto& bad = msgs[3].at("payload");
  CHECK(bad.at("request_url") == "https://www.youtube.com/embed/x");
  CHECK(bad.at("page_url") == "http://comune.example/");
  CHECK(bad.at("matched_pattern") == "youtube.com");
  CHECK(bad.at("group_name") == "youtube");
  CHECK(bad.at("company") == "Google");
  CHECK(bad.at("country") == "US");
  CHECK(bad.at("service_type") == "SOCIAL_MULTIMEDIA");
  CHECK(bad.at("resource_hint") == "FRAME");
  CHECK(bad.at("observed_at") == "2023-11-14T22:13:20.000Z");

  const auto& req = msgs[1].at("payload");
  for (const char* k : {"request_url", "resource_hint", "observed_at", "page_url"}) CHECK(req.contains(k));

  const auto c = mon.counts();
  CHECK(c.pages == 1);
  CHECK(c.requests == 2);
  CHECK(c.bad_requests == 1);
  CHECK(c.by_company.at("Google") == 1);
  CHECK(c.by_country.at("US") == 1);
  CHECK(c.by_group.at("youtube") == 1);
  CHECK(msgs[4].at("payload").at("bad_requests") == 1);
}

TEST_CASE("stream server broadcasts to every subscriber and ignores input") {
  EventStreamServer server(0);
  REQUIRE(server.port() != 0);
  WsClient a("127.0.0.1", server.port());
  WsClient b("127.0.0.1", server.port());
  for (int i = 0; i < 50 && server.subscriber_count() < 2; ++i) std::this_thread::sleep_for(20ms);
  REQUIRE(server.subscriber_count() == 2);
  a.write("anything at all");
  server.publish(format_stream_message("page", {{"page_url", "http://x.example/"}}));
  server.publish(format_stream_message("summary", {{"pages", 1}}));
  for (auto* c : {&a, &b}) {
    const auto f1 = c->read(2000ms);
    const auto f2 = c->read(2000ms);
    REQUIRE(f1.has_value());
    REQUIRE(f2.has_value());
    CHECK(json::parse(*f1).at("type") == "page");
    CHECK(json::parse(*f2).at("type") == "summary");
  }
}

TEST_CASE("scripted browser session streams page, requests and a bad request") {
  const std::string bin = xborder::testing::browser_from_env();
  if (bin.empty()) {
    MESSAGE("XBORDER_BROWSER not set, browser check skipped");
    return;
  }
  World w;
  FixtureServer site(fixture_path("corpus/sites"));
  EventStreamServer server(0);
  WsClient sub("127.0.0.1", server.port());
  for (int i = 0; i < 50 && server.subscriber_count() < 1; ++i) std::this_thread::sleep_for(20ms);

  BrowserOptions opts;
  opts.binary = bin;
  std::vector<json> received;
  std::atomic<bool> got_bad{false};
  std::thread collector([&] {
    const auto deadline = std::chrono::steady_clock::now() + 20s;
    while (std::chrono::steady_clock::now() < deadline) {
      auto f = sub.read(200ms);
      if (!f) {
        if (got_bad) break;
        continue;
      }
      auto m = json::parse(*f);
      if (m.at("type") == "summary") got_bad = true;
      received.push_back(std::move(m));
    }
  });
  const auto counts = stream_events(opts, server, w.bl, w.attr, site.base_url() + "/s12/",
                                    [&](InteractiveSession& s) {
                                      for (int i = 0; i < 200 && !got_bad; ++i)
                                        std::this_thread::sleep_for(50ms);
                                      s.close();
                                    });
  collector.join();
  std::map<std::string, int> by_type;
  for (const auto& m : received) ++by_type[m.at("type").get<std::string>()];
  CHECK(by_type["page"] >= 1);
  CHECK(by_type["request"] >= 2);
  CHECK(by_type["bad_request"] >= 1);
  CHECK(by_type["summary"] >= 1);
  CHECK(counts.bad_requests >= 1);
  for (const auto& m : received)
    if (m.at("type") == "bad_request") CHECK(m.at("payload").at("group_name") == "aws");
}
