#include <doctest.h>

#include "support/test_paths.hpp"
#include "xborder/classify.hpp"

using namespace xborder;
using xborder::testing::fixture_path;

namespace {

const Timestamp kT0{std::chrono::milliseconds{1700000000000LL}};

CaptureResult ok_capture(std::vector<CapturedRequest> reqs) {
  CaptureResult r;
  r.target_url = "http://ente.example/";
  r.requests = std::move(reqs);
  return r;
}

const EnrichedEntity kEntity{"c_x1", "Comune di X", "L6", "Municipalities", "http://ente.example/"};

}  // namespace

TEST_CASE("matched font request is attributed through the group table") {
  const auto bl = Blacklist::load_file(fixture_path("blacklist.json"));
  const auto attr = AttributionMap::load_file(fixture_path("attribution.csv"));
  const auto c = classify_requests(
      kEntity, ok_capture({{"http://ente.example/", ResourceHint::Document, kT0},
                           {"https://fonts.example-cdn.com/roboto.woff2", ResourceHint::Font, kT0}}),
      bl, attr);
  CHECK(c.status.status == EntityState::Bad);
  CHECK(c.status.bad_request_count == 1);
  REQUIRE(c.bad_requests.size() == 1);
  const BadRequest want{"c_x1",
                        "Comune di X",
                        "Municipalities",
                        "https://fonts.example-cdn.com/roboto.woff2",
                        "fonts.example-cdn.com",
                        "examplecdn",
                        "Example CDN Inc",
                        "US",
                        ServiceType::Cdn,
                        ResourceHint::Font,
                        kT0};
  CHECK(c.bad_requests[0] == want);
}

TEST_CASE("clean capture is GOOD, error capture is ERROR with its message") {
  const auto bl = Blacklist::load_file(fixture_path("blacklist.json"));
  const auto attr = AttributionMap::load_file(fixture_path("attribution.csv"));
  const auto good = classify_requests(
      kEntity, ok_capture({{"http://ente.example/", ResourceHint::Document, kT0}}), bl, attr);
  CHECK(good.status == EntityStatus{"c_x1", EntityState::Good, 0, std::nullopt});

  const auto err = classify_requests(
      kEntity,
      CaptureResult::failure("http://ente.example/", BackendKind::Browser,
                             "net::ERR_NAME_NOT_RESOLVED", std::chrono::milliseconds{3}),
      bl, attr);
  CHECK(err.status.status == EntityState::Error);
  CHECK(err.status.error_message == std::string("net::ERR_NAME_NOT_RESOLVED"));
  CHECK(err.bad_requests.empty());
}

TEST_CASE("every matching request is kept, including repeats") {
  const auto bl = Blacklist::load_file(fixture_path("blacklist.json"));
  const auto attr = AttributionMap::load_file(fixture_path("attribution.csv"));
  const auto c = classify_requests(
      kEntity,
      ok_capture({{"https://www.youtube.com/embed/a", ResourceHint::Frame, kT0},
                  {"https://www.youtube.com/embed/a", ResourceHint::Frame, kT0},
                  {"https://i.ytimg.com/vi/a/hq.jpg", ResourceHint::Image, kT0},
                  {"https://example.org/x.js", ResourceHint::Script, kT0}}),
      bl, attr);
  CHECK(c.status.bad_request_count == 3);
  CHECK(c.bad_requests.size() == 3);
}

TEST_CASE("groups without attribution default to unknown and warn") {
  const auto bl = Blacklist::from_groups({{"orphan", {"orphan.example"}}});
  const AttributionMap attr;
  Warnings w;
  const auto c = classify_requests(
      kEntity, ok_capture({{"https://api.orphan.example/v1", ResourceHint::Xhr, kT0}}), bl, attr, &w);
  REQUIRE(c.bad_requests.size() == 1);
  CHECK(c.bad_requests[0].company == kUnknownCompany);
  CHECK(c.bad_requests[0].country == kUnknownCountry);
  CHECK(c.bad_requests[0].service_type == ServiceType::Other);
  CHECK(w.size() >= 1);
}

TEST_CASE("entity state names") {
  CHECK(to_string(EntityState::Good) == "GOOD");
  CHECK(to_string(EntityState::Bad) == "BAD");
  CHECK(to_string(EntityState::Error) == "ERROR");
}
