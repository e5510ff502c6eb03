#include <doctest.h>

#include <sstream>

#include "xborder/csv.hpp"
#include "xborder/timestamp.hpp"
#include "xborder/url.hpp"

using namespace xborder;

TEST_CASE("csv delimiter detection") {
  CHECK(csv::detect_delimiter("a;b;c") == ';');
  CHECK(csv::detect_delimiter("a,b,c") == ',');
  CHECK(csv::detect_delimiter("a;b,c") == ',');
  CHECK(csv::detect_delimiter("single") == ',');
}

TEST_CASE("csv quoting round trip") {
  const csv::Row fields{"plain", "with,comma", "with \"quote\"", "multi\nline", " padded", ""};
  const std::string line = csv::format_row(fields);
  CHECK(line == "plain,\"with,comma\",\"with \"\"quote\"\"\",\"multi\nline\",\" padded\",\n");
  std::istringstream in("h1,h2,h3,h4,h5,h6\n" + line);
  const auto t = csv::read(in);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0] == fields);
}

TEST_CASE("csv reader strips BOM, trims headers, skips blank lines") {
  std::istringstream in("\xEF\xBB\xBF Code ; Name \n\nX1;Alpha\n\r\nX2;Beta\r\n");
  const auto t = csv::read(in);
  CHECK(t.delimiter == ';');
  CHECK(t.header == csv::Row{"Code", "Name"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1] == csv::Row{"X2", "Beta"});
  CHECK(t.column("Name") == 1);
  CHECK_FALSE(t.column("Other").has_value());
}

TEST_CASE("csv invalid UTF-8 is replaced, valid UTF-8 kept") {
  CHECK(csv::sanitize_utf8("Citt\xC3\xA0") == "Citt\xC3\xA0");
  CHECK(csv::sanitize_utf8("Citt\xE0") == "Citt\xEF\xBF\xBD");
}

TEST_CASE("timestamp format and parse") {
  const auto t = parse_timestamp("2024-03-01T12:34:56.789Z");
  REQUIRE(t.has_value());
  CHECK(format_timestamp(*t) == "2024-03-01T12:34:56.789Z");
  CHECK(t->time_since_epoch().count() == 1709296496789LL);
  CHECK_FALSE(parse_timestamp("yesterday").has_value());
}

TEST_CASE("url parse lowercases scheme and host only") {
  auto u = url::parse("HTTPS://Www.Example.ORG:8443/A/b?Q=1#Frag");
  REQUIRE(u.has_value());
  CHECK(u->scheme == "https");
  CHECK(u->host == "www.example.org");
  CHECK(u->port == 8443);
  CHECK(u->path == "/A/b");
  CHECK(u->query == "Q=1");
  CHECK(u->str() == "https://www.example.org:8443/A/b?Q=1#Frag");
  CHECK(u->origin() == "https://www.example.org:8443");
  CHECK_FALSE(url::parse("http://bad host/").has_value());
  CHECK_FALSE(url::parse("no scheme").has_value());
}

TEST_CASE("url resolve follows reference resolution rules") {
  const std::string base = "http://a/b/c/d;p?q";
  const std::pair<const char*, const char*> cases[] = {
      {"g", "http://a/b/c/g"},           {"./g", "http://a/b/c/g"},
      {"g/", "http://a/b/c/g/"},         {"/g", "http://a/g"},
      {"//g", "http://g"},               {"?y", "http://a/b/c/d;p?y"},
      {"g?y", "http://a/b/c/g?y"},       {"#s", "http://a/b/c/d;p?q#s"},
      {"", "http://a/b/c/d;p?q"},        {".", "http://a/b/c/"},
      {"..", "http://a/b/"},             {"../g", "http://a/b/g"},
      {"../..", "http://a/"},            {"../../../g", "http://a/g"},
      {"/./g", "http://a/g"},            {"g;x=1/../y", "http://a/b/c/y"},
      {"https://other/x", "https://other/x"},
  };
  for (const auto& [ref, want] : cases) {
    CAPTURE(ref);
    CHECK(url::resolve(base, ref) == want);
  }
  CHECK(url::resolve("https://h.example/p/", "img/a b.png") == "https://h.example/p/img/a%20b.png");
}

TEST_CASE("url hostname extraction") {
  CHECK(url::hostname("https://WWW.YouTube.com./embed/x") == "www.youtube.com");
  CHECK(url::hostname("http://user:pw@cdn.example.net:81/") == "cdn.example.net");
  CHECK_FALSE(url::hostname("data:text/plain,hi").has_value());
  CHECK_FALSE(url::hostname("not a url").has_value());
}
