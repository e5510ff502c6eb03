// Prints one PASS/FAIL/SKIP line per primary acceptance criterion and exits
// non-zero when any criterion fails.
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "support/fixture_server.hpp"
#include "support/oracles.hpp"
#include "support/test_paths.hpp"
#include "xborder/blacklist.hpp"
#include "xborder/browser_backend.hpp"
#include "xborder/registry.hpp"
#include "xborder/report.hpp"
#include "xborder/scan.hpp"
#include "xborder/static_backend.hpp"
#include "xborder/url.hpp"

using namespace xborder;
using namespace std::chrono_literals;
namespace fs = std::filesystem;
namespace xt = xborder::testing;

namespace {

// Pinned limits.
constexpr double kMatchTimeLimitSec = 5.0;
constexpr std::size_t kOracleHosts = 10000;
constexpr std::size_t kOraclePatterns = 200;
constexpr double kCorpusTimeLimitSec = 60.0;
constexpr std::size_t kKillAfter = 10;
constexpr std::size_t kConservationRows = 1000;

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Fixtures {
  Blacklist bl = Blacklist::load_file(xt::fixture_path("blacklist.json"));
  AttributionMap attr = AttributionMap::load_file(xt::fixture_path("attribution.csv"));
};

std::vector<EnrichedEntity> corpus_entities(const std::string& dir, const std::string& base) {
  std::ifstream ein(xt::materialize_entities(dir, base));
  std::ifstream cin(xt::fixture_path("corpus/categories.csv"));
  return join_entities(parse_entities(ein).entities, parse_categories(cin));
}

ScanConfig corpus_config(const std::string& out, int concurrency) {
  ScanConfig c;
  c.out_dir = out;
  c.concurrency = concurrency;
  c.launch_rate = 0;
  c.timeouts = {10000ms, 1500ms, 500ms};
  return c;
}

std::set<std::pair<std::string, std::string>> site_host_pairs(const std::string& bad_csv) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& r : read_bad_requests(bad_csv))
    out.insert({r.ipa_code, url::hostname(r.request_url).value_or("?")});
  return out;
}

// 1: trie vs brute force on hosts with near-misses, trailing dots, mixed case.
Outcome c1_oracle() {
  const auto corpus = xt::make_random_corpus(20240501, 10, kOraclePatterns / 10 + 8, kOracleHosts);
  std::vector<DomainGroup> groups = corpus.groups;
  // exactly kOraclePatterns patterns, two of them the youtube pair below
  std::size_t total = 0;
  for (auto& g : groups) {
    const auto room = kOraclePatterns - 2 - std::min(kOraclePatterns - 2, total);
    if (g.patterns.size() > room) g.patterns.resize(room);
    total += g.patterns.size();
  }
  groups.push_back({"adversarial", {"youtube.com", "youtube.co"}});
  total += 2;
  const auto bl = Blacklist::from_groups(groups);
  const auto flat = xt::flatten(groups);

  std::mt19937 rng(99);
  std::vector<std::string> urls;
  std::vector<std::string> canonical;
  const std::vector<std::string> fixed{"notyoutube.com", "www.youtube.com", "youtube.com.", "WWW.YOUTUBE.COM",
                                       "youtube.co",     "youtube.com.evil.example", "xyoutube.co"};
  for (std::size_t i = 0; i < kOracleHosts; ++i) {
    std::string host = i < fixed.size() ? fixed[i] : corpus.hosts[i];
    std::string canon = url::to_lower_ascii(host);
    if (canon.ends_with('.')) canon.pop_back();
    if (rng() % 4 == 0)
      for (auto& ch : host)
        if (rng() % 2) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (rng() % 5 == 0 && !host.ends_with('.')) host += '.';
    urls.push_back("https://" + host + "/p?q=" + std::to_string(i));
    canonical.push_back(canon);
  }
  std::vector<std::optional<MatchResult>> want;
  for (const auto& h : canonical) want.push_back(xt::brute_force_match(h, flat));

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::optional<MatchResult>> got;
  got.reserve(urls.size());
  for (const auto& u : urls) got.push_back(match_url(u, bl));
  const double took = seconds_since(t0);

  std::size_t diff = 0, hits = 0;
  for (std::size_t i = 0; i < urls.size(); ++i) {
    diff += got[i] != want[i];
    hits += want[i].has_value();
  }
  const bool ok = diff == 0 && total == kOraclePatterns && took < kMatchTimeLimitSec;
  return {ok ? Verdict::Pass : Verdict::Fail,
          std::to_string(diff) + " discrepancies over " + std::to_string(urls.size()) + " hosts (" +
              std::to_string(hits) + " matches) against " + std::to_string(total) + " patterns in " +
              fmt(took) + " s (limit " + fmt(kMatchTimeLimitSec) + " s)"};
}

// 2: the canonical longest-match example.
Outcome c2_youtube() {
  const auto bl = Blacklist::from_groups({{"g", {"youtube.co", "youtube.com"}}});
  const auto m = match_url("https://www.youtube.com/", bl);
  const bool ok = m && m->matched_pattern == "youtube.com";
  return {ok ? Verdict::Pass : Verdict::Fail,
          "matched_pattern=" + (m ? m->matched_pattern : std::string("none"))};
}

// 3: static end-to-end on the fixture corpus.
Outcome c3_static_corpus(const Fixtures& fx) {
  xt::FixtureServer server(xt::fixture_path("corpus/sites"));
  xt::TempDir dir;
  const auto entities = corpus_entities(dir.path(), server.base_url());
  StaticBackend backend;
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = run_scan(entities, corpus_config(dir.file("out"), 1), fx.bl, fx.attr, backend);
  const double took = seconds_since(t0);

  const auto masked = xt::mask_last_column(xt::read_text(dir.file("out/bad-requests.csv")));
  const auto golden = xt::read_text(xt::fixture_path("corpus/golden-bad-requests.csv"));
  const auto rep = compute_report(dir.file("out/bad-requests.csv"), dir.file("out/done.csv"), &fx.attr);

  const bool summary_ok = s.bad == 5 && s.good == 13 && s.error == 2;
  const bool golden_ok = masked == golden;
  const bool report_ok = rep.bad_fraction == 5.0 / 18.0 && rep.unreachable_fraction == 0.10;
  const bool ok = summary_ok && golden_ok && report_ok && took < kCorpusTimeLimitSec;
  std::ostringstream d;
  d << "summary {bad " << s.bad << ", good " << s.good << ", error " << s.error << "}, golden "
    << (golden_ok ? "identical" : "DIFFERS") << ", bad_fraction " << rep.bad_fraction << " (want "
    << 5.0 / 18.0 << "), unreachable_fraction " << rep.unreachable_fraction << ", " << fmt(took)
    << " s (limit " << fmt(kCorpusTimeLimitSec) << " s)";
  return {ok ? Verdict::Pass : Verdict::Fail, d.str()};
}

// 4: both backends flag the same (site, host) pairs.
Outcome c4_agreement(const Fixtures& fx, const std::string& browser) {
  if (browser.empty()) return {Verdict::Skip, "XBORDER_BROWSER not set"};
  xt::FixtureServer server(xt::fixture_path("corpus/sites"));
  xt::TempDir dir;
  const auto entities = corpus_entities(dir.path(), server.base_url());
  StaticBackend st;
  run_scan(entities, corpus_config(dir.file("static"), 4), fx.bl, fx.attr, st);
  BrowserOptions opts;
  opts.binary = browser;
  BrowserBackend br(opts);
  const auto s = run_scan(entities, corpus_config(dir.file("browser"), 4), fx.bl, fx.attr, br);
  const auto a = site_host_pairs(dir.file("static/bad-requests.csv"));
  const auto b = site_host_pairs(dir.file("browser/bad-requests.csv"));
  std::string detail = std::to_string(a.size()) + " static pairs, " + std::to_string(b.size()) +
                       " browser pairs, browser summary {bad " + std::to_string(s.bad) + ", good " +
                       std::to_string(s.good) + ", error " + std::to_string(s.error) + "}";
  if (a != b) {
    for (const auto& p : a)
      if (!b.count(p)) detail += "; only static: " + p.first + " " + p.second;
    for (const auto& p : b)
      if (!a.count(p)) detail += "; only browser: " + p.first + " " + p.second;
  }
  return {a == b && !a.empty() ? Verdict::Pass : Verdict::Fail, detail};
}

std::size_t count_done_lines(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!in.eof()) ++n;  // completed lines only
  }
  return n;
}

pid_t spawn(const std::vector<std::string>& argv) {
  const pid_t pid = fork();
  if (pid == 0) {
    if (FILE* null = std::fopen("/dev/null", "w")) dup2(fileno(null), STDOUT_FILENO);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execv(args[0], args.data());
    _exit(127);
  }
  return pid;
}

// 5: SIGKILL the CLI after ten entities, then resume.
Outcome c5_resume() {
  xt::FixtureServer server(xt::fixture_path("corpus/sites"));
  server.hold("/s11/");
  xt::TempDir dir;
  const auto entities = xt::materialize_entities(dir.path(), server.base_url());
  const std::string out = dir.file("out");
  std::vector<std::string> argv{XBORDER_CLI_PATH,
                                "scan",
                                "--entities", entities,
                                "--categories", xt::fixture_path("corpus/categories.csv"),
                                "--blacklist", xt::fixture_path("blacklist.json"),
                                "--attribution", xt::fixture_path("attribution.csv"),
                                "--out", out,
                                "--backend", "static",
                                "--concurrency", "1",
                                "--launch-rate", "0",
                                "--nav-timeout", "10000",
                                "-q"};
  const pid_t first = spawn(argv);
  const auto deadline = std::chrono::steady_clock::now() + 30s;
  std::size_t seen = 0;
  while (std::chrono::steady_clock::now() < deadline) {
    seen = count_done_lines(out + "/done.csv");
    if (seen >= kKillAfter) break;
    std::this_thread::sleep_for(10ms);
  }
  kill(first, SIGKILL);
  int status = 0;
  waitpid(first, &status, 0);
  const auto before = read_done(out + "/done.csv").size();
  server.release();
  if (seen != kKillAfter || before != kKillAfter)
    return {Verdict::Fail, "kill point missed: " + std::to_string(before) + " entities done at kill"};

  argv.push_back("--resume");
  const pid_t second = spawn(argv);
  waitpid(second, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    return {Verdict::Fail, "resumed scan exited abnormally"};

  const auto done = read_done(out + "/done.csv");
  std::set<std::string> codes;
  for (const auto& r : done) codes.insert(r.ipa_code);
  // genuine repeats are those a single uninterrupted scan produces
  std::map<std::pair<std::string, std::string>, int> pairs, expected;
  for (const auto& r : read_bad_requests(out + "/bad-requests.csv")) ++pairs[{r.ipa_code, r.request_url}];
  std::istringstream golden(xt::read_text(xt::fixture_path("corpus/golden-bad-requests.csv")));
  for (const auto& row : csv::read(golden, ',').rows) ++expected[{row[0], row[3]}];
  const bool ok = done.size() == 20 && codes.size() == 20 && pairs == expected;
  return {ok ? Verdict::Pass : Verdict::Fail,
          std::to_string(before) + " done at kill; after resume " + std::to_string(done.size()) +
              " records, " + std::to_string(codes.size()) + " unique ipa_codes, (ipa_code, request_url) pairs " +
              (pairs == expected ? "match an uninterrupted scan" : "DIFFER from an uninterrupted scan")};
}

// 6: aggregate conservation on random rows, checked against direct counts.
Outcome c6_conservation() {
  std::mt19937 rng(6);
  const std::vector<std::string> groups{"aws", "azure", "youtube", "google", "cdnjs", "jsdelivr", "fastly",
                                        "facebook"};
  const std::vector<std::string> companies{"Amazon", "Microsoft", "Google", "Google", "Cloudflare",
                                           "Prospect One", "Fastly", "Meta"};
  const ServiceType services[] = {ServiceType::Cloud, ServiceType::Cloud, ServiceType::SocialMultimedia,
                                  ServiceType::Other, ServiceType::Cdn,   ServiceType::Cdn,
                                  ServiceType::Cdn,   ServiceType::SocialMultimedia};
  std::vector<ScanRecord> done;
  const Timestamp t{std::chrono::milliseconds{1700000000000LL}};
  for (int e = 0; e < 300; ++e) done.push_back({"e" + std::to_string(e), Disposition::DoneOk, std::nullopt, t});
  std::vector<BadRequest> rows;
  std::map<std::string, std::size_t> want_group, want_company, want_service;
  for (std::size_t i = 0; i < kConservationRows; ++i) {
    const auto g = rng() % groups.size();
    const auto e = rng() % 300;
    rows.push_back({"e" + std::to_string(e), "Ente", "K" + std::to_string(e % 7), "https://h.example/",
                    "h.example", groups[g], companies[g], "US", services[g], ResourceHint::Script, t});
    ++want_group[groups[g]];
    ++want_company[companies[g]];
    ++want_service[std::string(to_string(services[g]))];
  }
  const auto rep = compute_report(rows, done);
  auto check = [](const Ranking& r, const std::map<std::string, std::size_t>& want, std::size_t& sum) {
    sum = 0;
    bool ok = r.size() == want.size();
    for (std::size_t i = 0; i < r.size(); ++i) {
      sum += r[i].count;
      auto it = want.find(r[i].name);
      ok = ok && it != want.end() && it->second == r[i].count;
      if (i > 0) {
        const auto& a = r[i - 1];
        const auto& b = r[i];
        ok = ok && (a.count > b.count || (a.count == b.count && a.name < b.name));
      }
    }
    return ok;
  };
  std::size_t sg, sc, ss;
  const bool ok = check(rep.requests_by_group, want_group, sg) &&
                  check(rep.requests_by_company, want_company, sc) &&
                  check(rep.requests_by_service, want_service, ss) && sg == kConservationRows &&
                  sc == kConservationRows && ss == kConservationRows;
  return {ok ? Verdict::Pass : Verdict::Fail,
          "sums group=" + std::to_string(sg) + " company=" + std::to_string(sc) + " service=" +
              std::to_string(ss) + " of " + std::to_string(kConservationRows) + " rows"};
}

// 7: the browser's own error text lands in done.csv.
Outcome c7_error_text(const Fixtures& fx, const std::string& browser) {
  if (browser.empty()) return {Verdict::Skip, "XBORDER_BROWSER not set"};
  xt::TempDir dir;
  const std::vector<EnrichedEntity> ents{
      {"c_bad_dns", "Ente irraggiungibile", "L6", "Municipalities", "http://unresolvable-host.invalid/"}};
  BrowserOptions opts;
  opts.binary = browser;
  BrowserBackend br(opts);
  run_scan(ents, corpus_config(dir.path(), 1), fx.bl, fx.attr, br);
  const auto done = read_done(dir.file("done.csv"));
  const std::string msg = done.size() == 1 ? done[0].error_message.value_or("") : "";
  const bool ok = done.size() == 1 && done[0].disposition == Disposition::DoneError &&
                  msg.find("ERR_NAME_NOT_RESOLVED") != std::string::npos;
  return {ok ? Verdict::Pass : Verdict::Fail, "done.csv error_message=\"" + msg + "\""};
}

}  // namespace

int main() {
  const std::string browser = xt::browser_from_env();
  Fixtures fx;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 matching oracle equivalence", c1_oracle},
      {"2 longest-match example", c2_youtube},
      {"3 static fixture corpus end-to-end", [&] { return c3_static_corpus(fx); }},
      {"4 browser/static agreement", [&] { return c4_agreement(fx, browser); }},
      {"5 resume after kill", c5_resume},
      {"6 analytics conservation", c6_conservation},
      {"7 browser error-message fidelity", [&] { return c7_error_text(fx, browser); }},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    failures += o.verdict == Verdict::Fail;
    std::cout << tag << "  criterion " << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
