// xborder: audit which non-EEA third parties public-administration websites
// contact on page load.

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

#include "xborder/blacklist.hpp"
#include "xborder/browser_backend.hpp"
#include "xborder/error.hpp"
#include "xborder/event_stream.hpp"
#include "xborder/registry.hpp"
#include "xborder/report.hpp"
#include "xborder/scan.hpp"
#include "xborder/static_backend.hpp"

namespace {

using namespace xborder;
using std::chrono::milliseconds;

std::atomic<bool> g_interrupted{false};

struct RegistryArgs {
  std::string entities;
  std::string categories;
  std::string header_map;
};

struct BrowserArgs {
  std::string binary;
  std::string attach;
  std::uint16_t debug_port = 0;
  std::vector<std::string> extra;

  BrowserOptions options(bool headless) const {
    BrowserOptions o;
    if (!binary.empty()) o.binary = binary;
    if (!attach.empty()) o.attach_endpoint = attach;
    o.debug_port = debug_port;
    o.extra_args = extra;
    o.headless = headless;
    return o;
  }
};

void add_registry_options(CLI::App* cmd, RegistryArgs& args) {
  cmd->add_option("--entities", args.entities, "Entity registry CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--categories", args.categories, "Category registry CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--header-map", args.header_map, "Header-mapping config (field = Header, ...)")
      ->check(CLI::ExistingFile);
}

void add_browser_options(CLI::App* cmd, BrowserArgs& args) {
  cmd->add_option("--browser", args.binary,
                  std::string("Chromium-family binary (default: $") + kBrowserEnvVar + " or PATH)");
  cmd->add_option("--browser-endpoint", args.attach,
                  "Attach to a running browser's ws:// debugger URL instead of launching one");
  cmd->add_option("--debug-port", args.debug_port, "Remote debugging port for the launched browser (0 = any)");
  cmd->add_option("--browser-arg", args.extra, "Extra browser command-line flag (repeatable)");
}

std::vector<EnrichedEntity> load_registry(const RegistryArgs& args, Warnings& warnings) {
  const HeaderMapping mapping =
      args.header_map.empty() ? HeaderMapping{} : HeaderMapping::from_config_file(args.header_map);
  std::ifstream ent(args.entities, std::ios::binary);
  std::ifstream cat(args.categories, std::ios::binary);
  if (!ent) throw IngestError("cannot open " + args.entities);
  if (!cat) throw IngestError("cannot open " + args.categories);
  auto parsed = parse_entities(ent, mapping, &warnings);
  auto categories = parse_categories(cat, mapping, &warnings);
  return join_entities(parsed.entities, categories, &warnings);
}

void print_match(const std::optional<MatchResult>& m, const AttributionMap* attribution) {
  if (!m) {
    std::cout << "no-match\n";
    return;
  }
  std::cout << "matched_pattern=" << m->matched_pattern << " group_name=" << m->group_name
            << " match_length=" << m->match_length;
  if (attribution) {
    if (const auto* a = attribution->find(m->group_name))
      std::cout << " company=" << a->company << " country=" << a->country
                << " service_type=" << to_string(a->service_type);
  }
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect personal-data transfers from public-administration websites to non-EEA domains"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // scan
  RegistryArgs scan_registry;
  BrowserArgs scan_browser;
  std::string blacklist_path, attribution_path, out_dir, backend_name = "browser", user_agent;
  ScanConfig scan_config;
  long long nav_timeout = 30000, settle_timeout = 3000, quiet_window = 500;
  bool quiet = false;
  auto* scan = app.add_subcommand("scan", "Scan every entity and write bad-requests.csv and done.csv");
  add_registry_options(scan, scan_registry);
  scan->add_option("--blacklist", blacklist_path, "Grouped domain blacklist (hosts.json shape)")
      ->required()
      ->check(CLI::ExistingFile);
  scan->add_option("--attribution", attribution_path, "group_name,company,country,service_type CSV")
      ->required()
      ->check(CLI::ExistingFile);
  scan->add_option("--out", out_dir, "Output directory")->required();
  scan->add_option("--backend", backend_name, "Capture backend")->check(CLI::IsMember({"browser", "static"}));
  scan->add_option("--concurrency", scan_config.concurrency, "Simultaneous captures")
      ->check(CLI::PositiveNumber);
  scan->add_option("--nav-timeout", nav_timeout, "Navigation timeout in ms")->check(CLI::PositiveNumber);
  scan->add_option("--settle-timeout", settle_timeout, "Post-load listening period in ms")
      ->check(CLI::PositiveNumber);
  scan->add_option("--quiet-window", quiet_window, "End the post-load period after this many quiet ms")
      ->check(CLI::PositiveNumber);
  scan->add_option("--launch-rate", scan_config.launch_rate, "New capture sessions per second (0 = unlimited)");
  scan->add_option("--user-agent", user_agent, "User-Agent for the static backend");
  scan->add_flag("--resume", scan_config.resume, "Skip entities already present in done.csv");
  scan->add_flag("-q,--quiet", quiet, "No per-entity progress lines");
  add_browser_options(scan, scan_browser);

  // join
  RegistryArgs join_registry;
  std::string join_output;
  auto* join = app.add_subcommand("join", "Join the registry files into the scan-input CSV");
  add_registry_options(join, join_registry);
  join->add_option("-o,--output", join_output, "Output file (default: stdout)");

  // report
  std::string report_out, report_dir, report_attribution, report_formats = "csv,json,svg";
  auto* report = app.add_subcommand("report", "Aggregate a finished scan");
  report->add_option("--out", report_out, "Scan output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--attribution", report_attribution, "Attribution CSV (default: values in the rows)")
      ->check(CLI::ExistingFile);
  report->add_option("--report-dir", report_dir, "Where to write the report (default: OUT/report)");
  report->add_option("--formats", report_formats, "Comma list of csv,json,svg");

  // watch
  BrowserArgs watch_browser;
  std::string watch_blacklist, watch_attribution, watch_url;
  std::uint16_t watch_port = kDefaultStreamPort;
  bool watch_headless = false;
  auto* watch = app.add_subcommand("watch", "Interactive browsing with a live event stream");
  watch->add_option("--port", watch_port, "Event-stream WebSocket port");
  watch->add_option("--blacklist", watch_blacklist, "Grouped domain blacklist")->required()->check(CLI::ExistingFile);
  watch->add_option("--attribution", watch_attribution, "Attribution CSV")->required()->check(CLI::ExistingFile);
  watch->add_option("--url", watch_url, "Page to open first");
  watch->add_flag("--headless", watch_headless, "Run the browser without a window");
  add_browser_options(watch, watch_browser);

  // match
  std::string match_url_arg, match_blacklist, match_attribution;
  auto* match = app.add_subcommand("match", "Match one URL against the blacklist");
  match->add_option("--url", match_url_arg, "Request URL")->required();
  match->add_option("--blacklist", match_blacklist, "Grouped domain blacklist")->required()->check(CLI::ExistingFile);
  match->add_option("--attribution", match_attribution, "Attribution CSV")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  Warnings warnings(Warnings::to_stderr());
  try {
    if (*join) {
      const auto rows = load_registry(join_registry, warnings);
      if (join_output.empty()) {
        write_scan_input(std::cout, rows);
      } else {
        std::ofstream out(join_output, std::ios::binary | std::ios::trunc);
        if (!out) throw OutputError("cannot write " + join_output);
        write_scan_input(out, rows);
      }
      return 0;
    }

    if (*match) {
      const auto bl = Blacklist::load_file(match_blacklist, &warnings);
      std::optional<AttributionMap> attr;
      if (!match_attribution.empty()) attr = AttributionMap::load_file(match_attribution, &warnings);
      print_match(bl.match_url(match_url_arg), attr ? &*attr : nullptr);
      return 0;
    }

    if (*report) {
      std::optional<AttributionMap> attr;
      if (!report_attribution.empty()) attr = AttributionMap::load_file(report_attribution, &warnings);
      const std::string dir = std::filesystem::path(report_out).string();
      const auto rep = compute_report(dir + "/" + std::string(kBadRequestsFile),
                                      dir + "/" + std::string(kDoneFile), attr ? &*attr : nullptr);
      const auto target = report_dir.empty() ? dir + "/report" : report_dir;
      for (const auto& path : emit_report(rep, target, parse_report_formats(report_formats)))
        std::cout << path << '\n';
      return 0;
    }

    if (*scan) {
      const auto entities = load_registry(scan_registry, warnings);
      const auto bl = Blacklist::load_file(blacklist_path, &warnings);
      const auto attr = AttributionMap::load_file(attribution_path, &warnings);
      attr.check_coverage(bl, &warnings);

      scan_config.out_dir = out_dir;
      scan_config.timeouts = {milliseconds(nav_timeout), milliseconds(settle_timeout),
                              milliseconds(quiet_window)};
      validate(scan_config);
      std::filesystem::create_directories(out_dir);
      {
        std::ofstream input(std::filesystem::path(out_dir) / "entities.csv", std::ios::binary | std::ios::trunc);
        if (!input) throw OutputError("cannot write to output directory " + out_dir);
        write_scan_input(input, entities);
      }

      std::unique_ptr<CaptureBackend> backend;
      if (backend_name == "static") {
        StaticBackendOptions opts;
        if (!user_agent.empty()) opts.user_agent = user_agent;
        backend = std::make_unique<StaticBackend>(opts);
      } else {
        backend = std::make_unique<BrowserBackend>(scan_browser.options(true));
      }

      std::size_t done = 0;
      const std::size_t total = entities.size();
      ScanProgress progress;
      if (!quiet)
        progress = [&](const EnrichedEntity& e, const EntityStatus& s) {
          std::cerr << '[' << ++done << '/' << total << "] " << e.ipa_code << ' ' << to_string(s.status);
          if (s.status == EntityState::Bad) std::cerr << " (" << s.bad_request_count << " bad requests)";
          if (s.error_message) std::cerr << " " << *s.error_message;
          std::cerr << '\n';
        };
      const auto summary = run_scan(entities, scan_config, bl, attr, *backend, &warnings, progress);
      std::cout << "processed=" << summary.processed << " good=" << summary.good << " bad=" << summary.bad
                << " error=" << summary.error << " invalid_url=" << summary.invalid_url
                << " skipped=" << summary.skipped << " bad_requests=" << summary.bad_requests << '\n';
      return 0;
    }

    if (*watch) {
      const auto bl = Blacklist::load_file(watch_blacklist, &warnings);
      const auto attr = AttributionMap::load_file(watch_attribution, &warnings);
      EventStreamServer server(watch_port);
      std::cerr << "event stream on ws://127.0.0.1:" << server.port() << "/ (Ctrl-C to stop)\n";
      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      const auto counts = stream_events(
          watch_browser.options(watch_headless), server, bl, attr,
          watch_url.empty() ? std::nullopt : std::optional<std::string>(watch_url),
          [](InteractiveSession& session) {
            while (!g_interrupted && !session.wait_closed_for(milliseconds(200))) {
            }
            session.close();
          });
      std::cout << "pages=" << counts.pages << " requests=" << counts.requests
                << " bad_requests=" << counts.bad_requests << '\n';
      return 0;
    }
  } catch (const BrowserUnavailable& e) {
    std::cerr << "error: browser unavailable: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
