#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "xborder/blacklist.hpp"
#include "xborder/browser_backend.hpp"
#include "xborder/error.hpp"
#include "xborder/html_resources.hpp"
#include "xborder/registry.hpp"
#include "xborder/report.hpp"
#include "xborder/scan.hpp"
#include "xborder/static_backend.hpp"

namespace py = pybind11;
using namespace xborder;

namespace {

py::dict to_dict(const EnrichedEntity& e) {
  py::dict d;
  d["ipa_code"] = e.ipa_code;
  d["name"] = e.name;
  d["category_code"] = e.category_code;
  d["category_name"] = e.category_name;
  d["website_url"] = e.website_url;
  return d;
}

EnrichedEntity from_dict(const py::dict& d) {
  auto get = [&](const char* k) {
    return d.contains(k) ? py::str(d[k]).cast<std::string>() : std::string();
  };
  return {get("ipa_code"), get("name"), get("category_code"), get("category_name"), get("website_url")};
}

py::dict to_dict(const ScanSummary& s) {
  py::dict d;
  d["processed"] = s.processed;
  d["good"] = s.good;
  d["bad"] = s.bad;
  d["error"] = s.error;
  d["invalid_url"] = s.invalid_url;
  d["skipped"] = s.skipped;
  d["bad_requests"] = s.bad_requests;
  return d;
}

std::optional<py::dict> match_dict(const std::optional<MatchResult>& m) {
  if (!m) return std::nullopt;
  py::dict d;
  d["matched_pattern"] = m->matched_pattern;
  d["group_name"] = m->group_name;
  d["match_length"] = m->match_length;
  return d;
}

std::unique_ptr<CaptureBackend> make_backend(const std::string& kind, const std::optional<std::string>& browser) {
  const auto b = parse_backend_kind(kind);
  if (!b) throw std::invalid_argument("backend must be 'browser' or 'static'");
  if (*b == BackendKind::Static) return std::make_unique<StaticBackend>();
  BrowserOptions opts;
  opts.binary = browser;
  return std::make_unique<BrowserBackend>(opts);
}

}  // namespace

PYBIND11_MODULE(_xborder, m) {
  m.doc() = "Third-party request scanner core";
  m.attr("__version__") = std::string(kToolVersion);

  py::register_exception<IngestError>(m, "IngestError", PyExc_ValueError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_ValueError);
  py::register_exception<OutputError>(m, "OutputError", PyExc_OSError);
  py::register_exception<BrowserUnavailable>(m, "BrowserUnavailable", PyExc_RuntimeError);

  m.def("validate_url", [](const std::string& raw) {
    const auto v = validate_url(raw);
    py::dict d;
    d["verdict"] = std::string(to_string(v.verdict));
    d["normalized_url"] = v.normalized_url;
    d["reason"] = v.reason;
    return d;
  });

  py::class_<Blacklist>(m, "Blacklist")
      .def_static("load_file", [](const std::string& path) { return Blacklist::load_file(path); })
      .def_static("from_groups",
                  [](const std::map<std::string, std::vector<std::string>>& groups) {
                    std::vector<DomainGroup> g;
                    for (const auto& [name, patterns] : groups) g.push_back({name, patterns});
                    return Blacklist::from_groups(std::move(g));
                  })
      .def("match_url", [](const Blacklist& bl, const std::string& u) { return match_dict(bl.match_url(u)); })
      .def("match_host", [](const Blacklist& bl, const std::string& h) { return match_dict(bl.match_host(h)); })
      .def_property_readonly("pattern_count", &Blacklist::pattern_count);

  py::class_<AttributionMap>(m, "AttributionMap")
      .def(py::init<>())
      .def_static("load_file", [](const std::string& path) { return AttributionMap::load_file(path); })
      .def("lookup", [](const AttributionMap& a, const std::string& group) -> std::optional<py::dict> {
        const auto* e = a.find(group);
        if (!e) return std::nullopt;
        py::dict d;
        d["company"] = e->company;
        d["country"] = e->country;
        d["service_type"] = std::string(to_string(e->service_type));
        return d;
      })
      .def("__len__", &AttributionMap::size);

  m.def("extract_static_resources", [](const std::string& html, const std::string& base) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& r : extract_static_resources(html, base))
      out.emplace_back(r.url, std::string(to_string(r.hint)));
    return out;
  });

  m.def(
      "load_entities",
      [](const std::string& entities_path, const std::string& categories_path,
         const std::optional<std::string>& header_map) {
        const HeaderMapping mapping = header_map ? HeaderMapping::from_config_file(*header_map) : HeaderMapping{};
        std::ifstream ein(entities_path), cin(categories_path);
        if (!ein) throw IngestError("cannot open " + entities_path);
        if (!cin) throw IngestError("cannot open " + categories_path);
        const auto joined = join_entities(parse_entities(ein, mapping).entities, parse_categories(cin, mapping));
        py::list out;
        for (const auto& e : joined) out.append(to_dict(e));
        return out;
      },
      py::arg("entities"), py::arg("categories"), py::arg("header_map") = py::none());

  m.def(
      "capture_page",
      [](const std::string& target, const std::string& backend, const std::optional<std::string>& browser,
         int nav_timeout_ms, int settle_timeout_ms) {
        auto b = make_backend(backend, browser);
        CaptureResult r;
        {
          py::gil_scoped_release release;
          r = b->capture_page(target, {std::chrono::milliseconds(nav_timeout_ms),
                                       std::chrono::milliseconds(settle_timeout_ms), std::chrono::milliseconds(500)});
        }
        py::dict d;
        d["ok"] = r.ok();
        d["error_message"] = r.error_message;
        py::list reqs;
        for (const auto& q : r.requests)
          reqs.append(py::make_tuple(q.request_url, std::string(to_string(q.resource_hint))));
        d["requests"] = reqs;
        return d;
      },
      py::arg("url"), py::arg("backend") = "static", py::arg("browser") = py::none(),
      py::arg("nav_timeout_ms") = 30000, py::arg("settle_timeout_ms") = 3000);

  m.def(
      "scan",
      [](const std::vector<py::dict>& entities, const std::string& out_dir, const Blacklist& bl,
         const AttributionMap& attr, const std::string& backend, int concurrency, int nav_timeout_ms,
         int settle_timeout_ms, bool resume, double launch_rate, const std::optional<std::string>& browser) {
        std::vector<EnrichedEntity> ents;
        for (const auto& d : entities) ents.push_back(from_dict(d));
        ScanConfig cfg;
        cfg.out_dir = out_dir;
        cfg.concurrency = concurrency;
        cfg.timeouts.nav_timeout = std::chrono::milliseconds(nav_timeout_ms);
        cfg.timeouts.settle_timeout = std::chrono::milliseconds(settle_timeout_ms);
        cfg.resume = resume;
        cfg.launch_rate = launch_rate;
        auto b = make_backend(backend, browser);
        ScanSummary s;
        {
          py::gil_scoped_release release;
          s = run_scan(ents, cfg, bl, attr, *b);
        }
        return to_dict(s);
      },
      py::arg("entities"), py::arg("out_dir"), py::arg("blacklist"), py::arg("attribution"),
      py::arg("backend") = "static", py::arg("concurrency") = 8, py::arg("nav_timeout_ms") = 30000,
      py::arg("settle_timeout_ms") = 3000, py::arg("resume") = false, py::arg("launch_rate") = 4.0,
      py::arg("browser") = py::none());

  m.def(
      "report_json",
      [](const std::string& out_dir, const AttributionMap* attr) {
        const auto rep = compute_report(out_dir + "/" + std::string(kBadRequestsFile),
                                        out_dir + "/" + std::string(kDoneFile), attr);
        return to_json(rep).dump();
      },
      py::arg("out_dir"), py::arg("attribution") = nullptr);

  m.def(
      "emit_report",
      [](const std::string& out_dir, const std::string& report_dir, const std::string& formats,
         const AttributionMap* attr) {
        const auto rep = compute_report(out_dir + "/" + std::string(kBadRequestsFile),
                                        out_dir + "/" + std::string(kDoneFile), attr);
        return emit_report(rep, report_dir, parse_report_formats(formats));
      },
      py::arg("out_dir"), py::arg("report_dir"), py::arg("formats") = "csv,json,svg",
      py::arg("attribution") = nullptr);
}
