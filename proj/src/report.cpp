#include "xborder/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "xborder/error.hpp"
#include "xborder/url.hpp"

namespace xborder {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

Ranking to_ranking(const std::unordered_map<std::string, std::size_t>& counts) {
  Ranking r;
  r.reserve(counts.size());
  for (const auto& [name, count] : counts) r.push_back({name, count});
  sort_ranking(r);
  return r;
}

json ranking_json(const Ranking& r) {
  json arr = json::array();
  for (const auto& e : r) arr.push_back({{"name", e.name}, {"count", e.count}});
  return arr;
}

Ranking ranking_from_json(const json& arr) {
  Ranking r;
  for (const auto& e : arr) r.push_back({e.at("name").get<std::string>(), e.at("count").get<std::size_t>()});
  return r;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content, std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw OutputError("cannot write " + path.string());
  written.push_back(path.string());
}

std::string ranking_csv(const std::string& key, const Ranking& r) {
  std::string out = csv::format_row(std::vector<std::string>{key, "count"});
  for (const auto& e : r) out += csv::format_row(std::vector<std::string>{e.name, std::to_string(e.count)});
  return out;
}

std::string format_share(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void sort_ranking(Ranking& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const CountEntry& a, const CountEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.name < b.name;
  });
}

Report compute_report(const std::vector<BadRequest>& bad_requests,
                      const std::vector<ScanRecord>& done, const AttributionMap* attribution) {
  Report rep;
  std::unordered_map<std::string, const ScanRecord*> records;
  std::unordered_map<std::string, std::size_t> errors;
  for (const auto& r : done) {
    if (!records.emplace(r.ipa_code, &r).second) continue;  // first record wins
    if (r.disposition == Disposition::DoneError) ++errors[r.error_message.value_or("")];
  }
  rep.total_entities = records.size();
  rep.unreachable = 0;
  for (const auto& [code, r] : records)
    if (r->disposition == Disposition::DoneError) ++rep.unreachable;
  rep.reachable = rep.total_entities - rep.unreachable;

  std::unordered_map<std::string, std::string> bad_entity_category;
  std::unordered_map<std::string, std::size_t> by_group, by_company, by_service;
  std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> service_groups;
  for (const auto& b : bad_requests) {
    auto it = records.find(b.ipa_code);
    if (it == records.end())
      throw ConsistencyError("bad request for '" + b.ipa_code + "' has no done.csv record");
    if (it->second->disposition == Disposition::DoneError)
      throw ConsistencyError("bad request for '" + b.ipa_code + "' whose scan ended in error");
    bad_entity_category.try_emplace(b.ipa_code, b.category_name);

    std::string company = b.company;
    ServiceType service = b.service_type;
    if (attribution)
      if (const auto* a = attribution->find(b.group_name)) {
        company = a->company;
        service = a->service_type;
      }
    const std::string service_name(to_string(service));
    ++by_group[b.group_name];
    ++by_company[company];
    ++by_service[service_name];
    ++service_groups[service_name][b.group_name];
  }
  rep.total_bad_requests = bad_requests.size();
  rep.bad = bad_entity_category.size();
  rep.good = rep.reachable - rep.bad;
  rep.bad_fraction = ratio(rep.bad, rep.good + rep.bad);
  rep.bad_fraction_of_total = ratio(rep.bad, rep.total_entities);
  rep.unreachable_fraction = ratio(rep.unreachable, rep.total_entities);

  std::unordered_map<std::string, std::size_t> by_category;
  for (const auto& [code, category] : bad_entity_category) ++by_category[category];
  rep.bad_by_category = to_ranking(by_category);
  rep.requests_by_group = to_ranking(by_group);
  rep.requests_by_company = to_ranking(by_company);
  rep.requests_by_service = to_ranking(by_service);
  rep.errors_by_message = to_ranking(errors);

  for (const auto& [service, groups] : service_groups) {
    const Ranking ranked = to_ranking(groups);
    std::size_t total = 0;
    for (const auto& e : ranked) total += e.count;
    auto& shares = rep.within_service_breakdown[service];
    for (const auto& e : ranked) shares.push_back({e.name, ratio(e.count, total)});
  }

  const auto& companies = rep.requests_by_company;
  std::size_t top3 = 0;
  for (std::size_t i = 0; i < companies.size() && i < 3; ++i) top3 += companies[i].count;
  rep.top1_company_share = companies.empty() ? 0.0 : ratio(companies[0].count, rep.total_bad_requests);
  rep.top3_company_share = ratio(top3, rep.total_bad_requests);
  return rep;
}

Report compute_report(const std::string& bad_requests_path, const std::string& done_path,
                      const AttributionMap* attribution) {
  if (!fs::exists(done_path)) throw ConsistencyError("missing " + done_path);
  return compute_report(read_bad_requests(bad_requests_path), read_done(done_path), attribution);
}

json to_json(const Report& r) {
  json breakdown = json::object();
  for (const auto& [service, shares] : r.within_service_breakdown) {
    json arr = json::array();
    for (const auto& s : shares) arr.push_back({{"name", s.name}, {"share", s.share}});
    breakdown[service] = arr;
  }
  return {
      {"total_entities", r.total_entities},
      {"reachable", r.reachable},
      {"unreachable", r.unreachable},
      {"unreachable_fraction", r.unreachable_fraction},
      {"good", r.good},
      {"bad", r.bad},
      {"bad_fraction", {{"of_analyzable", r.bad_fraction}, {"of_total", r.bad_fraction_of_total}}},
      {"total_bad_requests", r.total_bad_requests},
      {"bad_by_category", ranking_json(r.bad_by_category)},
      {"requests_by_group", ranking_json(r.requests_by_group)},
      {"requests_by_company", ranking_json(r.requests_by_company)},
      {"requests_by_service", ranking_json(r.requests_by_service)},
      {"within_service_breakdown", breakdown},
      {"errors_by_message", ranking_json(r.errors_by_message)},
      {"company_concentration", {{"top1_share", r.top1_company_share}, {"top3_share", r.top3_company_share}}},
  };
}

Report report_from_json(const json& d) {
  Report r;
  r.total_entities = d.at("total_entities").get<std::size_t>();
  r.reachable = d.at("reachable").get<std::size_t>();
  r.unreachable = d.at("unreachable").get<std::size_t>();
  r.unreachable_fraction = d.at("unreachable_fraction").get<double>();
  r.good = d.at("good").get<std::size_t>();
  r.bad = d.at("bad").get<std::size_t>();
  r.bad_fraction = d.at("bad_fraction").at("of_analyzable").get<double>();
  r.bad_fraction_of_total = d.at("bad_fraction").at("of_total").get<double>();
  r.total_bad_requests = d.at("total_bad_requests").get<std::size_t>();
  r.bad_by_category = ranking_from_json(d.at("bad_by_category"));
  r.requests_by_group = ranking_from_json(d.at("requests_by_group"));
  r.requests_by_company = ranking_from_json(d.at("requests_by_company"));
  r.requests_by_service = ranking_from_json(d.at("requests_by_service"));
  for (const auto& [service, arr] : d.at("within_service_breakdown").items()) {
    auto& shares = r.within_service_breakdown[service];
    for (const auto& s : arr) shares.push_back({s.at("name").get<std::string>(), s.at("share").get<double>()});
  }
  r.errors_by_message = ranking_from_json(d.at("errors_by_message"));
  r.top1_company_share = d.at("company_concentration").at("top1_share").get<double>();
  r.top3_company_share = d.at("company_concentration").at("top3_share").get<double>();
  return r;
}

std::set<ReportFormat> parse_report_formats(const std::string& list) {
  std::set<ReportFormat> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto f = url::to_lower_ascii(url::trim(item));
    if (f.empty()) continue;
    if (f == "csv") out.insert(ReportFormat::Csv);
    else if (f == "json") out.insert(ReportFormat::Json);
    else if (f == "svg" || f == "svg-bar-charts") out.insert(ReportFormat::Svg);
    else throw std::invalid_argument("unknown report format '" + f + "'");
  }
  return out;
}

Ranking truncate_with_others(const Ranking& ranking, std::size_t keep) {
  if (ranking.size() <= keep) return ranking;
  Ranking out(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(keep));
  std::size_t rest = 0;
  for (std::size_t i = keep; i < ranking.size(); ++i) rest += ranking[i].count;
  out.push_back({"others", rest});
  return out;
}

std::string render_bar_chart_svg(const std::string& title, const Ranking& ranking, std::size_t keep) {
  const Ranking bars = truncate_with_others(ranking, keep);
  constexpr int kWidth = 820, kLabel = 260, kBar = 22, kGap = 8, kTop = 44, kRight = 80;
  const int height = kTop + static_cast<int>(bars.size()) * (kBar + kGap) + 16;
  std::size_t max = 1;
  for (const auto& b : bars) max = std::max(max, b.count);
  const double scale = static_cast<double>(kWidth - kLabel - kRight) / static_cast<double>(max);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << kWidth << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  svg << "  <text x=\"10\" y=\"24\" font-size=\"16\" font-weight=\"bold\">" << xml_escape(title) << "</text>\n";
  int y = kTop;
  for (const auto& b : bars) {
    const int w = static_cast<int>(static_cast<double>(b.count) * scale + 0.5);
    svg << "  <g class=\"bar\">\n"
        << "    <text x=\"" << kLabel - 8 << "\" y=\"" << y + kBar - 6 << "\" text-anchor=\"end\">"
        << xml_escape(b.name) << "</text>\n"
        << "    <rect x=\"" << kLabel << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << kBar
        << "\" fill=\"" << (b.name == "others" && bars.size() > keep ? "#9e9e9e" : "#3b6ea8") << "\"/>\n"
        << "    <text x=\"" << kLabel + w + 6 << "\" y=\"" << y + kBar - 6 << "\">" << b.count << "</text>\n"
        << "  </g>\n";
    y += kBar + kGap;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> emit_report(const Report& report, const std::string& out_dir,
                                     const std::set<ReportFormat>& formats) {
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create report directory " + out_dir);

  const Ranking status{{"good", report.good}, {"bad", report.bad}, {"error", report.unreachable}};
  struct Table {
    std::string stem, key, title;
    const Ranking* ranking;
  };
  const std::vector<Table> tables{
      {"entities_by_status", "status", "Entities by status", &status},
      {"bad_by_category", "category_name", "Bad entities per category", &report.bad_by_category},
      {"requests_by_group", "group_name", "Bad requests per domain group", &report.requests_by_group},
      {"requests_by_company", "company", "Bad requests per company", &report.requests_by_company},
      {"requests_by_service", "service_type", "Bad requests per type of service",
       &report.requests_by_service},
      {"errors_by_message", "error_message", "Scan errors", &report.errors_by_message},
  };

  std::vector<std::string> written;
  if (formats.contains(ReportFormat::Json))
    write_file(dir / "report.json", to_json(report).dump(2) + "\n", written);
  if (formats.contains(ReportFormat::Csv)) {
    for (const auto& t : tables) write_file(dir / (t.stem + ".csv"), ranking_csv(t.key, *t.ranking), written);
    std::string breakdown = csv::format_row(std::vector<std::string>{"service_type", "group_name", "share"});
    for (const auto& [service, shares] : report.within_service_breakdown)
      for (const auto& s : shares)
        breakdown += csv::format_row(std::vector<std::string>{service, s.name, format_share(s.share)});
    write_file(dir / "within_service_breakdown.csv", breakdown, written);
  }
  if (formats.contains(ReportFormat::Svg))
    for (const auto& t : tables)
      write_file(dir / (t.stem + ".svg"), render_bar_chart_svg(t.title, *t.ranking), written);
  return written;
}

}  // namespace xborder
