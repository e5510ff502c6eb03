#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "xborder/blacklist.hpp"
#include "xborder/scan.hpp"

namespace xborder {

struct CountEntry {
  std::string name;
  std::size_t count = 0;
  bool operator==(const CountEntry&) const = default;
};
using Ranking = std::vector<CountEntry>;  // count descending, then name ascending

struct ShareEntry {
  std::string name;
  double share = 0.0;
  bool operator==(const ShareEntry&) const = default;
};

struct Report {
  std::size_t total_entities = 0;
  std::size_t reachable = 0;
  std::size_t unreachable = 0;
  double unreachable_fraction = 0.0;
  std::size_t good = 0;
  std::size_t bad = 0;
  double bad_fraction = 0.0;           // bad / (good + bad)
  double bad_fraction_of_total = 0.0;  // bad / total_entities
  std::size_t total_bad_requests = 0;
  Ranking bad_by_category;  // bad entities per category
  Ranking requests_by_group;
  Ranking requests_by_company;
  Ranking requests_by_service;
  std::map<std::string, std::vector<ShareEntry>> within_service_breakdown;
  Ranking errors_by_message;
  double top1_company_share = 0.0;
  double top3_company_share = 0.0;

  bool operator==(const Report&) const = default;
};

// Sorts by count descending, ties by name.
void sort_ranking(Ranking& ranking);

// Company and service come from `attribution` when it knows the group,
// otherwise from the row itself. Throws ConsistencyError when a bad-request
// row names an entity missing from done or an entity that ended in error.
Report compute_report(const std::vector<BadRequest>& bad_requests,
                      const std::vector<ScanRecord>& done,
                      const AttributionMap* attribution = nullptr);
Report compute_report(const std::string& bad_requests_path, const std::string& done_path,
                      const AttributionMap* attribution = nullptr);

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& doc);

enum class ReportFormat { Csv, Json, Svg };
std::set<ReportFormat> parse_report_formats(const std::string& comma_list);

// First `keep` entries plus an "others" bucket summing the rest.
Ranking truncate_with_others(const Ranking& ranking, std::size_t keep = 10);

std::string render_bar_chart_svg(const std::string& title, const Ranking& ranking,
                                 std::size_t keep = 10);

// Writes report.json, one CSV per table and optionally one SVG bar chart per
// table. Returns the written paths. Throws OutputError.
std::vector<std::string> emit_report(const Report& report, const std::string& out_dir,
                                     const std::set<ReportFormat>& formats);

}  // namespace xborder
