#include "xborder/blacklist.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

#include "xborder/csv.hpp"
#include "xborder/error.hpp"
#include "xborder/url.hpp"

namespace xborder {
namespace {

std::optional<std::string> invalid_pattern_reason(std::string_view p) {
  if (p.empty()) return "empty pattern";
  if (p.find('/') != std::string_view::npos || p.find(':') != std::string_view::npos)
    return "pattern must not contain a scheme, port or path";
  if (p.find('.') == std::string_view::npos) return "pattern must contain a dot";
  if (p.find('*') != std::string_view::npos) return "wildcards are not supported";
  if (!url::is_valid_host(p)) return "not a valid domain";
  return std::nullopt;
}

// Labels of a host from the rightmost one inwards; stops when f returns false.
template <typename F>
void for_each_label_reversed(std::string_view host, F&& f) {
  std::size_t end = host.size();
  while (end > 0) {
    const auto dot = host.rfind('.', end - 1);
    const std::size_t start = dot == std::string_view::npos ? 0 : dot + 1;
    if (!f(host.substr(start, end - start))) return;
    if (dot == std::string_view::npos) return;
    end = dot;
  }
}

}  // namespace

bool is_label_suffix(std::string_view host, std::string_view pattern) {
  if (pattern.empty() || pattern.size() > host.size()) return false;
  if (!host.ends_with(pattern)) return false;
  return host.size() == pattern.size() || host[host.size() - pattern.size() - 1] == '.';
}

Blacklist Blacklist::from_groups(std::vector<DomainGroup> groups, Warnings* warnings) {
  Blacklist bl;
  std::unordered_map<std::string, std::string> owner;
  for (auto& group : groups) {
    if (group.group_name.empty()) throw IngestError("blacklist group with empty name");
    if (bl.has_group(group.group_name))
      throw IngestError("blacklist group '" + group.group_name + "' defined twice");
    const auto gid = static_cast<std::uint32_t>(bl.groups_.size());
    DomainGroup clean{group.group_name, {}};
    for (const auto& raw : group.patterns) {
      std::string p = url::to_lower_ascii(url::trim(raw));
      if (p.ends_with('.')) p.pop_back();
      if (auto why = invalid_pattern_reason(p)) {
        warn(warnings, "blacklist group '" + group.group_name + "': skipping pattern '" + raw +
                           "': " + *why);
        continue;
      }
      if (auto it = owner.find(p); it != owner.end()) {
        if (it->second == group.group_name) {
          warn(warnings, "blacklist group '" + group.group_name + "': repeated pattern '" + p + "'");
          continue;
        }
        throw IngestError("pattern '" + p + "' appears in groups '" + it->second + "' and '" +
                          group.group_name + "'");
      }
      owner.emplace(p, group.group_name);
      clean.patterns.push_back(p);
      bl.insert(p, gid);
    }
    bl.groups_.push_back(std::move(clean));
  }
  if (bl.groups_.empty()) warn(warnings, "blacklist is empty");
  return bl;
}

Blacklist Blacklist::load(std::istream& in, Warnings* warnings) {
  if (!in.good()) throw IngestError("unreadable blacklist stream");
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(std::string("malformed blacklist JSON: ") + e.what());
  }
  if (!doc.is_object()) throw IngestError("blacklist JSON must be an object of group -> domains");
  std::vector<DomainGroup> groups;
  for (const auto& [name, domains] : doc.items()) {
    if (!domains.is_array())
      throw IngestError("blacklist group '" + name + "' must map to an array of strings");
    DomainGroup g{name, {}};
    for (const auto& d : domains) {
      if (!d.is_string())
        throw IngestError("blacklist group '" + name + "' contains a non-string entry");
      g.patterns.push_back(d.get<std::string>());
    }
    groups.push_back(std::move(g));
  }
  return from_groups(std::move(groups), warnings);
}

Blacklist Blacklist::load_file(const std::string& path, Warnings* warnings) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open blacklist " + path);
  return load(in, warnings);
}

void Blacklist::insert(const std::string& pattern, std::uint32_t group) {
  std::uint32_t node = 0;
  for_each_label_reversed(pattern, [&](std::string_view label) {
    auto& children = nodes_[node].children;
    auto it = children.find(std::string(label));
    if (it == children.end()) {
      const auto fresh = static_cast<std::uint32_t>(nodes_.size());
      nodes_[node].children.emplace(std::string(label), fresh);
      nodes_.emplace_back();
      node = fresh;
    } else {
      node = it->second;
    }
    return true;
  });
  nodes_[node].pattern = static_cast<std::int32_t>(patterns_.size());
  patterns_.push_back({pattern, group});
}

bool Blacklist::has_group(std::string_view name) const {
  return std::any_of(groups_.begin(), groups_.end(),
                     [&](const DomainGroup& g) { return g.group_name == name; });
}

std::optional<MatchResult> Blacklist::match_host(std::string_view raw_host) const {
  if (patterns_.empty()) return std::nullopt;
  std::string host = url::to_lower_ascii(raw_host);
  while (host.ends_with('.')) host.pop_back();
  if (host.empty()) return std::nullopt;

  std::int32_t best = -1;
  std::uint32_t node = 0;
  std::string key;
  for_each_label_reversed(host, [&](std::string_view label) {
    key.assign(label);
    const auto& children = nodes_[node].children;
    auto it = children.find(key);
    if (it == children.end()) return false;
    node = it->second;
    if (nodes_[node].pattern >= 0) best = nodes_[node].pattern;
    return true;
  });
  if (best < 0) return std::nullopt;
  const auto& p = patterns_[static_cast<std::size_t>(best)];
  return MatchResult{p.text, groups_[p.group].group_name, p.text.size()};
}

std::optional<MatchResult> Blacklist::match_url(std::string_view request_url) const {
  const auto host = url::hostname(request_url);
  if (!host) return std::nullopt;
  return match_host(*host);
}

std::string_view to_string(ServiceType t) {
  switch (t) {
    case ServiceType::Cloud: return "CLOUD";
    case ServiceType::Cdn: return "CDN";
    case ServiceType::SocialMultimedia: return "SOCIAL_MULTIMEDIA";
    case ServiceType::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<ServiceType> parse_service_type(std::string_view text) {
  std::string upper(url::trim(text));
  for (char& c : upper)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  if (upper == "CLOUD") return ServiceType::Cloud;
  if (upper == "CDN") return ServiceType::Cdn;
  if (upper == "SOCIAL_MULTIMEDIA") return ServiceType::SocialMultimedia;
  if (upper == "OTHER") return ServiceType::Other;
  return std::nullopt;
}

bool is_country_code(std::string_view code) {
  return code.size() == 2 && std::all_of(code.begin(), code.end(),
                                          [](char c) { return c >= 'A' && c <= 'Z'; });
}

void AttributionMap::add(Attribution a) {
  if (index_.contains(a.group_name))
    throw IngestError("duplicate attribution for group '" + a.group_name + "'");
  index_.emplace(a.group_name, entries_.size());
  entries_.push_back(std::move(a));
}

AttributionMap AttributionMap::load(std::istream& in, Warnings* warnings) {
  const auto table = csv::read(in);
  std::size_t cols[4];
  const char* names[4] = {"group_name", "company", "country", "service_type"};
  for (int i = 0; i < 4; ++i) {
    auto idx = table.column(names[i]);
    if (!idx) throw IngestError(std::string("attribution file: missing column '") + names[i] + "'");
    cols[i] = *idx;
  }
  AttributionMap map;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto get = [&](int i) {
      return cols[i] < row.size() ? std::string(url::trim(row[cols[i]])) : std::string{};
    };
    Attribution a;
    a.group_name = get(0);
    a.company = get(1);
    std::string country = get(2);
    for (char& c : country)
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (a.group_name.empty())
      throw IngestError("attribution row " + std::to_string(r + 2) + ": empty group_name");
    if (!is_country_code(country))
      throw IngestError("attribution row " + std::to_string(r + 2) + ": invalid country code '" +
                        country + "'");
    a.country = std::move(country);
    const std::string service = get(3);
    if (auto st = parse_service_type(service)) {
      a.service_type = *st;
    } else {
      a.service_type = ServiceType::Other;
      warn(warnings, "attribution '" + a.group_name + "': unknown service_type '" + service +
                         "', using OTHER");
    }
    map.add(std::move(a));
  }
  return map;
}

AttributionMap AttributionMap::load_file(const std::string& path, Warnings* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open attribution file " + path);
  return load(in, warnings);
}

const Attribution* AttributionMap::find(std::string_view group) const {
  auto it = index_.find(std::string(group));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::size_t AttributionMap::check_coverage(const Blacklist& blacklist, Warnings* warnings) const {
  std::size_t count = 0;
  for (const auto& g : blacklist.groups())
    if (!find(g.group_name)) {
      warn(warnings, "blacklist group '" + g.group_name + "' has no attribution");
      ++count;
    }
  for (const auto& a : entries_)
    if (!blacklist.has_group(a.group_name)) {
      warn(warnings, "attribution for unknown group '" + a.group_name + "'");
      ++count;
    }
  return count;
}

}  // namespace xborder
