#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xborder/diagnostics.hpp"

namespace xborder {

struct DomainGroup {
  std::string group_name;
  std::vector<std::string> patterns;  // lowercase registrable-domain strings
};

struct MatchResult {
  std::string matched_pattern;
  std::string group_name;
  std::size_t match_length = 0;

  bool operator==(const MatchResult&) const = default;
};

// Grouped non-EEA domain blacklist indexed by a reversed-label trie, so a
// lookup walks one node per host label regardless of list size.
// Immutable once built; lookups are safe from any number of threads.
class Blacklist {
 public:
  Blacklist() = default;

  // Validates and indexes the groups. Patterns are lowercased and a trailing
  // dot dropped; syntactically invalid patterns are skipped with a warning;
  // a pattern listed under two groups is a fatal IngestError.
  static Blacklist from_groups(std::vector<DomainGroup> groups, Warnings* warnings = nullptr);

  // hosts.json shape: {"group": ["domain", ...], ...}.
  static Blacklist load(std::istream& json, Warnings* warnings = nullptr);
  static Blacklist load_file(const std::string& path, Warnings* warnings = nullptr);

  // Longest pattern p with host == p or host ending in "." + p.
  std::optional<MatchResult> match_host(std::string_view host) const;
  // Extracts the hostname first; anything without a host never matches.
  std::optional<MatchResult> match_url(std::string_view request_url) const;

  const std::vector<DomainGroup>& groups() const { return groups_; }
  std::size_t pattern_count() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }
  bool has_group(std::string_view name) const;

 private:
  struct Node {
    std::unordered_map<std::string, std::uint32_t> children;
    std::int32_t pattern = -1;
  };
  struct Pattern {
    std::string text;
    std::uint32_t group;
  };

  void insert(const std::string& pattern, std::uint32_t group);

  std::vector<DomainGroup> groups_;
  std::vector<Pattern> patterns_;
  std::vector<Node> nodes_{Node{}};
};

// Convenience wrapper matching the operation name used elsewhere.
inline std::optional<MatchResult> match_url(std::string_view request_url, const Blacklist& bl) {
  return bl.match_url(request_url);
}

// True when `pattern` equals `host` or is a suffix of it at a label boundary.
bool is_label_suffix(std::string_view host, std::string_view pattern);

enum class ServiceType { Cloud, Cdn, SocialMultimedia, Other };

std::string_view to_string(ServiceType t);
// "CLOUD", "CDN", "SOCIAL_MULTIMEDIA", "OTHER" (case-insensitive).
std::optional<ServiceType> parse_service_type(std::string_view text);

struct Attribution {
  std::string group_name;
  std::string company;
  std::string country;  // ISO-3166 alpha-2, uppercase
  ServiceType service_type = ServiceType::Other;

  bool operator==(const Attribution&) const = default;
};

// group_name -> company/country/service. Loaded from a CSV with header
// group_name,company,country,service_type.
class AttributionMap {
 public:
  AttributionMap() = default;

  // Throws IngestError on missing columns, duplicate group rows or an
  // invalid country code. Unknown service types become OTHER with a warning.
  static AttributionMap load(std::istream& csv, Warnings* warnings = nullptr);
  static AttributionMap load_file(const std::string& path, Warnings* warnings = nullptr);

  void add(Attribution a);  // throws IngestError on duplicates
  const Attribution* find(std::string_view group) const;
  const std::vector<Attribution>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Warns for blacklist groups without attribution and attributions naming
  // groups that are not in the blacklist. Returns the number of warnings.
  std::size_t check_coverage(const Blacklist& blacklist, Warnings* warnings) const;

 private:
  std::vector<Attribution> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

bool is_country_code(std::string_view code);

}  // namespace xborder
