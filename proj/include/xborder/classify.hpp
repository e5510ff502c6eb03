#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xborder/blacklist.hpp"
#include "xborder/capture.hpp"
#include "xborder/diagnostics.hpp"
#include "xborder/registry.hpp"

namespace xborder {

inline constexpr std::string_view kUnknownCompany = "UNKNOWN";
inline constexpr std::string_view kUnknownCountry = "??";

struct BadRequest {
  std::string ipa_code;
  std::string entity_name;
  std::string category_name;
  std::string request_url;
  std::string matched_pattern;
  std::string group_name;
  std::string company;
  std::string country;
  ServiceType service_type = ServiceType::Other;
  ResourceHint resource_hint = ResourceHint::Other;
  Timestamp observed_at{};

  bool operator==(const BadRequest&) const = default;
};

enum class EntityState { Good, Bad, Error };
std::string_view to_string(EntityState s);

struct EntityStatus {
  std::string ipa_code;
  EntityState status = EntityState::Good;
  std::size_t bad_request_count = 0;
  std::optional<std::string> error_message;

  bool operator==(const EntityStatus&) const = default;
};

struct Classification {
  EntityStatus status;
  std::vector<BadRequest> bad_requests;
};

// Attribution lookup for one matched group; unattributed groups yield
// UNKNOWN / "??" / OTHER and a warning.
Attribution resolve_attribution(const MatchResult& match, const AttributionMap& attribution,
                                Warnings* warnings);

// Runs every captured request through the blacklist and attributes matches.
// Pure apart from warnings.
Classification classify_requests(const EnrichedEntity& entity, const CaptureResult& capture,
                                 const Blacklist& blacklist, const AttributionMap& attribution,
                                 Warnings* warnings = nullptr);

}  // namespace xborder
