#include "xborder/classify.hpp"

namespace xborder {

std::string_view to_string(EntityState s) {
  switch (s) {
    case EntityState::Good: return "GOOD";
    case EntityState::Bad: return "BAD";
    case EntityState::Error: return "ERROR";
  }
  return "ERROR";
}

Attribution resolve_attribution(const MatchResult& match, const AttributionMap& attribution,
                                Warnings* warnings) {
  if (const auto* a = attribution.find(match.group_name)) return *a;
  warn(warnings, "group '" + match.group_name + "' has no attribution; recording as UNKNOWN");
  return {match.group_name, std::string(kUnknownCompany), std::string(kUnknownCountry),
          ServiceType::Other};
}

Classification classify_requests(const EnrichedEntity& entity, const CaptureResult& capture,
                                 const Blacklist& blacklist, const AttributionMap& attribution,
                                 Warnings* warnings) {
  Classification out;
  out.status.ipa_code = entity.ipa_code;
  if (!capture.ok()) {
    out.status.status = EntityState::Error;
    out.status.error_message = capture.error_message.value_or("unknown capture error");
    return out;
  }
  for (const auto& req : capture.requests) {
    const auto match = blacklist.match_url(req.request_url);
    if (!match) continue;
    const auto attr = resolve_attribution(*match, attribution, warnings);
    out.bad_requests.push_back({entity.ipa_code, entity.name, entity.category_name, req.request_url,
                                match->matched_pattern, match->group_name, attr.company,
                                attr.country, attr.service_type, req.resource_hint,
                                req.observed_at});
  }
  out.status.bad_request_count = out.bad_requests.size();
  out.status.status = out.bad_requests.empty() ? EntityState::Good : EntityState::Bad;
  return out;
}

}  // namespace xborder
