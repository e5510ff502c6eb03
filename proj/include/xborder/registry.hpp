#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xborder/diagnostics.hpp"

namespace xborder {

// One public-administration body from the entity registry.
struct Entity {
  std::string ipa_code;
  std::string name;
  std::string category_code;
  std::string website_url;  // raw, possibly malformed

  bool operator==(const Entity&) const = default;
};

struct Category {
  std::string category_code;
  std::string category_name;

  bool operator==(const Category&) const = default;
};

struct EnrichedEntity {
  std::string ipa_code;
  std::string name;
  std::string category_code;
  std::string category_name;
  std::string website_url;

  bool operator==(const EnrichedEntity&) const = default;
};

inline constexpr std::string_view kUnknownCategory = "UNKNOWN";

enum class UrlVerdict { Valid, Empty, InvalidScheme, Malformed };

std::string_view to_string(UrlVerdict v);

struct UrlValidation {
  UrlVerdict verdict = UrlVerdict::Empty;
  std::optional<std::string> normalized_url;
  std::string reason;
};

// Maps internal field names (ipa_code, name, category_code, website_url,
// category_name) to the header names accepted for them in source files.
// The defaults accept both the internal names and the Italian OpenData IPA
// headers.
class HeaderMapping {
 public:
  HeaderMapping();

  // "field = Header One, Header Two" lines; '#' starts a comment. Entries
  // replace the defaults for the named field.
  static HeaderMapping from_config(std::istream& in);
  static HeaderMapping from_config_file(const std::string& path);

  const std::vector<std::string>& aliases(std::string_view field) const;
  void set(std::string field, std::vector<std::string> aliases);

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> fields_;
};

struct EntityParse {
  std::vector<Entity> entities;
  std::size_t dropped_missing_code = 0;
  std::size_t dropped_duplicate_code = 0;
};

// Throws IngestError when the stream is unreadable or a required column is
// missing from the header.
EntityParse parse_entities(std::istream& in, const HeaderMapping& mapping = {},
                           Warnings* warnings = nullptr);
std::vector<Category> parse_categories(std::istream& in, const HeaderMapping& mapping = {},
                                       Warnings* warnings = nullptr);

// Left join by category_code preserving entity order.
std::vector<EnrichedEntity> join_entities(const std::vector<Entity>& entities,
                                          const std::vector<Category>& categories,
                                          Warnings* warnings = nullptr);

UrlValidation validate_url(std::string_view raw);

// Scan-input file: ipa_code,name,category_code,category_name,website_url.
void write_scan_input(std::ostream& out, const std::vector<EnrichedEntity>& rows);
std::vector<EnrichedEntity> read_scan_input(std::istream& in);

}  // namespace xborder
