#include "xborder/registry.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "xborder/csv.hpp"
#include "xborder/error.hpp"
#include "xborder/url.hpp"

namespace xborder {
namespace {

std::string trimmed(std::string_view s) { return std::string(url::trim(s)); }

std::size_t require_column(const csv::Table& table, const HeaderMapping& mapping,
                           std::string_view field) {
  for (const auto& alias : mapping.aliases(field))
    if (auto idx = table.column(alias)) return *idx;
  throw IngestError("missing required column '" + std::string(field) + "'");
}

std::string cell(const csv::Row& row, std::size_t idx) {
  return idx < row.size() ? trimmed(row[idx]) : std::string{};
}

bool has_dot_host(std::string_view host) {
  return host.find('.') != std::string_view::npos && !host.starts_with('.');
}

// Treats "x:" as a scheme only when it cannot be read as host:port.
bool looks_like_scheme(std::string_view s) {
  if (s.find("://") != std::string_view::npos) return true;
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  for (std::size_t i = 0; i < colon; ++i) {
    const char c = s[i];
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
    if (!ok) return false;
  }
  if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  const std::string_view after = s.substr(colon + 1);
  return after.empty() || !std::isdigit(static_cast<unsigned char>(after.front()));
}

}  // namespace

std::string_view to_string(UrlVerdict v) {
  switch (v) {
    case UrlVerdict::Valid: return "VALID";
    case UrlVerdict::Empty: return "EMPTY";
    case UrlVerdict::InvalidScheme: return "INVALID_SCHEME";
    case UrlVerdict::Malformed: return "MALFORMED";
  }
  return "MALFORMED";
}

HeaderMapping::HeaderMapping() {
  fields_["ipa_code"] = {"ipa_code", "Codice_IPA", "codice_ipa", "IPA Code"};
  fields_["name"] = {"name", "Denominazione_ente", "denominazione_ente", "Entity name"};
  fields_["category_code"] = {"category_code", "Codice_categoria", "codice_categoria",
                              "Category code"};
  fields_["website_url"] = {"website_url", "Sito_istituzionale", "sito_istituzionale",
                            "Institutional website"};
  fields_["category_name"] = {"category_name", "Nome_categoria", "nome_categoria",
                              "Category name"};
}

HeaderMapping HeaderMapping::from_config(std::istream& in) {
  if (!in.good()) throw IngestError("unreadable header-mapping config");
  HeaderMapping mapping;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string_view view = url::trim(line);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw IngestError("header-mapping config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trimmed(view.substr(0, eq));
    if (!mapping.fields_.contains(key))
      throw IngestError("header-mapping config line " + std::to_string(lineno) +
                        ": unknown field '" + key + "'");
    std::vector<std::string> aliases;
    for (auto& alias : csv::parse_line(view.substr(eq + 1), ','))
      if (auto t = trimmed(alias); !t.empty()) aliases.push_back(std::move(t));
    mapping.set(std::move(key), std::move(aliases));
  }
  return mapping;
}

HeaderMapping HeaderMapping::from_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open header-mapping config " + path);
  return from_config(in);
}

const std::vector<std::string>& HeaderMapping::aliases(std::string_view field) const {
  static const std::vector<std::string> kNone;
  auto it = fields_.find(field);
  return it == fields_.end() ? kNone : it->second;
}

void HeaderMapping::set(std::string field, std::vector<std::string> aliases) {
  fields_[std::move(field)] = std::move(aliases);
}

EntityParse parse_entities(std::istream& in, const HeaderMapping& mapping, Warnings* warnings) {
  const auto table = csv::read(in);
  if (table.header.empty()) throw IngestError("entity file has no header row");
  const auto code_col = require_column(table, mapping, "ipa_code");
  const auto name_col = require_column(table, mapping, "name");
  const auto cat_col = require_column(table, mapping, "category_code");
  const auto url_col = require_column(table, mapping, "website_url");

  EntityParse result;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    Entity e{cell(row, code_col), cell(row, name_col), cell(row, cat_col), cell(row, url_col)};
    if (e.ipa_code.empty()) {
      ++result.dropped_missing_code;
      warn(warnings, "entity row " + std::to_string(i + 2) + ": empty ipa_code, dropped");
      continue;
    }
    if (!seen.insert(e.ipa_code).second) {
      ++result.dropped_duplicate_code;
      warn(warnings, "entity row " + std::to_string(i + 2) + ": duplicate ipa_code '" +
                         e.ipa_code + "', later occurrence dropped");
      continue;
    }
    result.entities.push_back(std::move(e));
  }
  return result;
}

std::vector<Category> parse_categories(std::istream& in, const HeaderMapping& mapping,
                                       Warnings* warnings) {
  const auto table = csv::read(in);
  if (table.header.empty()) return {};
  const auto code_col = require_column(table, mapping, "category_code");
  const auto name_col = require_column(table, mapping, "category_name");

  std::vector<Category> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : table.rows) {
    Category c{cell(row, code_col), cell(row, name_col)};
    if (auto it = index.find(c.category_code); it != index.end()) {
      warn(warnings, "duplicate category_code '" + c.category_code + "', last occurrence wins");
      out[it->second] = std::move(c);
      continue;
    }
    index.emplace(c.category_code, out.size());
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<EnrichedEntity> join_entities(const std::vector<Entity>& entities,
                                          const std::vector<Category>& categories,
                                          Warnings* warnings) {
  std::unordered_map<std::string_view, std::string_view> names;
  for (const auto& c : categories) names[c.category_code] = c.category_name;

  std::vector<EnrichedEntity> out;
  out.reserve(entities.size());
  for (const auto& e : entities) {
    std::string category_name;
    if (auto it = names.find(e.category_code); it != names.end()) {
      category_name = std::string(it->second);
    } else {
      category_name = std::string(kUnknownCategory);
      warn(warnings, "entity '" + e.ipa_code + "': category_code '" + e.category_code +
                         "' not found, category_name set to UNKNOWN");
    }
    out.push_back({e.ipa_code, e.name, e.category_code, std::move(category_name), e.website_url});
  }
  return out;
}

UrlValidation validate_url(std::string_view raw) {
  const std::string_view text = url::trim(raw);
  if (text.empty()) return {UrlVerdict::Empty, std::nullopt, "empty URL"};

  std::string candidate(text);
  bool defaulted = false;
  if (!looks_like_scheme(text)) {
    candidate = "http://" + candidate;
    defaulted = true;
  }
  auto parsed = url::parse(candidate);
  if (!parsed) {
    // Distinguish a recognisable non-web scheme from plain garbage.
    if (!defaulted) {
      const auto colon = text.find(':');
      const auto scheme = url::to_lower_ascii(text.substr(0, colon));
      if (scheme != "http" && scheme != "https")
        return {UrlVerdict::InvalidScheme, std::nullopt, "unsupported scheme '" + scheme + "'"};
    }
    return {UrlVerdict::Malformed, std::nullopt, "unparseable URL"};
  }
  if (parsed->scheme != "http" && parsed->scheme != "https")
    return {UrlVerdict::InvalidScheme, std::nullopt,
            "unsupported scheme '" + parsed->scheme + "'"};
  if (!parsed->has_authority || parsed->host.empty())
    return {UrlVerdict::Malformed, std::nullopt, "missing host"};
  if (!url::is_valid_host(parsed->host))
    return {UrlVerdict::Malformed, std::nullopt, "invalid host '" + parsed->host + "'"};
  if (defaulted && !has_dot_host(parsed->host))
    return {UrlVerdict::Malformed, std::nullopt, "no scheme and host has no dot"};
  return {UrlVerdict::Valid, parsed->str(), defaulted ? "scheme defaulted to http" : ""};
}

void write_scan_input(std::ostream& out, const std::vector<EnrichedEntity>& rows) {
  csv::Writer w(out);
  w.write({"ipa_code", "name", "category_code", "category_name", "website_url"});
  for (const auto& r : rows)
    w.write({r.ipa_code, r.name, r.category_code, r.category_name, r.website_url});
}

std::vector<EnrichedEntity> read_scan_input(std::istream& in) {
  const auto table = csv::read(in, ',');
  HeaderMapping identity;
  for (std::string_view f : {"ipa_code", "name", "category_code", "category_name", "website_url"})
    identity.set(std::string(f), {std::string(f)});
  const auto c0 = require_column(table, identity, "ipa_code");
  const auto c1 = require_column(table, identity, "name");
  const auto c2 = require_column(table, identity, "category_code");
  const auto c3 = require_column(table, identity, "category_name");
  const auto c4 = require_column(table, identity, "website_url");
  std::vector<EnrichedEntity> out;
  for (const auto& row : table.rows) {
    EnrichedEntity e{cell(row, c0), cell(row, c1), cell(row, c2), cell(row, c3), cell(row, c4)};
    if (!e.ipa_code.empty()) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace xborder
