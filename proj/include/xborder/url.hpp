#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xborder::url {

// Generic-syntax absolute URL. Scheme and host are lowercased on parse; the
// remaining components are kept as written.
struct Url {
  std::string scheme;
  bool has_authority = false;
  std::string userinfo;
  std::string host;  // IPv6 literals keep their brackets
  std::optional<std::uint16_t> port;
  std::string path;
  std::optional<std::string> query;
  std::optional<std::string> fragment;

  std::string str() const;
  // scheme://host[:port], no trailing slash.
  std::string origin() const;
  std::uint16_t effective_port() const;
};

// Parses an absolute URL ("scheme:..."). Rejects strings containing ASCII
// whitespace or control characters, and authorities with an unparseable port.
std::optional<Url> parse(std::string_view text);

// Resolves an HTML-style reference against an absolute base. Leading and
// trailing whitespace is dropped and embedded tabs/newlines removed, spaces
// and non-ASCII bytes in path/query are percent-encoded.
std::optional<std::string> resolve(std::string_view base, std::string_view reference);

// Lowercased hostname with any trailing dot removed. Empty optional when the
// URL has no authority or no host.
std::optional<std::string> hostname(std::string_view text);

// LDH or IDN labels separated by dots, each 1..63 bytes, no leading/trailing
// hyphen; or a dotted-quad IPv4; or a bracketed IPv6 literal.
bool is_valid_host(std::string_view host);

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace xborder::url
