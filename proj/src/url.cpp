#include "xborder/url.hpp"

#include <algorithm>
#include <charconv>
#include <vector>

namespace xborder::url {
namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space_or_ctl(unsigned char c) { return c <= 0x20 || c == 0x7F; }

std::optional<std::size_t> scheme_length(std::string_view s) {
  if (s.empty() || !is_alpha(s[0])) return std::nullopt;
  std::size_t i = 1;
  while (i < s.size() && (is_alpha(s[i]) || is_digit(s[i]) || s[i] == '+' || s[i] == '-' ||
                          s[i] == '.'))
    ++i;
  if (i < s.size() && s[i] == ':') return i;
  return std::nullopt;
}

// Splits "[//authority]path[?query][#fragment]" (everything after the
// scheme's colon) into the Url.
bool parse_hierarchical(std::string_view rest, Url& out) {
  if (auto hash = rest.find('#'); hash != std::string_view::npos) {
    out.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  if (auto q = rest.find('?'); q != std::string_view::npos) {
    out.query = std::string(rest.substr(q + 1));
    rest = rest.substr(0, q);
  }
  if (rest.starts_with("//")) {
    rest.remove_prefix(2);
    const auto slash = rest.find('/');
    std::string_view authority = rest.substr(0, slash);
    out.path = slash == std::string_view::npos ? "" : std::string(rest.substr(slash));
    out.has_authority = true;
    if (auto at = authority.rfind('@'); at != std::string_view::npos) {
      out.userinfo = std::string(authority.substr(0, at));
      authority = authority.substr(at + 1);
    }
    std::string_view host = authority;
    std::string_view port;
    if (authority.starts_with('[')) {
      const auto close = authority.find(']');
      if (close == std::string_view::npos) return false;
      host = authority.substr(0, close + 1);
      std::string_view after = authority.substr(close + 1);
      if (!after.empty()) {
        if (after.front() != ':') return false;
        port = after.substr(1);
      }
    } else if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
      host = authority.substr(0, colon);
      port = authority.substr(colon + 1);
    }
    out.host = to_lower_ascii(host);
    if (!port.empty()) {
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
      if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) return false;
      out.port = static_cast<std::uint16_t>(value);
    }
  } else {
    out.path = std::string(rest);
  }
  return true;
}

std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string_view> output;
  const bool absolute = path.starts_with('/');
  std::size_t pos = absolute ? 1 : 0;
  bool trailing_slash = false;
  while (pos <= path.size()) {
    const auto next = path.find('/', pos);
    const std::string_view seg =
        path.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    const bool last = next == std::string_view::npos;
    if (seg == ".") {
      trailing_slash = last;
    } else if (seg == "..") {
      if (!output.empty()) output.pop_back();
      trailing_slash = last;
    } else {
      output.push_back(seg);
      trailing_slash = false;
    }
    if (last) break;
    pos = next + 1;
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t i = 0; i < output.size(); ++i) {
    if (i) result.push_back('/');
    result.append(output[i]);
  }
  if (trailing_slash && !result.ends_with('/')) result.push_back('/');
  return result;
}

std::string merge_paths(const Url& base, std::string_view ref_path) {
  if (base.has_authority && base.path.empty()) return "/" + std::string(ref_path);
  const auto slash = base.path.rfind('/');
  if (slash == std::string::npos) return std::string(ref_path);
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

std::string percent_encode_loose(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (c <= 0x20 || c >= 0x7F || c == '"' || c == '<' || c == '>') {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

bool valid_label(std::string_view label) {
  if (label.empty() || label.size() > 63) return false;
  if (label.front() == '-' || label.back() == '-') return false;
  return std::all_of(label.begin(), label.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return is_alpha(ch) || is_digit(ch) || ch == '-' || ch == '_' || c >= 0x80;
  });
}

}  // namespace

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space_or_ctl(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space_or_ctl(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string Url::str() const {
  std::string out = scheme + ":";
  if (has_authority) {
    out += "//";
    if (!userinfo.empty()) out += userinfo + "@";
    out += host;
    if (port) out += ":" + std::to_string(*port);
  }
  out += path;
  if (query) out += "?" + *query;
  if (fragment) out += "#" + *fragment;
  return out;
}

std::string Url::origin() const {
  std::string out = scheme + "://" + host;
  if (port) out += ":" + std::to_string(*port);
  return out;
}

std::uint16_t Url::effective_port() const {
  if (port) return *port;
  if (scheme == "https" || scheme == "wss") return 443;
  return 80;
}

std::optional<Url> parse(std::string_view text) {
  if (std::any_of(text.begin(), text.end(),
                  [](char c) { return is_space_or_ctl(static_cast<unsigned char>(c)); }))
    return std::nullopt;
  const auto scheme_len = scheme_length(text);
  if (!scheme_len) return std::nullopt;
  Url out;
  out.scheme = to_lower_ascii(text.substr(0, *scheme_len));
  if (!parse_hierarchical(text.substr(*scheme_len + 1), out)) return std::nullopt;
  return out;
}

std::optional<std::string> resolve(std::string_view base_text, std::string_view reference) {
  const auto base = parse(base_text);
  if (!base) return std::nullopt;

  std::string ref;
  for (char c : trim(reference))
    if (c != '\t' && c != '\n' && c != '\r') ref.push_back(c);

  Url target;
  if (auto len = scheme_length(ref)) {
    // An absolute reference; same-scheme "http:foo" forms are not special-cased.
    auto parsed = parse(percent_encode_loose(ref));
    if (!parsed) return std::nullopt;
    parsed->path = remove_dot_segments(parsed->path);
    return parsed->str();
  }

  Url rel;
  if (!parse_hierarchical(percent_encode_loose(ref), rel)) return std::nullopt;
  target.scheme = base->scheme;
  if (rel.has_authority) {
    target.has_authority = true;
    target.userinfo = rel.userinfo;
    target.host = rel.host;
    target.port = rel.port;
    target.path = remove_dot_segments(rel.path);
    target.query = rel.query;
  } else {
    target.has_authority = base->has_authority;
    target.userinfo = base->userinfo;
    target.host = base->host;
    target.port = base->port;
    if (rel.path.empty()) {
      target.path = base->path;
      target.query = rel.query ? rel.query : base->query;
    } else {
      target.path = rel.path.starts_with('/') ? remove_dot_segments(rel.path)
                                                : remove_dot_segments(merge_paths(*base, rel.path));
      target.query = rel.query;
    }
  }
  target.fragment = rel.fragment;
  return target.str();
}

std::optional<std::string> hostname(std::string_view text) {
  const auto parsed = parse(trim(text));
  if (!parsed || !parsed->has_authority || parsed->host.empty()) return std::nullopt;
  std::string host = parsed->host;
  while (host.ends_with('.')) host.pop_back();
  if (host.empty()) return std::nullopt;
  return host;
}

bool is_valid_host(std::string_view host) {
  if (host.empty()) return false;
  if (host.front() == '[') {
    if (host.back() != ']' || host.size() < 4) return false;
    return std::all_of(host.begin() + 1, host.end() - 1, [](char c) {
      return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F') || c == ':' ||
             c == '.';
    });
  }
  if (host.ends_with('.')) host.remove_suffix(1);
  if (host.size() > 253) return false;
  std::size_t pos = 0;
  while (true) {
    const auto dot = host.find('.', pos);
    if (!valid_label(host.substr(pos, dot == std::string_view::npos ? dot : dot - pos)))
      return false;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return true;
}

}  // namespace xborder::url
