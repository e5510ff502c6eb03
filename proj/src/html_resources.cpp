#include "xborder/html_resources.hpp"

#include <cstdint>
#include <unordered_set>
#include <utility>

#include "xborder/url.hpp"

namespace xborder {
namespace {

using Attributes = std::vector<std::pair<std::string, std::string>>;

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    char c = text[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != word[i]) return false;
  }
  return true;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes the handful of character references that show up in URLs.
std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    const std::string_view name = s.substr(i + 1, semi - i - 1);
    if (name == "amp") out.push_back('&');
    else if (name == "quot") out.push_back('"');
    else if (name == "apos") out.push_back('\'');
    else if (name == "lt") out.push_back('<');
    else if (name == "gt") out.push_back('>');
    else if (name.starts_with('#') && name.size() > 1) {
      std::uint32_t cp = 0;
      const bool hex = name[1] == 'x' || name[1] == 'X';
      bool ok = name.size() > (hex ? 2u : 1u);
      for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
        const char c = name[k];
        int v = -1;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
        if (v < 0) ok = false;
        else cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
        if (cp > 0x10FFFF) cp = 0x110000;
      }
      if (!ok) {
        out.push_back('&');
        continue;
      }
      append_utf8(out, cp);
    } else {
      out.push_back('&');
      continue;
    }
    i = semi;
  }
  return out;
}

// Parses attributes from just after the tag name up to and including '>'.
// Returns the position after the tag.
std::size_t parse_attributes(std::string_view html, std::size_t i, Attributes& attrs) {
  const std::size_t n = html.size();
  while (i < n) {
    while (i < n && (is_ws(html[i]) || html[i] == '/')) ++i;
    if (i >= n) break;
    if (html[i] == '>') return i + 1;
    std::size_t start = i;
    while (i < n && !is_ws(html[i]) && html[i] != '=' && html[i] != '>' &&
           !(html[i] == '/' && i + 1 < n && html[i + 1] == '>'))
      ++i;
    std::string name = url::to_lower_ascii(html.substr(start, i - start));
    while (i < n && is_ws(html[i])) ++i;
    std::string value;
    if (i < n && html[i] == '=') {
      ++i;
      while (i < n && is_ws(html[i])) ++i;
      if (i < n && (html[i] == '"' || html[i] == '\'')) {
        const char q = html[i++];
        const auto close = html.find(q, i);
        const auto end = close == std::string_view::npos ? n : close;
        value = decode_entities(html.substr(i, end - i));
        i = close == std::string_view::npos ? n : close + 1;
      } else {
        start = i;
        while (i < n && !is_ws(html[i]) && html[i] != '>') ++i;
        value = decode_entities(html.substr(start, i - start));
      }
    }
    if (!name.empty()) attrs.emplace_back(std::move(name), std::move(value));
  }
  return n;
}

const std::string* find_attr(const Attributes& attrs, std::string_view name) {
  for (const auto& [k, v] : attrs)
    if (k == name) return &v;
  return nullptr;
}

class Collector {
 public:
  explicit Collector(std::string base) : base_(std::move(base)) {}

  void set_base(const std::string& href) {
    if (base_overridden_) return;
    base_overridden_ = true;
    if (auto resolved = url::resolve(base_, href)) base_ = *resolved;
  }

  void add(std::string_view reference, ResourceHint hint) {
    const std::string_view ref = url::trim(reference);
    if (ref.empty()) return;
    auto resolved = url::resolve(base_, ref);
    if (!resolved) return;
    const auto parsed = url::parse(*resolved);
    if (!parsed || (parsed->scheme != "http" && parsed->scheme != "https") || parsed->host.empty())
      return;
    // The fragment never reaches the server.
    std::string request = *resolved;
    if (auto hash = request.find('#'); hash != std::string::npos) request.erase(hash);
    if (seen_.insert(request).second) out_.push_back({std::move(request), hint});
  }

  void add_css(std::string_view css) {
    for (const auto& ref : css_url_references(css)) add(ref, ResourceHint::Other);
  }

  std::vector<ResourceRef> take() { return std::move(out_); }

 private:
  std::string base_;
  bool base_overridden_ = false;
  std::unordered_set<std::string> seen_;
  std::vector<ResourceRef> out_;
};

void handle_element(std::string_view tag, const Attributes& attrs, Collector& c) {
  auto attr = [&](std::string_view name) { return find_attr(attrs, name); };
  if (tag == "script") {
    if (auto src = attr("src")) c.add(*src, ResourceHint::Script);
  } else if (tag == "link") {
    if (auto href = attr("href")) {
      ResourceHint hint = ResourceHint::Other;
      if (auto rel = attr("rel")) {
        const auto lower = url::to_lower_ascii(*rel);
        std::size_t pos = 0;
        while (pos < lower.size()) {
          while (pos < lower.size() && is_ws(lower[pos])) ++pos;
          auto end = pos;
          while (end < lower.size() && !is_ws(lower[end])) ++end;
          if (std::string_view(lower).substr(pos, end - pos) == "stylesheet")
            hint = ResourceHint::Stylesheet;
          pos = end;
        }
      }
      c.add(*href, hint);
    }
  } else if (tag == "img") {
    if (auto src = attr("src")) c.add(*src, ResourceHint::Image);
    if (auto srcset = attr("srcset"))
      for (const auto& u : srcset_urls(*srcset)) c.add(u, ResourceHint::Image);
  } else if (tag == "iframe" || tag == "frame") {
    if (auto src = attr("src")) c.add(*src, ResourceHint::Frame);
  } else if (tag == "source" || tag == "audio" || tag == "video") {
    if (auto src = attr("src")) c.add(*src, ResourceHint::Media);
  }
  if (auto style = attr("style")) c.add_css(*style);
}

}  // namespace

std::vector<std::string> css_url_references(std::string_view css) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (true) {
    i = css.find('(', i);
    if (i == std::string_view::npos) break;
    if (i < 3 || !iequals_at(css, i - 3, "url") ||
        (i >= 4 && (is_alpha(css[i - 4]) || css[i - 4] == '-'))) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < css.size() && is_ws(css[j])) ++j;
    std::string value;
    if (j < css.size() && (css[j] == '"' || css[j] == '\'')) {
      const char q = css[j];
      const auto close = css.find(q, j + 1);
      if (close == std::string_view::npos) break;
      value = std::string(css.substr(j + 1, close - j - 1));
      j = css.find(')', close);
    } else {
      const auto close = css.find(')', j);
      if (close == std::string_view::npos) break;
      value = std::string(url::trim(css.substr(j, close - j)));
      j = close;
    }
    if (!value.empty()) out.push_back(std::move(value));
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return out;
}

std::vector<std::string> srcset_urls(std::string_view srcset) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = srcset.size();
  while (i < n) {
    while (i < n && (is_ws(srcset[i]) || srcset[i] == ',')) ++i;
    if (i >= n) break;
    const std::size_t start = i;
    while (i < n && !is_ws(srcset[i])) ++i;
    std::string_view candidate = srcset.substr(start, i - start);
    bool ended_by_comma = false;
    while (candidate.ends_with(',')) {
      candidate.remove_suffix(1);
      ended_by_comma = true;
    }
    if (!candidate.empty()) out.emplace_back(candidate);
    if (ended_by_comma) continue;
    // Skip the descriptor list up to the next top-level comma.
    int depth = 0;
    while (i < n) {
      const char c = srcset[i];
      if (c == '(') ++depth;
      else if (c == ')' && depth > 0) --depth;
      else if (c == ',' && depth == 0) break;
      ++i;
    }
  }
  return out;
}

std::vector<ResourceRef> extract_static_resources(std::string_view html, std::string_view base_url) {
  Collector collector{std::string(base_url)};
  const std::size_t n = html.size();
  std::size_t i = 0;
  while (i < n) {
    const auto lt = html.find('<', i);
    if (lt == std::string_view::npos) break;
    i = lt;
    if (html.substr(i, 4) == "<!--") {
      const auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? n : end + 3;
      continue;
    }
    if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?' || html[i + 1] == '/')) {
      const auto end = html.find('>', i + 1);
      i = end == std::string_view::npos ? n : end + 1;
      continue;
    }
    if (i + 1 >= n || !is_alpha(html[i + 1])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && (is_alpha(html[j]) || (html[j] >= '0' && html[j] <= '9') || html[j] == '-' ||
                     html[j] == ':'))
      ++j;
    const std::string tag = url::to_lower_ascii(html.substr(i + 1, j - i - 1));
    Attributes attrs;
    i = parse_attributes(html, j, attrs);

    if (tag == "base") {
      if (auto href = find_attr(attrs, "href")) collector.set_base(*href);
      continue;
    }
    handle_element(tag, attrs, collector);

    // Raw-text elements: their content is not markup.
    if (tag == "script" || tag == "style" || tag == "textarea" || tag == "title" || tag == "xmp") {
      std::size_t close = i;
      while (true) {
        close = html.find("</", close);
        if (close == std::string_view::npos || iequals_at(html, close + 2, tag)) break;
        close += 2;
      }
      const std::size_t content_end = close == std::string_view::npos ? n : close;
      if (tag == "style") collector.add_css(html.substr(i, content_end - i));
      i = content_end;
    }
  }
  return collector.take();
}

}  // namespace xborder
