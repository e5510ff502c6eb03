#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xborder/capture.hpp"

namespace xborder {

struct ResourceRef {
  std::string url;
  ResourceHint hint = ResourceHint::Other;

  bool operator==(const ResourceRef&) const = default;
};

// Lenient scan of an HTML document for the sub-resources a browser would
// request from static markup: script[src], link[href], img[src|srcset],
// iframe/frame[src], source/audio/video[src] and url(...) inside style
// attributes and <style> elements. References resolve against the first
// <base href> if present, otherwise `base_url`. Only http(s) results are
// returned, deduplicated in first-seen order.
std::vector<ResourceRef> extract_static_resources(std::string_view html, std::string_view base_url);

// url(...) references of a stylesheet fragment, unresolved.
std::vector<std::string> css_url_references(std::string_view css);

// Candidate URLs of a srcset attribute, unresolved.
std::vector<std::string> srcset_urls(std::string_view srcset);

}  // namespace xborder
