#pragma once

#include <doctest.h>

#include <optional>
#include <sstream>
#include <string>

#include "xborder/blacklist.hpp"
#include "xborder/scan.hpp"

namespace doctest {

template <>
struct StringMaker<xborder::MatchResult> {
  static String convert(const xborder::MatchResult& m) {
    return ("{" + m.matched_pattern + ", " + m.group_name + ", " + std::to_string(m.match_length) + "}").c_str();
  }
};

template <typename T>
struct StringMaker<std::optional<T>> {
  static String convert(const std::optional<T>& v) {
    return v ? StringMaker<T>::convert(*v) : String("nullopt");
  }
};

template <>
struct StringMaker<xborder::ScanSummary> {
  static String convert(const xborder::ScanSummary& s) {
    std::ostringstream o;
    o << "{processed=" << s.processed << " good=" << s.good << " bad=" << s.bad << " error=" << s.error
      << " invalid_url=" << s.invalid_url << " skipped=" << s.skipped << " bad_requests=" << s.bad_requests
      << "}";
    return o.str().c_str();
  }
};

}  // namespace doctest
