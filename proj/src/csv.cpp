#include "xborder/csv.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "xborder/error.hpp"

namespace xborder::csv {
namespace {

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Single pass over the whole text; emits rows in order.
std::vector<Row> parse_records(std::string_view text, char delimiter) {
  std::vector<Row> records;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // anything seen for the current row
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    // A record that is a single empty field came from a blank line.
    if (!(row.size() == 1 && row[0].empty())) records.push_back(std::move(row));
    row.clear();
    field_started = false;
  };

  while (i < n) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == '"' && trim_view(field).empty()) {
      field.clear();
      in_quotes = true;
      field_started = true;
      ++i;
      continue;
    }
    if (c == delimiter) {
      end_field();
      field_started = true;
      ++i;
      continue;
    }
    if (c == '\r' || c == '\n') {
      end_row();
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
      continue;
    }
    field.push_back(c);
    field_started = true;
    ++i;
  }
  if (field_started || !field.empty() || !row.empty()) end_row();
  return records;
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim_view(header[i]) == name) return i;
  return std::nullopt;
}

char detect_delimiter(std::string_view header_line) {
  std::size_t commas = 0, semis = 0;
  bool quoted = false;
  for (char c : header_line) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == ',') ++commas;
    if (c == ';') ++semis;
    if (c == '\n') break;
  }
  return semis > commas ? ';' : ',';
}

std::string sanitize_utf8(std::string_view in) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  const auto* s = reinterpret_cast<const unsigned char*>(in.data());
  const std::size_t n = in.size();
  while (i < n) {
    const unsigned char c = s[i];
    std::size_t len = 0;
    std::uint32_t min = 0;
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2, min = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3, min = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4, min = 0x10000;
    }
    bool ok = len != 0 && i + len <= n;
    std::uint32_t cp = ok ? (c & (0x7F >> len)) : 0;
    for (std::size_t k = 1; ok && k < len; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) ok = false;
      else cp = (cp << 6) | (s[i + k] & 0x3F);
    }
    if (ok && (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) ok = false;
    if (ok) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      out.append(kReplacement);
      ++i;
    }
  }
  return out;
}

Table read(std::istream& in, std::optional<char> delimiter) {
  if (!in.good()) throw IngestError("unreadable CSV stream");
  std::string raw{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IngestError("read failure on CSV stream");
  if (raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
  const std::string text = sanitize_utf8(raw);

  Table table;
  table.delimiter = delimiter ? *delimiter : detect_delimiter(text);
  auto records = parse_records(text, table.delimiter);
  if (records.empty()) return table;
  table.header = std::move(records.front());
  for (auto& h : table.header) h = std::string(trim_view(h));
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

Table read_file(const std::string& path, std::optional<char> delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path);
  return read(in, delimiter);
}

Row parse_line(std::string_view line, char delimiter) {
  auto records = parse_records(line, delimiter);
  if (records.empty()) return {};
  return std::move(records.front());
}

std::string escape(std::string_view field, char delimiter) {
  const bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                                std::string_view::npos ||
                            (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(std::span<const std::string> fields, char delimiter) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(delimiter);
    line += escape(fields[i], delimiter);
  }
  line.push_back('\n');
  return line;
}

void Writer::write(std::span<const std::string> fields) { out_ << format_row(fields, delimiter_); }

void Writer::write(std::initializer_list<std::string> fields) {
  write(std::span<const std::string>(fields.begin(), fields.size()));
}

}  // namespace xborder::csv
