#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xborder::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  char delimiter = ',';

  // Index of a header column, if present (exact match after trimming).
  std::optional<std::size_t> column(std::string_view name) const;
};

// Picks ';' or ',' for a header line: whichever occurs more often outside
// quotes. Ties (including zero of both) resolve to ','.
char detect_delimiter(std::string_view header_line);

// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

// Reads an RFC-4180-style table. Quoted fields may contain delimiters,
// doubled quotes and line breaks. A leading UTF-8 BOM is dropped, CRLF is
// accepted, completely empty lines are skipped. When `delimiter` is not
// given it is detected from the first line.
// Throws IngestError if the stream is unreadable.
Table read(std::istream& in, std::optional<char> delimiter = std::nullopt);
Table read_file(const std::string& path, std::optional<char> delimiter = std::nullopt);

// Parses a single already-isolated record (no embedded newlines expected,
// though quoted ones are honoured).
Row parse_line(std::string_view line, char delimiter = ',');

std::string escape(std::string_view field, char delimiter = ',');
std::string format_row(std::span<const std::string> fields, char delimiter = ',');

// Writes rows terminated by "\n".
class Writer {
 public:
  explicit Writer(std::ostream& out, char delimiter = ',') : out_(out), delimiter_(delimiter) {}
  void write(std::span<const std::string> fields);
  void write(std::initializer_list<std::string> fields);

 private:
  std::ostream& out_;
  char delimiter_;
};

}  // namespace xborder::csv
