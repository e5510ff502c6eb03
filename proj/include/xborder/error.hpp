#pragma once

#include <stdexcept>
#include <string>

namespace xborder {

// Unrecoverable input problem: unreadable stream, missing header column,
// malformed blacklist JSON, duplicate patterns and similar.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output files disagree with each other (e.g. a bad request whose entity
// never reached done.csv).
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The output directory or a file inside it cannot be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The instrumented browser could not be started or reached.
class BrowserUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xborder
