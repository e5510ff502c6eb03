#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace xborder {

// Collects non-fatal warnings produced while ingesting or classifying.
// Every warning is a single line; an optional echo callback mirrors them to
// a diagnostic stream as they arrive.
class Warnings {
 public:
  using Echo = std::function<void(const std::string&)>;

  Warnings() = default;
  explicit Warnings(Echo echo) : echo_(std::move(echo)) {}

  void add(std::string message);

  std::vector<std::string> items() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  // Echo callback writing "warning: <msg>" to stderr.
  static Echo to_stderr();

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> items_;
  Echo echo_;
};

// Convenience for optional sinks.
inline void warn(Warnings* sink, std::string message) {
  if (sink) sink->add(std::move(message));
}

}  // namespace xborder
