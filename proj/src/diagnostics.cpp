#include "xborder/diagnostics.hpp"

#include <iostream>

namespace xborder {

void Warnings::add(std::string message) {
  std::lock_guard lock(mutex_);
  if (echo_) echo_(message);
  items_.push_back(std::move(message));
}

std::vector<std::string> Warnings::items() const {
  std::lock_guard lock(mutex_);
  return items_;
}

std::size_t Warnings::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

Warnings::Echo Warnings::to_stderr() {
  return [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

}  // namespace xborder
