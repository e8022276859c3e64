#include "scal/log.hpp"

#include <iostream>
#include <mutex>

namespace scal {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

WarningSink set_warning_sink(WarningSink new_sink) {
  std::lock_guard lock(sink_mutex());
  WarningSink old = std::move(sink());
  sink() = new_sink ? std::move(new_sink) : [](const std::string&) {};
  return old;
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  sink()(message);
}

}  // namespace scal
