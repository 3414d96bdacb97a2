#pragma once

#include <concepts>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <string_view>

namespace tubekit {

// Sink for structured log lines. A null Logger silently drops lines.
using Logger = std::function<void(const std::string&)>;

// Builds one structured line of space-separated key=value pairs, e.g.
//   stage=train-tpn seed=3 epoch=12 loss=0.014208
// Keys are emitted in insertion order; doubles use "%.9g" so lines are
// deterministic for identical inputs.
class LogLine {
 public:
  explicit LogLine(std::string_view stage) { text_ = "stage=" + std::string(stage); }

  LogLine& kv(std::string_view key, std::string_view value) {
    text_ += ' ';
    text_ += key;
    text_ += '=';
    text_ += value;
    return *this;
  }

  LogLine& kv(std::string_view key, const char* value) { return kv(key, std::string_view(value)); }

  // One template for every integer type sidesteps the platform-dependent
  // overlap between size_t, uint64_t, and friends.
  template <typename T>
    requires std::integral<T>
  LogLine& kv(std::string_view key, T value) {
    return kv(key, std::string_view(std::to_string(value)));
  }

  LogLine& kv(std::string_view key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return kv(key, std::string_view(buf));
  }

  const std::string& str() const { return text_; }

  void emit(const Logger& logger) const {
    if (logger) logger(text_);
  }

 private:
  std::string text_;
};

}  // namespace tubekit
