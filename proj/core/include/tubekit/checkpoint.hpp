#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tubekit/nncore.hpp"

namespace tubekit {

struct TensorBlob {
  std::string name;
  std::vector<std::size_t> shape;
  Vec values;
};

// Versioned, self-describing model checkpoint: string metadata plus named
// parameter tensors with shapes. Serialized as JSON; doubles are written in
// shortest round-trip form, so save/load preserves every value bit-exactly.
// Loading rejects unknown format names, unsupported versions, unknown keys,
// shape/size mismatches, and non-finite values.
struct Checkpoint {
  static constexpr int kVersion = 1;
  static constexpr std::string_view kFormat = "tubekit.checkpoint";

  std::map<std::string, std::string, std::less<>> meta;
  std::vector<TensorBlob> tensors;

  void set_meta(std::string key, std::string value);
  void set_meta_int(std::string key, std::int64_t value);
  const std::string& meta_at(std::string_view key) const;  // throws ConfigError if absent
  std::int64_t meta_int(std::string_view key) const;

  void add(std::string name, std::vector<std::size_t> shape, Vec values);
  void add(const Tensor& tensor);
  const TensorBlob& at(std::string_view name) const;  // throws ConfigError if absent
  bool has(std::string_view name) const;

  // Copies values into `tensor`; shape and size must match exactly.
  void restore(Tensor& tensor) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace tubekit
