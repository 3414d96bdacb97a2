#include "tubekit/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tubekit/errors.hpp"

namespace tubekit {

namespace {

using json = nlohmann::ordered_json;

std::size_t checked_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                  const char* where) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (std::string_view a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

}  // namespace

void Checkpoint::set_meta(std::string key, std::string value) {
  meta[std::move(key)] = std::move(value);
}

void Checkpoint::set_meta_int(std::string key, std::int64_t value) {
  meta[std::move(key)] = std::to_string(value);
}

const std::string& Checkpoint::meta_at(std::string_view key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw ConfigError("checkpoint: missing meta key '" + std::string(key) + "'");
  return it->second;
}

std::int64_t Checkpoint::meta_int(std::string_view key) const {
  const std::string& text = meta_at(key);
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("checkpoint: meta key '" + std::string(key) + "' is not an integer: " + text);
  }
}

void Checkpoint::add(std::string name, std::vector<std::size_t> shape, Vec values) {
  if (checked_size(shape) != values.size()) {
    throw ConfigError("checkpoint: tensor '" + name + "' shape does not match value count");
  }
  tensors.push_back(TensorBlob{std::move(name), std::move(shape), std::move(values)});
}

void Checkpoint::add(const Tensor& tensor) { add(tensor.name, tensor.shape, tensor.value); }

const TensorBlob& Checkpoint::at(std::string_view name) const {
  for (const TensorBlob& t : tensors) {
    if (t.name == name) return t;
  }
  throw ConfigError("checkpoint: missing tensor '" + std::string(name) + "'");
}

bool Checkpoint::has(std::string_view name) const {
  for (const TensorBlob& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void Checkpoint::restore(Tensor& tensor) const {
  const TensorBlob& blob = at(tensor.name);
  if (blob.shape != tensor.shape) {
    throw ConfigError("checkpoint: tensor '" + tensor.name + "' shape mismatch");
  }
  tensor.value = blob.values;
  tensor.zero_grad();
}

void Checkpoint::save(const std::filesystem::path& path) const {
  json doc;
  doc["format"] = std::string(kFormat);
  doc["version"] = kVersion;
  json m = json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  doc["meta"] = std::move(m);
  json ts = json::array();
  for (const TensorBlob& t : tensors) {
    for (double v : t.values) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("checkpoint: refusing to save non-finite value in tensor '" +
                                 t.name + "'");
      }
    }
    json jt;
    jt["name"] = t.name;
    jt["shape"] = t.shape;
    jt["data"] = t.values;
    ts.push_back(std::move(jt));
  }
  doc["tensors"] = std::move(ts);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("checkpoint: cannot open: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("checkpoint: parse error in " + path.string() + ": " + e.what());
  }
  require_keys(doc, {"format", "version", "meta", "tensors"}, "checkpoint");
  if (!doc.contains("format") || doc["format"] != std::string(kFormat)) {
    throw ConfigError("checkpoint: unexpected format field in " + path.string());
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != kVersion) {
    throw ConfigError("checkpoint: unsupported version in " + path.string());
  }

  Checkpoint ckpt;
  if (!doc.contains("meta") || !doc["meta"].is_object()) {
    throw ConfigError("checkpoint: missing meta object");
  }
  for (const auto& [k, v] : doc["meta"].items()) {
    if (!v.is_string()) throw ConfigError("checkpoint: meta value for '" + k + "' must be a string");
    ckpt.meta[k] = v.get<std::string>();
  }
  if (!doc.contains("tensors") || !doc["tensors"].is_array()) {
    throw ConfigError("checkpoint: missing tensors array");
  }
  for (const json& jt : doc["tensors"]) {
    require_keys(jt, {"name", "shape", "data"}, "checkpoint tensor");
    TensorBlob t;
    t.name = jt.at("name").get<std::string>();
    t.shape = jt.at("shape").get<std::vector<std::size_t>>();
    t.values = jt.at("data").get<Vec>();
    if (checked_size(t.shape) != t.values.size()) {
      throw ConfigError("checkpoint: tensor '" + t.name + "' shape/data mismatch");
    }
    for (double v : t.values) {
      if (!std::isfinite(v)) {
        throw ConfigError("checkpoint: non-finite value in tensor '" + t.name + "'");
      }
    }
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace tubekit
