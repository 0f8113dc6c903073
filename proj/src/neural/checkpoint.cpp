#include "cantus/neural/checkpoint.hpp"

#include <map>

#include "cantus/error.hpp"
#include "cantus/io.hpp"

namespace cantus::nn {

using nlohmann::json;

void save_checkpoint(const std::filesystem::path& path, const ParamList& tensors, const json& meta) {
  std::vector<double> flat;
  json entries = json::array();
  for (const auto& [name, t] : tensors) {
    entries.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"offset", flat.size()}});
    const Matrix& v = t.value();
    flat.insert(flat.end(), v.data(), v.data() + v.size());
  }
  io::write_f32(path, flat);
  io::write_json(io::sidecar_path(path), json{{"tensors", entries}, {"meta", meta}});
}

json read_checkpoint_meta(const std::filesystem::path& path) {
  const json manifest = io::read_json(io::sidecar_path(path));
  return manifest.value("meta", json::object());
}

json load_checkpoint(const std::filesystem::path& path, const ParamList& tensors) {
  const json manifest = io::read_json(io::sidecar_path(path));
  if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
    throw ValidationError("checkpoint manifest " + io::sidecar_path(path).string() + " has no tensor list");
  }
  const std::vector<double> flat = io::read_f32(path);
  std::map<std::string, json> index;
  for (const auto& e : manifest["tensors"]) index[e.at("name").get<std::string>()] = e;
  for (const auto& [name, t] : tensors) {
    auto it = index.find(name);
    if (it == index.end()) throw ValidationError("checkpoint is missing tensor '" + name + "'");
    const auto rows = it->second.at("shape").at(0).get<Eigen::Index>();
    const auto cols = it->second.at("shape").at(1).get<Eigen::Index>();
    const auto offset = it->second.at("offset").get<std::size_t>();
    if (rows != t.rows() || cols != t.cols()) {
      throw ValidationError("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", expected " + std::to_string(t.rows()) + "x" +
                            std::to_string(t.cols()));
    }
    const auto count = static_cast<std::size_t>(rows * cols);
    if (offset + count > flat.size()) throw ValidationError("checkpoint tensor '" + name + "' is truncated");
    Matrix& v = t.mutable_value();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + count), v.data());
  }
  return manifest.value("meta", json::object());
}

}  // namespace cantus::nn
