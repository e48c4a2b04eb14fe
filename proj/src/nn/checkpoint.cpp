#include "newsrec/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "newsrec/common/error.hpp"

namespace newsrec::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

std::string dtype_name(DType dtype) { return dtype == DType::kF32 ? "f32" : "f64"; }

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
  return std::filesystem::path(checkpoint.string() + ".json");
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path, DType dtype) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream bin(path, std::ios::binary | std::ios::trunc);
  if (!bin) throw Error("cannot open checkpoint for writing: " + path.string());

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["dtype"] = dtype_name(dtype);
  manifest["tensors"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const Parameter& p : store.parameters()) {
    const auto values = p.value.data();
    std::size_t nbytes = 0;
    if (dtype == DType::kF32) {
      std::vector<float> buf(values.begin(), values.end());
      nbytes = buf.size() * sizeof(float);
      bin.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(nbytes));
    } else {
      nbytes = values.size() * sizeof(double);
      bin.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(nbytes));
    }
    nlohmann::ordered_json entry;
    entry["name"] = p.name;
    entry["shape"] = p.value.shape();
    entry["dtype"] = dtype_name(dtype);
    entry["offset"] = offset;
    entry["nbytes"] = nbytes;
    entry["trainable"] = p.trainable;
    manifest["tensors"].push_back(std::move(entry));
    offset += nbytes;
  }
  bin.flush();
  if (!bin) throw Error("failed writing checkpoint (disk full?): " + path.string());

  std::ofstream man(manifest_path(path), std::ios::trunc);
  man << manifest.dump(2) << '\n';
  man.flush();
  if (!man) throw Error("failed writing checkpoint manifest: " + manifest_path(path).string());
}

CheckpointLoadReport load_checkpoint(ParameterStore& store, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("checkpoint not found: " + path.string());
  std::ifstream man(manifest_path(path));
  if (!man) throw Error("checkpoint manifest not found: " + manifest_path(path).string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(man);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed checkpoint manifest " + manifest_path(path).string() + ": " + e.what());
  }
  if (manifest.value("format_version", -1) != kCheckpointFormatVersion) {
    throw Error("unsupported checkpoint format version in " + manifest_path(path).string());
  }
  std::ifstream bin(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  CheckpointLoadReport report;
  std::vector<std::uint8_t> seen(store.parameters().size(), 0);
  for (const auto& entry : manifest.at("tensors")) {
    const std::string name = entry.at("name");
    Parameter* p = store.find(name);
    if (p == nullptr) {
      report.unused.push_back(name);
      continue;
    }
    const Shape shape = entry.at("shape").get<Shape>();
    if (shape != p->value.shape()) {
      throw Error("checkpoint tensor '" + name + "' has shape " + shape_string(shape) +
                  ", model expects " + shape_string(p->value.shape()));
    }
    const std::string dtype = entry.at("dtype");
    const std::size_t offset = entry.at("offset");
    const std::size_t nbytes = entry.at("nbytes");
    const std::size_t width = dtype == "f32" ? sizeof(float) : sizeof(double);
    if (offset + nbytes > bytes.size() || nbytes != shape_numel(shape) * width) {
      throw Error("checkpoint tensor '" + name + "' is truncated or inconsistent");
    }
    auto dst = p->value.mutable_data();
    const char* src = bytes.data() + offset;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (width == sizeof(float)) {
        float f;
        std::memcpy(&f, src + i * sizeof(float), sizeof(float));
        dst[i] = f;
      } else {
        std::memcpy(&dst[i], src + i * sizeof(double), sizeof(double));
      }
    }
    seen[static_cast<std::size_t>(p - store.parameters().data())] = 1;
    ++report.loaded;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw Error("checkpoint " + path.string() + " is missing parameter '" +
                  store.parameters()[i].name + "'");
    }
  }
  return report;
}

}  // namespace newsrec::nn
