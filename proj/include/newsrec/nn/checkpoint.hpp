#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "newsrec/nn/parameter.hpp"

namespace newsrec::nn {

enum class DType { kF32, kF64 };

std::string dtype_name(DType dtype);

inline constexpr int kCheckpointFormatVersion = 1;

// Writes `path` (flat little-endian tensor bytes in store order) and
// `path` + ".json" (manifest: name, shape, dtype, offset, nbytes).
void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path, DType dtype);

struct CheckpointLoadReport {
  std::size_t loaded = 0;
  std::vector<std::string> unused;  // present in the file, absent in the store
};

// Loads by name. Every store parameter must be present with matching shape;
// extra tensors in the file are reported, not fatal.
CheckpointLoadReport load_checkpoint(ParameterStore& store, const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}  // namespace newsrec::nn
