#pragma once

// Flat binary weight container. Layout, all little-endian:
//   magic "LCV1" | u32 tensor count | per tensor:
//   u32 name length | UTF-8 name | u32 rank | u64 dims[rank] | f32 data
// Writes go to a temp file then an atomic rename, so an interrupted run
// never leaves a corrupt checkpoint behind.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "longconv/tensor.hpp"

namespace longconv {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint(const std::string& path);

// Convert a model's named parameters (any scalar type) to f32 entries.
template <typename S>
std::vector<CheckpointEntry> to_entries(
    const std::vector<std::pair<std::string, Tensor<S>>>& named) {
  std::vector<CheckpointEntry> entries;
  entries.reserve(named.size());
  for (const auto& [name, t] : named) {
    CheckpointEntry e;
    e.name = name;
    e.shape = t.shape();
    e.values.resize(static_cast<std::size_t>(t.numel()));
    for (std::int64_t i = 0; i < t.numel(); ++i) e.values[static_cast<std::size_t>(i)] =
        static_cast<float>(t.data()[i]);
    entries.push_back(std::move(e));
  }
  return entries;
}

// Load entries back into matching named parameters; names and dims must agree.
template <typename S>
void load_entries(const std::vector<CheckpointEntry>& entries,
                  std::vector<std::pair<std::string, Tensor<S>>>& named) {
  if (entries.size() != named.size())
    throw CheckpointError("checkpoint holds " + std::to_string(entries.size()) +
                          " tensors, model expects " + std::to_string(named.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    auto& [name, t] = named[i];
    if (e.name != name)
      throw CheckpointError("checkpoint tensor '" + e.name + "' does not match parameter '" +
                            name + "'");
    if (e.shape != t.shape())
      throw CheckpointError("shape mismatch for '" + name + "': file " + shape_str(e.shape) +
                            " vs model " + shape_str(t.shape()));
    for (std::int64_t j = 0; j < t.numel(); ++j)
      t.data()[j] = static_cast<S>(e.values[static_cast<std::size_t>(j)]);
  }
}

template <typename S>
void save_model(const std::string& path,
                const std::vector<std::pair<std::string, Tensor<S>>>& named) {
  write_checkpoint(path, to_entries(named));
}

template <typename S>
void load_model(const std::string& path,
                std::vector<std::pair<std::string, Tensor<S>>> named) {
  load_entries(read_checkpoint(path), named);
}

}  // namespace longconv
