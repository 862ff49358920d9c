#include "longconv/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace longconv {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'C', 'V', '1'};

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is, const std::string& what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CheckpointError("truncated checkpoint while reading " + what);
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp + " for writing");
    os.write(kMagic, 4);
    write_raw(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
      write_raw(os, static_cast<std::uint32_t>(e.name.size()));
      os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      write_raw(os, static_cast<std::uint32_t>(e.shape.size()));
      for (auto d : e.shape) write_raw(os, static_cast<std::uint64_t>(d));
      if (static_cast<std::int64_t>(e.values.size()) != shape_numel(e.shape))
        throw CheckpointError("entry '" + e.name + "' value count does not match shape");
      os.write(reinterpret_cast<const char*>(e.values.data()),
               static_cast<std::streamsize>(e.values.size() * sizeof(float)));
    }
    if (!os) throw CheckpointError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("bad magic in " + path + " (not an LCV1 checkpoint)");
  const auto count = read_raw<std::uint32_t>(is, "tensor count");
  std::vector<CheckpointEntry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto name_len = read_raw<std::uint32_t>(is, "name length");
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    if (!is) throw CheckpointError("truncated checkpoint while reading name");
    const auto rank = read_raw<std::uint32_t>(is, "rank");
    for (std::uint32_t d = 0; d < rank; ++d)
      e.shape.push_back(static_cast<std::int64_t>(read_raw<std::uint64_t>(is, "dims")));
    const std::int64_t numel = shape_numel(e.shape);
    e.values.resize(static_cast<std::size_t>(numel));
    is.read(reinterpret_cast<char*>(e.values.data()),
            static_cast<std::streamsize>(e.values.size() * sizeof(float)));
    if (!is) throw CheckpointError("truncated checkpoint while reading data of '" + e.name + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace longconv
