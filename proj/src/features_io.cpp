#include "vidcap/features_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vidcap/error.hpp"

namespace vidcap {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'F', 'W', 'F'};

std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

}  // namespace

FrameFeatureSet read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  std::array<unsigned char, 16> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw ParseError("feature file " + path.string() + ": truncated header");
  }
  if (std::memcmp(header.data(), kMagic.data(), 4) != 0) {
    throw ParseError("feature file " + path.string() + ": bad magic");
  }
  FrameFeatureSet f;
  f.rows = load_u32(header.data() + 4);
  f.cols = load_u32(header.data() + 8);
  if (f.cols == 0) throw ValidationError("feature file " + path.string() + ": zero columns");
  const std::size_t n = f.rows * f.cols;
  std::vector<unsigned char> raw(n * 4);
  if (n && !in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ParseError("feature file " + path.string() + ": truncated payload");
  }
  f.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.data[i] = std::bit_cast<float>(load_u32(raw.data() + 4 * i));
    if (!std::isfinite(f.data[i])) {
      throw ValidationError("feature file " + path.string() + ": non-finite value at row " +
                            std::to_string(i / f.cols));
    }
  }
  return f;
}

void write_feature_file(const std::filesystem::path& path, const FrameFeatureSet& frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write feature file " + path.string());
  std::vector<unsigned char> buf(16 + frames.data.size() * 4);
  std::memcpy(buf.data(), kMagic.data(), 4);
  store_u32(buf.data() + 4, static_cast<std::uint32_t>(frames.rows));
  store_u32(buf.data() + 8, static_cast<std::uint32_t>(frames.cols));
  store_u32(buf.data() + 12, 0);
  for (std::size_t i = 0; i < frames.data.size(); ++i) {
    store_u32(buf.data() + 16 + 4 * i, std::bit_cast<std::uint32_t>(frames.data[i]));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace vidcap
