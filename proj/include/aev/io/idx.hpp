#pragma once

#include <zlib.h>

#include <cstdint>
#include <string>
#include <vector>

#include "aev/core/error.hpp"

namespace aev::io {

/// Raw IDX payloads (de-facto MNIST format): big-endian magic and counts.
struct IdxImages {
  std::uint32_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

struct IdxLabels {
  std::uint32_t count = 0;
  std::vector<std::uint8_t> labels;
};

namespace detail {

/// gzread handles both gzip-compressed and plain files.
inline std::vector<std::uint8_t> read_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  int got = 0;
  while ((got = gzread(f, buf, sizeof(buf))) > 0) bytes.insert(bytes.end(), buf, buf + got);
  const bool bad = got < 0;
  gzclose(f);
  if (bad) throw IoError("failed reading " + path);
  return bytes;
}

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off,
                          const std::string& path) {
  if (off + 4 > b.size()) throw FormatError(path + ": truncated", static_cast<long long>(off));
  return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

}  // namespace detail

inline IdxImages read_idx_images(const std::string& path) {
  const auto bytes = detail::read_maybe_gz(path);
  const std::uint32_t magic = detail::be32(bytes, 0, path);
  if (magic != 0x00000803)
    throw FormatError(path + ": bad image magic (expected 0x00000803)", 0);
  IdxImages img;
  img.count = detail::be32(bytes, 4, path);
  img.rows = detail::be32(bytes, 8, path);
  img.cols = detail::be32(bytes, 12, path);
  const std::size_t expect = 16 + static_cast<std::size_t>(img.count) * img.rows * img.cols;
  if (bytes.size() < expect)
    throw FormatError(path + ": truncated pixel data", static_cast<long long>(bytes.size()));
  if (bytes.size() > expect)
    throw FormatError(path + ": trailing bytes after pixel data", static_cast<long long>(expect));
  img.pixels.assign(bytes.begin() + 16, bytes.end());
  return img;
}

inline IdxLabels read_idx_labels(const std::string& path) {
  const auto bytes = detail::read_maybe_gz(path);
  const std::uint32_t magic = detail::be32(bytes, 0, path);
  if (magic != 0x00000801)
    throw FormatError(path + ": bad label magic (expected 0x00000801)", 0);
  IdxLabels lab;
  lab.count = detail::be32(bytes, 4, path);
  const std::size_t expect = 8 + lab.count;
  if (bytes.size() < expect)
    throw FormatError(path + ": truncated label data", static_cast<long long>(bytes.size()));
  if (bytes.size() > expect)
    throw FormatError(path + ": trailing bytes after label data", static_cast<long long>(expect));
  lab.labels.assign(bytes.begin() + 8, bytes.end());
  return lab;
}

}  // namespace aev::io
