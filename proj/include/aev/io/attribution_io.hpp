#pragma once

#include <string>
#include <vector>

#include "aev/explain/explainers.hpp"
#include "aev/io/binary.hpp"

namespace aev::io {

inline constexpr char kAttMagic[] = "AEVATT1";

/// One record per attribution map: explicand id, explainer id, target class,
/// shape, then row-major little-endian f32 values.
struct AttributionRecord {
  std::uint64_t explicand_id = 0;
  AttributionMap<float> map;
};

inline std::vector<unsigned char> serialize_attributions(
    const std::vector<AttributionRecord>& records) {
  ByteWriter w;
  w.raw(kAttMagic, 7);
  w.u64(records.size());
  for (const auto& rec : records) {
    w.u64(rec.explicand_id);
    w.str(rec.map.explainer_id);
    w.u32(static_cast<std::uint32_t>(rec.map.target));
    w.u32(static_cast<std::uint32_t>(rec.map.values.shape.size()));
    for (Index d : rec.map.values.shape) w.u64(static_cast<std::uint64_t>(d));
    for (float v : rec.map.values.data) w.f32(v);
  }
  return w.bytes;
}

inline std::vector<AttributionRecord> deserialize_attributions(
    const std::vector<unsigned char>& bytes, const std::string& source = "attribution dump") {
  ByteReader r{bytes.data(), bytes.size(), 0, source};
  char magic[8] = {};
  r.raw(magic, 7);
  if (std::string(magic, 7) != kAttMagic)
    throw FormatError(source + ": bad magic, expected AEVATT1", 0);
  std::vector<AttributionRecord> records(r.u64());
  for (auto& rec : records) {
    rec.explicand_id = r.u64();
    rec.map.explainer_id = r.str();
    rec.map.target = static_cast<int>(r.u32());
    Shape shape(r.u32());
    for (auto& d : shape) d = static_cast<Index>(r.u64());
    rec.map.values = Tensor<float>::zeros(shape);
    for (auto& v : rec.map.values.data) v = r.f32();
  }
  return records;
}

inline void save_attributions(const std::string& path,
                              const std::vector<AttributionRecord>& records) {
  write_file(path, serialize_attributions(records));
}

inline std::vector<AttributionRecord> load_attributions(const std::string& path) {
  return deserialize_attributions(read_file(path), path);
}

}  // namespace aev::io
