#pragma once

#include <string>
#include <vector>

#include "aev/io/binary.hpp"
#include "aev/nn/network.hpp"

namespace aev::io {

inline constexpr char kNetMagic[] = "AEVNET1";

/// Checkpoint layout: magic, trained flag, head/class/input-shape header,
/// then the layer list with shapes and row-major little-endian f32 payloads.
inline std::vector<unsigned char> serialize_network(const Network<float>& net) {
  ByteWriter w;
  w.raw(kNetMagic, 7);
  w.u8(net.trained ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  w.u32(static_cast<std::uint32_t>(net.head_index));
  w.u32(static_cast<std::uint32_t>(net.class_count));
  w.u32(static_cast<std::uint32_t>(net.input_shape.size()));
  for (Index d : net.input_shape) w.u64(static_cast<std::uint64_t>(d));
  for (const auto& layer : net.layers) {
    if (const auto* d = std::get_if<Dense<float>>(&layer)) {
      w.u8(0);
      w.u64(static_cast<std::uint64_t>(d->weights.shape[0]));
      w.u64(static_cast<std::uint64_t>(d->weights.shape[1]));
      for (float v : d->weights.data) w.f32(v);
      for (float v : d->bias.data) w.f32(v);
    } else if (const auto* c = std::get_if<Conv2D<float>>(&layer)) {
      w.u8(1);
      for (Index dim : c->kernels.shape) w.u64(static_cast<std::uint64_t>(dim));
      w.u32(static_cast<std::uint32_t>(c->stride));
      for (float v : c->kernels.data) w.f32(v);
      for (float v : c->bias.data) w.f32(v);
    } else if (std::holds_alternative<ReLU>(layer)) {
      w.u8(2);
    } else if (std::holds_alternative<Flatten>(layer)) {
      w.u8(3);
    } else {
      const auto& p = std::get<MaxPool2D>(layer);
      w.u8(4);
      w.u32(static_cast<std::uint32_t>(p.pool_h));
      w.u32(static_cast<std::uint32_t>(p.pool_w));
      w.u32(static_cast<std::uint32_t>(p.stride));
    }
  }
  return w.bytes;
}

inline Network<float> deserialize_network(const std::vector<unsigned char>& bytes,
                                          const std::string& source = "checkpoint") {
  ByteReader r{bytes.data(), bytes.size(), 0, source};
  char magic[8] = {};
  r.raw(magic, 7);
  if (std::string(magic, 7) != kNetMagic)
    throw FormatError(source + ": bad magic, expected AEVNET1", 0);
  Network<float> net;
  net.trained = r.u8() != 0;
  const std::uint32_t layer_count = r.u32();
  net.head_index = static_cast<int>(r.u32());
  net.class_count = static_cast<int>(r.u32());
  const std::uint32_t rank = r.u32();
  for (std::uint32_t i = 0; i < rank; ++i) net.input_shape.push_back(static_cast<Index>(r.u64()));
  for (std::uint32_t li = 0; li < layer_count; ++li) {
    const std::uint8_t kind = r.u8();
    switch (kind) {
      case 0: {
        const auto out = static_cast<Index>(r.u64());
        const auto in = static_cast<Index>(r.u64());
        Dense<float> d{Tensor<float>::zeros({out, in}), Tensor<float>::zeros({out})};
        for (auto& v : d.weights.data) v = r.f32();
        for (auto& v : d.bias.data) v = r.f32();
        net.layers.emplace_back(std::move(d));
        break;
      }
      case 1: {
        Shape ks(4);
        for (auto& dim : ks) dim = static_cast<Index>(r.u64());
        const int stride = static_cast<int>(r.u32());
        Conv2D<float> c{Tensor<float>::zeros(ks), Tensor<float>::zeros({ks[0]}), stride};
        for (auto& v : c.kernels.data) v = r.f32();
        for (auto& v : c.bias.data) v = r.f32();
        net.layers.emplace_back(std::move(c));
        break;
      }
      case 2: net.layers.emplace_back(ReLU{}); break;
      case 3: net.layers.emplace_back(Flatten{}); break;
      case 4: {
        MaxPool2D p;
        p.pool_h = static_cast<int>(r.u32());
        p.pool_w = static_cast<int>(r.u32());
        p.stride = static_cast<int>(r.u32());
        net.layers.emplace_back(p);
        break;
      }
      default:
        throw FormatError(source + ": unknown layer kind " + std::to_string(kind),
                          static_cast<long long>(r.pos - 1));
    }
  }
  net.finalize();
  return net;
}

inline void save_network(const std::string& path, const Network<float>& net) {
  write_file(path, serialize_network(net));
}

inline Network<float> load_network(const std::string& path) {
  return deserialize_network(read_file(path), path);
}

inline std::uint64_t network_hash(const Network<float>& net) {
  return fnv1a(serialize_network(net));
}

}  // namespace aev::io
