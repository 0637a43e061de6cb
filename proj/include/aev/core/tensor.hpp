#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "aev/core/error.hpp"

namespace aev {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape");
    n *= d;
  }
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s + "]";
}

/// Dense n-d array: shape plus row-major values. All math happens through
/// Eigen maps of the flat storage.
template <typename Scalar>
struct Tensor {
  Shape shape;
  std::vector<Scalar> data;

  Tensor() = default;
  Tensor(Shape s, std::vector<Scalar> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<Index>(data.size()) != shape_size(shape))
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
  }

  static Tensor zeros(Shape s) {
    const Index n = shape_size(s);
    return Tensor(std::move(s), std::vector<Scalar>(static_cast<std::size_t>(n), Scalar(0)));
  }
  static Tensor full(Shape s, Scalar v) {
    const Index n = shape_size(s);
    return Tensor(std::move(s), std::vector<Scalar>(static_cast<std::size_t>(n), v));
  }

  Index size() const { return static_cast<Index>(data.size()); }
  Scalar& operator[](Index i) { return data[static_cast<std::size_t>(i)]; }
  const Scalar& operator[](Index i) const { return data[static_cast<std::size_t>(i)]; }

  bool finite() const {
    for (Scalar v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  auto vec() { return Eigen::Map<Eigen::Vector<Scalar, Eigen::Dynamic>>(data.data(), size()); }
  auto vec() const {
    return Eigen::Map<const Eigen::Vector<Scalar, Eigen::Dynamic>>(data.data(), size());
  }
  /// Row-major matrix view over the flat storage.
  auto matrix(Index rows, Index cols) {
    return Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.data(), rows, cols);
  }
  auto matrix(Index rows, Index cols) const {
    return Eigen::Map<
        const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.data(), rows, cols);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
    return out;
  }
};

template <typename Scalar>
bool same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return a.shape == b.shape;
}

/// FNV-1a over raw value bits; shape included so reshapes change the hash.
template <typename Scalar>
std::uint64_t content_hash(const Tensor<Scalar>& t, std::uint64_t h = 0xcbf29ce484222325ULL) {
  auto mix = [&h](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (Index d : t.shape) {
    auto v = static_cast<std::uint64_t>(d);
    mix(reinterpret_cast<const unsigned char*>(&v), sizeof(v));
  }
  if (!t.data.empty())
    mix(reinterpret_cast<const unsigned char*>(t.data.data()), t.data.size() * sizeof(Scalar));
  return h;
}

}  // namespace aev
