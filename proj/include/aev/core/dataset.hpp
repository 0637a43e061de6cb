#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "aev/core/error.hpp"
#include "aev/core/rng.hpp"
#include "aev/core/tensor.hpp"

namespace aev {

/// Classification dataset: uniformly shaped inputs scaled to [0,1] plus class
/// labels. split is "train" or "test".
template <typename Scalar>
struct LabeledDataset {
  std::vector<Tensor<Scalar>> inputs;
  std::vector<int> labels;
  int class_count = 0;
  std::string split;

  void validate() const {
    if (inputs.size() != labels.size())
      throw ConfigError("dataset: " + std::to_string(inputs.size()) + " inputs vs " +
                        std::to_string(labels.size()) + " labels");
    if (class_count <= 0) throw ConfigError("dataset: class_count must be positive");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= class_count)
        throw ConfigError("dataset: label " + std::to_string(labels[i]) + " at sample " +
                          std::to_string(i) + " outside [0," + std::to_string(class_count) + ")");
      if (!inputs.empty() && inputs[i].shape != inputs[0].shape)
        throw ShapeError("dataset: sample " + std::to_string(i) + " shape " +
                         shape_str(inputs[i].shape) + " differs from " +
                         shape_str(inputs[0].shape));
    }
  }

  std::size_t size() const { return inputs.size(); }
  const Shape& input_shape() const {
    if (inputs.empty()) throw ConfigError("dataset is empty");
    return inputs[0].shape;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : inputs) h = content_hash(t, h);
    for (int label : labels) {
      auto v = static_cast<std::uint64_t>(label);
      h = splitmix64(h ^ v) ^ (h >> 1);
    }
    h = splitmix64(h ^ static_cast<std::uint64_t>(class_count));
    return h;
  }
};

template <typename Scalar>
LabeledDataset<Scalar> subset(const LabeledDataset<Scalar>& ds, const std::vector<int>& indices) {
  LabeledDataset<Scalar> out;
  out.class_count = ds.class_count;
  out.split = ds.split;
  out.inputs.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (int i : indices) {
    out.inputs.push_back(ds.inputs[static_cast<std::size_t>(i)]);
    out.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Seeded class-stratified sample of floor(fraction * per-class count) per
/// class, returned in ascending index order.
template <typename Scalar>
std::vector<int> stratified_indices(const LabeledDataset<Scalar>& ds, double fraction,
                                    std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("train fraction must be in (0,1]");
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(static_cast<int>(i));
  std::vector<int> picked;
  for (int c = 0; c < ds.class_count; ++c) {
    auto& pool = by_class[static_cast<std::size_t>(c)];
    Rng rng(derive_seed(seed, "stratify", {static_cast<std::uint64_t>(c)}));
    rng.shuffle(pool.begin(), pool.end());
    auto take = static_cast<std::size_t>(fraction * static_cast<double>(pool.size()));
    if (fraction >= 1.0) take = pool.size();
    picked.insert(picked.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace aev
