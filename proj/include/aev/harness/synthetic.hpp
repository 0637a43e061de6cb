#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aev/core/dataset.hpp"
#include "aev/core/rng.hpp"
#include "aev/nn/network.hpp"
#include "aev/theory/shared_feature.hpp"

namespace aev {

enum class SyntheticKind { planted_evidence, blobs, cancellation_pair };

/// Generator settings for the desk-scale synthetic datasets. planted_evidence
/// realizes the primary/secondary-evidence setting: every class owns an
/// always-on primary pixel block, two classes additionally share a block that
/// switches on with probability p_on for either of them.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::planted_evidence;
  int classes = 5;
  int train_per_class = 1000;
  int test_per_class = 200;
  int grid = 16;              // feature grid is grid x grid
  int block = 2;              // primary/shared blocks are block x block
  int shared_class_a = 0;     // the y of the sharing pair
  int shared_class_b = 1;     // the y* of the sharing pair
  double p_on = 0.8;          // shared-block activation probability
  double noise_std = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (classes < 2) throw ConfigError("synthetic: need at least two classes");
    if (train_per_class <= 0 || test_per_class <= 0)
      throw ConfigError("synthetic: sample counts must be positive");
    if (kind == SyntheticKind::planted_evidence) {
      if (grid < 2 || block < 1) throw ConfigError("synthetic: bad grid/block size");
      if (p_on <= 0.0 || p_on > 1.0) throw ConfigError("synthetic: p_on must be in (0,1]");
      if (shared_class_a == shared_class_b || shared_class_a >= classes ||
          shared_class_b >= classes || shared_class_a < 0 || shared_class_b < 0)
        throw ConfigError("synthetic: invalid sharing pair");
    }
    if (noise_std < 0.0) throw ConfigError("synthetic: noise_std must be non-negative");
  }

  /// Flat pixel indices of class c's primary block (planted_evidence).
  std::vector<int> primary_block(int c) const {
    // Blocks sit on one row stripe, spaced so they never touch.
    const int row = 1;
    const int col = 1 + c * (block + 1);
    return block_indices(row, col);
  }

  std::vector<int> shared_block() const {
    const int row = grid / 2 + 1;
    const int col = grid / 2 - block / 2;
    return block_indices(row, col);
  }

  std::vector<int> block_indices(int row, int col) const {
    if (row + block > grid || col + block > grid)
      throw ConfigError("synthetic: block outside the feature grid");
    std::vector<int> idx;
    for (int r = 0; r < block; ++r)
      for (int c = 0; c < block; ++c) idx.push_back((row + r) * grid + col + c);
    return idx;
  }

  /// The (gamma, p, alpha) this generator realizes, with y = the sharing
  /// class shared_class_a: gamma = 1/C, p = 2 p_on / C, alpha = 1/2.
  theory::SharedFeatureDistribution shared_distribution() const {
    theory::SharedFeatureDistribution d;
    d.gamma = 1.0 / static_cast<double>(classes);
    d.p = 2.0 * p_on / static_cast<double>(classes);
    d.alpha = 0.5;
    d.classes = classes;
    return d;
  }
};

namespace detail {

template <typename Scalar>
LabeledDataset<Scalar> planted_split(const SyntheticSpec& spec, int per_class,
                                     std::uint64_t seed, std::string split) {
  const int n_features = spec.grid * spec.grid;
  // Primary blocks must not collide with each other or the shared block.
  std::set<int> seen;
  for (int c = 0; c < spec.classes; ++c)
    for (int i : spec.primary_block(c))
      if (!seen.insert(i).second) throw ConfigError("synthetic: overlapping primary blocks");
  for (int i : spec.shared_block())
    if (!seen.insert(i).second) throw ConfigError("synthetic: shared block overlaps a primary");

  LabeledDataset<Scalar> ds;
  ds.class_count = spec.classes;
  ds.split = std::move(split);
  const auto shared = spec.shared_block();
  for (int c = 0; c < spec.classes; ++c) {
    const auto primary = spec.primary_block(c);
    const bool shares = (c == spec.shared_class_a || c == spec.shared_class_b);
    for (int s = 0; s < per_class; ++s) {
      Rng rng(derive_seed(seed, "sample",
                          {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)}));
      auto x = Tensor<Scalar>::zeros(
          {static_cast<Index>(spec.grid), static_cast<Index>(spec.grid)});
      for (int i : primary) x[i] = Scalar(1);
      if (shares && rng.uniform() < spec.p_on)
        for (int i : shared) x[i] = Scalar(1);
      for (Index i = 0; i < static_cast<Index>(n_features); ++i) {
        const double v = static_cast<double>(x[i]) + rng.normal(0.0, spec.noise_std);
        x[i] = static_cast<Scalar>(std::clamp(v, 0.0, 1.0));
      }
      ds.inputs.push_back(std::move(x));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

template <typename Scalar>
LabeledDataset<Scalar> blobs_split(const SyntheticSpec& spec, int per_class, std::uint64_t seed,
                                   std::string split) {
  const int n_features = spec.grid * spec.grid;
  std::vector<std::vector<double>> centers;
  Rng center_rng(derive_seed(spec.seed, "centers"));
  for (int c = 0; c < spec.classes; ++c) {
    std::vector<double> center(static_cast<std::size_t>(n_features));
    for (auto& v : center) v = center_rng.uniform(0.2, 0.8);
    centers.push_back(std::move(center));
  }
  LabeledDataset<Scalar> ds;
  ds.class_count = spec.classes;
  ds.split = std::move(split);
  for (int c = 0; c < spec.classes; ++c)
    for (int s = 0; s < per_class; ++s) {
      Rng rng(derive_seed(seed, "sample",
                          {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)}));
      auto x = Tensor<Scalar>::zeros(
          {static_cast<Index>(spec.grid), static_cast<Index>(spec.grid)});
      for (Index i = 0; i < static_cast<Index>(n_features); ++i)
        x[i] = static_cast<Scalar>(std::clamp(
            centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] +
                rng.normal(0.0, spec.noise_std),
            0.0, 1.0));
      ds.inputs.push_back(std::move(x));
      ds.labels.push_back(c);
    }
  return ds;
}

template <typename Scalar>
LabeledDataset<Scalar> cancellation_split(const SyntheticSpec&, int per_class,
                                          std::uint64_t seed, std::string split) {
  LabeledDataset<Scalar> ds;
  ds.class_count = 2;
  ds.split = std::move(split);
  // Rejection-sample (x1, x2) so both sides of |x1-x2| > 1/4 stay balanced.
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < per_class; ++s) {
      Rng rng(derive_seed(seed, "sample",
                          {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)}));
      double a = 0, b = 0;
      for (;;) {
        a = rng.uniform();
        b = rng.uniform();
        const bool wide = std::abs(a - b) > 0.25;
        if (wide == (c == 1)) break;
      }
      ds.inputs.push_back(Tensor<Scalar>({2}, {static_cast<Scalar>(a), static_cast<Scalar>(b)}));
      ds.labels.push_back(c);
    }
  return ds;
}

}  // namespace detail

/// Deterministic (train, test) pair for the requested synthetic kind.
template <typename Scalar>
std::pair<LabeledDataset<Scalar>, LabeledDataset<Scalar>> generate_synthetic(
    const SyntheticSpec& spec) {
  spec.validate();
  const std::uint64_t train_seed = derive_seed(spec.seed, "train-split");
  const std::uint64_t test_seed = derive_seed(spec.seed, "test-split");
  switch (spec.kind) {
    case SyntheticKind::planted_evidence:
      return {detail::planted_split<Scalar>(spec, spec.train_per_class, train_seed, "train"),
              detail::planted_split<Scalar>(spec, spec.test_per_class, test_seed, "test")};
    case SyntheticKind::blobs:
      return {detail::blobs_split<Scalar>(spec, spec.train_per_class, train_seed, "train"),
              detail::blobs_split<Scalar>(spec, spec.test_per_class, test_seed, "test")};
    case SyntheticKind::cancellation_pair:
    default:
      return {
          detail::cancellation_split<Scalar>(spec, spec.train_per_class, train_seed, "train"),
          detail::cancellation_split<Scalar>(spec, spec.test_per_class, test_seed, "test")};
  }
}

/// Fixed two-layer net with o_0 = |x1 - x2| and o_1 = 0: the piecewise-linear
/// realization of the cancellation example. Along the diagonal path from
/// (0,0) to (1,1) every pre-activation is exactly zero, so gradients vanish
/// identically and straight-path IG assigns (0,0).
template <typename Scalar>
Network<Scalar> cancellation_network() {
  Network<Scalar> net;
  net.input_shape = {2};
  net.class_count = 2;
  net.layers.emplace_back(Dense<Scalar>{
      Tensor<Scalar>({2, 2}, {Scalar(1), Scalar(-1), Scalar(-1), Scalar(1)}),
      Tensor<Scalar>::zeros({2})});
  net.layers.emplace_back(ReLU{});
  net.layers.emplace_back(Dense<Scalar>{
      Tensor<Scalar>({2, 2}, {Scalar(1), Scalar(1), Scalar(0), Scalar(0)}),
      Tensor<Scalar>::zeros({2})});
  net.head_index = 2;
  net.trained = true;
  net.finalize();
  return net;
}

inline const char* synthetic_kind_name(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::planted_evidence: return "planted_evidence";
    case SyntheticKind::blobs: return "blobs";
    default: return "cancellation_pair";
  }
}

inline SyntheticKind synthetic_kind_from(const std::string& name) {
  if (name == "planted_evidence" || name == "planted") return SyntheticKind::planted_evidence;
  if (name == "blobs") return SyntheticKind::blobs;
  if (name == "cancellation_pair" || name == "cancellation")
    return SyntheticKind::cancellation_pair;
  throw ConfigError("unknown synthetic kind: " + name);
}

}  // namespace aev
