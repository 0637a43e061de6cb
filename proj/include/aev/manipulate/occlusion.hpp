#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "aev/core/dataset.hpp"
#include "aev/core/rng.hpp"
#include "aev/explain/explainers.hpp"

#include <json.hpp>

namespace aev {

enum class OcclusionOrder { highest_first, lowest_first, relevant_first, irrelevant_first, random };

inline const char* occlusion_order_name(OcclusionOrder o) {
  switch (o) {
    case OcclusionOrder::highest_first: return "highest_first";
    case OcclusionOrder::lowest_first: return "lowest_first";
    case OcclusionOrder::relevant_first: return "relevant_first";
    case OcclusionOrder::irrelevant_first: return "irrelevant_first";
    default: return "random";
  }
}

inline OcclusionOrder occlusion_order_from(const std::string& name) {
  for (OcclusionOrder o : {OcclusionOrder::highest_first, OcclusionOrder::lowest_first,
                           OcclusionOrder::relevant_first, OcclusionOrder::irrelevant_first,
                           OcclusionOrder::random})
    if (name == occlusion_order_name(o)) return o;
  throw ConfigError("unknown occlusion order: " + name);
}

/// Feature geometry for occlusion: rank-3 inputs with more than one channel
/// are occluded per pixel (all channels together); anything else per scalar.
struct FeatureLayout {
  Index features = 0;
  Index channels = 1;
  Index channel_stride = 0;  // flat offset between channels of one pixel

  static FeatureLayout of(const Shape& shape) {
    FeatureLayout l;
    if (shape.size() == 3 && shape[0] > 1) {
      l.features = shape[1] * shape[2];
      l.channels = shape[0];
      l.channel_stride = l.features;
    } else {
      l.features = shape_size(shape);
    }
    return l;
  }
};

/// Per-feature ranking score. Signed orders aggregate channels by signed sum,
/// magnitude orders by absolute sum.
template <typename Scalar>
std::vector<double> feature_scores(const AttributionMap<Scalar>& attr, bool magnitude) {
  const FeatureLayout layout = FeatureLayout::of(attr.values.shape);
  std::vector<double> scores(static_cast<std::size_t>(layout.features), 0.0);
  for (Index c = 0; c < layout.channels; ++c)
    for (Index f = 0; f < layout.features; ++f) {
      const double v = static_cast<double>(attr.values[c * layout.channel_stride + f]);
      scores[static_cast<std::size_t>(f)] += magnitude ? std::abs(v) : v;
    }
  return scores;
}

/// Permutation of feature indices sorted by the order's key; ties broken by
/// ascending feature index. order == random ignores the attribution values.
template <typename Scalar>
std::vector<int> rank_features(const AttributionMap<Scalar>& attr, OcclusionOrder order,
                               std::uint64_t seed = 0) {
  if (!attr.values.finite()) throw NonFiniteError("attribution map must be finite for ranking");
  const FeatureLayout layout = FeatureLayout::of(attr.values.shape);
  std::vector<int> perm(static_cast<std::size_t>(layout.features));
  std::iota(perm.begin(), perm.end(), 0);
  if (order == OcclusionOrder::random) {
    Rng rng(derive_seed(seed, "rank-random"));
    rng.shuffle(perm.begin(), perm.end());
    return perm;
  }
  const bool magnitude =
      order == OcclusionOrder::relevant_first || order == OcclusionOrder::irrelevant_first;
  const bool descending =
      order == OcclusionOrder::highest_first || order == OcclusionOrder::relevant_first;
  const std::vector<double> scores = feature_scores(attr, magnitude);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return descending ? sa > sb : sa < sb;
    return a < b;
  });
  return perm;
}

enum class ReplacementKind { constant, per_feature_mean, per_channel_mean };

struct ReplacementSpec {
  ReplacementKind kind = ReplacementKind::constant;
  double value = 0.0;

  std::string describe() const {
    switch (kind) {
      case ReplacementKind::constant: return "constant(" + std::to_string(value) + ")";
      case ReplacementKind::per_feature_mean: return "per_feature_mean";
      default: return "per_channel_mean";
    }
  }
};

/// Which features to replace, per sample, plus how to replace them.
struct ManipulationPlan {
  double ratio = 0.0;
  OcclusionOrder order = OcclusionOrder::highest_first;
  ReplacementSpec replacement{};
  Shape input_shape;
  std::vector<std::vector<int>> occluded;  // sorted feature indices per sample
};

/// Occlude the first floor(ratio * n) features of each sample's ranking.
template <typename Scalar>
ManipulationPlan build_plan(const std::vector<AttributionMap<Scalar>>& attrs, double ratio,
                            OcclusionOrder order, ReplacementSpec replacement,
                            std::uint64_t seed = 0) {
  if (ratio < 0.0 || ratio > 1.0) throw ConfigError("manipulation ratio must be in [0,1]");
  if (attrs.empty()) throw ConfigError("build_plan needs at least one attribution map");
  for (const auto& a : attrs)
    if (a.values.shape != attrs[0].values.shape)
      throw ShapeError("attribution maps disagree on shape: " + shape_str(a.values.shape) +
                       " vs " + shape_str(attrs[0].values.shape));

  const FeatureLayout layout = FeatureLayout::of(attrs[0].values.shape);
  const auto count = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(layout.features)));
  ManipulationPlan plan;
  plan.ratio = ratio;
  plan.order = order;
  plan.replacement = replacement;
  plan.input_shape = attrs[0].values.shape;
  plan.occluded.resize(attrs.size());
  for (std::size_t s = 0; s < attrs.size(); ++s) {
    const std::vector<int> ranking =
        rank_features(attrs[s], order, derive_seed(seed, "plan", {s}));
    plan.occluded[s].assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(plan.occluded[s].begin(), plan.occluded[s].end());
  }
  return plan;
}

/// Mean of each scalar position over a dataset (replacement source).
template <typename Scalar>
Tensor<Scalar> per_feature_mean(const LabeledDataset<Scalar>& ds) {
  return dataset_mean(ds);
}

/// Replace planned features; labels and the source dataset stay untouched.
/// `mean_source` overrides where per-feature/per-channel means come from
/// (the evaluation pipelines pass the train split).
template <typename Scalar>
LabeledDataset<Scalar> apply_plan(const LabeledDataset<Scalar>& data,
                                  const ManipulationPlan& plan,
                                  const Tensor<Scalar>* mean_source = nullptr) {
  if (data.size() != plan.occluded.size())
    throw ConfigError("plan covers " + std::to_string(plan.occluded.size()) + " samples, dataset has " +
                      std::to_string(data.size()));
  if (data.size() > 0 && data.input_shape() != plan.input_shape)
    throw ShapeError("plan built for shape " + shape_str(plan.input_shape) +
                     ", dataset has " + shape_str(data.input_shape()));
  const FeatureLayout layout = FeatureLayout::of(plan.input_shape);

  Tensor<Scalar> means;
  std::vector<double> channel_means;
  if (plan.replacement.kind == ReplacementKind::per_feature_mean) {
    means = mean_source ? *mean_source : dataset_mean(data);
  } else if (plan.replacement.kind == ReplacementKind::per_channel_mean) {
    Tensor<Scalar> m = mean_source ? *mean_source : dataset_mean(data);
    channel_means.resize(static_cast<std::size_t>(layout.channels), 0.0);
    for (Index c = 0; c < layout.channels; ++c) {
      double acc = 0.0;
      for (Index f = 0; f < layout.features; ++f)
        acc += static_cast<double>(m[c * layout.channel_stride + f]);
      channel_means[static_cast<std::size_t>(c)] = acc / static_cast<double>(layout.features);
    }
  }

  LabeledDataset<Scalar> out = data;
  for (std::size_t s = 0; s < out.inputs.size(); ++s) {
    auto& x = out.inputs[s];
    for (int f : plan.occluded[s]) {
      if (f < 0 || f >= layout.features)
        throw ConfigError("occluded feature index " + std::to_string(f) + " out of range");
      for (Index c = 0; c < layout.channels; ++c) {
        const Index flat = c * layout.channel_stride + f;
        switch (plan.replacement.kind) {
          case ReplacementKind::constant:
            x[flat] = static_cast<Scalar>(plan.replacement.value);
            break;
          case ReplacementKind::per_feature_mean:
            x[flat] = means[flat];
            break;
          case ReplacementKind::per_channel_mean:
            x[flat] = static_cast<Scalar>(channel_means[static_cast<std::size_t>(c)]);
            break;
        }
      }
    }
  }
  return out;
}

inline nlohmann::json plan_to_json(const ManipulationPlan& plan) {
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t s = 0; s < plan.occluded.size(); ++s)
    samples.push_back({{"sample_id", s},
                       {"ratio", plan.ratio},
                       {"order", occlusion_order_name(plan.order)},
                       {"replacement", plan.replacement.describe()},
                       {"occluded_indices", plan.occluded[s]}});
  return samples;
}

}  // namespace aev
