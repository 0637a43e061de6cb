#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aev/core/dataset.hpp"
#include "aev/core/parallel.hpp"
#include "aev/core/rng.hpp"
#include "aev/nn/network.hpp"

namespace aev {

enum class ExplainerKind { vg, sg, ig, gxi, eg, sig, random };

inline const char* explainer_name(ExplainerKind k) {
  switch (k) {
    case ExplainerKind::vg: return "vg";
    case ExplainerKind::sg: return "sg";
    case ExplainerKind::ig: return "ig";
    case ExplainerKind::gxi: return "gxi";
    case ExplainerKind::eg: return "eg";
    case ExplainerKind::sig: return "sig";
    default: return "random";
  }
}

inline ExplainerKind explainer_kind_from(const std::string& name) {
  for (ExplainerKind k : {ExplainerKind::vg, ExplainerKind::sg, ExplainerKind::ig,
                          ExplainerKind::gxi, ExplainerKind::eg, ExplainerKind::sig,
                          ExplainerKind::random})
    if (name == explainer_name(k)) return k;
  throw ConfigError("unknown explainer: " + name);
}

enum class BaselineKind { constant, dataset_mean, training_samples };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::constant;
  double value = 0.0;  // constant only

  std::string describe() const {
    switch (kind) {
      case BaselineKind::constant: return "constant(" + std::to_string(value) + ")";
      case BaselineKind::dataset_mean: return "dataset_mean";
      default: return "training_samples";
    }
  }
};

/// How the IG-family Riemann sum walks the interpolation path. right_sum is
/// the s = 1..k estimator (exact for constant integrands); inclusive_sum is
/// the s = 0..k form with the same 1/k divisor, kept for completeness-in-the-
/// limit experiments and issuing k+1 gradient queries.
enum class PathRule { right_sum, inclusive_sum };

struct ExplainerConfig {
  ExplainerKind kind = ExplainerKind::ig;
  int k = 32;             // samples / path steps
  double sigma = 0.15;    // SG/SIG noise std, in input units ([0,1]-scaled data)
  BaselineSpec baseline{};
  std::uint64_t seed = 0;
  Head head = Head::probability;
  PathRule path_rule = PathRule::right_sum;
  int eg_inner_steps = 1;  // >1 nests a full path sum per baseline draw

  void validate() const {
    if (k < 1) throw ConfigError("explainer budget k must be >= 1");
    if ((kind == ExplainerKind::sg || kind == ExplainerKind::sig) && !(sigma > 0.0))
      throw ConfigError("SG/SIG require sigma > 0");
    if ((kind == ExplainerKind::ig || kind == ExplainerKind::gxi ||
         kind == ExplainerKind::sig) &&
        baseline.kind == BaselineKind::training_samples)
      throw ConfigError("training_samples baselines are only valid for EG");
    if (kind == ExplainerKind::eg && eg_inner_steps < 1)
      throw ConfigError("EG inner step count must be >= 1");
  }
};

/// Signed per-feature scores xi for one (input, target-class) pair.
template <typename Scalar>
struct AttributionMap {
  Tensor<Scalar> values;
  int target = 0;
  std::string explainer_id;
  // provenance
  Head head = Head::probability;
  std::uint64_t seed = 0;
  int k = 0;
  double sigma = 0.0;
  std::string baseline_desc;
};

template <typename Scalar>
struct ExplainContext {
  const Tensor<Scalar>* dataset_mean = nullptr;      // for dataset_mean baselines
  const LabeledDataset<Scalar>* baseline_pool = nullptr;  // for EG
};

template <typename Scalar>
Tensor<Scalar> resolve_baseline(const BaselineSpec& spec, const Shape& shape,
                                const Tensor<Scalar>* dataset_mean) {
  if (spec.kind == BaselineKind::constant)
    return Tensor<Scalar>::full(shape, static_cast<Scalar>(spec.value));
  if (spec.kind == BaselineKind::dataset_mean) {
    if (!dataset_mean) throw ConfigError("dataset_mean baseline requires a dataset mean tensor");
    if (dataset_mean->shape != shape)
      throw ShapeError("baseline shape " + shape_str(dataset_mean->shape) +
                       " does not match input " + shape_str(shape));
    return *dataset_mean;
  }
  throw ConfigError("training_samples baseline has no single tensor form");
}

namespace detail {

template <typename Scalar>
AttributionMap<Scalar> finish_map(Tensor<Scalar> values, int target, const ExplainerConfig& cfg,
                                  std::string baseline_desc = {}) {
  if (!values.finite()) throw NonFiniteError("attribution map has non-finite entries");
  AttributionMap<Scalar> map;
  map.values = std::move(values);
  map.target = target;
  map.explainer_id = explainer_name(cfg.kind);
  map.head = cfg.head;
  map.seed = cfg.seed;
  map.k = cfg.k;
  map.sigma = cfg.sigma;
  map.baseline_desc = std::move(baseline_desc);
  return map;
}

template <typename Scalar>
Tensor<Scalar> to_tensor(const Eigen::RowVectorXd& row, const Shape& shape) {
  Tensor<Scalar> t = Tensor<Scalar>::zeros(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(row(i));
  return t;
}

/// Shared IG/SIG path sum: gradients at b + (s/k)(x-b) (+ optional noise),
/// summed and scaled by (x-b)/k.
template <typename Scalar>
Tensor<Scalar> path_sum(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                        const ExplainerConfig& cfg, const Tensor<Scalar>& baseline,
                        bool with_noise) {
  if (baseline.shape != x.shape)
    throw ShapeError("baseline shape " + shape_str(baseline.shape) + " does not match input " +
                     shape_str(x.shape));
  const Index n_features = x.size();
  const int s0 = cfg.path_rule == PathRule::right_sum ? 1 : 0;
  const Index rows = cfg.k - s0 + 1;
  const Eigen::RowVectorXd xv = x.vec().template cast<double>().transpose();
  const Eigen::RowVectorXd bv = baseline.vec().template cast<double>().transpose();
  const Eigen::RowVectorXd diff = xv - bv;

  RowMatD points(rows, n_features);
  Rng rng(derive_seed(cfg.seed, "path-noise"));
  for (int s = s0; s <= cfg.k; ++s) {
    const double t = static_cast<double>(s) / static_cast<double>(cfg.k);
    points.row(s - s0) = bv + t * diff;
    if (with_noise)
      for (Index j = 0; j < n_features; ++j)
        points(s - s0, j) += rng.normal(0.0, cfg.sigma);
  }
  const RowMatD grads = input_gradient_batch(net, std::move(points),
                                             std::vector<int>(static_cast<std::size_t>(rows), target),
                                             cfg.head);
  const Eigen::RowVectorXd total = grads.colwise().sum();
  return to_tensor<Scalar>(
      (diff.array() * total.array() / static_cast<double>(cfg.k)).matrix(), x.shape);
}

}  // namespace detail

/// Vanilla gradient: raw model sensitivity at the explicand.
template <typename Scalar>
AttributionMap<Scalar> explain_vg(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                                  const ExplainerConfig& cfg) {
  cfg.validate();
  return detail::finish_map(input_gradient(net, x, target, cfg.head), target, cfg);
}

/// SmoothGrad: mean gradient over k Gaussian-noised copies of the input.
template <typename Scalar>
AttributionMap<Scalar> explain_sg(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                                  const ExplainerConfig& cfg) {
  cfg.validate();
  const Index n_features = x.size();
  RowMatD points(cfg.k, n_features);
  Rng rng(derive_seed(cfg.seed, "sg-noise"));
  const Eigen::RowVectorXd xv = x.vec().template cast<double>().transpose();
  for (int s = 0; s < cfg.k; ++s) {
    points.row(s) = xv;
    for (Index j = 0; j < n_features; ++j) points(s, j) += rng.normal(0.0, cfg.sigma);
  }
  const RowMatD grads = input_gradient_batch(
      net, std::move(points), std::vector<int>(static_cast<std::size_t>(cfg.k), target), cfg.head);
  return detail::finish_map(
      detail::to_tensor<Scalar>(grads.colwise().mean(), x.shape), target, cfg);
}

/// Integrated gradients along the straight path from the baseline.
template <typename Scalar>
AttributionMap<Scalar> explain_ig(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                                  const ExplainerConfig& cfg, const Tensor<Scalar>& baseline) {
  cfg.validate();
  return detail::finish_map(detail::path_sum(net, x, target, cfg, baseline, false), target, cfg,
                            cfg.baseline.describe());
}

template <typename Scalar>
AttributionMap<Scalar> explain_ig(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                                  const ExplainerConfig& cfg,
                                  const ExplainContext<Scalar>& ctx = {}) {
  return explain_ig(net, x, target, cfg, resolve_baseline(cfg.baseline, x.shape, ctx.dataset_mean));
}

/// Gradient x Input: single-observation special case of IG at the explicand.
template <typename Scalar>
AttributionMap<Scalar> explain_gxi(const Network<Scalar>& net, const Tensor<Scalar>& x,
                                   int target, const ExplainerConfig& cfg) {
  cfg.validate();
  Tensor<Scalar> values = input_gradient(net, x, target, cfg.head);
  for (Index i = 0; i < values.size(); ++i)
    values[i] = static_cast<Scalar>(static_cast<double>(values[i]) * static_cast<double>(x[i]));
  return detail::finish_map(std::move(values), target, cfg, "constant(0)");
}

/// Expected gradients: baselines drawn from a pool. Default estimator is one
/// uniformly-random path point per draw, so the total budget stays at k
/// gradient queries; eg_inner_steps > 1 switches to nested path sums.
template <typename Scalar>
AttributionMap<Scalar> explain_eg(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                                  const ExplainerConfig& cfg,
                                  const LabeledDataset<Scalar>& baseline_pool) {
  cfg.validate();
  if (baseline_pool.size() == 0) throw ConfigError("EG baseline pool is empty");
  if (baseline_pool.input_shape() != x.shape)
    throw ShapeError("baseline pool shape " + shape_str(baseline_pool.input_shape()) +
                     " does not match input " + shape_str(x.shape));
  const Index n_features = x.size();
  const Eigen::RowVectorXd xv = x.vec().template cast<double>().transpose();
  Rng rng(derive_seed(cfg.seed, "eg-draws"));

  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n_features);
  if (cfg.eg_inner_steps == 1) {
    RowMatD points(cfg.k, n_features);
    RowMatD diffs(cfg.k, n_features);
    for (int j = 0; j < cfg.k; ++j) {
      const auto pick = static_cast<std::size_t>(rng.below(baseline_pool.size()));
      const Eigen::RowVectorXd bv =
          baseline_pool.inputs[pick].vec().template cast<double>().transpose();
      const double t = rng.uniform();
      diffs.row(j) = xv - bv;
      points.row(j) = bv + t * diffs.row(j);
    }
    const RowMatD grads = input_gradient_batch(
        net, std::move(points), std::vector<int>(static_cast<std::size_t>(cfg.k), target),
        cfg.head);
    acc = (diffs.array() * grads.array()).colwise().sum();
  } else {
    ExplainerConfig inner = cfg;
    inner.k = cfg.eg_inner_steps;
    inner.path_rule = PathRule::right_sum;
    for (int j = 0; j < cfg.k; ++j) {
      const auto pick = static_cast<std::size_t>(rng.below(baseline_pool.size()));
      inner.seed = derive_seed(cfg.seed, "eg-inner", {static_cast<std::uint64_t>(j)});
      const Tensor<Scalar> part =
          detail::path_sum(net, x, target, inner, baseline_pool.inputs[pick], false);
      acc += part.vec().template cast<double>().transpose();
    }
  }
  acc /= static_cast<double>(cfg.k);
  return detail::finish_map(detail::to_tensor<Scalar>(acc, x.shape), target, cfg,
                            "training_samples");
}

/// Smoothed IG: the IG path sum with Gaussian noise on every evaluation point.
template <typename Scalar>
AttributionMap<Scalar> explain_sig(const Network<Scalar>& net, const Tensor<Scalar>& x,
                                   int target, const ExplainerConfig& cfg,
                                   const Tensor<Scalar>& baseline) {
  cfg.validate();
  return detail::finish_map(detail::path_sum(net, x, target, cfg, baseline, true), target, cfg,
                            cfg.baseline.describe());
}

template <typename Scalar>
AttributionMap<Scalar> explain_sig(const Network<Scalar>& net, const Tensor<Scalar>& x,
                                   int target, const ExplainerConfig& cfg,
                                   const ExplainContext<Scalar>& ctx = {}) {
  return explain_sig(net, x, target, cfg,
                     resolve_baseline(cfg.baseline, x.shape, ctx.dataset_mean));
}

/// Random baseline: seeded i.i.d. scores in (-1, 1), independent of any model.
template <typename Scalar>
AttributionMap<Scalar> explain_random(const Tensor<Scalar>& x, int target, std::uint64_t seed) {
  Tensor<Scalar> values = Tensor<Scalar>::zeros(x.shape);
  Rng rng(derive_seed(seed, "random-scores"));
  for (Index i = 0; i < values.size(); ++i)
    values[i] = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::random;
  cfg.seed = seed;
  cfg.k = 0;
  cfg.sigma = 0.0;
  return detail::finish_map(std::move(values), target, cfg);
}

/// Kind-dispatching entry point used by the evaluation pipelines.
template <typename Scalar>
AttributionMap<Scalar> explain(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                               const ExplainerConfig& cfg, const ExplainContext<Scalar>& ctx = {}) {
  switch (cfg.kind) {
    case ExplainerKind::vg: return explain_vg(net, x, target, cfg);
    case ExplainerKind::sg: return explain_sg(net, x, target, cfg);
    case ExplainerKind::ig: return explain_ig(net, x, target, cfg, ctx);
    case ExplainerKind::gxi: return explain_gxi(net, x, target, cfg);
    case ExplainerKind::eg: {
      if (!ctx.baseline_pool) throw ConfigError("EG requires a baseline pool");
      return explain_eg(net, x, target, cfg, *ctx.baseline_pool);
    }
    case ExplainerKind::sig: return explain_sig(net, x, target, cfg, ctx);
    default: return explain_random(x, target, cfg.seed);
  }
}

/// Explain a set of samples (by dataset index) against their labels.
/// Per-sample seeds derive from (cfg.seed, position); rows are independent,
/// so the loop parallelizes freely.
template <typename Scalar>
std::vector<AttributionMap<Scalar>> explain_set(const Network<Scalar>& net,
                                                const LabeledDataset<Scalar>& ds,
                                                const std::vector<int>& indices,
                                                const ExplainerConfig& cfg,
                                                const ExplainContext<Scalar>& ctx = {},
                                                int threads = 1) {
  std::vector<AttributionMap<Scalar>> maps(indices.size());
  parallel_for(
      indices.size(),
      [&](std::size_t pos) {
        const auto sample = static_cast<std::size_t>(indices[pos]);
        ExplainerConfig local = cfg;
        local.seed = derive_seed(cfg.seed, "sample", {static_cast<std::uint64_t>(pos)});
        maps[pos] = explain(net, ds.inputs[sample], ds.labels[sample], local, ctx);
      },
      threads);
  return maps;
}

template <typename Scalar>
Tensor<Scalar> dataset_mean(const LabeledDataset<Scalar>& ds) {
  if (ds.size() == 0) throw ConfigError("mean of empty dataset");
  Tensor<double> acc = Tensor<double>::zeros(ds.input_shape());
  for (const auto& x : ds.inputs)
    for (Index i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(x[i]);
  Tensor<Scalar> mean = Tensor<Scalar>::zeros(ds.input_shape());
  for (Index i = 0; i < acc.size(); ++i)
    mean[i] = static_cast<Scalar>(acc[i] / static_cast<double>(ds.size()));
  return mean;
}

}  // namespace aev
