#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aev/core/parallel.hpp"
#include "aev/explain/explainers.hpp"
#include "aev/manipulate/occlusion.hpp"
#include "aev/nn/train.hpp"

namespace aev {

enum class UpdateProtocol { retrain_full, finetune_full, finetune_head };

inline const char* update_protocol_name(UpdateProtocol u) {
  switch (u) {
    case UpdateProtocol::retrain_full: return "retrain_full";
    case UpdateProtocol::finetune_full: return "finetune_full";
    default: return "finetune_head";
  }
}

inline UpdateProtocol update_protocol_from(const std::string& name) {
  for (UpdateProtocol u : {UpdateProtocol::retrain_full, UpdateProtocol::finetune_full,
                           UpdateProtocol::finetune_head})
    if (name == update_protocol_name(u)) return u;
  throw ConfigError("unknown update protocol: " + name);
}

/// Occlusion order x update protocol x ratio grid x repetitions.
struct SchemeConfig {
  std::string name = "custom";
  OcclusionOrder order = OcclusionOrder::lowest_first;
  UpdateProtocol update = UpdateProtocol::finetune_head;
  std::vector<double> ratios;  // ascending, within [0,1]
  int repetitions = 5;
  double train_fraction = 0.1;
  TrainConfig update_cfg{};  // settings for the protocol's model update
  bool explain_train = true;
  bool explain_test = true;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    if (ratios.empty()) throw ConfigError("scheme: ratio grid is empty");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      if (ratios[i] < 0.0 || ratios[i] > 1.0)
        throw ConfigError("scheme: ratios must lie in [0,1]");
      if (i > 0 && ratios[i] <= ratios[i - 1])
        throw ConfigError("scheme: ratios must be strictly ascending");
    }
    if (repetitions < 1) throw ConfigError("scheme: repetitions must be positive");
    if (train_fraction <= 0.0 || train_fraction > 1.0)
      throw ConfigError("scheme: train_fraction must be in (0,1]");
    update_cfg.validate();
  }
};

inline std::vector<double> default_ratio_grid() {
  std::vector<double> r;
  for (int i = 1; i <= 9; ++i) r.push_back(static_cast<double>(i) / 10.0);
  return r;
}

/// Table-1 presets. `base` supplies optimizer/batch settings; retrain presets
/// keep its epoch count, fine-tune presets override epochs (30 full with one
/// warmup on a cosine schedule, 10 head-only) and the train fraction
/// (1.0 / 0.2 / 0.1).
inline SchemeConfig preset(const std::string& name, TrainConfig base = TrainConfig{}) {
  SchemeConfig s;
  s.name = name;
  s.ratios = default_ratio_grid();
  s.repetitions = 5;
  s.update_cfg = base;
  auto finetune = [&](int epochs) {
    s.update_cfg.epochs = epochs;
    s.update_cfg.schedule = {ScheduleKind::cosine, 1};
  };
  if (name == "ROAR") {
    s.order = OcclusionOrder::highest_first;
    s.update = UpdateProtocol::retrain_full;
    s.train_fraction = 1.0;
  } else if (name == "KeAR") {
    s.order = OcclusionOrder::lowest_first;
    s.update = UpdateProtocol::retrain_full;
    s.train_fraction = 1.0;
  } else if (name == "KAFT") {
    s.order = OcclusionOrder::lowest_first;
    s.update = UpdateProtocol::finetune_full;
    s.train_fraction = 0.2;
    finetune(30);
  } else if (name == "KAFT-C") {
    s.order = OcclusionOrder::lowest_first;
    s.update = UpdateProtocol::finetune_head;
    s.train_fraction = 0.1;
    finetune(10);
  } else if (name == "RAFT-C-abs") {
    s.order = OcclusionOrder::relevant_first;
    s.update = UpdateProtocol::finetune_head;
    s.train_fraction = 0.1;
    finetune(10);
  } else if (name == "KAFT-C-abs") {
    s.order = OcclusionOrder::irrelevant_first;
    s.update = UpdateProtocol::finetune_head;
    s.train_fraction = 0.1;
    finetune(10);
  } else {
    throw ConfigError("unknown scheme preset: " + name +
                      " (expected ROAR, KeAR, KAFT, KAFT-C, RAFT-C-abs, KAFT-C-abs)");
  }
  s.update_cfg.scope =
      s.update == UpdateProtocol::finetune_head ? TrainScope::head_only : TrainScope::full;
  return s;
}

/// Accuracy matrix for one (scheme, explainer) run plus provenance.
struct EvalResult {
  std::string scheme;
  std::string explainer;
  std::string order;   // occlusion order actually applied
  std::string update;
  std::vector<double> ratios;
  int repetitions = 0;
  std::vector<std::vector<double>> accuracy;        // [ratio][rep], in [0,1]
  std::vector<std::vector<std::uint64_t>> job_seeds;  // [ratio][rep]
  std::uint64_t scheme_seed = 0;
  std::uint64_t checkpoint_hash = 0;
  std::uint64_t dataset_hash = 0;
  std::uint64_t parameter_updates = 0;  // scalar parameter updates across all jobs
  std::uint64_t gradient_queries = 0;   // explainer gradient queries across all reps

  double mean(std::size_t ratio_idx) const {
    double acc = 0;
    for (double v : accuracy[ratio_idx]) acc += v;
    return acc / static_cast<double>(accuracy[ratio_idx].size());
  }
  double stddev(std::size_t ratio_idx) const {
    const auto& row = accuracy[ratio_idx];
    if (row.size() < 2) return 0.0;
    const double m = mean(ratio_idx);
    double acc = 0;
    for (double v : row) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(row.size() - 1));
  }
};

/// ratio -> mean accuracy (with sample std) for one (explainer, scheme).
struct DegradationCurve {
  std::vector<double> ratios;
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline DegradationCurve curve_of(const EvalResult& r) {
  DegradationCurve c;
  c.ratios = r.ratios;
  for (std::size_t i = 0; i < r.ratios.size(); ++i) {
    c.mean.push_back(r.mean(i));
    c.stddev.push_back(r.stddev(i));
  }
  return c;
}

/// Trapezoidal area between keep and remove curves over the measured grid.
inline double delta_acc(const DegradationCurve& keep, const DegradationCurve& remove) {
  if (keep.ratios != remove.ratios)
    throw ConfigError("delta_acc: ratio grids do not match");
  if (keep.ratios.size() < 2) throw ConfigError("delta_acc: need at least two grid points");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < keep.ratios.size(); ++i) {
    const double d0 = keep.mean[i] - remove.mean[i];
    const double d1 = keep.mean[i + 1] - remove.mean[i + 1];
    area += 0.5 * (d0 + d1) * (keep.ratios[i + 1] - keep.ratios[i]);
  }
  return area;
}

/// Per-repetition delta (matched-seed repetitions pair up), for spread
/// estimates of the area metric.
inline std::vector<double> delta_acc_per_rep(const EvalResult& keep, const EvalResult& remove) {
  if (keep.ratios != remove.ratios || keep.repetitions != remove.repetitions)
    throw ConfigError("delta_acc_per_rep: grids or repetition counts do not match");
  std::vector<double> deltas;
  for (int rep = 0; rep < keep.repetitions; ++rep) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < keep.ratios.size(); ++i) {
      const double d0 = keep.accuracy[i][static_cast<std::size_t>(rep)] -
                        remove.accuracy[i][static_cast<std::size_t>(rep)];
      const double d1 = keep.accuracy[i + 1][static_cast<std::size_t>(rep)] -
                        remove.accuracy[i + 1][static_cast<std::size_t>(rep)];
      area += 0.5 * (d0 + d1) * (keep.ratios[i + 1] - keep.ratios[i]);
    }
    deltas.push_back(area);
  }
  return deltas;
}

/// Replacement values are anchored to the explainer's baseline when it has
/// one (IG/SIG constant baselines, GxI's implicit zero); everything else
/// falls back to the per-feature train mean.
inline ReplacementSpec replacement_for(const ExplainerConfig& explainer) {
  switch (explainer.kind) {
    case ExplainerKind::ig:
    case ExplainerKind::sig:
      if (explainer.baseline.kind == BaselineKind::constant)
        return {ReplacementKind::constant, explainer.baseline.value};
      return {ReplacementKind::per_feature_mean, 0.0};
    case ExplainerKind::gxi: return {ReplacementKind::constant, 0.0};
    default: return {ReplacementKind::per_feature_mean, 0.0};
  }
}

/// One full evaluation: per repetition, explain the sampled train subset and
/// the test set on the original model, then per ratio occlude, update the
/// model per protocol, and score it on the equally manipulated test set.
template <typename Scalar>
EvalResult run_scheme(const Network<Scalar>& net, const LabeledDataset<Scalar>& train_split,
                      const LabeledDataset<Scalar>& test_split, const ExplainerConfig& explainer,
                      const SchemeConfig& scheme) {
  if (!net.trained) throw ConfigError("run_scheme requires a trained network");
  scheme.validate();
  explainer.validate();
  train_split.validate();
  test_split.validate();

  EvalResult result;
  result.scheme = scheme.name;
  result.explainer = explainer_name(explainer.kind);
  result.update = update_protocol_name(scheme.update);
  result.ratios = scheme.ratios;
  result.repetitions = scheme.repetitions;
  result.scheme_seed = scheme.seed;
  result.dataset_hash = splitmix64(train_split.hash() ^ (test_split.hash() << 1));
  result.accuracy.assign(scheme.ratios.size(),
                         std::vector<double>(static_cast<std::size_t>(scheme.repetitions), 0.0));
  result.job_seeds.assign(
      scheme.ratios.size(),
      std::vector<std::uint64_t>(static_cast<std::size_t>(scheme.repetitions), 0));

  // Random scores carry no ranking information; the random baseline removes a
  // seeded random subset regardless of the scheme's occlusion priority, which
  // keeps it identical across remove- and keep-ordered schemes.
  const OcclusionOrder effective_order =
      explainer.kind == ExplainerKind::random ? OcclusionOrder::random : scheme.order;
  result.order = occlusion_order_name(effective_order);

  const Tensor<Scalar> train_mean = dataset_mean(train_split);
  ExplainContext<Scalar> ctx;
  ctx.dataset_mean = &train_mean;
  ctx.baseline_pool = &train_split;
  const ReplacementSpec replacement = replacement_for(explainer);

  std::vector<int> all_test(test_split.size());
  for (std::size_t i = 0; i < all_test.size(); ++i) all_test[i] = static_cast<int>(i);

  const std::uint64_t queries_before = net.gradient_queries.count();
  std::atomic<std::uint64_t> updates_total{0};

  for (int rep = 0; rep < scheme.repetitions; ++rep) {
    const std::uint64_t rep_seed =
        derive_seed(scheme.seed, "rep", {static_cast<std::uint64_t>(rep)});

    std::vector<int> subset_idx;
    if (scheme.train_fraction >= 1.0) {
      subset_idx.resize(train_split.size());
      for (std::size_t i = 0; i < subset_idx.size(); ++i) subset_idx[i] = static_cast<int>(i);
    } else {
      subset_idx = stratified_indices(train_split, scheme.train_fraction, derive_seed(rep_seed, "subset"));
    }
    const LabeledDataset<Scalar> train_subset = subset(train_split, subset_idx);

    std::vector<AttributionMap<Scalar>> attrs_train, attrs_test;
    if (scheme.explain_train) {
      ExplainerConfig cfg = explainer;
      cfg.seed = derive_seed(rep_seed, "explain-train", {explainer.seed});
      attrs_train = explain_set(net, train_split, subset_idx, cfg, ctx, scheme.threads);
    }
    if (scheme.explain_test) {
      ExplainerConfig cfg = explainer;
      cfg.seed = derive_seed(rep_seed, "explain-test", {explainer.seed});
      attrs_test = explain_set(net, test_split, all_test, cfg, ctx, scheme.threads);
    }

    parallel_for(
        scheme.ratios.size(),
        [&](std::size_t ri) {
          const double ratio = scheme.ratios[ri];
          const std::uint64_t job_seed =
              derive_seed(rep_seed, "update", {static_cast<std::uint64_t>(ri)});

          LabeledDataset<Scalar> man_train = train_subset;
          if (scheme.explain_train) {
            const ManipulationPlan plan = build_plan(attrs_train, ratio, effective_order,
                                                     replacement, derive_seed(rep_seed, "occlude-train"));
            man_train = apply_plan(train_subset, plan, &train_mean);
          }
          LabeledDataset<Scalar> man_test = test_split;
          if (scheme.explain_test) {
            const ManipulationPlan plan = build_plan(attrs_test, ratio, effective_order,
                                                     replacement, derive_seed(rep_seed, "occlude-test"));
            man_test = apply_plan(test_split, plan, &train_mean);
          }

          TrainConfig cfg = scheme.update_cfg;
          cfg.seed = derive_seed(job_seed, "train");
          Network<Scalar> updated;
          TrainReport report;
          switch (scheme.update) {
            case UpdateProtocol::retrain_full: {
              cfg.scope = TrainScope::full;
              const Network<Scalar> fresh = fresh_like(net, derive_seed(job_seed, "init"));
              std::tie(updated, report) = train(fresh, man_train, cfg);
              break;
            }
            case UpdateProtocol::finetune_full: {
              cfg.scope = TrainScope::full;
              std::tie(updated, report) = fine_tune(net, man_train, cfg);
              break;
            }
            case UpdateProtocol::finetune_head: {
              cfg.scope = TrainScope::head_only;
              std::tie(updated, report) = fine_tune(net, man_train, cfg);
              break;
            }
          }
          updates_total.fetch_add(report.parameter_updates);
          result.accuracy[ri][static_cast<std::size_t>(rep)] = accuracy(updated, man_test);
          result.job_seeds[ri][static_cast<std::size_t>(rep)] = job_seed;
        },
        scheme.threads);
  }

  result.gradient_queries = net.gradient_queries.count() - queries_before;
  result.parameter_updates = updates_total.load();
  return result;
}

}  // namespace aev
