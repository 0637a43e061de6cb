#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "aev/core/dataset.hpp"
#include "aev/core/rng.hpp"
#include "aev/nn/network.hpp"
#include "aev/nn/optimizer.hpp"

namespace aev {

enum class TrainScope { full, head_only };

struct TrainConfig {
  int epochs = 30;
  OptimizerSpec optimizer{};
  Schedule schedule{};
  int batch_size = 64;
  std::uint64_t seed = 0;
  TrainScope scope = TrainScope::full;

  void validate() const {
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (optimizer.lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (schedule.kind == ScheduleKind::cosine && schedule.warmup_epochs >= epochs && epochs > 0)
      throw ConfigError("warmup_epochs must be below epochs");
  }
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> history;
  std::uint64_t parameter_updates = 0;  // scalar parameter updates, summed over steps
  std::uint64_t sample_visits = 0;
};

class TrainDivergedError : public NonFiniteError {
public:
  explicit TrainDivergedError(int epoch)
      : NonFiniteError("training loss diverged to non-finite at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

private:
  int epoch_;
};

namespace detail {

/// Shared epoch/batch loop. `gather(idx, count)` yields the input rows for a
/// batch; labels index the same sample space. Updates every parameter of
/// `net`, deterministically for a fixed seed.
template <typename Scalar, typename Gather>
TrainReport train_loop(Network<Scalar>& net, std::size_t n_samples, const Gather& gather,
                       const std::vector<int>& labels, const TrainConfig& cfg) {
  cfg.validate();
  if (n_samples == 0) throw ConfigError("training on empty dataset");
  TrainReport report;
  Optimizer<Scalar> opt(cfg.optimizer, network_params(net));
  std::vector<int> order(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order[i] = static_cast<int>(i);

  std::vector<std::vector<Tensor<double>>> grads(net.layers.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Per-epoch permutation derives from (seed, epoch) so repetitions differ
    // only through the top-level seed.
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", {static_cast<std::uint64_t>(epoch)}));
    shuffle_rng.shuffle(order.begin(), order.end());
    const double lr = epoch_lr(cfg.optimizer, cfg.schedule, epoch, cfg.epochs);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n_samples; start += static_cast<std::size_t>(cfg.batch_size)) {
      const Index count =
          std::min<Index>(cfg.batch_size, static_cast<Index>(n_samples - start));
      std::vector<int> batch_labels(static_cast<std::size_t>(count));
      for (Index r = 0; r < count; ++r)
        batch_labels[static_cast<std::size_t>(r)] =
            labels[static_cast<std::size_t>(order[start + static_cast<std::size_t>(r)])];

      BatchTrace trace = forward_trace(net, gather(order.data() + start, count));
      const RowMatD& logits = trace.acts.back();
      const double loss = cross_entropy_mean(logits, batch_labels);
      if (!std::isfinite(loss)) throw TrainDivergedError(epoch);
      loss_sum += loss * static_cast<double>(count);
      for (Index r = 0; r < count; ++r) {
        Index best;
        logits.row(r).maxCoeff(&best);
        if (static_cast<int>(best) == batch_labels[static_cast<std::size_t>(r)]) ++correct;
      }

      RowMatD delta = cross_entropy_grad(logits, batch_labels);
      for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const auto ui = static_cast<std::size_t>(i);
        grads[ui] = layer_param_grads(net.layers[ui], delta, trace.acts[ui], net.shapes[ui],
                                      net.shapes[ui + 1]);
        if (i > 0)
          delta = layer_backward_input(net.layers[ui], delta, trace.acts[ui], net.shapes[ui],
                                       net.shapes[ui + 1], &trace.argmax[ui]);
      }
      std::vector<const Tensor<double>*> flat;
      for (const auto& layer_grads : grads)
        for (const auto& g : layer_grads) flat.push_back(&g);
      report.parameter_updates += opt.step(flat, lr);
      report.sample_visits += static_cast<std::uint64_t>(count);
    }
    report.history.push_back({loss_sum / static_cast<double>(n_samples),
                              static_cast<double>(correct) / static_cast<double>(n_samples)});
  }
  return report;
}

template <typename Scalar>
TrainReport train_on_dataset(Network<Scalar>& net, const LabeledDataset<Scalar>& data,
                             const TrainConfig& cfg) {
  data.validate();
  if (data.class_count != net.class_count)
    throw ConfigError("dataset classes do not match network");
  auto gather = [&data](const int* idx, Index count) { return batch_rows(data, idx, count); };
  return train_loop(net, data.size(), gather, data.labels, cfg);
}

}  // namespace detail

/// Full training from the given (usually freshly initialized) network.
/// Bit-reproducible for fixed initialization, seed, and data order.
template <typename Scalar>
std::pair<Network<Scalar>, TrainReport> train(const Network<Scalar>& init,
                                              const LabeledDataset<Scalar>& data,
                                              const TrainConfig& cfg) {
  if (cfg.scope != TrainScope::full) throw ConfigError("train requires scope == full");
  Network<Scalar> net = init;
  TrainReport report = detail::train_on_dataset(net, data, cfg);
  net.trained = true;
  return {std::move(net), std::move(report)};
}

/// Continue training from a trained network. scope == head_only freezes every
/// layer below the classification head; frozen activations are computed once
/// and the head (plus any trailing layers) trains on them, which yields the
/// same gradients as whole-net backprop with frozen weights.
template <typename Scalar>
std::pair<Network<Scalar>, TrainReport> fine_tune(const Network<Scalar>& base,
                                                  const LabeledDataset<Scalar>& data,
                                                  const TrainConfig& cfg) {
  if (!base.trained) throw ConfigError("fine_tune requires a trained network");
  if (cfg.scope == TrainScope::full) {
    Network<Scalar> net = base;
    TrainReport report = detail::train_on_dataset(net, data, cfg);
    net.trained = true;
    return {std::move(net), std::move(report)};
  }

  data.validate();
  if (data.class_count != base.class_count)
    throw ConfigError("dataset classes do not match network");
  const auto head = static_cast<std::size_t>(base.head_index);

  Network<Scalar> head_net;
  head_net.layers.assign(base.layers.begin() + static_cast<std::ptrdiff_t>(head),
                         base.layers.end());
  head_net.input_shape = base.shapes[head];
  head_net.head_index = 0;
  head_net.class_count = base.class_count;
  head_net.finalize();

  // Frozen-prefix features, computed in one pass.
  const Index n = static_cast<Index>(data.size());
  const Index feat = shape_size(base.shapes[head]);
  RowMatD features(n, feat);
  std::vector<int> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  constexpr Index kChunk = 512;
  for (Index start = 0; start < n; start += kChunk) {
    const Index count = std::min<Index>(kChunk, n - start);
    RowMatD x = batch_rows(data, all.data() + start, count);
    for (std::size_t i = 0; i < head; ++i)
      x = layer_forward(base.layers[i], x, base.shapes[i], base.shapes[i + 1], nullptr);
    features.middleRows(start, count) = x;
  }

  auto gather = [&features](const int* idx, Index count) {
    RowMatD x(count, features.cols());
    for (Index r = 0; r < count; ++r) x.row(r) = features.row(idx[r]);
    return x;
  };
  TrainReport report = detail::train_loop(head_net, data.size(), gather, data.labels, cfg);

  Network<Scalar> out = base;
  std::copy(head_net.layers.begin(), head_net.layers.end(),
            out.layers.begin() + static_cast<std::ptrdiff_t>(head));
  out.trained = true;
  return {std::move(out), std::move(report)};
}

}  // namespace aev
