#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "aev/core/dataset.hpp"
#include "aev/core/rng.hpp"
#include "aev/nn/layers.hpp"
#include "aev/nn/loss.hpp"

namespace aev {

/// Which model output an input gradient (and hence an explainer) targets.
enum class Head { logit, probability };

/// Copyable atomic counter for explainer gradient-query budgets.
struct QueryCounter {
  mutable std::atomic<std::uint64_t> value{0};
  QueryCounter() = default;
  QueryCounter(const QueryCounter& o) : value(o.value.load()) {}
  QueryCounter& operator=(const QueryCounter& o) {
    value.store(o.value.load());
    return *this;
  }
  void reset() const { value.store(0); }
  std::uint64_t count() const { return value.load(); }
};

/// Ordered layer stack ending in a Dense classification head. Immutable once
/// trained; safe to share read-only across threads.
template <typename Scalar>
struct Network {
  std::vector<Layer<Scalar>> layers;
  Shape input_shape;
  int head_index = -1;
  int class_count = 0;
  bool trained = false;

  std::vector<Shape> shapes;  // shapes[i] = input of layer i; shapes.back() = output
  QueryCounter gradient_queries;

  /// Validate the stack and compute the per-layer shape chain.
  void finalize() {
    if (layers.empty()) throw ConfigError("network has no layers");
    if (class_count <= 0) throw ConfigError("class_count must be positive");
    shapes.clear();
    shapes.push_back(input_shape);
    int last_param = -1;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      shapes.push_back(layer_output_shape(layers[i], shapes.back(), static_cast<int>(i)));
      if (is_parameterized(layers[i])) last_param = static_cast<int>(i);
    }
    if (head_index < 0 || head_index >= static_cast<int>(layers.size()))
      throw ConfigError("head_index out of range");
    if (!std::holds_alternative<Dense<Scalar>>(layers[static_cast<std::size_t>(head_index)]))
      throw ConfigError("head layer must be Dense");
    if (last_param != head_index)
      throw ConfigError("head must be the last parameterized layer");
    if (shapes.back() != Shape{static_cast<Index>(class_count)})
      throw ConfigError("network output " + shape_str(shapes.back()) + " does not match " +
                        std::to_string(class_count) + " classes");
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers) n += layer_param_count(l);
    return n;
  }
};

template <typename Scalar>
std::vector<Tensor<Scalar>*> network_params(Network<Scalar>& net) {
  std::vector<Tensor<Scalar>*> out;
  for (auto& l : net.layers)
    for (auto* p : layer_params(l)) out.push_back(p);
  return out;
}

/// Forward/backward activation cache for one batch.
struct BatchTrace {
  std::vector<RowMatD> acts;     // acts[0] = input, acts[i+1] = output of layer i
  std::vector<RowMatI> argmax;   // per layer; empty unless MaxPool2D
};

template <typename Scalar>
BatchTrace forward_trace(const Network<Scalar>& net, RowMatD input) {
  BatchTrace trace;
  trace.acts.reserve(net.layers.size() + 1);
  trace.argmax.resize(net.layers.size());
  trace.acts.push_back(std::move(input));
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    trace.acts.push_back(layer_forward(net.layers[i], trace.acts[i], net.shapes[i],
                                       net.shapes[i + 1], &trace.argmax[i]));
  return trace;
}

/// Batched logits without a backward cache.
template <typename Scalar>
RowMatD forward_batch(const Network<Scalar>& net, RowMatD x) {
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    x = layer_forward(net.layers[i], x, net.shapes[i], net.shapes[i + 1], nullptr);
  return x;
}

template <typename Scalar>
RowMatD batch_rows(const LabeledDataset<Scalar>& ds, const int* idx, Index count) {
  const Index features = shape_size(ds.input_shape());
  RowMatD x(count, features);
  for (Index r = 0; r < count; ++r)
    x.row(r) = ds.inputs[static_cast<std::size_t>(idx[r])].vec().template cast<double>();
  return x;
}

/// Classification-head logits o(N) for one input.
template <typename Scalar>
Tensor<Scalar> forward(const Network<Scalar>& net, const Tensor<Scalar>& x) {
  if (x.shape != net.input_shape)
    throw ShapeError(0, "input shape " + shape_str(x.shape) + " does not match network input " +
                            shape_str(net.input_shape));
  RowMatD row(1, x.size());
  row.row(0) = x.vec().template cast<double>();
  row = forward_batch(net, std::move(row));
  Tensor<Scalar> out = Tensor<Scalar>::zeros({static_cast<Index>(net.class_count)});
  for (Index i = 0; i < out.size(); ++i) out[i] = static_cast<Scalar>(row(0, i));
  if (!out.finite()) throw NonFiniteError("forward produced non-finite logits");
  return out;
}

/// Softmax probabilities f(N) = sigma(o(N)).
template <typename Scalar>
Tensor<Scalar> predict(const Network<Scalar>& net, const Tensor<Scalar>& x) {
  if (x.shape != net.input_shape)
    throw ShapeError(0, "input shape " + shape_str(x.shape) + " does not match network input " +
                            shape_str(net.input_shape));
  RowMatD row(1, x.size());
  row.row(0) = x.vec().template cast<double>();
  row = softmax_rows(forward_batch(net, std::move(row)));
  Tensor<Scalar> out = Tensor<Scalar>::zeros({static_cast<Index>(net.class_count)});
  for (Index i = 0; i < out.size(); ++i) out[i] = static_cast<Scalar>(row(0, i));
  if (!out.finite()) throw NonFiniteError("predict produced non-finite probabilities");
  return out;
}

/// Seed gradient dL/d(logits) for d(out_target)/d(input): one-hot rows for the
/// logit head, softmax Jacobian rows f_y(delta_ky - f_k) for probabilities.
inline RowMatD head_seed(const RowMatD& logits, const std::vector<int>& targets, Head head) {
  RowMatD seed = RowMatD::Zero(logits.rows(), logits.cols());
  if (head == Head::logit) {
    for (Index r = 0; r < seed.rows(); ++r) seed(r, targets[static_cast<std::size_t>(r)]) = 1.0;
    return seed;
  }
  const RowMatD probs = softmax_rows(logits);
  for (Index r = 0; r < seed.rows(); ++r) {
    const int y = targets[static_cast<std::size_t>(r)];
    const double fy = probs(r, y);
    seed.row(r) = -fy * probs.row(r);
    seed(r, y) += fy;
  }
  return seed;
}

/// Backpropagate a seed at the output down to the input batch; counts one
/// gradient query per row and checks finiteness per layer.
template <typename Scalar>
RowMatD backward_input(const Network<Scalar>& net, const BatchTrace& trace, RowMatD seed) {
  net.gradient_queries.value.fetch_add(static_cast<std::uint64_t>(seed.rows()));
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    seed = layer_backward_input(net.layers[ui], seed, trace.acts[ui], net.shapes[ui],
                                net.shapes[ui + 1], &trace.argmax[ui]);
    if (!seed.allFinite())
      throw NonFiniteError("non-finite gradient below layer " + std::to_string(i) + " (" +
                               layer_name(net.layers[ui]) + ")",
                           i);
  }
  return seed;
}

/// Per-row gradients of o_target / f_target w.r.t. the input batch.
template <typename Scalar>
RowMatD input_gradient_batch(const Network<Scalar>& net, RowMatD x,
                             const std::vector<int>& targets, Head head) {
  BatchTrace trace = forward_trace(net, std::move(x));
  RowMatD seed = head_seed(trace.acts.back(), targets, head);
  return backward_input(net, trace, std::move(seed));
}

/// Gradient of the target class output w.r.t. every input feature.
template <typename Scalar>
Tensor<Scalar> input_gradient(const Network<Scalar>& net, const Tensor<Scalar>& x, int target,
                              Head head) {
  if (target < 0 || target >= net.class_count)
    throw ConfigError("target class " + std::to_string(target) + " outside [0," +
                      std::to_string(net.class_count) + ")");
  if (x.shape != net.input_shape)
    throw ShapeError(0, "input shape " + shape_str(x.shape) + " does not match network input " +
                            shape_str(net.input_shape));
  RowMatD row(1, x.size());
  row.row(0) = x.vec().template cast<double>();
  const RowMatD g = input_gradient_batch(net, std::move(row), {target}, head);
  Tensor<Scalar> out = Tensor<Scalar>::zeros(x.shape);
  for (Index i = 0; i < out.size(); ++i) out[i] = static_cast<Scalar>(g(0, i));
  return out;
}

template <typename Scalar>
double accuracy(const Network<Scalar>& net, const LabeledDataset<Scalar>& ds,
                Index chunk = 512) {
  if (ds.size() == 0) throw ConfigError("accuracy on empty dataset");
  std::vector<int> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::size_t correct = 0;
  for (std::size_t start = 0; start < all.size(); start += static_cast<std::size_t>(chunk)) {
    const Index count = std::min<Index>(chunk, static_cast<Index>(all.size() - start));
    RowMatD logits = forward_batch(net, batch_rows(ds, all.data() + start, count));
    if (!logits.allFinite()) throw NonFiniteError("non-finite logits during evaluation");
    for (Index r = 0; r < count; ++r) {
      Index best;
      logits.row(r).maxCoeff(&best);
      if (static_cast<int>(best) == ds.labels[start + static_cast<std::size_t>(r)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// ---- architecture factories ----------------------------------------------

/// He-style uniform fan-in init: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
template <typename Scalar>
void init_fan_in(Tensor<Scalar>& t, Index fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data) v = static_cast<Scalar>(rng.uniform(-bound, bound));
}

template <typename Scalar>
Dense<Scalar> make_dense(Index out, Index in, Rng& rng) {
  Dense<Scalar> d{Tensor<Scalar>::zeros({out, in}), Tensor<Scalar>::zeros({out})};
  init_fan_in(d.weights, in, rng);
  return d;
}

template <typename Scalar>
Conv2D<Scalar> make_conv(Index oc, Index ic, Index kh, Index kw, int stride, Rng& rng) {
  Conv2D<Scalar> c{Tensor<Scalar>::zeros({oc, ic, kh, kw}), Tensor<Scalar>::zeros({oc}), stride};
  init_fan_in(c.kernels, ic * kh * kw, rng);
  return c;
}

/// Flatten -> (Dense -> ReLU)* -> Dense head.
template <typename Scalar>
Network<Scalar> make_mlp(const Shape& input_shape, const std::vector<Index>& hidden,
                         int classes, std::uint64_t seed) {
  Network<Scalar> net;
  net.input_shape = input_shape;
  net.class_count = classes;
  Index in = shape_size(input_shape);
  net.layers.emplace_back(Flatten{});
  int layer_idx = 0;
  for (Index hdim : hidden) {
    Rng rng(derive_seed(seed, "init", {static_cast<std::uint64_t>(layer_idx++)}));
    net.layers.emplace_back(make_dense<Scalar>(hdim, in, rng));
    net.layers.emplace_back(ReLU{});
    in = hdim;
  }
  Rng rng(derive_seed(seed, "init", {static_cast<std::uint64_t>(layer_idx)}));
  net.layers.emplace_back(make_dense<Scalar>(classes, in, rng));
  net.head_index = static_cast<int>(net.layers.size()) - 1;
  net.finalize();
  return net;
}

/// Two conv stages (3x3, ReLU, 2x2 pool) feeding two dense layers.
template <typename Scalar>
Network<Scalar> make_cnn(const Shape& input_shape, int classes, std::uint64_t seed,
                         Index c1 = 8, Index c2 = 16, Index fc = 128) {
  if (input_shape.size() != 3) throw ConfigError("cnn expects [c,h,w] input");
  Network<Scalar> net;
  net.input_shape = input_shape;
  net.class_count = classes;
  Rng r0(derive_seed(seed, "init", {0}));
  net.layers.emplace_back(make_conv<Scalar>(c1, input_shape[0], 3, 3, 1, r0));
  net.layers.emplace_back(ReLU{});
  net.layers.emplace_back(MaxPool2D{2, 2, 2});
  Rng r1(derive_seed(seed, "init", {1}));
  net.layers.emplace_back(make_conv<Scalar>(c2, c1, 3, 3, 1, r1));
  net.layers.emplace_back(ReLU{});
  net.layers.emplace_back(MaxPool2D{2, 2, 2});
  net.layers.emplace_back(Flatten{});
  Shape s = input_shape;
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    s = layer_output_shape(net.layers[i], s, static_cast<int>(i));
  Rng r2(derive_seed(seed, "init", {2}));
  net.layers.emplace_back(make_dense<Scalar>(fc, s[0], r2));
  net.layers.emplace_back(ReLU{});
  Rng r3(derive_seed(seed, "init", {3}));
  net.layers.emplace_back(make_dense<Scalar>(classes, fc, r3));
  net.head_index = static_cast<int>(net.layers.size()) - 1;
  net.finalize();
  return net;
}

/// Same architecture, freshly seeded parameters (for retrain-from-scratch).
template <typename Scalar>
Network<Scalar> fresh_like(const Network<Scalar>& net, std::uint64_t seed) {
  Network<Scalar> out = net;
  out.trained = false;
  out.gradient_queries.reset();
  int layer_idx = 0;
  for (auto& layer : out.layers) {
    if (auto* d = std::get_if<Dense<Scalar>>(&layer)) {
      Rng rng(derive_seed(seed, "init", {static_cast<std::uint64_t>(layer_idx)}));
      init_fan_in(d->weights, d->weights.shape[1], rng);
      d->bias = Tensor<Scalar>::zeros(d->bias.shape);
    } else if (auto* c = std::get_if<Conv2D<Scalar>>(&layer)) {
      Rng rng(derive_seed(seed, "init", {static_cast<std::uint64_t>(layer_idx)}));
      init_fan_in(c->kernels, c->kernels.shape[1] * c->kernels.shape[2] * c->kernels.shape[3],
                  rng);
      c->bias = Tensor<Scalar>::zeros(c->bias.shape);
    }
    ++layer_idx;
  }
  return out;
}

}  // namespace aev
