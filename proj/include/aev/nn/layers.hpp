#pragma once

#include <Eigen/Core>

#include <string>
#include <variant>
#include <vector>

#include "aev/core/error.hpp"
#include "aev/core/tensor.hpp"

namespace aev {

/// Batched activations: one sample per row, features flattened row-major.
/// All accumulation runs in double regardless of the storage scalar.
using RowMatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatI = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct Dense {
  Tensor<Scalar> weights;  // [out, in]
  Tensor<Scalar> bias;     // [out]
};

template <typename Scalar>
struct Conv2D {
  Tensor<Scalar> kernels;  // [out_c, in_c, kh, kw]
  Tensor<Scalar> bias;     // [out_c]
  int stride = 1;          // no padding (valid)
};

struct ReLU {};
struct Flatten {};

struct MaxPool2D {
  int pool_h = 2;
  int pool_w = 2;
  int stride = 2;
};

template <typename Scalar>
using Layer = std::variant<Dense<Scalar>, Conv2D<Scalar>, ReLU, Flatten, MaxPool2D>;

template <typename Scalar>
const char* layer_name(const Layer<Scalar>& layer) {
  return std::visit(
      [](const auto& l) -> const char* {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Dense<Scalar>>) return "Dense";
        else if constexpr (std::is_same_v<T, Conv2D<Scalar>>) return "Conv2D";
        else if constexpr (std::is_same_v<T, ReLU>) return "ReLU";
        else if constexpr (std::is_same_v<T, Flatten>) return "Flatten";
        else return "MaxPool2D";
      },
      layer);
}

template <typename Scalar>
bool is_parameterized(const Layer<Scalar>& layer) {
  return std::holds_alternative<Dense<Scalar>>(layer) ||
         std::holds_alternative<Conv2D<Scalar>>(layer);
}

template <typename Scalar>
std::vector<Tensor<Scalar>*> layer_params(Layer<Scalar>& layer) {
  if (auto* d = std::get_if<Dense<Scalar>>(&layer)) return {&d->weights, &d->bias};
  if (auto* c = std::get_if<Conv2D<Scalar>>(&layer)) return {&c->kernels, &c->bias};
  return {};
}

template <typename Scalar>
std::vector<const Tensor<Scalar>*> layer_params(const Layer<Scalar>& layer) {
  if (const auto* d = std::get_if<Dense<Scalar>>(&layer)) return {&d->weights, &d->bias};
  if (const auto* c = std::get_if<Conv2D<Scalar>>(&layer)) return {&c->kernels, &c->bias};
  return {};
}

template <typename Scalar>
Index layer_param_count(const Layer<Scalar>& layer) {
  Index n = 0;
  for (const auto* p : layer_params(layer)) n += p->size();
  return n;
}

/// Output shape for a given input shape; throws ShapeError (naming the layer
/// index) when the layer cannot consume the input.
template <typename Scalar>
Shape layer_output_shape(const Layer<Scalar>& layer, const Shape& in, int layer_index) {
  auto fail = [&](const std::string& why) -> Shape {
    throw ShapeError(layer_index, std::string(layer_name(layer)) + " cannot take input " +
                                      shape_str(in) + ": " + why);
  };
  if (const auto* d = std::get_if<Dense<Scalar>>(&layer)) {
    if (d->weights.shape.size() != 2) return fail("weights must be rank 2");
    const Index out = d->weights.shape[0], fan_in = d->weights.shape[1];
    if (d->bias.shape != Shape{out}) return fail("bias length must equal output size");
    if (in.size() != 1 || in[0] != fan_in)
      return fail("expects a length-" + std::to_string(fan_in) + " vector");
    return {out};
  }
  if (const auto* c = std::get_if<Conv2D<Scalar>>(&layer)) {
    if (c->kernels.shape.size() != 4) return fail("kernels must be rank 4");
    const Index oc = c->kernels.shape[0], ic = c->kernels.shape[1];
    const Index kh = c->kernels.shape[2], kw = c->kernels.shape[3];
    if (c->bias.shape != Shape{oc}) return fail("bias length must equal channel count");
    if (c->stride < 1) return fail("stride must be positive");
    if (in.size() != 3 || in[0] != ic) return fail("expects [" + std::to_string(ic) + ",h,w]");
    if (in[1] < kh || in[2] < kw) return fail("spatial extent smaller than kernel");
    return {oc, (in[1] - kh) / c->stride + 1, (in[2] - kw) / c->stride + 1};
  }
  if (std::holds_alternative<ReLU>(layer)) return in;
  if (std::holds_alternative<Flatten>(layer)) return {shape_size(in)};
  const auto& p = std::get<MaxPool2D>(layer);
  if (p.pool_h < 1 || p.pool_w < 1 || p.stride < 1) return fail("pool window must be positive");
  if (in.size() != 3) return fail("expects [c,h,w]");
  if (in[1] < p.pool_h || in[2] < p.pool_w) return fail("spatial extent smaller than window");
  return {in[0], (in[1] - p.pool_h) / p.stride + 1, (in[2] - p.pool_w) / p.stride + 1};
}

namespace detail {

template <typename Scalar>
RowMatD dense_forward(const Dense<Scalar>& d, const RowMatD& x) {
  const Index out = d.weights.shape[0], in = d.weights.shape[1];
  RowMatD y = x * d.weights.matrix(out, in).transpose().template cast<double>();
  y.rowwise() += d.bias.vec().template cast<double>().transpose();
  return y;
}

template <typename Scalar>
RowMatD conv_forward(const Conv2D<Scalar>& c, const RowMatD& x, const Shape& in,
                     const Shape& out) {
  const Index ic = in[0], h = in[1], w = in[2];
  const Index oc = out[0], oh = out[1], ow = out[2];
  const Index kh = c.kernels.shape[2], kw = c.kernels.shape[3];
  const int s = c.stride;
  RowMatD y(x.rows(), oc * oh * ow);
  const Scalar* kern = c.kernels.data.data();
  for (Index n = 0; n < x.rows(); ++n) {
    const double* xp = x.data() + n * x.cols();
    double* yp = y.data() + n * y.cols();
    for (Index o = 0; o < oc; ++o) {
      const double b = static_cast<double>(c.bias[o]);
      for (Index oy = 0; oy < oh; ++oy)
        for (Index ox = 0; ox < ow; ++ox) {
          double acc = b;
          for (Index i = 0; i < ic; ++i)
            for (Index ky = 0; ky < kh; ++ky) {
              const double* row = xp + (i * h + oy * s + ky) * w + ox * s;
              const Scalar* krow = kern + ((o * ic + i) * kh + ky) * kw;
              for (Index kx = 0; kx < kw; ++kx) acc += static_cast<double>(krow[kx]) * row[kx];
            }
          yp[(o * oh + oy) * ow + ox] = acc;
        }
    }
  }
  return y;
}

inline RowMatD pool_forward(const MaxPool2D& p, const RowMatD& x, const Shape& in,
                            const Shape& out, RowMatI* argmax) {
  const Index ch = in[0], h = in[1], w = in[2];
  const Index oh = out[1], ow = out[2];
  RowMatD y(x.rows(), ch * oh * ow);
  if (argmax) argmax->resize(x.rows(), ch * oh * ow);
  for (Index n = 0; n < x.rows(); ++n) {
    const double* xp = x.data() + n * x.cols();
    for (Index c = 0; c < ch; ++c)
      for (Index oy = 0; oy < oh; ++oy)
        for (Index ox = 0; ox < ow; ++ox) {
          Index best = (c * h + oy * p.stride) * w + ox * p.stride;
          double best_v = xp[best];
          for (Index ky = 0; ky < p.pool_h; ++ky)
            for (Index kx = 0; kx < p.pool_w; ++kx) {
              const Index idx = (c * h + oy * p.stride + ky) * w + ox * p.stride + kx;
              if (xp[idx] > best_v) {  // first max wins on ties
                best_v = xp[idx];
                best = idx;
              }
            }
          const Index oidx = (c * oh + oy) * ow + ox;
          y(n, oidx) = best_v;
          if (argmax) (*argmax)(n, oidx) = best;
        }
  }
  return y;
}

}  // namespace detail

/// Forward one layer over a batch. `argmax` must be provided for MaxPool2D
/// when a backward pass will follow.
template <typename Scalar>
RowMatD layer_forward(const Layer<Scalar>& layer, const RowMatD& x, const Shape& in,
                      const Shape& out, RowMatI* argmax = nullptr) {
  if (const auto* d = std::get_if<Dense<Scalar>>(&layer)) return detail::dense_forward(*d, x);
  if (const auto* c = std::get_if<Conv2D<Scalar>>(&layer))
    return detail::conv_forward(*c, x, in, out);
  if (std::holds_alternative<ReLU>(layer)) return x.cwiseMax(0.0);
  if (std::holds_alternative<Flatten>(layer)) return x;
  return detail::pool_forward(std::get<MaxPool2D>(layer), x, in, out, argmax);
}

/// Gradient w.r.t. the layer input. `x` is the activation that fed the layer.
template <typename Scalar>
RowMatD layer_backward_input(const Layer<Scalar>& layer, const RowMatD& dy, const RowMatD& x,
                             const Shape& in, const Shape& out, const RowMatI* argmax) {
  if (const auto* d = std::get_if<Dense<Scalar>>(&layer)) {
    const Index o = d->weights.shape[0], i = d->weights.shape[1];
    return dy * d->weights.matrix(o, i).template cast<double>();
  }
  if (const auto* c = std::get_if<Conv2D<Scalar>>(&layer)) {
    const Index ic = in[0], h = in[1], w = in[2];
    const Index oc = out[0], oh = out[1], ow = out[2];
    const Index kh = c->kernels.shape[2], kw = c->kernels.shape[3];
    const int s = c->stride;
    RowMatD dx = RowMatD::Zero(dy.rows(), ic * h * w);
    const Scalar* kern = c->kernels.data.data();
    for (Index n = 0; n < dy.rows(); ++n) {
      const double* dyp = dy.data() + n * dy.cols();
      double* dxp = dx.data() + n * dx.cols();
      for (Index o = 0; o < oc; ++o)
        for (Index oy = 0; oy < oh; ++oy)
          for (Index ox = 0; ox < ow; ++ox) {
            const double g = dyp[(o * oh + oy) * ow + ox];
            if (g == 0.0) continue;
            for (Index i = 0; i < ic; ++i)
              for (Index ky = 0; ky < kh; ++ky) {
                double* row = dxp + (i * h + oy * s + ky) * w + ox * s;
                const Scalar* krow = kern + ((o * ic + i) * kh + ky) * kw;
                for (Index kx = 0; kx < kw; ++kx) row[kx] += g * static_cast<double>(krow[kx]);
              }
          }
    }
    return dx;
  }
  if (std::holds_alternative<ReLU>(layer))
    return (x.array() > 0.0).template cast<double>() * dy.array();
  if (std::holds_alternative<Flatten>(layer)) return dy;
  // MaxPool2D: route gradient to the argmax source.
  RowMatD dx = RowMatD::Zero(dy.rows(), shape_size(in));
  for (Index n = 0; n < dy.rows(); ++n)
    for (Index j = 0; j < dy.cols(); ++j) dx(n, (*argmax)(n, j)) += dy(n, j);
  return dx;
}

/// Parameter gradients, aligned with layer_params() order. Empty for
/// parameter-free layers.
template <typename Scalar>
std::vector<Tensor<double>> layer_param_grads(const Layer<Scalar>& layer, const RowMatD& dy,
                                              const RowMatD& x, const Shape& in,
                                              const Shape& out) {
  if (const auto* d = std::get_if<Dense<Scalar>>(&layer)) {
    Tensor<double> dw = Tensor<double>::zeros(d->weights.shape);
    Tensor<double> db = Tensor<double>::zeros(d->bias.shape);
    dw.matrix(d->weights.shape[0], d->weights.shape[1]) = dy.transpose() * x;
    db.vec() = dy.colwise().sum().transpose();
    return {std::move(dw), std::move(db)};
  }
  if (const auto* c = std::get_if<Conv2D<Scalar>>(&layer)) {
    const Index ic = in[0], h = in[1], w = in[2];
    const Index oc = out[0], oh = out[1], ow = out[2];
    const Index kh = c->kernels.shape[2], kw = c->kernels.shape[3];
    const int s = c->stride;
    Tensor<double> dk = Tensor<double>::zeros(c->kernels.shape);
    Tensor<double> db = Tensor<double>::zeros(c->bias.shape);
    for (Index n = 0; n < dy.rows(); ++n) {
      const double* dyp = dy.data() + n * dy.cols();
      const double* xp = x.data() + n * x.cols();
      for (Index o = 0; o < oc; ++o)
        for (Index oy = 0; oy < oh; ++oy)
          for (Index ox = 0; ox < ow; ++ox) {
            const double g = dyp[(o * oh + oy) * ow + ox];
            if (g == 0.0) continue;
            db[o] += g;
            for (Index i = 0; i < ic; ++i)
              for (Index ky = 0; ky < kh; ++ky) {
                const double* row = xp + (i * h + oy * s + ky) * w + ox * s;
                double* krow = dk.data.data() + ((o * ic + i) * kh + ky) * kw;
                for (Index kx = 0; kx < kw; ++kx) krow[kx] += g * row[kx];
              }
          }
    }
    return {std::move(dk), std::move(db)};
  }
  return {};
}

}  // namespace aev
