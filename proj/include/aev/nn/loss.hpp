#pragma once

#include <cmath>
#include <vector>

#include "aev/nn/layers.hpp"

namespace aev {

/// Row-wise softmax with max subtraction.
inline RowMatD softmax_rows(const RowMatD& logits) {
  RowMatD out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

/// Mean softmax cross-entropy, log-sum-exp computed with max subtraction.
inline double cross_entropy_mean(const RowMatD& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse = std::log((logits.row(r).array() - mx).exp().sum()) + mx;
    total += lse - logits(r, labels[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<double>(logits.rows());
}

/// d(mean cross-entropy)/d(logits) = (softmax - onehot) / n.
inline RowMatD cross_entropy_grad(const RowMatD& logits, const std::vector<int>& labels) {
  RowMatD g = softmax_rows(logits);
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  for (Index r = 0; r < g.rows(); ++r) {
    g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    g.row(r) *= inv_n;
  }
  return g;
}

}  // namespace aev
