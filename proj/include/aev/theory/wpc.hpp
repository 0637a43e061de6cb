#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>

#include "aev/core/error.hpp"
#include "aev/core/rng.hpp"

namespace aev::theory {

/// Logit-level attribution of one feature in the perfect-absence setting
/// o_y(N) = o_y(N \ {i}) + xi_i^{o_y}: context logits are the head outputs
/// without the feature, xi holds its additive contribution per class.
struct LogitAttribution {
  Eigen::VectorXd context_logits;  // o(N \ {i}), length C
  Eigen::VectorXd xi;              // xi_i^{o_c}, length C
  int target = 0;                  // y

  void validate() const {
    if (context_logits.size() != xi.size() || context_logits.size() < 2)
      throw ConfigError("logit attribution needs matching per-class vectors, C >= 2");
    if (target < 0 || target >= context_logits.size())
      throw ConfigError("target class out of range");
    if (!context_logits.allFinite() || !xi.allFinite())
      throw ConfigError("logit attribution entries must be finite");
  }
};

inline Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
  const Eigen::VectorXd e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

struct WpcResult {
  bool is_positive = false;  // exp(xi^{o_y}) > 1
  bool is_weak = false;      // exp(xi^{o_y}) < E_{y* != y}[exp(xi^{o_y*})]
  double expectation = 0;    // the conditional expectation above
};

/// Checks the weak-positive-contributor condition. The expectation weights
/// are f_{y*}(N\{i}) / (1 - f_y(N\{i})): the softmax of the context
/// renormalized over the non-target classes.
inline WpcResult wpc_condition(const LogitAttribution& a) {
  a.validate();
  const Eigen::VectorXd f = softmax(a.context_logits);
  const double rest = 1.0 - f(a.target);
  double expectation = 0.0;
  for (Eigen::Index c = 0; c < f.size(); ++c)
    if (static_cast<int>(c) != a.target) expectation += f(c) / rest * std::exp(a.xi(c));
  WpcResult r;
  r.expectation = expectation;
  r.is_positive = a.xi(a.target) > 0.0;
  r.is_weak = std::exp(a.xi(a.target)) < expectation;
  return r;
}

struct Theorem2Result {
  double f_with = 0;     // f_y(N) = softmax(context + xi)_y
  double f_without = 0;  // f_y(N \ {i}) = softmax(context)_y
  int attribution_sign = 0;
  bool consistent = false;
};

/// Evaluates the softmax-level attribution sign and whether the negative-
/// attribution theorem holds on this instance (vacuously when the feature is
/// not a weak positive contributor).
inline Theorem2Result theorem2_check(const LogitAttribution& a) {
  a.validate();
  Theorem2Result r;
  r.f_without = softmax(a.context_logits)(a.target);
  r.f_with = softmax(a.context_logits + a.xi)(a.target);
  const double diff = r.f_with - r.f_without;
  r.attribution_sign = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
  const WpcResult w = wpc_condition(a);
  r.consistent = !(w.is_positive && w.is_weak) || r.attribution_sign < 0;
  return r;
}

struct FuzzReport {
  std::uint64_t instances = 0;
  std::uint64_t violations = 0;
  std::uint64_t rejected = 0;  // draws that failed the WPC condition
};

/// Draws seeded WPC instances (context uniform in [-5,5], xi uniform in
/// [-3,3], C in [2,10], rejection-sampled to satisfy the condition) and
/// counts theorem-2 violations. Must report zero.
inline FuzzReport wpc_fuzz(std::uint64_t count, std::uint64_t seed) {
  FuzzReport report;
  Rng rng(derive_seed(seed, "wpc-fuzz"));
  while (report.instances < count) {
    const int classes = 2 + static_cast<int>(rng.below(9));
    LogitAttribution a;
    a.context_logits.resize(classes);
    a.xi.resize(classes);
    for (int c = 0; c < classes; ++c) {
      a.context_logits(c) = rng.uniform(-5.0, 5.0);
      a.xi(c) = rng.uniform(-3.0, 3.0);
    }
    a.target = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    const WpcResult w = wpc_condition(a);
    if (!(w.is_positive && w.is_weak)) {
      ++report.rejected;
      continue;
    }
    ++report.instances;
    if (!theorem2_check(a).consistent) ++report.violations;
  }
  return report;
}

}  // namespace aev::theory
