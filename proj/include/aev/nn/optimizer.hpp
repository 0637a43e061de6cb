#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aev/core/error.hpp"
#include "aev/core/tensor.hpp"

namespace aev {

enum class OptimizerKind { sgd, adam };

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 0.01;
  double momentum = 0.0;  // sgd only
};

enum class ScheduleKind { constant, cosine };

struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  int warmup_epochs = 0;  // cosine only: linear ramp before the anneal
};

inline double epoch_lr(const OptimizerSpec& opt, const Schedule& sched, int epoch,
                       int total_epochs) {
  if (sched.kind == ScheduleKind::constant) return opt.lr;
  if (epoch < sched.warmup_epochs)
    return opt.lr * static_cast<double>(epoch + 1) / static_cast<double>(sched.warmup_epochs);
  const double span = static_cast<double>(total_epochs - sched.warmup_epochs);
  const double t = span <= 0 ? 0.0 : static_cast<double>(epoch - sched.warmup_epochs) / span;
  return opt.lr * 0.5 * (1.0 + std::cos(M_PI * t));
}

/// Updates a fixed set of parameter tensors in place. State (momentum / Adam
/// moments) is kept in double; parameters round back to their storage scalar.
template <typename Scalar>
class Optimizer {
public:
  Optimizer(OptimizerSpec spec, std::vector<Tensor<Scalar>*> params)
      : spec_(spec), params_(std::move(params)) {
    if (spec_.lr <= 0.0) throw ConfigError("learning rate must be positive");
    slots_a_.reserve(params_.size());
    slots_b_.reserve(params_.size());
    for (const auto* p : params_) {
      slots_a_.push_back(Tensor<double>::zeros(p->shape));
      slots_b_.push_back(Tensor<double>::zeros(p->shape));
    }
  }

  /// Apply one step at learning rate `lr`; returns the number of scalar
  /// parameter updates (the gradient-update counter unit).
  std::uint64_t step(const std::vector<const Tensor<double>*>& grads, double lr) {
    ++step_count_;
    std::uint64_t updated = 0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<Scalar>& p = *params_[i];
      const Tensor<double>& g = *grads[i];
      if (spec_.kind == OptimizerKind::sgd) {
        Tensor<double>& vel = slots_a_[i];
        for (Index j = 0; j < p.size(); ++j) {
          vel[j] = spec_.momentum * vel[j] + g[j];
          p[j] = static_cast<Scalar>(static_cast<double>(p[j]) - lr * vel[j]);
        }
      } else {
        Tensor<double>& m = slots_a_[i];
        Tensor<double>& v = slots_b_[i];
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
        for (Index j = 0; j < p.size(); ++j) {
          m[j] = b1 * m[j] + (1.0 - b1) * g[j];
          v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
          const double update = lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
          p[j] = static_cast<Scalar>(static_cast<double>(p[j]) - update);
        }
      }
      updated += static_cast<std::uint64_t>(p.size());
    }
    return updated;
  }

private:
  OptimizerSpec spec_;
  std::vector<Tensor<Scalar>*> params_;
  std::vector<Tensor<double>> slots_a_, slots_b_;
  std::uint64_t step_count_ = 0;
};

}  // namespace aev
