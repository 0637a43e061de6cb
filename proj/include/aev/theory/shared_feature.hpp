#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aev/core/error.hpp"

namespace aev::theory {

/// x * log_C(x) with the 0 * log 0 := 0 convention.
inline double xlogc(double x, int base) {
  if (x == 0.0) return 0.0;
  return x * std::log(x) / std::log(static_cast<double>(base));
}

/// The (gamma, p, alpha) parameterization of the shared-feature setting:
/// gamma = P(y=1), p = P(S2=1), alpha = P(y=1 | S2=1); C is the class count
/// and the logarithm base.
struct SharedFeatureDistribution {
  double gamma = 0.2;
  double p = 0.3;
  double alpha = 0.5;
  int classes = 2;

  double delta() const { return p - alpha * p; }

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("require 0 < gamma < 1");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("require 0 < p < 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("require 0 <= alpha <= 1");
    if (gamma - alpha * p < 0.0)
      throw ConfigError("invalid joint table: gamma - alpha*p < 0");
    if (1.0 - gamma - p + alpha * p < 0.0)
      throw ConfigError("invalid joint table: 1 - gamma - p + alpha*p < 0");
    if (classes < 2) throw ConfigError("require C >= 2");
  }

  bool valid() const {
    return gamma > 0.0 && gamma < 1.0 && p > 0.0 && p < 1.0 && alpha >= 0.0 && alpha <= 1.0 &&
           gamma - alpha * p >= 0.0 && 1.0 - gamma - p + alpha * p >= 0.0 && classes >= 2;
  }
};

/// Joint probabilities P(y=a, S2=b), ordered (1,1), (1,0), (0,1), (0,0).
struct JointTable {
  double p11 = 0, p10 = 0, p01 = 0, p00 = 0;

  double sum() const { return p11 + p10 + p01 + p00; }
  void validate() const {
    if (p11 < 0 || p10 < 0 || p01 < 0 || p00 < 0)
      throw ConfigError("joint table entries must be non-negative");
    if (std::abs(sum() - 1.0) > 1e-12) throw ConfigError("joint table must sum to 1");
  }
};

/// Original table from (gamma, p, alpha); manipulated=true applies the
/// highest-first occlusion shift, which eliminates the (y*=1, S2=1) case:
/// P~(y=0,S2=1) = 0 and P~(y=0,S2=0) = 1 - gamma.
inline JointTable joint_table(const SharedFeatureDistribution& d, bool manipulated) {
  d.validate();
  JointTable t;
  if (!manipulated) {
    t.p11 = d.alpha * d.p;
    t.p10 = d.gamma - d.alpha * d.p;
    t.p01 = (1.0 - d.alpha) * d.p;
    t.p00 = 1.0 - d.gamma - d.p + d.alpha * d.p;
  } else {
    t.p11 = d.alpha * d.p;
    t.p10 = d.gamma - d.alpha * d.p;
    t.p01 = 0.0;
    t.p00 = 1.0 - d.gamma;
  }
  t.validate();
  return t;
}

inline double label_entropy(const JointTable& t, int base) {
  const double py1 = t.p11 + t.p10;
  return -(xlogc(py1, base) + xlogc(1.0 - py1, base));
}

inline double conditional_entropy(const JointTable& t, int base) {
  const double ps1 = t.p11 + t.p01;
  const double ps0 = t.p10 + t.p00;
  double h = 0.0;
  if (ps1 > 0.0) h -= xlogc(t.p11 / ps1, base) * ps1 + xlogc(t.p01 / ps1, base) * ps1;
  if (ps0 > 0.0) h -= xlogc(t.p10 / ps0, base) * ps0 + xlogc(t.p00 / ps0, base) * ps0;
  return h;
}

/// I(S2; y) = H(y) - H(y|S2) in log base C. Non-negative up to rounding.
inline double mutual_info(const JointTable& t, int base) {
  t.validate();
  const double i = label_entropy(t, base) - conditional_entropy(t, base);
  return i < 0.0 && i > -1e-15 ? 0.0 : i;
}

struct Theorem1Result {
  double I = 0;           // pre-manipulation I(S2;y)
  double I_tilde = 0;     // post-manipulation
  double gap_exact = 0;   // H(y|S2) - H~(y|S2), computed exactly
  double gap_taylor = 0;  // first-order term delta * log_C((1-gamma)/(1-p))
  bool holds = false;     // I_tilde > I
};

/// The term the first-order expansion keeps aside: -(alpha p log_C alpha +
/// (1-alpha) p log_C(1-alpha)), with 0 log 0 handled by xlogc.
inline double ideal_terms(const SharedFeatureDistribution& d) {
  return -(d.p * xlogc(d.alpha, d.classes) + d.p * xlogc(1.0 - d.alpha, d.classes));
}

/// Executable oracle for the increasing-utility theorem. Requires p > gamma
/// (shared features span more than one class).
inline Theorem1Result theorem1_check(const SharedFeatureDistribution& d) {
  d.validate();
  if (!(d.p > d.gamma))
    throw ConfigError("theorem 1 precondition violated: requires p > gamma "
                      "(shared features span more than one class)");
  const JointTable before = joint_table(d, false);
  const JointTable after = joint_table(d, true);
  Theorem1Result r;
  r.I = mutual_info(before, d.classes);
  r.I_tilde = mutual_info(after, d.classes);
  r.gap_exact = conditional_entropy(before, d.classes) - conditional_entropy(after, d.classes);
  // First-order term of the entropy gap, oriented so that
  // sign(gap_taylor) == sign(gap_exact) when p > gamma.
  r.gap_taylor =
      d.delta() * std::log((1.0 - d.gamma) / (1.0 - d.p)) / std::log(static_cast<double>(d.classes));
  r.holds = r.I_tilde > r.I;
  return r;
}

struct SweepRow {
  double gamma, p, alpha;
  int classes;
  double I, I_tilde, gap_exact, gap_taylor;
  bool holds;
};

/// Grid sweep over valid (p > gamma) parameter combinations.
inline std::vector<SweepRow> theorem1_sweep(const std::vector<double>& gammas,
                                            const std::vector<double>& ps,
                                            const std::vector<double>& alphas,
                                            const std::vector<int>& class_counts,
                                            bool p_above_gamma_only = true) {
  std::vector<SweepRow> rows;
  for (int c : class_counts)
    for (double g : gammas)
      for (double p : ps) {
        if (p_above_gamma_only && !(p > g)) continue;
        for (double a : alphas) {
          SharedFeatureDistribution d{g, p, a, c};
          if (!d.valid() || !(d.p > d.gamma)) continue;
          const Theorem1Result r = theorem1_check(d);
          rows.push_back({g, p, a, c, r.I, r.I_tilde, r.gap_exact, r.gap_taylor, r.holds});
        }
      }
  return rows;
}

}  // namespace aev::theory
