#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aev/schemes/schemes.hpp"

namespace aev {

/// One ranking-table row: per-explainer means/stds for the keep- and
/// remove-ordered runs, with the area metric when both sides exist.
struct CompareRow {
  std::string explainer;
  std::string keep_scheme, remove_scheme;
  double keep_mean = 0, keep_std = 0;
  double remove_mean = 0, remove_std = 0;
  bool has_keep = false, has_remove = false;
  bool has_delta = false;
  double delta = 0;
  double delta_std = 0;  // sample std of per-repetition deltas
};

namespace detail {

inline bool keep_type(const std::string& order) {
  return order == "lowest_first" || order == "irrelevant_first";
}
inline bool remove_type(const std::string& order) {
  return order == "highest_first" || order == "relevant_first";
}

inline std::pair<double, double> grid_stats(const EvalResult& r) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& row : r.accuracy)
    for (double v : row) {
      sum += v;
      ++n;
    }
  const double mean = sum / static_cast<double>(n);
  double ss = 0;
  for (const auto& row : r.accuracy)
    for (double v : row) ss += (v - mean) * (v - mean);
  return {mean, n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0};
}

}  // namespace detail

/// Group results by explainer, pair keep- and remove-ordered runs, compute
/// the area metric, and rank. Rows with a delta come first (descending),
/// then the rest alphabetically; deterministic for identical inputs.
inline std::vector<CompareRow> compare_report(const std::vector<EvalResult>& results) {
  if (results.empty()) return {};
  for (const auto& r : results)
    if (r.ratios != results[0].ratios)
      throw ConfigError("compare_report: inconsistent ratio grids");

  std::vector<std::string> explainers;
  for (const auto& r : results)
    if (std::find(explainers.begin(), explainers.end(), r.explainer) == explainers.end())
      explainers.push_back(r.explainer);

  std::vector<CompareRow> rows;
  for (const auto& name : explainers) {
    CompareRow row;
    row.explainer = name;
    const EvalResult* keep = nullptr;
    const EvalResult* remove = nullptr;
    for (const auto& r : results) {
      if (r.explainer != name) continue;
      if (!keep && detail::keep_type(r.order)) keep = &r;
      if (!remove && detail::remove_type(r.order)) remove = &r;
      // The random baseline ignores occlusion order: it can stand on both
      // sides, where its delta is zero by construction.
      if (r.order == "random") {
        if (!keep) keep = &r;
        else if (!remove) remove = &r;
      }
    }
    if (keep) {
      row.has_keep = true;
      row.keep_scheme = keep->scheme;
      std::tie(row.keep_mean, row.keep_std) = detail::grid_stats(*keep);
    }
    if (remove) {
      row.has_remove = true;
      row.remove_scheme = remove->scheme;
      std::tie(row.remove_mean, row.remove_std) = detail::grid_stats(*remove);
    }
    if (keep && remove && keep->ratios.size() >= 2) {
      row.has_delta = true;
      row.delta = delta_acc(curve_of(*keep), curve_of(*remove));
      const auto deltas = delta_acc_per_rep(*keep, *remove);
      double m = 0;
      for (double d : deltas) m += d;
      m /= static_cast<double>(deltas.size());
      double ss = 0;
      for (double d : deltas) ss += (d - m) * (d - m);
      row.delta_std =
          deltas.size() > 1 ? std::sqrt(ss / static_cast<double>(deltas.size() - 1)) : 0.0;
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
    if (a.has_delta != b.has_delta) return a.has_delta;
    if (a.has_delta && a.delta != b.delta) return a.delta > b.delta;
    return a.explainer < b.explainer;
  });
  return rows;
}

}  // namespace aev
