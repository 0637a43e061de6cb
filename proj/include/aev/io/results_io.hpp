#pragma once

#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aev/io/binary.hpp"
#include "aev/schemes/schemes.hpp"

#include <json.hpp>

namespace aev::io {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Results CSV: scheme,explainer,ratio,repetition,accuracy,seed.
inline std::string results_csv(const std::vector<EvalResult>& results) {
  std::ostringstream out;
  out << "scheme,explainer,ratio,repetition,accuracy,seed\n";
  for (const auto& r : results)
    for (std::size_t ri = 0; ri < r.ratios.size(); ++ri)
      for (int rep = 0; rep < r.repetitions; ++rep)
        out << r.scheme << ',' << r.explainer << ',' << format_double(r.ratios[ri]) << ',' << rep
            << ',' << format_double(r.accuracy[ri][static_cast<std::size_t>(rep)]) << ','
            << r.job_seeds[ri][static_cast<std::size_t>(rep)] << '\n';
  return out.str();
}

/// Curve CSV for plotting: scheme,explainer,ratio,mean,std.
inline std::string curves_csv(const std::vector<EvalResult>& results) {
  std::ostringstream out;
  out << "scheme,explainer,ratio,mean,std\n";
  for (const auto& r : results)
    for (std::size_t ri = 0; ri < r.ratios.size(); ++ri)
      out << r.scheme << ',' << r.explainer << ',' << format_double(r.ratios[ri]) << ','
          << format_double(r.mean(ri)) << ',' << format_double(r.stddev(ri)) << '\n';
  return out.str();
}

/// Provenance sidecar so persisted results reload bit-exactly.
inline nlohmann::json results_meta(const std::vector<EvalResult>& results) {
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& r : results)
    meta.push_back({{"scheme", r.scheme},
                    {"explainer", r.explainer},
                    {"order", r.order},
                    {"update", r.update},
                    {"scheme_seed", r.scheme_seed},
                    {"checkpoint_hash", r.checkpoint_hash},
                    {"dataset_hash", r.dataset_hash},
                    {"parameter_updates", r.parameter_updates},
                    {"gradient_queries", r.gradient_queries}});
  return meta;
}

inline void save_results(const std::string& dir, const std::vector<EvalResult>& results) {
  write_text_file(dir + "/results.csv", results_csv(results));
  write_text_file(dir + "/curves.csv", curves_csv(results));
  write_text_file(dir + "/results_meta.json", results_meta(results).dump(2) + "\n");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

/// Rebuild EvalResults from results.csv (+ optional results_meta.json).
inline std::vector<EvalResult> load_results(const std::string& dir) {
  const std::string text = read_text_file(dir + "/results.csv");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "scheme,explainer,ratio,repetition,accuracy,seed")
    throw FormatError(dir + "/results.csv: unexpected header");

  std::vector<EvalResult> results;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6) throw FormatError(dir + "/results.csv: bad row: " + line);
    const auto key = std::make_pair(f[0], f[1]);
    if (!slot.count(key)) {
      slot[key] = results.size();
      EvalResult r;
      r.scheme = f[0];
      r.explainer = f[1];
      results.push_back(std::move(r));
    }
    EvalResult& r = results[slot[key]];
    const double ratio = std::strtod(f[2].c_str(), nullptr);
    const int rep = std::atoi(f[3].c_str());
    if (r.ratios.empty() || r.ratios.back() != ratio) {
      r.ratios.push_back(ratio);
      r.accuracy.emplace_back();
      r.job_seeds.emplace_back();
    }
    const std::size_t ri = r.ratios.size() - 1;
    if (static_cast<int>(r.accuracy[ri].size()) != rep)
      throw FormatError(dir + "/results.csv: repetitions out of order in row: " + line);
    r.accuracy[ri].push_back(std::strtod(f[4].c_str(), nullptr));
    r.job_seeds[ri].push_back(std::strtoull(f[5].c_str(), nullptr, 10));
    r.repetitions = static_cast<int>(r.accuracy[ri].size());
  }
  for (auto& r : results)
    for (const auto& row : r.accuracy)
      if (static_cast<int>(row.size()) != r.repetitions)
        throw FormatError(dir + "/results.csv: ragged repetition counts for " + r.scheme + "/" +
                          r.explainer);

  const std::string meta_path = dir + "/results_meta.json";
  if (std::ifstream(meta_path).good()) {
    const auto meta = nlohmann::json::parse(read_text_file(meta_path));
    for (const auto& entry : meta) {
      for (auto& r : results) {
        if (r.scheme == entry.at("scheme") && r.explainer == entry.at("explainer")) {
          r.order = entry.at("order");
          r.update = entry.at("update");
          r.scheme_seed = entry.at("scheme_seed");
          r.checkpoint_hash = entry.at("checkpoint_hash");
          r.dataset_hash = entry.at("dataset_hash");
          r.parameter_updates = entry.at("parameter_updates");
          r.gradient_queries = entry.at("gradient_queries");
        }
      }
    }
  }
  return results;
}

}  // namespace aev::io
