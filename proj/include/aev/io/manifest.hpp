#pragma once

#include <string>
#include <vector>

#include "aev/harness/synthetic.hpp"
#include "aev/io/binary.hpp"
#include "aev/schemes/schemes.hpp"

#include <json.hpp>

namespace aev::io {

using nlohmann::json;

// ---- enum <-> string helpers ----------------------------------------------

inline const char* optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}
inline OptimizerKind optimizer_from(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer: " + s);
}
inline const char* schedule_name(ScheduleKind k) {
  return k == ScheduleKind::constant ? "constant" : "cosine";
}
inline ScheduleKind schedule_from(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "cosine") return ScheduleKind::cosine;
  throw ConfigError("unknown schedule: " + s);
}
inline const char* scope_name(TrainScope s) {
  return s == TrainScope::full ? "full" : "head_only";
}
inline TrainScope scope_from(const std::string& s) {
  if (s == "full") return TrainScope::full;
  if (s == "head_only") return TrainScope::head_only;
  throw ConfigError("unknown scope: " + s);
}
inline const char* head_name(Head h) { return h == Head::logit ? "logit" : "probability"; }
inline Head head_from(const std::string& s) {
  if (s == "logit") return Head::logit;
  if (s == "probability") return Head::probability;
  throw ConfigError("unknown head: " + s);
}
inline const char* baseline_kind_name(BaselineKind b) {
  switch (b) {
    case BaselineKind::constant: return "constant";
    case BaselineKind::dataset_mean: return "dataset_mean";
    default: return "training_samples";
  }
}
inline BaselineKind baseline_kind_from(const std::string& s) {
  if (s == "constant") return BaselineKind::constant;
  if (s == "dataset_mean") return BaselineKind::dataset_mean;
  if (s == "training_samples") return BaselineKind::training_samples;
  throw ConfigError("unknown baseline kind: " + s);
}
inline const char* path_rule_name(PathRule r) {
  return r == PathRule::right_sum ? "right_sum" : "inclusive_sum";
}
inline PathRule path_rule_from(const std::string& s) {
  if (s == "right_sum") return PathRule::right_sum;
  if (s == "inclusive_sum") return PathRule::inclusive_sum;
  throw ConfigError("unknown path rule: " + s);
}

// ---- config <-> json -------------------------------------------------------

inline json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"optimizer", optimizer_name(c.optimizer.kind)},
          {"lr", c.optimizer.lr},
          {"momentum", c.optimizer.momentum},
          {"schedule", schedule_name(c.schedule.kind)},
          {"warmup_epochs", c.schedule.warmup_epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"scope", scope_name(c.scope)}};
}

inline TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs");
  c.optimizer.kind = optimizer_from(j.at("optimizer"));
  c.optimizer.lr = j.at("lr");
  c.optimizer.momentum = j.at("momentum");
  c.schedule.kind = schedule_from(j.at("schedule"));
  c.schedule.warmup_epochs = j.at("warmup_epochs");
  c.batch_size = j.at("batch_size");
  c.seed = j.at("seed");
  c.scope = scope_from(j.at("scope"));
  return c;
}

inline json to_json(const ExplainerConfig& c) {
  return {{"kind", explainer_name(c.kind)},
          {"k", c.k},
          {"sigma", c.sigma},
          {"baseline", baseline_kind_name(c.baseline.kind)},
          {"baseline_value", c.baseline.value},
          {"seed", c.seed},
          {"head", head_name(c.head)},
          {"path_rule", path_rule_name(c.path_rule)},
          {"eg_inner_steps", c.eg_inner_steps}};
}

inline ExplainerConfig explainer_config_from(const json& j) {
  ExplainerConfig c;
  c.kind = explainer_kind_from(j.at("kind"));
  c.k = j.at("k");
  c.sigma = j.at("sigma");
  c.baseline.kind = baseline_kind_from(j.at("baseline"));
  c.baseline.value = j.at("baseline_value");
  c.seed = j.at("seed");
  c.head = head_from(j.at("head"));
  c.path_rule = path_rule_from(j.at("path_rule"));
  c.eg_inner_steps = j.at("eg_inner_steps");
  return c;
}

inline json to_json(const SchemeConfig& s) {
  return {{"name", s.name},
          {"order", occlusion_order_name(s.order)},
          {"update", update_protocol_name(s.update)},
          {"ratios", s.ratios},
          {"repetitions", s.repetitions},
          {"train_fraction", s.train_fraction},
          {"update_cfg", to_json(s.update_cfg)},
          {"explain_train", s.explain_train},
          {"explain_test", s.explain_test},
          {"seed", s.seed}};
}

inline SchemeConfig scheme_config_from(const json& j) {
  SchemeConfig s;
  s.name = j.at("name");
  s.order = occlusion_order_from(j.at("order"));
  s.update = update_protocol_from(j.at("update"));
  s.ratios = j.at("ratios").get<std::vector<double>>();
  s.repetitions = j.at("repetitions");
  s.train_fraction = j.at("train_fraction");
  s.update_cfg = train_config_from(j.at("update_cfg"));
  s.explain_train = j.at("explain_train");
  s.explain_test = j.at("explain_test");
  s.seed = j.at("seed");
  return s;
}

inline json to_json(const SyntheticSpec& s) {
  return {{"kind", synthetic_kind_name(s.kind)},
          {"classes", s.classes},
          {"train_per_class", s.train_per_class},
          {"test_per_class", s.test_per_class},
          {"grid", s.grid},
          {"block", s.block},
          {"shared_class_a", s.shared_class_a},
          {"shared_class_b", s.shared_class_b},
          {"p_on", s.p_on},
          {"noise_std", s.noise_std},
          {"seed", s.seed}};
}

inline SyntheticSpec synthetic_spec_from(const json& j) {
  SyntheticSpec s;
  s.kind = synthetic_kind_from(j.at("kind"));
  s.classes = j.at("classes");
  s.train_per_class = j.at("train_per_class");
  s.test_per_class = j.at("test_per_class");
  s.grid = j.at("grid");
  s.block = j.at("block");
  s.shared_class_a = j.at("shared_class_a");
  s.shared_class_b = j.at("shared_class_b");
  s.p_on = j.at("p_on");
  s.noise_std = j.at("noise_std");
  s.seed = j.at("seed");
  return s;
}

// ---- run manifest -----------------------------------------------------------

/// Where a run's data came from: a synthetic spec (fully regenerable) or an
/// MNIST directory, plus content hashes for replay verification.
struct DatasetRef {
  std::string kind;  // "synthetic" | "mnist"
  std::string path;  // mnist only
  SyntheticSpec synthetic{};
  std::uint64_t train_hash = 0;
  std::uint64_t test_hash = 0;
};

inline json to_json(const DatasetRef& d) {
  json j = {{"kind", d.kind}, {"train_hash", d.train_hash}, {"test_hash", d.test_hash}};
  if (d.kind == "mnist") j["path"] = d.path;
  if (d.kind == "synthetic") j["spec"] = to_json(d.synthetic);
  return j;
}

inline DatasetRef dataset_ref_from(const json& j) {
  DatasetRef d;
  d.kind = j.at("kind");
  d.train_hash = j.at("train_hash");
  d.test_hash = j.at("test_hash");
  if (d.kind == "mnist") d.path = j.at("path");
  if (d.kind == "synthetic") d.synthetic = synthetic_spec_from(j.at("spec"));
  return d;
}

/// Everything needed to byte-reproduce a run: configs, seeds, data identity,
/// checkpoint identity, and the output inventory.
struct RunManifest {
  std::string command;
  std::string artifact_version = "0.1.0";
  DatasetRef dataset;
  std::string checkpoint_path;
  std::uint64_t checkpoint_hash = 0;
  bool has_scheme = false;
  SchemeConfig scheme{};
  std::vector<ExplainerConfig> explainers;
  bool has_train = false;
  TrainConfig train_cfg{};
  std::string arch;  // train command: "mlp:<hidden,...>" or "cnn"
  std::uint64_t init_seed = 0;
  std::vector<std::string> outputs;
};

inline json to_json(const RunManifest& m) {
  json j = {{"command", m.command},
            {"artifact_version", m.artifact_version},
            {"dataset", to_json(m.dataset)},
            {"outputs", m.outputs}};
  if (!m.checkpoint_path.empty()) {
    j["checkpoint"] = {{"path", m.checkpoint_path}, {"hash", m.checkpoint_hash}};
  }
  if (m.has_scheme) {
    j["scheme"] = to_json(m.scheme);
    json ex = json::array();
    for (const auto& e : m.explainers) ex.push_back(to_json(e));
    j["explainers"] = ex;
  }
  if (m.has_train) {
    j["train_cfg"] = to_json(m.train_cfg);
    j["arch"] = m.arch;
    j["init_seed"] = m.init_seed;
  }
  return j;
}

inline RunManifest manifest_from(const json& j) {
  RunManifest m;
  m.command = j.at("command");
  m.artifact_version = j.at("artifact_version");
  m.dataset = dataset_ref_from(j.at("dataset"));
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  if (j.contains("checkpoint")) {
    m.checkpoint_path = j.at("checkpoint").at("path");
    m.checkpoint_hash = j.at("checkpoint").at("hash");
  }
  if (j.contains("scheme")) {
    m.has_scheme = true;
    m.scheme = scheme_config_from(j.at("scheme"));
    for (const auto& e : j.at("explainers")) m.explainers.push_back(explainer_config_from(e));
  }
  if (j.contains("train_cfg")) {
    m.has_train = true;
    m.train_cfg = train_config_from(j.at("train_cfg"));
    m.arch = j.at("arch");
    m.init_seed = j.at("init_seed");
  }
  return m;
}

inline void save_manifest(const std::string& path, const RunManifest& m) {
  write_text_file(path, to_json(m).dump(2) + "\n");
}

inline RunManifest load_manifest(const std::string& path) {
  return manifest_from(json::parse(read_text_file(path)));
}

}  // namespace aev::io
