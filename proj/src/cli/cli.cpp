#include "cli.hpp"

#include <aev/harness/mnist.hpp>
#include <aev/harness/synthetic.hpp>
#include <aev/io/attribution_io.hpp>
#include <aev/io/checkpoint.hpp>
#include <aev/io/manifest.hpp>
#include <aev/io/results_io.hpp>
#include <aev/schemes/report.hpp>
#include <aev/schemes/schemes.hpp>
#include <aev/theory/wpc.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace aev {
namespace {

namespace fs = std::filesystem;

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case Error::Category::format: return 3;
    case Error::Category::config: return 4;
    case Error::Category::shape:
    case Error::Category::numeric: return 5;
    case Error::Category::io: return 6;
    case Error::Category::mismatch: return 7;
  }
  return 1;
}

/// "a:b:step" inclusive range or "x,y,z" list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double a = 0, b = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0)
      throw ConfigError("bad range '" + text + "', expected a:b:step");
    for (double v = a; v <= b + 1e-9; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::strtod(item.c_str(), nullptr));
  if (out.empty()) throw ConfigError("empty grid '" + text + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(std::atoi(item.c_str()));
  return out;
}

// ---- dataset argument -------------------------------------------------------

struct LoadedData {
  LabeledDataset<float> train, test;
  io::DatasetRef ref;
};

SyntheticSpec default_spec(SyntheticKind kind) {
  SyntheticSpec s;
  s.kind = kind;
  if (kind == SyntheticKind::blobs) {
    s.classes = 4;
    s.grid = 6;
    s.train_per_class = 400;
    s.test_per_class = 100;
    s.noise_std = 0.15;
  } else if (kind == SyntheticKind::cancellation_pair) {
    s.classes = 2;
    s.train_per_class = 400;
    s.test_per_class = 100;
  }
  return s;
}

/// "mnist[:dir]" or "synthetic:<kind>[:key=value,...]"; keys: classes, train,
/// test, grid, block, p_on, noise, seed.
LoadedData load_dataset(const std::string& spec_text) {
  LoadedData data;
  const auto parts = [&] {
    std::vector<std::string> p;
    std::stringstream ss(spec_text);
    std::string item;
    while (std::getline(ss, item, ':')) p.push_back(item);
    return p;
  }();
  if (parts.empty()) throw ConfigError("empty dataset spec");
  if (parts[0] == "mnist") {
    const std::string dir = parts.size() > 1 ? parts[1] : find_mnist_dir();
    std::tie(data.train, data.test) = load_mnist<float>(dir);
    data.ref.kind = "mnist";
    data.ref.path = dir;
  } else if (parts[0] == "synthetic") {
    if (parts.size() < 2) throw ConfigError("synthetic dataset needs a kind");
    SyntheticSpec spec = default_spec(synthetic_kind_from(parts[1]));
    if (parts.size() > 2) {
      for (const auto& kv : split_list(parts[2])) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("bad synthetic option '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const double val = std::strtod(kv.c_str() + eq + 1, nullptr);
        if (key == "classes") spec.classes = static_cast<int>(val);
        else if (key == "train") spec.train_per_class = static_cast<int>(val);
        else if (key == "test") spec.test_per_class = static_cast<int>(val);
        else if (key == "grid") spec.grid = static_cast<int>(val);
        else if (key == "block") spec.block = static_cast<int>(val);
        else if (key == "p_on") spec.p_on = val;
        else if (key == "noise") spec.noise_std = val;
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(val);
        else throw ConfigError("unknown synthetic option '" + key + "'");
      }
    }
    std::tie(data.train, data.test) = generate_synthetic<float>(spec);
    data.ref.kind = "synthetic";
    data.ref.synthetic = spec;
  } else {
    throw ConfigError("unknown dataset '" + parts[0] + "' (expected mnist or synthetic)");
  }
  data.ref.train_hash = data.train.hash();
  data.ref.test_hash = data.test.hash();
  return data;
}

LoadedData load_dataset_checked(const io::DatasetRef& ref) {
  LoadedData data;
  if (ref.kind == "mnist") {
    std::tie(data.train, data.test) = load_mnist<float>(ref.path);
  } else {
    std::tie(data.train, data.test) = generate_synthetic<float>(ref.synthetic);
  }
  data.ref = ref;
  if (data.train.hash() != ref.train_hash || data.test.hash() != ref.test_hash)
    throw MismatchError("dataset content hash does not match the manifest; refusing to mix runs");
  return data;
}

Network<float> load_checkpoint_checked(const std::string& path, std::uint64_t expected_hash) {
  Network<float> net = io::load_network(path);
  if (expected_hash != 0 && io::network_hash(net) != expected_hash)
    throw MismatchError("checkpoint " + path + " does not match the manifest hash");
  return net;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string dataset = "synthetic:planted";
  std::string arch = "mlp:256";
  std::string out = "model.aevnet";
  std::string manifest;
  int epochs = 30;
  std::string optimizer = "sgd";
  double lr = 0.01;
  double momentum = 0.0;
  std::string schedule = "constant";
  int warmup = 0;
  int batch_size = 64;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 1;
};

Network<float> build_arch(const std::string& arch, const Shape& input_shape, int classes,
                          std::uint64_t init_seed) {
  if (arch.rfind("mlp", 0) == 0) {
    std::vector<Index> hidden;
    const auto colon = arch.find(':');
    if (colon != std::string::npos)
      for (int h : parse_int_list(arch.substr(colon + 1))) hidden.push_back(h);
    if (hidden.empty()) hidden = {256};
    return make_mlp<float>(input_shape, hidden, classes, init_seed);
  }
  if (arch.rfind("cnn", 0) == 0) return make_cnn<float>(input_shape, classes, init_seed);
  throw ConfigError("unknown architecture '" + arch + "' (expected mlp[:h1,h2] or cnn)");
}

TrainConfig train_config_of(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.optimizer = {io::optimizer_from(a.optimizer), a.lr, a.momentum};
  cfg.schedule = {io::schedule_from(a.schedule), a.warmup};
  cfg.batch_size = a.batch_size;
  cfg.seed = a.seed;
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  LoadedData data = load_dataset(a.dataset);
  Shape in_shape = data.train.input_shape();
  if (a.arch.rfind("cnn", 0) == 0 && in_shape.size() == 2)
    throw ConfigError("cnn needs [c,h,w] inputs");
  Network<float> net = build_arch(a.arch, in_shape, data.train.class_count, a.init_seed);
  const TrainConfig cfg = train_config_of(a);
  auto [trained, report] = train(net, data.train, cfg);
  const double train_acc = report.history.empty() ? 0.0 : report.history.back().accuracy;
  const double test_acc = accuracy(trained, data.test);
  io::save_network(a.out, trained);

  io::RunManifest m;
  m.command = "train";
  m.dataset = data.ref;
  m.checkpoint_path = a.out;
  m.checkpoint_hash = io::network_hash(trained);
  m.has_train = true;
  m.train_cfg = cfg;
  m.arch = a.arch;
  m.init_seed = a.init_seed;
  m.outputs = {a.out};
  const std::string manifest_path = a.manifest.empty() ? a.out + ".manifest.json" : a.manifest;
  io::save_manifest(manifest_path, m);

  std::cout << "trained " << a.arch << " on " << a.dataset << ": train_acc="
            << io::format_double(train_acc) << " test_acc=" << io::format_double(test_acc)
            << "\ncheckpoint: " << a.out << "\nmanifest:   " << manifest_path << "\n";
  return 0;
}

// ---- explain ----------------------------------------------------------------

struct ExplainArgs {
  std::string checkpoint;
  std::string dataset = "synthetic:planted";
  std::string explainer = "ig";
  std::string split = "test";
  int count = 16;
  int k = 32;
  double sigma = 0.15;
  std::string baseline = "constant:0";
  std::string head = "probability";
  std::string path_rule = "right_sum";
  std::uint64_t seed = 0;
  std::string out = "attributions.aevatt";
  std::string plan_out;
  double plan_ratio = 0.9;
  std::string plan_order = "highest_first";
};

ExplainerConfig explainer_config_of(const std::string& kind, int k, double sigma,
                                    const std::string& baseline, const std::string& head,
                                    const std::string& path_rule, std::uint64_t seed) {
  ExplainerConfig cfg;
  cfg.kind = explainer_kind_from(kind);
  cfg.k = k;
  cfg.sigma = sigma;
  cfg.head = io::head_from(head);
  cfg.path_rule = io::path_rule_from(path_rule);
  cfg.seed = seed;
  const auto colon = baseline.find(':');
  const std::string base_kind = baseline.substr(0, colon);
  cfg.baseline.kind = io::baseline_kind_from(base_kind);
  if (colon != std::string::npos)
    cfg.baseline.value = std::strtod(baseline.c_str() + colon + 1, nullptr);
  return cfg;
}

int cmd_explain(const ExplainArgs& a) {
  if (a.checkpoint.empty()) throw ConfigError("explain requires --checkpoint");
  Network<float> net = io::load_network(a.checkpoint);
  LoadedData data = load_dataset(a.dataset);
  const LabeledDataset<float>& split = a.split == "train" ? data.train : data.test;
  const ExplainerConfig cfg = explainer_config_of(a.explainer, a.k, a.sigma, a.baseline, a.head,
                                                  a.path_rule, a.seed);
  const Tensor<float> mean = dataset_mean(data.train);
  ExplainContext<float> ctx;
  ctx.dataset_mean = &mean;
  ctx.baseline_pool = &data.train;

  const int count = std::min<int>(a.count, static_cast<int>(split.size()));
  std::vector<int> indices(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) indices[static_cast<std::size_t>(i)] = i;
  const auto maps = explain_set(net, split, indices, cfg, ctx, default_thread_count());

  std::vector<io::AttributionRecord> records;
  for (std::size_t i = 0; i < maps.size(); ++i)
    records.push_back({static_cast<std::uint64_t>(indices[i]), maps[i]});
  io::save_attributions(a.out, records);
  std::cout << "wrote " << records.size() << " attribution maps to " << a.out << "\n";

  if (!a.plan_out.empty()) {
    const auto plan = build_plan(maps, a.plan_ratio, occlusion_order_from(a.plan_order),
                                 replacement_for(cfg), cfg.seed);
    io::write_text_file(a.plan_out, plan_to_json(plan).dump(2) + "\n");
    std::cout << "wrote occlusion plan to " << a.plan_out << "\n";
  }
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string preset_name;
  std::string order = "lowest_first";
  std::string update = "finetune_head";
  double fraction = -1.0;  // <0: preset/protocol default
  std::string checkpoint;
  std::string dataset = "synthetic:planted";
  std::string explainers = "ig,sg,vg,random";
  std::string ratios;  // empty: preset grid
  int repetitions = 5;
  int k = 32;
  double sigma = 0.15;
  std::string baseline = "constant:0";
  std::string head = "probability";
  std::string path_rule = "right_sum";
  int epochs = -1;
  std::string optimizer = "sgd";
  double lr = 0.01;
  double momentum = 0.0;
  int batch_size = 64;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = "eval_out";
  std::string replay;
};

SchemeConfig scheme_of(const EvaluateArgs& a) {
  TrainConfig base;
  base.epochs = a.epochs > 0 ? a.epochs : 30;
  base.optimizer = {io::optimizer_from(a.optimizer), a.lr, a.momentum};
  base.batch_size = a.batch_size;
  SchemeConfig s;
  if (!a.preset_name.empty()) {
    s = preset(a.preset_name, base);
    if (a.epochs > 0) s.update_cfg.epochs = a.epochs;
  } else {
    s.name = a.order + "+" + a.update;
    s.order = occlusion_order_from(a.order);
    s.update = update_protocol_from(a.update);
    s.update_cfg = base;
    s.update_cfg.scope =
        s.update == UpdateProtocol::finetune_head ? TrainScope::head_only : TrainScope::full;
    s.train_fraction = s.update == UpdateProtocol::retrain_full ? 1.0
                       : s.update == UpdateProtocol::finetune_full ? 0.2 : 0.1;
    s.ratios = default_ratio_grid();
  }
  if (a.fraction > 0) s.train_fraction = a.fraction;
  if (!a.ratios.empty()) s.ratios = parse_grid(a.ratios);
  s.repetitions = a.repetitions;
  s.seed = a.seed;
  s.threads = a.threads > 0 ? a.threads : default_thread_count();
  return s;
}

void print_report(const std::vector<EvalResult>& results) {
  const auto rows = compare_report(results);
  std::cout << "explainer   keep(mean+-std)        remove(mean+-std)      delta_acc\n";
  for (const auto& row : rows) {
    char keep[48] = "-", remove[48] = "-", delta[48] = "-";
    if (row.has_keep)
      std::snprintf(keep, sizeof keep, "%s %.4f+-%.4f", row.keep_scheme.c_str(), row.keep_mean,
                    row.keep_std);
    if (row.has_remove)
      std::snprintf(remove, sizeof remove, "%s %.4f+-%.4f", row.remove_scheme.c_str(),
                    row.remove_mean, row.remove_std);
    if (row.has_delta) std::snprintf(delta, sizeof delta, "%.4f+-%.4f", row.delta, row.delta_std);
    std::printf("%-11s %-22s %-22s %s\n", row.explainer.c_str(), keep, remove, delta);
  }
}

int run_evaluation(const LoadedData& data, const Network<float>& net,
                   const std::string& checkpoint_path, const SchemeConfig& scheme,
                   const std::vector<ExplainerConfig>& explainers, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<EvalResult> results;
  for (const auto& ecfg : explainers) {
    EvalResult r = run_scheme(net, data.train, data.test, ecfg, scheme);
    r.checkpoint_hash = io::network_hash(net);
    results.push_back(std::move(r));
  }
  io::save_results(out_dir, results);

  io::RunManifest m;
  m.command = "evaluate";
  m.dataset = data.ref;
  m.checkpoint_path = checkpoint_path;
  m.checkpoint_hash = io::network_hash(net);
  m.has_scheme = true;
  m.scheme = scheme;
  m.explainers = explainers;
  m.outputs = {out_dir + "/results.csv", out_dir + "/curves.csv",
               out_dir + "/results_meta.json"};
  io::save_manifest(out_dir + "/manifest.json", m);

  std::cout << "scheme " << scheme.name << " on " << results.size() << " explainer(s), "
            << scheme.ratios.size() << " ratios x " << scheme.repetitions << " repetitions\n";
  print_report(results);
  std::cout << "results: " << out_dir << "/results.csv\n";
  return 0;
}

int cmd_evaluate(const EvaluateArgs& a) {
  if (!a.replay.empty()) {
    const io::RunManifest m = io::load_manifest(a.replay);
    if (!m.has_scheme) throw ConfigError(a.replay + " is not an evaluate manifest");
    LoadedData data = load_dataset_checked(m.dataset);
    Network<float> net = load_checkpoint_checked(m.checkpoint_path, m.checkpoint_hash);
    return run_evaluation(data, net, m.checkpoint_path, m.scheme, m.explainers, a.out_dir);
  }
  if (a.checkpoint.empty()) throw ConfigError("evaluate requires --checkpoint (or --replay)");
  LoadedData data = load_dataset(a.dataset);
  Network<float> net = io::load_network(a.checkpoint);
  const SchemeConfig scheme = scheme_of(a);
  std::vector<ExplainerConfig> explainers;
  for (const auto& name : split_list(a.explainers))
    explainers.push_back(explainer_config_of(name, a.k, a.sigma, a.baseline, a.head, a.path_rule,
                                             /*seed=*/0));
  if (explainers.empty()) throw ConfigError("no explainers requested");
  return run_evaluation(data, net, a.checkpoint, scheme, explainers, a.out_dir);
}

// ---- theory-sweep / wpc-fuzz --------------------------------------------------

struct SweepArgs {
  std::string gamma = "0.05:0.45:0.05";
  std::string p;  // empty with p_above_gamma set
  bool p_above_gamma = false;
  double p_step = 0.05;
  double p_max = 0.9;
  std::string alpha = "0.1:0.9:0.1";
  std::string classes = "2,5,10";
  std::string out = "theory_sweep.csv";
};

int cmd_theory_sweep(const SweepArgs& a) {
  const auto gammas = parse_grid(a.gamma);
  const auto alphas = parse_grid(a.alpha);
  const auto class_counts = parse_int_list(a.classes);
  std::vector<double> ps;
  if (a.p_above_gamma) {
    // p ranges per gamma; emit the union grid and let the sweep filter p > gamma.
    for (double g = gammas.front() + a.p_step; g <= a.p_max + 1e-9; g += a.p_step)
      ps.push_back(g);
  } else if (!a.p.empty()) {
    ps = parse_grid(a.p);
  } else {
    throw ConfigError("theory-sweep needs --p or --p-above-gamma");
  }
  const auto rows = theory::theorem1_sweep(gammas, ps, alphas, class_counts, true);
  std::ostringstream csv;
  csv << "gamma,p,alpha,C,I,I_tilde,gap_exact,gap_taylor,holds\n";
  std::size_t holds = 0;
  for (const auto& row : rows) {
    csv << io::format_double(row.gamma) << ',' << io::format_double(row.p) << ','
        << io::format_double(row.alpha) << ',' << row.classes << ',' << io::format_double(row.I)
        << ',' << io::format_double(row.I_tilde) << ',' << io::format_double(row.gap_exact) << ','
        << io::format_double(row.gap_taylor) << ',' << (row.holds ? "true" : "false") << '\n';
    holds += row.holds ? 1 : 0;
  }
  io::write_text_file(a.out, csv.str());
  std::cout << "theory sweep: " << rows.size() << " valid grid points, " << holds
            << " hold, " << (rows.size() - holds) << " fail -> " << a.out << "\n";
  return 0;
}

struct FuzzArgs {
  std::uint64_t count = 100000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_wpc_fuzz(const FuzzArgs& a) {
  const auto report = theory::wpc_fuzz(a.count, a.seed);
  std::ostringstream text;
  text << "instances=" << report.instances << "\nviolations=" << report.violations
       << "\nrejected_draws=" << report.rejected << "\n";
  if (!a.out.empty()) io::write_text_file(a.out, text.str());
  std::cout << text.str();
  return report.violations == 0 ? 0 : 1;
}

// ---- report -------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> results_dirs;
  std::vector<std::string> delta_dirs;  // keep_dir remove_dir
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::vector<EvalResult> results;
  if (!a.delta_dirs.empty()) {
    if (a.delta_dirs.size() != 2)
      throw ConfigError("--delta-acc takes exactly two run directories (keep, remove)");
    for (const auto& dir : a.delta_dirs)
      for (auto& r : io::load_results(dir)) results.push_back(std::move(r));
  } else {
    if (a.results_dirs.empty()) throw ConfigError("report needs --results or --delta-acc");
    for (const auto& dir : a.results_dirs)
      for (auto& r : io::load_results(dir)) results.push_back(std::move(r));
  }
  const auto rows = compare_report(results);
  std::ostringstream csv;
  csv << "explainer,keep_scheme,keep_mean,keep_std,remove_scheme,remove_mean,remove_std,"
         "delta_acc,delta_acc_std\n";
  for (const auto& row : rows) {
    csv << row.explainer << ',' << row.keep_scheme << ','
        << (row.has_keep ? io::format_double(row.keep_mean) : "") << ','
        << (row.has_keep ? io::format_double(row.keep_std) : "") << ',' << row.remove_scheme
        << ',' << (row.has_remove ? io::format_double(row.remove_mean) : "") << ','
        << (row.has_remove ? io::format_double(row.remove_std) : "") << ','
        << (row.has_delta ? io::format_double(row.delta) : "") << ','
        << (row.has_delta ? io::format_double(row.delta_std) : "") << '\n';
  }
  if (!a.out.empty()) io::write_text_file(a.out, csv.str());
  print_report(results);
  if (!a.out.empty()) std::cout << "report csv: " << a.out << "\n";
  return 0;
}

// ---- config file merging -------------------------------------------------------

/// Single human-editable JSON config; CLI flags win over file values.
void apply_config_file(CLI::App& app, const std::string& path, const std::string& section) {
  if (path.empty()) return;
  const auto doc = nlohmann::json::parse(io::read_text_file(path));
  if (!doc.contains(section)) return;
  for (const auto& [key, value] : doc.at(section).items()) {
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (!opt) throw ConfigError("config file option '" + key + "' unknown for " + section);
    if (opt->count() > 0) continue;  // explicit flag wins
    const std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    opt->add_result(text);
    opt->run_callback();
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"attribution-evaluation workbench"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a classifier and write a checkpoint");
  train_cmd->add_option("--dataset", train_args.dataset, "mnist[:dir] | synthetic:<kind>[:k=v,...]");
  train_cmd->add_option("--arch", train_args.arch, "mlp[:h1,h2,...] | cnn");
  train_cmd->add_option("--epochs", train_args.epochs);
  train_cmd->add_option("--optimizer", train_args.optimizer, "sgd | adam");
  train_cmd->add_option("--lr", train_args.lr);
  train_cmd->add_option("--momentum", train_args.momentum);
  train_cmd->add_option("--schedule", train_args.schedule, "constant | cosine");
  train_cmd->add_option("--warmup", train_args.warmup);
  train_cmd->add_option("--batch-size", train_args.batch_size);
  train_cmd->add_option("--seed", train_args.seed);
  train_cmd->add_option("--init-seed", train_args.init_seed);
  train_cmd->add_option("--out", train_args.out);
  train_cmd->add_option("--manifest", train_args.manifest);

  ExplainArgs explain_args;
  auto* explain_cmd = app.add_subcommand("explain", "write attribution dumps for a checkpoint");
  explain_cmd->add_option("--checkpoint", explain_args.checkpoint)->required();
  explain_cmd->add_option("--dataset", explain_args.dataset);
  explain_cmd->add_option("--explainer", explain_args.explainer, "vg|sg|ig|gxi|eg|sig|random");
  explain_cmd->add_option("--split", explain_args.split, "train | test");
  explain_cmd->add_option("--count", explain_args.count, "number of explicands");
  explain_cmd->add_option("--k", explain_args.k);
  explain_cmd->add_option("--sigma", explain_args.sigma);
  explain_cmd->add_option("--baseline", explain_args.baseline, "constant:<v> | dataset_mean");
  explain_cmd->add_option("--head", explain_args.head, "logit | probability");
  explain_cmd->add_option("--path-rule", explain_args.path_rule, "right_sum | inclusive_sum");
  explain_cmd->add_option("--seed", explain_args.seed);
  explain_cmd->add_option("--out", explain_args.out);
  explain_cmd->add_option("--plan-out", explain_args.plan_out, "also dump an occlusion plan JSON");
  explain_cmd->add_option("--plan-ratio", explain_args.plan_ratio);
  explain_cmd->add_option("--plan-order", explain_args.plan_order);

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "run an evaluation scheme over explainers");
  eval_cmd->add_option("--preset", eval_args.preset_name,
                       "ROAR | KeAR | KAFT | KAFT-C | RAFT-C-abs | KAFT-C-abs");
  eval_cmd->add_option("--order", eval_args.order);
  eval_cmd->add_option("--update", eval_args.update);
  eval_cmd->add_option("--fraction", eval_args.fraction);
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint);
  eval_cmd->add_option("--dataset", eval_args.dataset);
  eval_cmd->add_option("--explainers", eval_args.explainers, "comma list");
  eval_cmd->add_option("--ratios", eval_args.ratios, "a:b:step or comma list");
  eval_cmd->add_option("--reps", eval_args.repetitions);
  eval_cmd->add_option("--k", eval_args.k);
  eval_cmd->add_option("--sigma", eval_args.sigma);
  eval_cmd->add_option("--baseline", eval_args.baseline);
  eval_cmd->add_option("--head", eval_args.head);
  eval_cmd->add_option("--path-rule", eval_args.path_rule);
  eval_cmd->add_option("--epochs", eval_args.epochs, "override update epochs");
  eval_cmd->add_option("--optimizer", eval_args.optimizer);
  eval_cmd->add_option("--lr", eval_args.lr);
  eval_cmd->add_option("--momentum", eval_args.momentum);
  eval_cmd->add_option("--batch-size", eval_args.batch_size);
  eval_cmd->add_option("--seed", eval_args.seed);
  eval_cmd->add_option("--threads", eval_args.threads);
  eval_cmd->add_option("--out-dir", eval_args.out_dir);
  eval_cmd->add_option("--replay", eval_args.replay, "re-run from a manifest");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("theory-sweep", "exact shared-feature MI sweep");
  sweep_cmd->add_option("--gamma", sweep_args.gamma, "a:b:step");
  sweep_cmd->add_option("--p", sweep_args.p, "a:b:step");
  sweep_cmd->add_flag("--p-above-gamma", sweep_args.p_above_gamma,
                      "p grid from min(gamma)+step to p-max");
  sweep_cmd->add_option("--p-step", sweep_args.p_step);
  sweep_cmd->add_option("--p-max", sweep_args.p_max);
  sweep_cmd->add_option("--alpha", sweep_args.alpha, "a:b:step");
  sweep_cmd->add_option("--classes", sweep_args.classes, "comma list");
  sweep_cmd->add_option("--out", sweep_args.out);

  FuzzArgs fuzz_args;
  auto* fuzz_cmd = app.add_subcommand("wpc-fuzz", "fuzz the weak-positive-contributor theorem");
  fuzz_cmd->add_option("--count", fuzz_args.count);
  fuzz_cmd->add_option("--seed", fuzz_args.seed);
  fuzz_cmd->add_option("--out", fuzz_args.out);

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "render comparison tables from saved results");
  report_cmd->add_option("--results", report_args.results_dirs, "result directories")
      ->expected(-1);
  report_cmd->add_option("--delta-acc", report_args.delta_dirs,
                         "keep and remove run directories")
      ->expected(2);
  report_cmd->add_option("--out", report_args.out, "write the table as CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (train_cmd->parsed()) apply_config_file(*train_cmd, config_path, "train");
    if (explain_cmd->parsed()) apply_config_file(*explain_cmd, config_path, "explain");
    if (eval_cmd->parsed()) apply_config_file(*eval_cmd, config_path, "evaluate");
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (explain_cmd->parsed()) return cmd_explain(explain_args);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
    if (sweep_cmd->parsed()) return cmd_theory_sweep(sweep_args);
    if (fuzz_cmd->parsed()) return cmd_wpc_fuzz(fuzz_args);
    if (report_cmd->parsed()) return cmd_report(report_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace aev
