#include <doctest.h>

#include <aev/harness/synthetic.hpp>
#include <aev/nn/train.hpp>

using namespace aev;

namespace {

template <typename S>
bool params_bit_identical(const Network<S>& a, const Network<S>& b, int skip_layer = -1) {
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (static_cast<int>(i) == skip_layer) continue;
    const auto pa = layer_params(a.layers[i]);
    const auto pb = layer_params(b.layers[i]);
    for (std::size_t j = 0; j < pa.size(); ++j)
      if (pa[j]->data != pb[j]->data) return false;
  }
  return true;
}

/// Labels follow argmax of a fixed linear map; samples hugging a decision
/// boundary are resampled so the classes stay separable with a margin.
LabeledDataset<float> linear_argmax_dataset(int n, int dims, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> map(static_cast<std::size_t>(classes));
  for (auto& row : map) {
    row.resize(static_cast<std::size_t>(dims));
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  LabeledDataset<float> ds;
  ds.class_count = classes;
  ds.split = "train";
  while (static_cast<int>(ds.size()) < n) {
    Tensor<float> x = Tensor<float>::zeros({dims});
    for (Index j = 0; j < dims; ++j) x[j] = static_cast<float>(rng.uniform(0.0, 1.0));
    int best = 0;
    double best_v = -1e300, second = -1e300;
    for (int c = 0; c < classes; ++c) {
      double acc = 0;
      for (Index j = 0; j < dims; ++j) acc += map[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] * x[j];
      if (acc > best_v) {
        second = best_v;
        best_v = acc;
        best = c;
      } else if (acc > second) {
        second = acc;
      }
    }
    if (best_v - second < 0.15) continue;
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(best);
  }
  return ds;
}

}  // namespace

TEST_CASE("train reaches 100% on linearly separable labels within 30 epochs") {
  auto ds = linear_argmax_dataset(400, 6, 3, 11);
  auto net = make_mlp<float>({6}, {16}, 3, 1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.optimizer = {OptimizerKind::sgd, 0.5, 0.9};
  cfg.seed = 3;
  auto [trained, report] = train(net, ds, cfg);
  bool hit = false;
  for (const auto& e : report.history) hit = hit || e.accuracy == 1.0;
  CHECK(hit);
  CHECK(accuracy(trained, ds) == 1.0);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::blobs;
  spec.classes = 3;
  spec.grid = 4;
  spec.train_per_class = 60;
  spec.test_per_class = 20;
  spec.noise_std = 0.15;
  spec.seed = 5;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);
  auto net = make_mlp<float>(train_ds.input_shape(), {12}, 3, 7);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.optimizer = {OptimizerKind::adam, 0.01, 0.0};
  cfg.seed = 42;
  auto [a, ra] = train(net, train_ds, cfg);
  auto [b, rb] = train(net, train_ds, cfg);
  CHECK(params_bit_identical(a, b));
  CHECK(ra.history.back().loss == rb.history.back().loss);
}

TEST_CASE("train rejects empty datasets and non-full scope") {
  LabeledDataset<float> empty;
  empty.class_count = 2;
  auto net = make_mlp<float>({4}, {4}, 2, 0);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(net, empty, cfg), ConfigError);
  cfg.scope = TrainScope::head_only;
  auto ds = linear_argmax_dataset(10, 4, 2, 1);
  CHECK_THROWS_AS(train(net, ds, cfg), ConfigError);
}

TEST_CASE("divergent training aborts with the epoch index") {
  auto ds = linear_argmax_dataset(64, 4, 2, 2);
  auto net = make_mlp<float>({4}, {8}, 2, 3);
  TrainConfig cfg;
  cfg.epochs = 50;
  // Big enough that the first update overflows float storage outright.
  cfg.optimizer = {OptimizerKind::sgd, 1e40, 0.0};
  cfg.seed = 1;
  int diverged_epoch = -1;
  try {
    train(net, ds, cfg);
  } catch (const TrainDivergedError& e) {
    diverged_epoch = e.epoch();
  }
  CHECK(diverged_epoch >= 0);
  CHECK(diverged_epoch < 2);
}

TEST_CASE("fine_tune: zero epochs is a no-op") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::blobs;
  spec.classes = 3;
  spec.grid = 4;
  spec.train_per_class = 40;
  spec.test_per_class = 10;
  spec.seed = 6;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);
  auto net = make_mlp<float>(train_ds.input_shape(), {8}, 3, 2);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.optimizer = {OptimizerKind::sgd, 0.2, 0.9};
  auto [trained, _] = train(net, train_ds, cfg);
  TrainConfig ft;
  ft.epochs = 0;
  ft.scope = TrainScope::head_only;
  auto [same, report] = fine_tune(trained, train_ds, ft);
  CHECK(params_bit_identical(trained, same));
  CHECK(report.parameter_updates == 0);
}

TEST_CASE("head-only fine-tuning never touches non-head parameters") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::blobs;
  spec.classes = 4;
  spec.grid = 5;
  spec.train_per_class = 50;
  spec.test_per_class = 25;
  spec.seed = 9;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);
  auto net = make_mlp<float>(train_ds.input_shape(), {16}, 4, 4);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.optimizer = {OptimizerKind::sgd, 0.3, 0.9};
  auto [trained, _] = train(net, train_ds, cfg);

  // Permute the labels with a fixed cycle; the head should adapt.
  auto permute = [](LabeledDataset<float> ds) {
    for (auto& l : ds.labels) l = (l + 1) % ds.class_count;
    return ds;
  };
  const auto ptrain = permute(train_ds);
  const auto ptest = permute(test_ds);
  const double frozen_acc = accuracy(trained, ptest);

  TrainConfig ft;
  ft.epochs = 8;
  ft.optimizer = {OptimizerKind::sgd, 0.3, 0.9};
  ft.scope = TrainScope::head_only;
  ft.seed = 12;
  auto [adapted, report] = fine_tune(trained, ptrain, ft);
  CHECK(params_bit_identical(trained, adapted, trained.head_index));
  CHECK(accuracy(adapted, ptest) >= frozen_acc);
  CHECK(accuracy(adapted, ptest) > 0.8);  // the cycle is learnable by the head alone
  CHECK(report.parameter_updates > 0);
}

TEST_CASE("full fine-tune with 10% of epochs recovers >= 90% of retrain accuracy") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::blobs;
  spec.classes = 3;
  spec.grid = 4;
  spec.train_per_class = 80;
  spec.test_per_class = 40;
  spec.noise_std = 0.12;
  spec.seed = 13;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);
  auto init = make_mlp<float>(train_ds.input_shape(), {12}, 3, 5);
  TrainConfig full;
  full.epochs = 30;
  full.optimizer = {OptimizerKind::sgd, 0.2, 0.9};
  full.seed = 21;
  auto [retrained, r1] = train(init, train_ds, full);
  const double retrain_acc = accuracy(retrained, test_ds);

  TrainConfig ft = full;
  ft.epochs = 3;
  ft.seed = 22;
  auto [tuned, r2] = fine_tune(retrained, train_ds, ft);
  CHECK(accuracy(tuned, test_ds) >= 0.9 * retrain_acc);
}

TEST_CASE("fine_tune requires a trained network") {
  auto ds = linear_argmax_dataset(20, 4, 2, 3);
  auto net = make_mlp<float>({4}, {4}, 2, 1);
  TrainConfig cfg;
  CHECK_THROWS_AS(fine_tune(net, ds, cfg), ConfigError);
}

TEST_CASE("a small CNN trains end to end") {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.grid = 14;
  spec.train_per_class = 60;
  spec.test_per_class = 20;
  spec.noise_std = 0.1;
  spec.seed = 14;
  auto [flat_train, flat_test] = generate_synthetic<float>(spec);
  auto reshape = [](LabeledDataset<float> ds) {
    for (auto& x : ds.inputs) x.shape = {1, 14, 14};
    return ds;
  };
  const auto train_ds = reshape(flat_train);
  const auto test_ds = reshape(flat_test);
  auto net = make_cnn<float>({1, 14, 14}, 3, 5, 4, 8, 16);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.optimizer = {OptimizerKind::adam, 0.003, 0.0};
  cfg.batch_size = 32;
  cfg.seed = 2;
  auto [trained, report] = train(net, train_ds, cfg);
  CHECK(accuracy(trained, test_ds) > 0.9);  // planted blocks are spatial; conv must learn them
  CHECK(report.history.front().loss > report.history.back().loss);
}

TEST_CASE("cosine schedule ramps through warmup then anneals") {
  OptimizerSpec opt{OptimizerKind::sgd, 1.0, 0.0};
  Schedule sched{ScheduleKind::cosine, 1};
  CHECK(epoch_lr(opt, sched, 0, 30) == doctest::Approx(1.0));  // single warmup epoch
  CHECK(epoch_lr(opt, sched, 1, 30) == doctest::Approx(1.0));
  CHECK(epoch_lr(opt, sched, 29, 30) < 0.01);
  const double mid = epoch_lr(opt, sched, 15, 30);
  CHECK(mid < 1.0);
  CHECK(mid > 0.3);
}
