#include <doctest.h>

#include <aev/explain/explainers.hpp>
#include <aev/harness/synthetic.hpp>
#include <aev/nn/train.hpp>

#include <algorithm>
#include <cmath>

using namespace aev;

namespace {

Network<double> linear_net() {
  // o_0 = 0.8 x0 - 1.5 x1 + 0.25 x2, o_1 = 0.
  Network<double> net;
  net.input_shape = {3};
  net.class_count = 2;
  net.layers.emplace_back(Dense<double>{
      Tensor<double>({2, 3}, {0.8, -1.5, 0.25, 0.0, 0.0, 0.0}), Tensor<double>::zeros({2})});
  net.head_index = 0;
  net.trained = true;
  net.finalize();
  return net;
}

/// o_0 has slope 1 for x > 0 and 2 for x < 0; its smoothed gradient has the
/// closed form Phi(x/sigma) + 2 Phi(-x/sigma).
Network<double> kinked_net() {
  Network<double> net;
  net.input_shape = {1};
  net.class_count = 2;
  net.layers.emplace_back(
      Dense<double>{Tensor<double>({2, 1}, {1.0, -1.0}), Tensor<double>::zeros({2})});
  net.layers.emplace_back(ReLU{});
  net.layers.emplace_back(Dense<double>{Tensor<double>({2, 2}, {1.0, -2.0, 0.0, 0.0}),
                                        Tensor<double>::zeros({2})});
  net.head_index = 2;
  net.trained = true;
  net.finalize();
  return net;
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Small trained float net for integration-style properties.
std::pair<Network<float>, LabeledDataset<float>> trained_blobs_net() {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::blobs;
  spec.classes = 3;
  spec.grid = 4;
  spec.train_per_class = 120;
  spec.test_per_class = 30;
  spec.noise_std = 0.15;
  spec.seed = 31;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);
  auto net = make_mlp<float>(train_ds.input_shape(), {12}, 3, 17);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.optimizer = {OptimizerKind::sgd, 0.3, 0.9};
  cfg.seed = 8;
  auto [trained, report] = train(net, train_ds, cfg);
  return {std::move(trained), std::move(test_ds)};
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto midranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double r = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
      i = j + 1;
    }
    return rank;
  };
  const auto ra = midranks(a), rb = midranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("VG on a linear model returns the weights") {
  auto net = linear_net();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::vg;
  cfg.head = Head::logit;
  const auto map = explain_vg(net, Tensor<double>({3}, {0.3, 0.7, -0.2}), 0, cfg);
  CHECK(map.values[0] == 0.8);
  CHECK(map.values[1] == -1.5);
  CHECK(map.values[2] == 0.25);
}

TEST_CASE("VG equals SG in the vanishing-noise limit") {
  auto [net, test_ds] = trained_blobs_net();
  const auto& x = test_ds.inputs[3];
  ExplainerConfig vg;
  vg.kind = ExplainerKind::vg;
  const auto base = explain_vg(net, x, test_ds.labels[3], vg);
  ExplainerConfig sg;
  sg.kind = ExplainerKind::sg;
  sg.sigma = 1e-8;
  sg.k = 1;
  sg.seed = 77;
  const auto smoothed = explain_sg(net, x, test_ds.labels[3], sg);
  for (Index i = 0; i < base.values.size(); ++i)
    CHECK(std::abs(base.values[i] - smoothed.values[i]) < 1e-4);
}

TEST_CASE("VG vanishes at the cancellation stationary point") {
  auto net = cancellation_network<double>();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::vg;
  cfg.head = Head::probability;
  const auto map = explain_vg(net, Tensor<double>({2}, {1.0, 1.0}), 0, cfg);
  CHECK(map.values[0] == 0.0);
  CHECK(map.values[1] == 0.0);
}

TEST_CASE("SG on a linear model is exact for any sigma and budget") {
  auto net = linear_net();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::sg;
  cfg.head = Head::logit;
  for (int k : {1, 7, 32}) {
    for (double sigma : {0.05, 0.5}) {
      cfg.k = k;
      cfg.sigma = sigma;
      cfg.seed = static_cast<std::uint64_t>(k);
      const auto map = explain_sg(net, Tensor<double>({3}, {0.1, 0.9, 0.4}), 0, cfg);
      CHECK(map.values[0] == doctest::Approx(0.8).epsilon(1e-12));
      CHECK(map.values[1] == doctest::Approx(-1.5).epsilon(1e-12));
      CHECK(map.values[2] == doctest::Approx(0.25).epsilon(1e-12));
    }
  }
}

TEST_CASE("SG is reproducible under a fixed seed") {
  auto [net, test_ds] = trained_blobs_net();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::sg;
  cfg.seed = 123;
  const auto a = explain_sg(net, test_ds.inputs[0], test_ds.labels[0], cfg);
  const auto b = explain_sg(net, test_ds.inputs[0], test_ds.labels[0], cfg);
  CHECK(a.values.data == b.values.data);
}

TEST_CASE("SG mean matches the closed-form smoothed gradient within 3 SE") {
  auto net = kinked_net();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::sg;
  cfg.head = Head::logit;
  cfg.sigma = 0.1;
  cfg.k = 10000;
  cfg.seed = 9;
  const double x = 0.05;
  const auto map = explain_sg(net, Tensor<double>({1}, {x}), 0, cfg);
  // Oracle: gradient is 1 on x>0 and 2 on x<0, so the smoothed expectation is
  // Phi(x/sigma) + 2 Phi(-x/sigma); the spread is computable the same way.
  const double p = phi(x / cfg.sigma);
  const double mean = p + 2.0 * (1.0 - p);
  const double second = p + 4.0 * (1.0 - p);
  const double se = std::sqrt((second - mean * mean) / static_cast<double>(cfg.k));
  CHECK(std::abs(map.values[0] - mean) <= 3.0 * se);
}

TEST_CASE("IG on a linear model is exact for any k under the right-sum rule") {
  auto net = linear_net();
  const Tensor<double> x({3}, {0.25, 0.5, 1.0});
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::ig;
  cfg.head = Head::logit;
  for (int k : {1, 3, 8, 17}) {
    cfg.k = k;
    const auto map = explain_ig(net, x, 0, cfg);
    CHECK(map.values[0] == doctest::Approx(0.8 * 0.25).epsilon(1e-12));
    CHECK(map.values[1] == doctest::Approx(-1.5 * 0.5).epsilon(1e-12));
    CHECK(map.values[2] == doctest::Approx(0.25 * 1.0).epsilon(1e-12));
  }
  // The inclusive endpoint form double-counts by (k+1)/k on constant integrands.
  cfg.k = 4;
  cfg.path_rule = PathRule::inclusive_sum;
  const auto inclusive = explain_ig(net, x, 0, cfg);
  CHECK(inclusive.values[0] == doctest::Approx(0.8 * 0.25 * 5.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("IG assigns zero to both features at the cancellation instance") {
  auto net = cancellation_network<double>();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::ig;
  for (int k : {1, 16, 257}) {
    for (PathRule rule : {PathRule::right_sum, PathRule::inclusive_sum}) {
      cfg.k = k;
      cfg.path_rule = rule;
      for (Head head : {Head::logit, Head::probability}) {
        cfg.head = head;
        const auto map = explain_ig(net, Tensor<double>({2}, {1.0, 1.0}), 0, cfg);
        CHECK(map.values[0] == 0.0);
        CHECK(map.values[1] == 0.0);
      }
    }
  }
}

TEST_CASE("IG completeness gap shrinks with k and closes at k=512") {
  auto [net, test_ds] = trained_blobs_net();
  const auto& x = test_ds.inputs[5];
  const int y = test_ds.labels[5];
  const auto baseline = Tensor<float>::zeros(x.shape);
  const double fx = predict(net, x)[y];
  const double fb = predict(net, baseline)[y];
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::ig;
  double prev = 1e9;
  for (int k : {8, 32, 128, 512}) {
    cfg.k = k;
    const auto map = explain_ig(net, x, y, cfg);
    double sum = 0;
    for (Index i = 0; i < map.values.size(); ++i) sum += map.values[i];
    const double gap = std::abs(sum - (fx - fb));
    CHECK(gap <= prev + 1e-7);
    prev = gap;
  }
  CHECK(prev <= 5e-3);
}

TEST_CASE("GxI basics and the single-endpoint IG identity") {
  auto net = linear_net();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::gxi;
  cfg.head = Head::logit;
  const auto at_zero = explain_gxi(net, Tensor<double>({3}, {0.0, 0.0, 0.0}), 0, cfg);
  for (Index i = 0; i < 3; ++i) CHECK(at_zero.values[i] == 0.0);

  const Tensor<double> x({3}, {0.4, -0.6, 1.2});
  const auto gxi = explain_gxi(net, x, 0, cfg);
  CHECK(gxi.values[0] == doctest::Approx(0.8 * 0.4).epsilon(1e-12));
  CHECK(gxi.values[1] == doctest::Approx(-1.5 * -0.6).epsilon(1e-12));

  auto [tnet, test_ds] = trained_blobs_net();
  const auto& tx = test_ds.inputs[7];
  ExplainerConfig g2;
  g2.kind = ExplainerKind::gxi;
  const auto a = explain_gxi(tnet, tx, test_ds.labels[7], g2);
  ExplainerConfig ig1;
  ig1.kind = ExplainerKind::ig;
  ig1.k = 1;  // right-sum k=1 samples only the endpoint at x
  const auto b = explain_ig(tnet, tx, test_ds.labels[7], ig1);
  for (Index i = 0; i < a.values.size(); ++i)
    CHECK(std::abs(a.values[i] - b.values[i]) < 1e-4);
}

TEST_CASE("EG with the explicand as its own pool attributes nothing") {
  auto [net, test_ds] = trained_blobs_net();
  const auto& x = test_ds.inputs[2];
  LabeledDataset<float> pool;
  pool.class_count = test_ds.class_count;
  pool.inputs = {x};
  pool.labels = {0};
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::eg;
  cfg.k = 16;
  const auto map = explain_eg(net, x, test_ds.labels[2], cfg, pool);
  for (Index i = 0; i < map.values.size(); ++i) CHECK(map.values[i] == 0.0);
}

TEST_CASE("EG with a degenerate zero pool matches IG within Monte-Carlo error") {
  auto [net, test_ds] = trained_blobs_net();
  const auto& x = test_ds.inputs[4];
  const int y = test_ds.labels[4];
  LabeledDataset<float> pool;
  pool.class_count = test_ds.class_count;
  pool.inputs = {Tensor<float>::zeros(x.shape)};
  pool.labels = {0};

  ExplainerConfig eg;
  eg.kind = ExplainerKind::eg;
  eg.k = 8192;
  eg.seed = 5;
  const auto map = explain_eg(net, x, y, eg, pool);

  // Independent oracle: fresh uniform path draws, mean and SE per coordinate.
  Rng rng(991);
  const Index d = x.size();
  Eigen::RowVectorXd xs = x.vec().cast<double>().transpose();
  RowMatD points(eg.k, d);
  for (int j = 0; j < eg.k; ++j) points.row(j) = rng.uniform() * xs;
  RowMatD grads = input_gradient_batch(net, std::move(points),
                                       std::vector<int>(static_cast<std::size_t>(eg.k), y),
                                       Head::probability);
  for (Index c = 0; c < d; ++c) grads.col(c) *= xs(c);
  const Eigen::RowVectorXd mean = grads.colwise().mean();
  for (Index c = 0; c < d; ++c) {
    const double var =
        (grads.col(c).array() - mean(c)).square().sum() / static_cast<double>(eg.k - 1);
    const double se = std::sqrt(var / static_cast<double>(eg.k));
    CHECK(std::abs(map.values[c] - mean(c)) <= 3.0 * std::sqrt(2.0) * se + 1e-9);
  }
}

TEST_CASE("EG on a linear model matches w (x - pool mean) within 3 SE") {
  auto net = linear_net();
  Rng rng(44);
  LabeledDataset<double> pool;
  pool.class_count = 2;
  for (int i = 0; i < 50; ++i) {
    Tensor<double> b = Tensor<double>::zeros({3});
    for (Index j = 0; j < 3; ++j) b[j] = rng.uniform();
    pool.inputs.push_back(std::move(b));
    pool.labels.push_back(0);
  }
  Tensor<double> mu = dataset_mean(pool);
  Tensor<double> sd = Tensor<double>::zeros({3});
  for (const auto& b : pool.inputs)
    for (Index j = 0; j < 3; ++j) sd[j] += (b[j] - mu[j]) * (b[j] - mu[j]);
  for (Index j = 0; j < 3; ++j) sd[j] = std::sqrt(sd[j] / 49.0);

  const Tensor<double> x({3}, {0.9, 0.1, 0.6});
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::eg;
  cfg.head = Head::logit;
  cfg.k = 10000;
  cfg.seed = 3;
  const auto map = explain_eg(net, x, 0, cfg, pool);
  const double w[3] = {0.8, -1.5, 0.25};
  for (Index j = 0; j < 3; ++j) {
    const double expected = w[j] * (x[j] - mu[j]);
    const double se = std::abs(w[j]) * sd[j] / std::sqrt(static_cast<double>(cfg.k));
    CHECK(std::abs(map.values[j] - expected) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("SIG collapses to IG as the noise vanishes") {
  auto [net, test_ds] = trained_blobs_net();
  const auto& x = test_ds.inputs[9];
  ExplainerConfig ig;
  ig.kind = ExplainerKind::ig;
  ig.k = 64;
  const auto a = explain_ig(net, x, test_ds.labels[9], ig);
  ExplainerConfig sig = ig;
  sig.kind = ExplainerKind::sig;
  sig.sigma = 1e-9;
  sig.seed = 12;
  const auto b = explain_sig(net, x, test_ds.labels[9], sig);
  for (Index i = 0; i < a.values.size(); ++i)
    CHECK(std::abs(a.values[i] - b.values[i]) < 1e-4);
}

TEST_CASE("SIG noise breaks the path cancellation") {
  auto net = cancellation_network<double>();
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::sig;
  cfg.sigma = 0.3;
  cfg.k = 64;
  cfg.seed = 21;
  const auto map = explain_sig(net, Tensor<double>({2}, {1.0, 1.0}), 0, cfg);
  CHECK(std::abs(map.values[0]) + std::abs(map.values[1]) > 0.0);

  const auto again = explain_sig(net, Tensor<double>({2}, {1.0, 1.0}), 0, cfg);
  CHECK(map.values.data == again.values.data);  // seeded reproducibility
}

TEST_CASE("random explainer: seeding, independence, negligible rank correlation") {
  const Tensor<float> x = Tensor<float>::zeros({28, 28});
  const auto a = explain_random(x, 0, 5);
  const auto b = explain_random(x, 0, 5);
  const auto c = explain_random(x, 0, 6);
  CHECK(a.values.data == b.values.data);
  CHECK(a.values.data != c.values.data);
  for (Index i = 0; i < a.values.size(); ++i) {
    CHECK(a.values[i] > -1.0f);
    CHECK(a.values[i] < 1.0f);
  }

  // Rank correlation against a model-based explainer over 100 inputs.
  auto net = make_mlp<float>({28, 28}, {16}, 4, 2);
  net.trained = true;
  Rng rng(88);
  double total_abs_rho = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<float> input = Tensor<float>::zeros({28, 28});
    for (Index i = 0; i < input.size(); ++i) input[i] = static_cast<float>(rng.uniform());
    ExplainerConfig vg;
    vg.kind = ExplainerKind::vg;
    const auto model_map = explain_vg(net, input, trial % 4, vg);
    const auto rand_map = explain_random(input, trial % 4, 1000 + static_cast<std::uint64_t>(trial));
    std::vector<double> va(model_map.values.data.begin(), model_map.values.data.end());
    std::vector<double> vb(rand_map.values.data.begin(), rand_map.values.data.end());
    total_abs_rho += std::abs(spearman(va, vb));
  }
  CHECK(total_abs_rho / 100.0 < 0.1);
}

TEST_CASE("shared budgets: gradient query counters") {
  auto [net, test_ds] = trained_blobs_net();
  const auto& x = test_ds.inputs[0];
  const int y = test_ds.labels[0];
  auto queries = [&net](auto fn) {
    net.gradient_queries.reset();
    fn();
    return net.gradient_queries.count();
  };
  ExplainerConfig cfg;
  cfg.k = 32;
  cfg.sigma = 0.15;

  cfg.kind = ExplainerKind::vg;
  CHECK(queries([&] { explain_vg(net, x, y, cfg); }) == 1);
  cfg.kind = ExplainerKind::gxi;
  CHECK(queries([&] { explain_gxi(net, x, y, cfg); }) == 1);
  cfg.kind = ExplainerKind::sg;
  CHECK(queries([&] { explain_sg(net, x, y, cfg); }) == 32);
  cfg.kind = ExplainerKind::ig;
  CHECK(queries([&] { explain_ig(net, x, y, cfg); }) == 32);
  cfg.path_rule = PathRule::inclusive_sum;
  CHECK(queries([&] { explain_ig(net, x, y, cfg); }) == 33);  // inclusive sum
  cfg.path_rule = PathRule::right_sum;
  cfg.kind = ExplainerKind::sig;
  CHECK(queries([&] { explain_sig(net, x, y, cfg); }) == 32);
  cfg.kind = ExplainerKind::eg;
  LabeledDataset<float> pool;
  pool.class_count = test_ds.class_count;
  pool.inputs = {Tensor<float>::zeros(x.shape)};
  pool.labels = {0};
  CHECK(queries([&] { explain_eg(net, x, y, cfg, pool); }) == 32);
}

TEST_CASE("explain_set output does not depend on the thread count") {
  auto [net, test_ds] = trained_blobs_net();
  std::vector<int> indices{0, 3, 5, 8, 11, 14};
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::sig;
  cfg.k = 8;
  cfg.sigma = 0.2;
  cfg.seed = 31;
  const Tensor<float> mean = dataset_mean(test_ds);
  ExplainContext<float> ctx;
  ctx.dataset_mean = &mean;
  const auto serial = explain_set(net, test_ds, indices, cfg, ctx, 1);
  const auto threaded = explain_set(net, test_ds, indices, cfg, ctx, 4);
  REQUIRE(serial.size() == threaded.size());
  for (std::size_t i = 0; i < serial.size(); ++i)
    CHECK(serial[i].values.data == threaded[i].values.data);
}

TEST_CASE("EG is deterministic under a fixed seed") {
  auto [net, test_ds] = trained_blobs_net();
  LabeledDataset<float> pool = test_ds;
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::eg;
  cfg.k = 16;
  cfg.seed = 404;
  const auto a = explain_eg(net, test_ds.inputs[1], test_ds.labels[1], cfg, pool);
  const auto b = explain_eg(net, test_ds.inputs[1], test_ds.labels[1], cfg, pool);
  CHECK(a.values.data == b.values.data);
}

TEST_CASE("explainer config validation") {
  ExplainerConfig cfg;
  cfg.kind = ExplainerKind::sg;
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.kind = ExplainerKind::ig;
  cfg.baseline.kind = BaselineKind::training_samples;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExplainerConfig{};
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
