#include <doctest.h>

#include <aev/harness/mnist.hpp>
#include <aev/harness/synthetic.hpp>
#include <aev/nn/train.hpp>

#include <filesystem>
#include <fstream>

using namespace aev;

namespace {

namespace fs = std::filesystem;

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(static_cast<std::uint8_t>(x >> 24));
  v.push_back(static_cast<std::uint8_t>(x >> 16));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
  v.push_back(static_cast<std::uint8_t>(x));
}

std::vector<std::uint8_t> tiny_images(std::uint32_t count, std::uint32_t magic = 0x803) {
  std::vector<std::uint8_t> v;
  push_be32(v, magic);
  push_be32(v, count);
  push_be32(v, 2);
  push_be32(v, 2);
  for (std::uint32_t i = 0; i < count * 4; ++i)
    v.push_back(static_cast<std::uint8_t>(i == 3 ? 255 : i));
  return v;
}

std::vector<std::uint8_t> tiny_labels(std::uint32_t count, std::uint32_t magic = 0x801) {
  std::vector<std::uint8_t> v;
  push_be32(v, magic);
  push_be32(v, count);
  for (std::uint32_t i = 0; i < count; ++i) v.push_back(static_cast<std::uint8_t>(i % 10));
  return v;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("idx parsing: tiny well-formed files, 255 scales to exactly 1.0") {
  const auto dir = fresh_dir("aev_idx_ok");
  write_bytes(dir / "train-images-idx3-ubyte", tiny_images(3));
  write_bytes(dir / "train-labels-idx1-ubyte", tiny_labels(3));
  write_bytes(dir / "t10k-images-idx3-ubyte", tiny_images(2));
  write_bytes(dir / "t10k-labels-idx1-ubyte", tiny_labels(2));
  auto [train_ds, test_ds] = load_mnist<float>(dir.string());
  CHECK(train_ds.size() == 3);
  CHECK(test_ds.size() == 2);
  CHECK(train_ds.input_shape() == Shape{1, 2, 2});
  CHECK(train_ds.inputs[0][3] == 1.0f);  // byte 255 -> exactly 1.0
  CHECK(train_ds.labels[1] == 1);
}

TEST_CASE("idx parsing: bad magic names the offset") {
  const auto dir = fresh_dir("aev_idx_magic");
  write_bytes(dir / "train-images-idx3-ubyte", tiny_images(2, 0x804));
  try {
    io::read_idx_images((dir / "train-images-idx3-ubyte").string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
}

TEST_CASE("idx parsing: truncation and count mismatch") {
  const auto dir = fresh_dir("aev_idx_bad");
  auto img = tiny_images(3);
  img.resize(img.size() - 2);
  write_bytes(dir / "train-images-idx3-ubyte", img);
  CHECK_THROWS_AS(io::read_idx_images((dir / "train-images-idx3-ubyte").string()), FormatError);

  write_bytes(dir / "train-images-idx3-ubyte", tiny_images(3));
  write_bytes(dir / "train-labels-idx1-ubyte", tiny_labels(4));
  write_bytes(dir / "t10k-images-idx3-ubyte", tiny_images(2));
  write_bytes(dir / "t10k-labels-idx1-ubyte", tiny_labels(2));
  CHECK_THROWS_AS(load_mnist<float>(dir.string()), FormatError);
}

TEST_CASE("bundled MNIST loads with the standard split") {
  const auto dir = find_mnist_dir();
  auto [train_ds, test_ds] = load_mnist<float>(dir);
  CHECK(train_ds.size() == 60000);
  CHECK(test_ds.size() == 10000);
  CHECK(train_ds.input_shape() == Shape{1, 28, 28});
  CHECK(train_ds.class_count == 10);
  float mx = 0.0f, mn = 1.0f;
  for (int i = 0; i < 50; ++i)
    for (Index j = 0; j < 784; ++j) {
      mx = std::max(mx, train_ds.inputs[static_cast<std::size_t>(i)][j]);
      mn = std::min(mn, train_ds.inputs[static_cast<std::size_t>(i)][j]);
    }
  CHECK(mx == 1.0f);  // saturated strokes map to exactly 1
  CHECK(mn == 0.0f);
}

TEST_CASE("planted evidence: p_on=1 with no noise activates S2 for the pair only") {
  SyntheticSpec spec;
  spec.train_per_class = 50;
  spec.test_per_class = 10;
  spec.p_on = 1.0;
  spec.noise_std = 0.0;
  spec.seed = 3;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);
  const auto shared = spec.shared_block();
  for (std::size_t i = 0; i < train_ds.size(); ++i) {
    const bool sharing = train_ds.labels[i] == spec.shared_class_a ||
                         train_ds.labels[i] == spec.shared_class_b;
    for (int px : shared) CHECK(train_ds.inputs[i][px] == (sharing ? 1.0f : 0.0f));
  }
}

TEST_CASE("planted evidence statistics match the configured (gamma, p, alpha)") {
  SyntheticSpec spec;
  spec.train_per_class = 2000;  // 10^4 samples over 5 classes
  spec.test_per_class = 10;
  spec.p_on = 0.8;
  spec.noise_std = 0.05;
  spec.seed = 11;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);
  const auto d = spec.shared_distribution();
  const auto shared = spec.shared_block();
  const auto n = static_cast<double>(train_ds.size());

  auto s2_active = [&](std::size_t i) {
    double mean = 0;
    for (int px : shared) mean += train_ds.inputs[i][px];
    return mean / static_cast<double>(shared.size()) > 0.5;
  };
  double n_y = 0, n_s2 = 0, n_both = 0;
  for (std::size_t i = 0; i < train_ds.size(); ++i) {
    const bool is_y = train_ds.labels[i] == spec.shared_class_a;
    const bool s2 = s2_active(i);
    n_y += is_y;
    n_s2 += s2;
    n_both += is_y && s2;
  }
  auto binom3sigma = [&](double p) { return 3.0 * std::sqrt(p * (1.0 - p) / n); };
  CHECK(std::abs(n_y / n - d.gamma) <= binom3sigma(d.gamma));
  CHECK(std::abs(n_s2 / n - d.p) <= binom3sigma(d.p));
  const double alpha_hat = n_both / n_s2;
  CHECK(std::abs(alpha_hat - d.alpha) <= 3.0 * std::sqrt(d.alpha * (1 - d.alpha) / n_s2));
  CHECK(d.p > d.gamma);  // the theorem-1 precondition holds by construction
}

TEST_CASE("a linear probe on the primary blocks alone is near-perfect") {
  SyntheticSpec spec;
  spec.train_per_class = 200;
  spec.test_per_class = 50;
  spec.p_on = 0.8;
  spec.noise_std = 0.1;
  spec.seed = 21;
  auto [train_ds, test_ds] = generate_synthetic<float>(spec);

  std::vector<int> probe_features;
  for (int c = 0; c < spec.classes; ++c)
    for (int px : spec.primary_block(c)) probe_features.push_back(px);

  auto project = [&](const LabeledDataset<float>& ds) {
    LabeledDataset<float> out;
    out.class_count = ds.class_count;
    out.split = ds.split;
    out.labels = ds.labels;
    for (const auto& x : ds.inputs) {
      Tensor<float> v = Tensor<float>::zeros({static_cast<Index>(probe_features.size())});
      for (std::size_t j = 0; j < probe_features.size(); ++j)
        v[static_cast<Index>(j)] = x[probe_features[j]];
      out.inputs.push_back(std::move(v));
    }
    return out;
  };
  const auto ptrain = project(train_ds);
  const auto ptest = project(test_ds);
  auto probe = make_mlp<float>(ptrain.input_shape(), {}, spec.classes, 5);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.optimizer = {OptimizerKind::sgd, 0.5, 0.9};
  auto [trained, report] = train(probe, ptrain, cfg);
  CHECK(accuracy(trained, ptest) >= 0.99);
}

TEST_CASE("dataset hash is stable under the generator seed and sensitive to it") {
  SyntheticSpec spec;
  spec.train_per_class = 30;
  spec.test_per_class = 10;
  spec.seed = 9;
  auto [a_train, a_test] = generate_synthetic<float>(spec);
  auto [b_train, b_test] = generate_synthetic<float>(spec);
  CHECK(a_train.hash() == b_train.hash());
  CHECK(a_test.hash() == b_test.hash());
  spec.seed = 10;
  auto [c_train, c_test] = generate_synthetic<float>(spec);
  CHECK(a_train.hash() != c_train.hash());
}

TEST_CASE("overlapping blocks are rejected") {
  SyntheticSpec spec;
  spec.grid = 6;   // five 2x2 primary blocks cannot fit one row of 6
  CHECK_THROWS_AS(generate_synthetic<float>(spec), ConfigError);
}
