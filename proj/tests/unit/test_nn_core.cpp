#include <doctest.h>

#include <aev/core/rng.hpp>
#include <aev/nn/network.hpp>
#include <aev/nn/train.hpp>

#include <cmath>
#include <vector>

using namespace aev;

namespace {

// Independent forward oracle: nested loops in long double, no Eigen.
std::vector<long double> naive_mlp_forward(const Network<double>& net,
                                           const std::vector<double>& x) {
  std::vector<long double> act(x.begin(), x.end());
  for (const auto& layer : net.layers) {
    if (const auto* d = std::get_if<Dense<double>>(&layer)) {
      const Index out = d->weights.shape[0], in = d->weights.shape[1];
      std::vector<long double> next(static_cast<std::size_t>(out), 0.0L);
      for (Index o = 0; o < out; ++o) {
        long double acc = d->bias[o];
        for (Index i = 0; i < in; ++i)
          acc += static_cast<long double>(d->weights[o * in + i]) * act[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(o)] = acc;
      }
      act = std::move(next);
    } else if (std::holds_alternative<ReLU>(layer)) {
      for (auto& v : act) v = v > 0 ? v : 0;
    }
    // Flatten is a no-op on the flat vector.
  }
  return act;
}

Network<double> two_layer_identity_head() {
  // Dense [[-1]] -> ReLU -> Dense head (1 -> 2).
  Network<double> net;
  net.input_shape = {1};
  net.class_count = 2;
  net.layers.emplace_back(Dense<double>{Tensor<double>({1, 1}, {-1.0}), Tensor<double>::zeros({1})});
  net.layers.emplace_back(ReLU{});
  net.layers.emplace_back(
      Dense<double>{Tensor<double>({2, 1}, {5.0, -2.0}), Tensor<double>({2}, {0.3, 0.1})});
  net.head_index = 2;
  net.finalize();
  return net;
}

}  // namespace

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor<float>({2, 3}, std::vector<float>(5)), ShapeError);
  auto t = Tensor<float>::zeros({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.finite());
  t[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(t.finite());
}

TEST_CASE("forward: identity dense") {
  Network<double> net;
  net.input_shape = {2};
  net.class_count = 2;
  net.layers.emplace_back(
      Dense<double>{Tensor<double>({2, 2}, {1, 0, 0, 1}), Tensor<double>::zeros({2})});
  net.head_index = 0;
  net.finalize();
  const auto logits = forward(net, Tensor<double>({2}, {3, 5}));
  CHECK(logits[0] == doctest::Approx(3.0));
  CHECK(logits[1] == doctest::Approx(5.0));
}

TEST_CASE("forward: dead unit feeds the head its bias") {
  auto net = two_layer_identity_head();
  const auto logits = forward(net, Tensor<double>({1}, {2.0}));  // ReLU(-2) = 0
  CHECK(logits[0] == doctest::Approx(0.3));
  CHECK(logits[1] == doctest::Approx(0.1));
}

TEST_CASE("forward: shape mismatch names the layer") {
  auto net = two_layer_identity_head();
  CHECK_THROWS_AS(forward(net, Tensor<double>({2}, {1.0, 2.0})), ShapeError);
}

TEST_CASE("forward matches naive loop oracle on a random MLP") {
  auto net = make_mlp<double>({6}, {5, 4}, 3, 99);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    const auto logits = forward(net, Tensor<double>({6}, x));
    const auto expect = naive_mlp_forward(net, x);
    for (Index i = 0; i < 3; ++i) {
      const double e = static_cast<double>(expect[static_cast<std::size_t>(i)]);
      CHECK(std::abs(logits[i] - e) <= 1e-6 * std::max(1.0, std::abs(e)));
    }
  }
}

TEST_CASE("predict: uniform and closed-form softmax") {
  Network<double> net;
  net.input_shape = {3};
  net.class_count = 3;
  net.layers.emplace_back(Dense<double>{
      Tensor<double>({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Tensor<double>::zeros({3})});
  net.head_index = 0;
  net.finalize();
  const auto uniform = predict(net, Tensor<double>({3}, {0, 0, 0}));
  for (Index i = 0; i < 3; ++i) CHECK(uniform[i] == doctest::Approx(1.0 / 3.0));

  Network<double> net2;
  net2.input_shape = {2};
  net2.class_count = 2;
  net2.layers.emplace_back(
      Dense<double>{Tensor<double>({2, 2}, {1, 0, 0, 1}), Tensor<double>::zeros({2})});
  net2.head_index = 0;
  net2.finalize();
  const auto p = predict(net2, Tensor<double>({2}, {std::log(2.0), 0.0}));
  CHECK(p[0] == doctest::Approx(2.0 / 3.0));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("predict is softmax of forward") {
  auto net = make_mlp<double>({5}, {7}, 3, 12);
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    const Tensor<double> xt({5}, x);
    const auto logits = forward(net, xt);
    const auto probs = predict(net, xt);
    double denom = 0;
    const double mx = *std::max_element(logits.data.begin(), logits.data.end());
    for (Index i = 0; i < 3; ++i) denom += std::exp(logits[i] - mx);
    for (Index i = 0; i < 3; ++i)
      CHECK(std::abs(probs[i] - std::exp(logits[i] - mx) / denom) < 1e-6);
  }
}

TEST_CASE("predict: matches exp-normalize oracle and sums to one") {
  auto net = make_mlp<double>({6}, {8}, 4, 4);
  Rng rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-3.0, 3.0);
    const Tensor<double> xt({6}, x);
    const auto logits = forward(net, xt);
    const auto probs = predict(net, xt);
    // Oracle: direct exp/sum in extended precision with max subtraction.
    long double mx = logits[0];
    for (Index i = 1; i < 4; ++i) mx = std::max<long double>(mx, logits[i]);
    long double denom = 0.0L;
    for (Index i = 0; i < 4; ++i) denom += std::exp(static_cast<long double>(logits[i]) - mx);
    long double sum = 0.0L;
    for (Index i = 0; i < 4; ++i) {
      const long double e = std::exp(static_cast<long double>(logits[i]) - mx) / denom;
      CHECK(std::abs(probs[i] - static_cast<double>(e)) < 1e-9);
      CHECK(probs[i] > 0.0);
      CHECK(probs[i] <= 1.0);
      sum += probs[i];
    }
    CHECK(std::abs(static_cast<double>(sum) - 1.0) < 1e-6);
  }
}
