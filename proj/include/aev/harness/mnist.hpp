#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "aev/core/dataset.hpp"
#include "aev/io/idx.hpp"

namespace aev {

namespace detail {

/// Accept either the plain IDX file or its .gz twin.
inline std::string idx_path(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  const std::string plain = dir + "/" + name;
  if (fs::exists(plain)) return plain;
  if (fs::exists(plain + ".gz")) return plain + ".gz";
  throw IoError("missing " + plain + "[.gz]");
}

template <typename Scalar>
LabeledDataset<Scalar> idx_to_dataset(const io::IdxImages& img, const io::IdxLabels& lab,
                                      std::string split) {
  if (img.count != lab.count)
    throw FormatError("image count " + std::to_string(img.count) + " != label count " +
                      std::to_string(lab.count));
  LabeledDataset<Scalar> ds;
  ds.class_count = 10;
  ds.split = std::move(split);
  const std::size_t px = static_cast<std::size_t>(img.rows) * img.cols;
  ds.inputs.reserve(img.count);
  ds.labels.reserve(img.count);
  for (std::uint32_t i = 0; i < img.count; ++i) {
    Tensor<Scalar> x = Tensor<Scalar>::zeros(
        {1, static_cast<Index>(img.rows), static_cast<Index>(img.cols)});
    const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(i) * px;
    for (std::size_t j = 0; j < px; ++j)
      x[static_cast<Index>(j)] = static_cast<Scalar>(row[j]) / Scalar(255);
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(static_cast<int>(lab.labels[i]));
  }
  ds.validate();
  return ds;
}

}  // namespace detail

/// Load the standard four-file MNIST split from `dir`, pixels scaled to
/// [0,1] (byte 255 maps to exactly 1.0). Shapes are [1,28,28].
template <typename Scalar>
std::pair<LabeledDataset<Scalar>, LabeledDataset<Scalar>> load_mnist(const std::string& dir) {
  const auto train_img = io::read_idx_images(detail::idx_path(dir, "train-images-idx3-ubyte"));
  const auto train_lab = io::read_idx_labels(detail::idx_path(dir, "train-labels-idx1-ubyte"));
  const auto test_img = io::read_idx_images(detail::idx_path(dir, "t10k-images-idx3-ubyte"));
  const auto test_lab = io::read_idx_labels(detail::idx_path(dir, "t10k-labels-idx1-ubyte"));
  return {detail::idx_to_dataset<Scalar>(train_img, train_lab, "train"),
          detail::idx_to_dataset<Scalar>(test_img, test_lab, "test")};
}

/// Conventional locations for the bundled MNIST files, checked in order:
/// $AEV_MNIST_DIR, ./data/mnist, <source root>/data/mnist.
inline std::string find_mnist_dir() {
  namespace fs = std::filesystem;
  if (const char* env = std::getenv("AEV_MNIST_DIR")) return env;
  for (const char* cand : {"data/mnist", "../data/mnist", "../../data/mnist"})
    if (fs::exists(std::string(cand) + "/train-images-idx3-ubyte") ||
        fs::exists(std::string(cand) + "/train-images-idx3-ubyte.gz"))
      return cand;
  throw IoError("MNIST not found: set AEV_MNIST_DIR or place the IDX files under data/mnist");
}

}  // namespace aev
