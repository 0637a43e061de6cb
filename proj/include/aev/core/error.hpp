#pragma once

#include <stdexcept>
#include <string>

namespace aev {

/// Base class for all library errors. `category()` maps to CLI exit codes.
class Error : public std::runtime_error {
public:
  enum class Category { config, shape, numeric, format, io, mismatch };

  Error(Category cat, std::string msg) : std::runtime_error(std::move(msg)), category_(cat) {}
  Category category() const noexcept { return category_; }

private:
  Category category_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(std::string msg) : Error(Category::config, std::move(msg)) {}
};

/// Layer input/output shape violation; carries the offending layer index.
class ShapeError : public Error {
public:
  ShapeError(int layer_index, std::string msg)
      : Error(Category::shape, "layer " + std::to_string(layer_index) + ": " + msg),
        layer_index_(layer_index) {}
  explicit ShapeError(std::string msg) : Error(Category::shape, std::move(msg)), layer_index_(-1) {}
  int layer_index() const noexcept { return layer_index_; }

private:
  int layer_index_;
};

/// NaN/Inf surfaced by a public operation; layer_index = -1 when unknown.
class NonFiniteError : public Error {
public:
  explicit NonFiniteError(std::string msg, int layer_index = -1)
      : Error(Category::numeric, std::move(msg)), layer_index_(layer_index) {}
  int layer_index() const noexcept { return layer_index_; }

private:
  int layer_index_;
};

/// Malformed persisted file; offset is the first offending byte when known.
class FormatError : public Error {
public:
  explicit FormatError(std::string msg, long long offset = -1)
      : Error(Category::format, offset >= 0 ? msg + " (offset " + std::to_string(offset) + ")"
                                            : std::move(msg)),
        offset_(offset) {}
  long long offset() const noexcept { return offset_; }

private:
  long long offset_;
};

class IoError : public Error {
public:
  explicit IoError(std::string msg) : Error(Category::io, std::move(msg)) {}
};

/// Manifest/dataset/checkpoint hash disagreement: refuse to mix runs.
class MismatchError : public Error {
public:
  explicit MismatchError(std::string msg) : Error(Category::mismatch, std::move(msg)) {}
};

}  // namespace aev
