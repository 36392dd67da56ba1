#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ar3n/geom.hpp"
#include "ar3n/patient.hpp"

namespace ar3n {

/// Dense row-major matrix; rows are batch samples.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols,
                                         static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
};

struct MlpCache {
  std::uint64_t version = 0;
  /// activations[l] is the input to layer l; activations[0] is the net input.
  std::vector<Matrix> activations;
  /// Pre-activations of each layer.
  std::vector<Matrix> pre;
};

struct MlpGrad {
  std::vector<double> params;  // same layout as Mlp::params()
  Matrix input;                // d loss / d input
};

/// Fully connected net, ReLU on hidden layers, linear output. All weights and
/// biases live in one flat array: per layer, W (out x in, row-major) then b.
class Mlp {
 public:
  Mlp() = default;
  /// All parameters zero.
  explicit Mlp(std::vector<int> widths);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp random(std::vector<int> widths, Rng& rng);

  const std::vector<int>& widths() const { return widths_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }

  std::span<const double> params() const { return params_; }
  /// Bumps the version so caches taken before the mutation are rejected.
  std::span<double> mutable_params();
  std::uint64_t version() const { return version_; }

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1];
  }

  Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const;
  std::vector<double> forward(std::span<const double> x) const;
  /// Reverse-mode gradients for output gradient dy. Throws if the cache was
  /// produced by a different parameter state.
  MlpGrad backward(const MlpCache& cache, const Matrix& dy) const;

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

}  // namespace ar3n
