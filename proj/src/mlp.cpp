#include "ar3n/mlp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace ar3n {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)), version_(next_version()) {
  if (widths_.size() < 2) throw Error("mlp needs at least an input and an output width");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) throw Error("mlp widths must be positive");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<int> widths, Rng& rng) {
  Mlp net(std::move(widths));
  for (int l = 0; l < net.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.widths_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t end = net.bias_offset(l) + net.widths_[l + 1];
    for (std::size_t i = net.weight_offset(l); i < end; ++i) net.params_[i] = dist(rng);
  }
  return net;
}

std::span<double> Mlp::mutable_params() {
  version_ = next_version();
  return params_;
}

Matrix Mlp::forward(const Matrix& x, MlpCache* cache) const {
  if (x.cols != input_width()) throw Error("mlp input width mismatch");
  if (cache) {
    cache->version = version_;
    cache->activations.assign(1, x);
    cache->pre.clear();
  }
  Matrix a = x;
  for (int l = 0; l < layer_count(); ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    Matrix z(a.rows, out);
    for (int r = 0; r < a.rows; ++r) {
      const double* xr = a.data.data() + static_cast<std::size_t>(r) * in;
      double* zr = z.data.data() + static_cast<std::size_t>(r) * out;
      for (int o = 0; o < out; ++o) {
        const double* wo = w + static_cast<std::size_t>(o) * in;
        double acc = b[o];
        for (int i = 0; i < in; ++i) acc += wo[i] * xr[i];
        zr[o] = acc;
      }
    }
    const bool hidden = l + 1 < layer_count();
    if (cache) cache->pre.push_back(z);
    if (hidden) {
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
      if (cache) cache->activations.push_back(z);
    }
    a = std::move(z);
  }
  return a;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Matrix m(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), m.data.begin());
  return forward(m).data;
}

MlpGrad Mlp::backward(const MlpCache& cache, const Matrix& dy) const {
  if (cache.version != version_ || static_cast<int>(cache.pre.size()) != layer_count())
    throw Error("stale mlp cache: parameters changed since the forward pass");
  if (dy.cols != output_width() || dy.rows != cache.activations.front().rows)
    throw Error("mlp output gradient shape mismatch");

  MlpGrad g;
  g.params.assign(params_.size(), 0.0);
  Matrix dz = dy;
  for (int l = layer_count() - 1; l >= 0; --l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const Matrix& a = cache.activations[l];
    const double* w = params_.data() + weight_offset(l);
    double* gw = g.params.data() + weight_offset(l);
    double* gb = g.params.data() + bias_offset(l);
    Matrix da(dz.rows, in);
    for (int r = 0; r < dz.rows; ++r) {
      const double* dzr = dz.data.data() + static_cast<std::size_t>(r) * out;
      const double* ar = a.data.data() + static_cast<std::size_t>(r) * in;
      double* dar = da.data.data() + static_cast<std::size_t>(r) * in;
      for (int o = 0; o < out; ++o) {
        const double d = dzr[o];
        if (d == 0.0) continue;
        gb[o] += d;
        double* gwo = gw + static_cast<std::size_t>(o) * in;
        const double* wo = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) {
          gwo[i] += d * ar[i];
          dar[i] += d * wo[i];
        }
      }
    }
    if (l > 0) {
      const Matrix& z = cache.pre[l - 1];
      for (std::size_t k = 0; k < da.data.size(); ++k)
        if (z.data[k] <= 0.0) da.data[k] = 0.0;
    }
    dz = std::move(da);
  }
  g.input = std::move(dz);
  return g;
}

}  // namespace ar3n
