// Copyright 2026 The gripforce Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRIPFORCE_MLP_HPP_
#define GRIPFORCE_MLP_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gripforce/rng.hpp"

// Dense multilayer perceptron with hand-written backpropagation. The
// networks here are tiny (tens of units), so everything is plain loops over
// flat parameter storage; gradients accumulate into a parallel flat vector
// so the optimizer and finite-difference checks can treat parameters as one
// vector.

namespace gripforce {

class Mlp {
 public:
  // Hidden layers use ReLU; the final layer is linear unless relu_output is
  // set (used when the network is the shared trunk of two linear heads).
  explicit Mlp(std::vector<int> sizes, bool relu_output = false)
      : sizes_(std::move(sizes)), relu_output_(relu_output) {
    if (sizes_.size() < 2) {
      throw std::invalid_argument("Mlp needs at least input and output sizes");
    }
    for (int s : sizes_) {
      if (s < 1) throw std::invalid_argument("Mlp layer sizes must be >= 1");
    }
    offsets_.resize(layer_count());
    int total = 0;
    for (int l = 0; l < layer_count(); ++l) {
      offsets_[l] = total;
      total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);
    grads_.assign(total, 0.0);
  }

  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int param_count() const { return static_cast<int>(params_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }

  // Scaled-normal initialization: hidden weights ~ N(0, sqrt(2/fan_in)),
  // biases zero. The output layer uses out_scale/sqrt(fan_in), which lets a
  // policy head start near zero mean.
  void init_he(Rng& rng, double out_scale = 1.0) {
    for (int l = 0; l < layer_count(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      const bool last = l == layer_count() - 1;
      const double std = last ? out_scale / std::sqrt(static_cast<double>(in))
                              : std::sqrt(2.0 / static_cast<double>(in));
      double* w = weights(l);
      for (int i = 0; i < out * in; ++i) w[i] = rng.normal(0.0, std);
      double* b = biases(l);
      for (int i = 0; i < out; ++i) b[i] = 0.0;
    }
  }

  struct Cache {
    // acts[0] is the input, acts[l+1] the post-activation output of layer l.
    std::vector<std::vector<double>> acts;
  };

  std::vector<double> forward(const std::vector<double>& x,
                              Cache* cache = nullptr) const {
    if (static_cast<int>(x.size()) != in_dim()) {
      throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    }
    if (cache != nullptr) {
      cache->acts.clear();
      cache->acts.push_back(x);
    }
    std::vector<double> a = x;
    for (int l = 0; l < layer_count(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      const double* w = weights(l);
      const double* b = biases(l);
      std::vector<double> z(out);
      for (int i = 0; i < out; ++i) {
        double acc = b[i];
        const double* row = w + static_cast<std::ptrdiff_t>(i) * in;
        for (int j = 0; j < in; ++j) acc += row[j] * a[j];
        z[i] = acc;
      }
      if (l < layer_count() - 1 || relu_output_) {
        for (double& v : z) v = v > 0.0 ? v : 0.0;
      }
      a = std::move(z);
      if (cache != nullptr) cache->acts.push_back(a);
    }
    return a;
  }

  // Backpropagates dL/dy through the cached forward pass, accumulating
  // parameter gradients; returns dL/dx.
  std::vector<double> backward(const Cache& cache, std::vector<double> dy) {
    if (cache.acts.size() != sizes_.size()) {
      throw std::invalid_argument("Mlp::backward: cache does not match network");
    }
    if (static_cast<int>(dy.size()) != out_dim()) {
      throw std::invalid_argument("Mlp::backward: output dimension mismatch");
    }
    for (int l = layer_count() - 1; l >= 0; --l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      if (l < layer_count() - 1 || relu_output_) {
        const std::vector<double>& act = cache.acts[l + 1];
        for (int i = 0; i < out; ++i) {
          if (!(act[i] > 0.0)) dy[i] = 0.0;
        }
      }
      const std::vector<double>& a_in = cache.acts[l];
      double* gw = grad_weights(l);
      double* gb = grad_biases(l);
      for (int i = 0; i < out; ++i) {
        double* grow = gw + static_cast<std::ptrdiff_t>(i) * in;
        for (int j = 0; j < in; ++j) grow[j] += dy[i] * a_in[j];
        gb[i] += dy[i];
      }
      const double* w = weights(l);
      std::vector<double> dx(in, 0.0);
      for (int i = 0; i < out; ++i) {
        const double* row = w + static_cast<std::ptrdiff_t>(i) * in;
        for (int j = 0; j < in; ++j) dx[j] += row[j] * dy[i];
      }
      dy = std::move(dx);
    }
    return dy;
  }

  void zero_grads() { grads_.assign(grads_.size(), 0.0); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& grads() { return grads_; }
  const std::vector<double>& grads() const { return grads_; }

 private:
  double* weights(int l) { return params_.data() + offsets_[l]; }
  const double* weights(int l) const { return params_.data() + offsets_[l]; }
  double* biases(int l) {
    return params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l];
  }
  const double* biases(int l) const {
    return params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l];
  }
  double* grad_weights(int l) { return grads_.data() + offsets_[l]; }
  double* grad_biases(int l) {
    return grads_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l];
  }

  std::vector<int> sizes_;
  bool relu_output_ = false;
  std::vector<int> offsets_;
  std::vector<double> params_;
  std::vector<double> grads_;
};

}  // namespace gripforce

#endif  // GRIPFORCE_MLP_HPP_
