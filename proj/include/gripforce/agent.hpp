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

#ifndef GRIPFORCE_AGENT_HPP_
#define GRIPFORCE_AGENT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gripforce/mlp.hpp"
#include "gripforce/rng.hpp"

// Diagonal-Gaussian MLP policy with a value function, either as two separate
// networks (default) or as one shared trunk with two linear heads. The action
// log-std is a learned, state-independent parameter. All gradients are
// computed analytically.

namespace gripforce {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

class GaussianPolicy {
 public:
  GaussianPolicy(int obs_dim, int hidden = 50, bool shared_trunk = false)
      : obs_dim_(obs_dim),
        hidden_(hidden),
        shared_trunk_(shared_trunk),
        pi_(shared_trunk ? std::vector<int>{1, 1}
                         : std::vector<int>{obs_dim, hidden, hidden, 2}),
        vf_(shared_trunk ? std::vector<int>{1, 1}
                         : std::vector<int>{obs_dim, hidden, hidden, 1}),
        trunk_(shared_trunk ? std::vector<int>{obs_dim, hidden, hidden}
                            : std::vector<int>{1, 1},
               /*relu_output=*/true),
        mean_head_(shared_trunk ? std::vector<int>{hidden, 2}
                                : std::vector<int>{1, 1}),
        value_head_(shared_trunk ? std::vector<int>{hidden, 1}
                                 : std::vector<int>{1, 1}) {
    if (obs_dim < 1 || hidden < 1) {
      throw std::invalid_argument("GaussianPolicy: dimensions must be >= 1");
    }
    log_std_ = {0.0, 0.0};
    log_std_grad_ = {0.0, 0.0};
  }

  int obs_dim() const { return obs_dim_; }
  int hidden() const { return hidden_; }
  bool shared_trunk() const { return shared_trunk_; }

  // Policy-mean head starts near zero so early rollouts are gentle; the rest
  // is plain scaled-normal initialization, all drawn from the given stream.
  void init_weights(Rng& rng) {
    if (shared_trunk_) {
      trunk_.init_he(rng);
      mean_head_.init_he(rng, 0.01);
      value_head_.init_he(rng, 1.0);
    } else {
      pi_.init_he(rng, 0.01);
      vf_.init_he(rng, 1.0);
    }
    log_std_ = {0.0, 0.0};
  }

  // --- inference -----------------------------------------------------------

  std::array<double, 2> mean(const std::vector<double>& obs) const {
    std::vector<double> m;
    if (shared_trunk_) {
      m = mean_head_.forward(trunk_.forward(obs));
    } else {
      m = pi_.forward(obs);
    }
    return {m[0], m[1]};
  }

  double value(const std::vector<double>& obs) const {
    if (shared_trunk_) {
      return value_head_.forward(trunk_.forward(obs))[0];
    }
    return vf_.forward(obs)[0];
  }

  const std::array<double, 2>& log_std() const { return log_std_; }

  std::array<double, 2> sample_action(const std::vector<double>& obs, Rng& rng,
                                      std::array<double, 2>* mean_out =
                                          nullptr) const {
    const std::array<double, 2> mu = mean(obs);
    if (mean_out != nullptr) *mean_out = mu;
    std::array<double, 2> a;
    for (int i = 0; i < 2; ++i) {
      a[i] = mu[i] + std::exp(log_std_[i]) * rng.normal();
    }
    return a;
  }

  double log_prob(const std::array<double, 2>& mu,
                  const std::array<double, 2>& action) const {
    double lp = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double sigma = std::exp(log_std_[i]);
      const double z = (action[i] - mu[i]) / sigma;
      lp += -0.5 * z * z - log_std_[i] - 0.5 * kLogTwoPi;
    }
    return lp;
  }

  double entropy() const {
    double e = 0.0;
    for (int i = 0; i < 2; ++i) {
      e += log_std_[i] + 0.5 * (1.0 + kLogTwoPi);
    }
    return e;
  }

  // --- training pass -------------------------------------------------------

  struct Caches {
    Mlp::Cache pi, vf;                       // separate networks
    Mlp::Cache trunk, mean_head, value_head;  // shared trunk
  };

  struct EvalResult {
    std::array<double, 2> mean{};
    double value = 0.0;
    double log_prob = 0.0;
    double entropy = 0.0;
  };

  EvalResult evaluate(const std::vector<double>& obs,
                      const std::array<double, 2>& action, Caches& c) const {
    EvalResult out;
    std::vector<double> m;
    if (shared_trunk_) {
      const std::vector<double> t = trunk_.forward(obs, &c.trunk);
      m = mean_head_.forward(t, &c.mean_head);
      out.value = value_head_.forward(t, &c.value_head)[0];
    } else {
      m = pi_.forward(obs, &c.pi);
      out.value = vf_.forward(obs, &c.vf)[0];
    }
    out.mean = {m[0], m[1]};
    out.log_prob = log_prob(out.mean, action);
    out.entropy = entropy();
    return out;
  }

  // Accumulates gradients for one sample. dmean/dvalue/dlog_std are the loss
  // derivatives with respect to the network outputs and the log-std.
  void backward(Caches& c, const std::array<double, 2>& dmean, double dvalue,
                const std::array<double, 2>& dlog_std) {
    log_std_grad_[0] += dlog_std[0];
    log_std_grad_[1] += dlog_std[1];
    if (shared_trunk_) {
      std::vector<double> dt =
          mean_head_.backward(c.mean_head, {dmean[0], dmean[1]});
      const std::vector<double> dt2 =
          value_head_.backward(c.value_head, {dvalue});
      for (std::size_t i = 0; i < dt.size(); ++i) dt[i] += dt2[i];
      trunk_.backward(c.trunk, std::move(dt));
    } else {
      pi_.backward(c.pi, {dmean[0], dmean[1]});
      vf_.backward(c.vf, {dvalue});
    }
  }

  void zero_grads() {
    pi_.zero_grads();
    vf_.zero_grads();
    trunk_.zero_grads();
    mean_head_.zero_grads();
    value_head_.zero_grads();
    log_std_grad_ = {0.0, 0.0};
  }

  // --- flat parameter access (optimizer + finite differences) --------------

  int param_count() const {
    int n = 2;  // log_std
    if (shared_trunk_) {
      n += trunk_.param_count() + mean_head_.param_count() +
           value_head_.param_count();
    } else {
      n += pi_.param_count() + vf_.param_count();
    }
    return n;
  }

  std::vector<double> flat_params() const {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(param_count()));
    auto append = [&flat](const std::vector<double>& v) {
      flat.insert(flat.end(), v.begin(), v.end());
    };
    if (shared_trunk_) {
      append(trunk_.params());
      append(mean_head_.params());
      append(value_head_.params());
    } else {
      append(pi_.params());
      append(vf_.params());
    }
    flat.push_back(log_std_[0]);
    flat.push_back(log_std_[1]);
    return flat;
  }

  std::vector<double> flat_grads() const {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(param_count()));
    auto append = [&flat](const std::vector<double>& v) {
      flat.insert(flat.end(), v.begin(), v.end());
    };
    if (shared_trunk_) {
      append(trunk_.grads());
      append(mean_head_.grads());
      append(value_head_.grads());
    } else {
      append(pi_.grads());
      append(vf_.grads());
    }
    flat.push_back(log_std_grad_[0]);
    flat.push_back(log_std_grad_[1]);
    return flat;
  }

  void set_flat_params(const std::vector<double>& flat) {
    if (static_cast<int>(flat.size()) != param_count()) {
      throw std::invalid_argument("set_flat_params: size mismatch");
    }
    std::size_t pos = 0;
    auto take = [&flat, &pos](std::vector<double>& v) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                flat.begin() + static_cast<std::ptrdiff_t>(pos + v.size()),
                v.begin());
      pos += v.size();
    };
    if (shared_trunk_) {
      take(trunk_.params());
      take(mean_head_.params());
      take(value_head_.params());
    } else {
      take(pi_.params());
      take(vf_.params());
    }
    log_std_[0] = flat[pos];
    log_std_[1] = flat[pos + 1];
  }

 private:
  int obs_dim_;
  int hidden_;
  bool shared_trunk_;
  Mlp pi_;
  Mlp vf_;
  Mlp trunk_;
  Mlp mean_head_;
  Mlp value_head_;
  std::array<double, 2> log_std_{};
  std::array<double, 2> log_std_grad_{};
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

// Standard Adam with bias correction, operating on flat parameter vectors.
class Adam {
 public:
  explicit Adam(int n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(static_cast<std::size_t>(n), 0.0),
        v_(static_cast<std::size_t>(n), 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
      throw std::invalid_argument("Adam::step: size mismatch");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// Scales gradients in place so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
inline double clip_grad_norm(std::vector<double>& grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-12);
    for (double& g : grads) g *= scale;
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// Binary layout (native little-endian):
//   16-byte magic "GRIPFORCE-CKPT\0\0"
//   u32 version (currently 1)
//   u32 flags (bit 0: shared trunk)
//   u32 layer count, then u32 layer sizes of the policy net [obs, h, h, 2]
//   u64 parameter count, then that many 64-bit doubles (flat_params order)

inline constexpr char kCheckpointMagic[16] = {'G', 'R', 'I', 'P', 'F', 'O',
                                              'R', 'C', 'E', '-', 'C', 'K',
                                              'P', 'T', '\0', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void checkpoint_save(const std::string& path,
                            const GaussianPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open checkpoint for writing: " + path);
  }
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = kCheckpointVersion;
  const std::uint32_t flags = policy.shared_trunk() ? 1u : 0u;
  const std::uint32_t n_sizes = 4;
  const std::uint32_t sizes[4] = {static_cast<std::uint32_t>(policy.obs_dim()),
                                  static_cast<std::uint32_t>(policy.hidden()),
                                  static_cast<std::uint32_t>(policy.hidden()),
                                  2u};
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&flags), sizeof(flags));
  out.write(reinterpret_cast<const char*>(&n_sizes), sizeof(n_sizes));
  out.write(reinterpret_cast<const char*>(sizes), sizeof(sizes));
  const std::vector<double> flat = policy.flat_params();
  const std::uint64_t count = flat.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) {
    throw std::runtime_error("failed while writing checkpoint: " + path);
  }
}

inline GaussianPolicy checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path);
  }
  char magic[16];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a gripforce checkpoint: " + path);
  }
  std::uint32_t version = 0, flags = 0, n_sizes = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&flags), sizeof(flags));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kCheckpointVersion) + "): " + path);
  }
  in.read(reinterpret_cast<char*>(&n_sizes), sizeof(n_sizes));
  if (!in || n_sizes != 4) {
    throw std::runtime_error("unsupported checkpoint layer list: " + path);
  }
  std::uint32_t sizes[4];
  in.read(reinterpret_cast<char*>(sizes), sizeof(sizes));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  if (sizes[1] != sizes[2] || sizes[3] != 2 || sizes[0] < 1 || sizes[1] < 1) {
    throw std::runtime_error("unsupported checkpoint layer sizes: " + path);
  }
  GaussianPolicy policy(static_cast<int>(sizes[0]), static_cast<int>(sizes[1]),
                        (flags & 1u) != 0);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  if (count != static_cast<std::uint64_t>(policy.param_count())) {
    throw std::runtime_error(
        "checkpoint parameter count mismatch: expected " +
        std::to_string(policy.param_count()) + ", found " +
        std::to_string(count) + ": " + path);
  }
  std::vector<double> flat(count);
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in || in.gcount() !=
                 static_cast<std::streamsize>(count * sizeof(double))) {
    throw std::runtime_error("truncated checkpoint: " + path);
  }
  policy.set_flat_params(flat);
  return policy;
}

}  // namespace gripforce

#endif  // GRIPFORCE_AGENT_HPP_
