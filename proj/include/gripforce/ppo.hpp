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

#ifndef GRIPFORCE_PPO_HPP_
#define GRIPFORCE_PPO_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gripforce/agent.hpp"
#include "gripforce/csv.hpp"
#include "gripforce/env.hpp"
#include "gripforce/reward.hpp"
#include "gripforce/rng.hpp"

// Clipped-surrogate PPO with generalized advantage estimation, specialized
// to the two-finger grasp environment. Single-threaded: one environment,
// alternating rollout collection and minibatch updates.

namespace gripforce {

struct PPOConfig {
  double learning_rate = 6e-4;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int rollout_len = 2048;
  int minibatch_size = 64;
  int epochs = 10;
  long total_steps = 300000;
  int eval_window = 30;   // episodes in the running return average
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  bool norm_adv = true;   // per-minibatch advantage normalization
  int hidden = 50;
  bool shared_trunk = false;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Generalized advantage estimation
// ---------------------------------------------------------------------------

// values must carry one extra entry: the bootstrap value of the state after
// the last transition. dones[t] marks transitions into terminal states, which
// cut both the bootstrap and the advantage recursion.
inline std::pair<std::vector<double>, std::vector<double>> gae_advantages(
    const std::vector<double>& rewards, const std::vector<double>& values,
    const std::vector<unsigned char>& dones, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || dones.size() != n) {
    throw std::invalid_argument(
        "gae_advantages: need len(values) == len(rewards)+1 == len(dones)+1");
  }
  std::vector<double> advantages(n, 0.0);
  std::vector<double> returns(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double nonterminal = dones[i] ? 0.0 : 1.0;
    const double delta =
        rewards[i] + gamma * values[i + 1] * nonterminal - values[i];
    acc = delta + gamma * lambda * nonterminal * acc;
    advantages[i] = acc;
    returns[i] = advantages[i] + values[i];
  }
  return {std::move(advantages), std::move(returns)};
}

// ---------------------------------------------------------------------------
// Rollout storage
// ---------------------------------------------------------------------------

struct RolloutBuffer {
  std::vector<std::vector<double>> obs;
  std::vector<std::array<double, 2>> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;  // one longer than the rest (bootstrap)
  std::vector<unsigned char> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return obs.size(); }

  void clear() {
    obs.clear();
    actions.clear();
    log_probs.clear();
    rewards.clear();
    values.clear();
    dones.clear();
    advantages.clear();
    returns.clear();
  }
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total_loss = 0.0;
};

// ---------------------------------------------------------------------------
// PPO update
// ---------------------------------------------------------------------------

// Runs the configured epochs of shuffled minibatch updates on the buffer.
// Loss terms are averaged over all minibatches for reporting.
inline UpdateStats ppo_update(const RolloutBuffer& buffer,
                              GaussianPolicy& policy, Adam& adam,
                              const PPOConfig& cfg, Rng& rng) {
  const std::size_t n = buffer.size();
  if (n == 0 || buffer.advantages.size() != n || buffer.returns.size() != n) {
    throw std::invalid_argument("ppo_update: buffer missing advantages");
  }

  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), std::size_t{0});

  UpdateStats stats;
  long batches = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(indices);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
      const std::size_t batch = end - start;
      const double inv_batch = 1.0 / static_cast<double>(batch);

      // Per-minibatch advantage normalization.
      std::vector<double> adv(batch);
      for (std::size_t k = 0; k < batch; ++k) {
        adv[k] = buffer.advantages[indices[start + k]];
      }
      if (cfg.norm_adv && batch > 1) {
        double mean = 0.0;
        for (double a : adv) mean += a;
        mean *= inv_batch;
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        const double std_dev = std::sqrt(var * inv_batch);
        for (double& a : adv) a = (a - mean) / (std_dev + 1e-8);
      }

      policy.zero_grads();
      double policy_loss = 0.0, value_mse = 0.0, entropy_sum = 0.0;

      for (std::size_t k = 0; k < batch; ++k) {
        const std::size_t idx = indices[start + k];
        GaussianPolicy::Caches caches;
        const GaussianPolicy::EvalResult ev =
            policy.evaluate(buffer.obs[idx], buffer.actions[idx], caches);

        const double ratio = std::exp(ev.log_prob - buffer.log_probs[idx]);
        const double unclipped = ratio * adv[k];
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) *
            adv[k];
        policy_loss += -std::min(unclipped, clipped) * inv_batch;

        const double verr = ev.value - buffer.returns[idx];
        value_mse += verr * verr * inv_batch;
        entropy_sum += ev.entropy * inv_batch;

        // Gradient of the per-sample loss contribution. The surrogate only
        // propagates through the unclipped branch; when clipping binds the
        // sample contributes no policy gradient.
        const double dlp = unclipped <= clipped
                               ? -adv[k] * ratio * inv_batch
                               : 0.0;
        std::array<double, 2> dmean{0.0, 0.0};
        std::array<double, 2> dlog_std{0.0, 0.0};
        for (int d = 0; d < 2; ++d) {
          const double sigma = std::exp(policy.log_std()[d]);
          const double diff = buffer.actions[idx][d] - ev.mean[d];
          const double z2 = diff * diff / (sigma * sigma);
          // dlogprob/dmean and dlogprob/dlog_std of the diagonal Gaussian.
          dmean[d] = dlp * (diff / (sigma * sigma));
          dlog_std[d] = dlp * (z2 - 1.0);
          // Entropy bonus: loss term ent_coef * (-entropy).
          dlog_std[d] += -cfg.ent_coef * inv_batch;
        }
        const double dvalue = cfg.vf_coef * 2.0 * verr * inv_batch;
        policy.backward(caches, dmean, dvalue, dlog_std);
      }

      const double total = policy_loss + cfg.vf_coef * value_mse +
                           cfg.ent_coef * -entropy_sum;
      if (!std::isfinite(total)) {
        throw std::runtime_error(
            "ppo_update: non-finite loss (policy=" + format_double(policy_loss) +
            ", value=" + format_double(value_mse) + ")");
      }

      std::vector<double> grads = policy.flat_grads();
      clip_grad_norm(grads, cfg.max_grad_norm);
      std::vector<double> params = policy.flat_params();
      adam.step(params, grads);
      policy.set_flat_params(params);

      stats.policy_loss += policy_loss;
      stats.value_loss += value_mse;
      stats.entropy += entropy_sum;
      stats.total_loss += total;
      ++batches;
    }
  }

  if (batches > 0) {
    stats.policy_loss /= static_cast<double>(batches);
    stats.value_loss /= static_cast<double>(batches);
    stats.entropy /= static_cast<double>(batches);
    stats.total_loss /= static_cast<double>(batches);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainResult {
  std::string best_checkpoint;   // best running mean return (empty if none)
  std::string final_checkpoint;
  std::string curve_csv;
  std::vector<long> checkpoint_updates;  // update indices that improved best
  double best_mean_return = std::numeric_limits<double>::quiet_NaN();
  long updates = 0;
  long steps = 0;
};

// Alternates rollout collection and PPO updates until total_steps. The
// curriculum is advanced by the global step count; a checkpoint is stored
// whenever the running mean return over the last eval_window completed
// episodes strictly exceeds its previous best (evaluated after each update).
inline TrainResult train(
    const std::function<Env(std::uint64_t)>& make_env, const PPOConfig& cfg,
    const CurriculumSchedule& sched, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory: " + out_dir +
                             " (" + ec.message() + ")");
  }

  std::uint64_t seed_state = cfg.seed;
  Env env = make_env(splitmix64(seed_state));
  Rng agent_rng(splitmix64(seed_state));
  Rng shuffle_rng(splitmix64(seed_state));

  GaussianPolicy policy(env.obs_dim(), cfg.hidden, cfg.shared_trunk);
  policy.init_weights(agent_rng);
  Adam adam(policy.param_count(), cfg.learning_rate);

  TrainResult result;
  result.best_checkpoint = (fs::path(out_dir) / "best.ckpt").string();
  result.final_checkpoint = (fs::path(out_dir) / "final.ckpt").string();
  result.curve_csv = (fs::path(out_dir) / "training_curve.csv").string();

  CsvWriter curve(result.curve_csv,
                  {"step", "mean_return_30", "policy_loss", "value_loss",
                   "entropy", "total_loss"});

  std::deque<double> recent_returns;
  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  double episode_return = 0.0;
  long global_step = 0;

  env.set_curriculum(curriculum_at(0.0, sched));
  std::vector<double> obs = env.reset();

  RolloutBuffer buffer;
  while (global_step < cfg.total_steps) {
    buffer.clear();
    for (int t = 0; t < cfg.rollout_len; ++t) {
      env.set_curriculum(
          curriculum_at(static_cast<double>(global_step), sched));

      buffer.obs.push_back(obs);
      buffer.values.push_back(policy.value(obs));
      std::array<double, 2> mu;
      const std::array<double, 2> action =
          policy.sample_action(obs, agent_rng, &mu);
      buffer.actions.push_back(action);
      buffer.log_probs.push_back(policy.log_prob(mu, action));

      StepOutput out = env.step(action);
      buffer.rewards.push_back(out.reward);
      buffer.dones.push_back(out.done ? 1 : 0);
      episode_return += out.reward;
      ++global_step;

      if (out.done) {
        // Episodes end on a time limit, not task failure, and the
        // observation carries no timer, so the value target must stay
        // stationary: fold the bootstrap gamma*V(s_T) into the final reward
        // (the done mask then cuts GAE at the boundary as usual). Logged
        // episode returns stay the raw environment sums.
        buffer.rewards.back() += cfg.gamma * policy.value(out.obs);
        recent_returns.push_back(episode_return);
        while (static_cast<int>(recent_returns.size()) > cfg.eval_window) {
          recent_returns.pop_front();
        }
        episode_return = 0.0;
        env.set_curriculum(
            curriculum_at(static_cast<double>(global_step), sched));
        obs = env.reset();
      } else {
        obs = std::move(out.obs);
      }
    }
    buffer.values.push_back(policy.value(obs));  // bootstrap

    auto [advantages, returns] = gae_advantages(
        buffer.rewards, buffer.values, buffer.dones, cfg.gamma, cfg.gae_lambda);
    buffer.advantages = std::move(advantages);
    buffer.returns = std::move(returns);

    const UpdateStats stats =
        ppo_update(buffer, policy, adam, cfg, shuffle_rng);
    ++result.updates;

    double mean_return = std::numeric_limits<double>::quiet_NaN();
    if (!recent_returns.empty()) {
      mean_return = 0.0;
      for (double r : recent_returns) mean_return += r;
      mean_return /= static_cast<double>(recent_returns.size());
      if (mean_return > best) {
        best = mean_return;
        have_best = true;
        checkpoint_save(result.best_checkpoint, policy);
        result.checkpoint_updates.push_back(result.updates);
      }
    }
    curve.write_row({static_cast<double>(global_step), mean_return,
                     stats.policy_loss, stats.value_loss, stats.entropy,
                     stats.total_loss});
  }

  checkpoint_save(result.final_checkpoint, policy);
  if (!have_best) result.best_checkpoint.clear();
  result.best_mean_return = best;
  result.steps = global_step;
  return result;
}

}  // namespace gripforce

#endif  // GRIPFORCE_PPO_HPP_
