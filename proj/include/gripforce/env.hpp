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

#ifndef GRIPFORCE_ENV_HPP_
#define GRIPFORCE_ENV_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "gripforce/physics.hpp"
#include "gripforce/randomization.hpp"
#include "gripforce/reward.hpp"
#include "gripforce/rng.hpp"

// The grasp-force MDP. Episodes are fixed length; each reset samples a new
// world (object, stiffness, actuator speed, goal force). Observations are
// sensor-noisy and frame-stacked; rewards and contact flags are computed
// from the raw simulator state.

namespace gripforce {

struct EnvConfig {
  int episode_len = 150;
  int stack_k = 3;
  double sigma_q = 2.7e-5;  // position sensor noise std [m]
  double sigma_f = 0.013;   // force sensor noise std [N]
  double f_theta = 0.039;   // contact detection threshold, 3 * sigma_f [N]
  bool inductive_bias_enabled = true;
  // With randomize off the stiffness factor and actuator speed are pinned to
  // the fixed values below; geometry and goal force are still sampled.
  bool randomize = true;
  double fixed_kappa = 0.5;
  double fixed_b2 = -9.0;
};

// Sticky per-finger contact flags: a finger that has ever sensed a force
// above the threshold keeps its flag for the rest of the episode.
inline std::array<int, 2> update_contact_flags(double f_l, double f_r,
                                               const std::array<int, 2>& h_prev,
                                               double f_theta) {
  if (f_l < 0.0 || f_r < 0.0) {
    throw std::invalid_argument("update_contact_flags: raw forces must be >= 0");
  }
  std::array<int, 2> h = h_prev;
  if (f_l > f_theta) h[0] = 1;
  if (f_r > f_theta) h[1] = 1;
  return h;
}

// Contact-state dependent action scaling, mimicking human grasp phases:
// free approach at full speed, near-freeze for the finger that touched
// first, and a mild slowdown once both fingers are servoing on force.
inline std::array<double, 2> inductive_bias(const std::array<double, 2>& delta_f,
                                            double f_goal,
                                            const std::array<int, 2>& h) {
  if (!(f_goal > 0.0)) {
    throw std::invalid_argument("inductive_bias: f_goal must be positive");
  }
  std::array<double, 2> phi{1.0, 1.0};
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    if (h[i] == 1 && h[j] == 1) {
      phi[i] = std::max(0.9, 1.0 - std::abs(delta_f[i]) / f_goal);
    } else if (h[i] == 1 && h[j] == 0) {
      phi[i] = 0.1;
    } else {
      phi[i] = 1.0;
    }
  }
  return phi;
}

struct StepInfo {
  WorldState raw;                   // post-step raw world state
  std::array<double, 2> a_prev{};   // previous clipped action
  std::array<double, 2> a{};        // this step's clipped action
  std::array<double, 2> phi{};      // bias factors applied to the action
  std::array<double, 2> u_eff{};    // phi * a, as seen by the actuators
  std::array<int, 2> h_used{};      // contact flags in effect for the bias
  std::array<int, 2> h{};           // contact flags after this step
  RewardTerms terms;
  double reward = 0.0;
  bool core_squeeze = false;
  double f_goal = 0.0;
  int step = 0;                     // 0-based transition index
};

struct StepOutput {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class Env {
 public:
  Env(const EnvConfig& cfg, const ActuatorParams& actuator,
      const ContactParams& contact_template, const RandomizationRanges& ranges,
      const RewardWeights& weights, double o_y_dot_max,
      const SampleOptions& sample_opt, std::uint64_t seed)
      : cfg_(cfg),
        actuator_(actuator),
        contact_(contact_template),
        ranges_(ranges),
        weights_(weights),
        o_y_dot_max_(o_y_dot_max),
        sample_opt_(sample_opt),
        rng_(seed) {
    if (cfg_.episode_len < 1 || cfg_.stack_k < 1) {
      throw std::invalid_argument("episode_len and stack_k must be >= 1");
    }
    if (cfg_.sigma_q < 0.0 || cfg_.sigma_f < 0.0 || !(cfg_.f_theta > 0.0)) {
      throw std::invalid_argument("invalid noise configuration");
    }
  }

  int obs_dim() const { return 10 * cfg_.stack_k; }

  // Curriculum hook: the trainer moves the annealed quantities as global
  // training progresses. Interval updates take effect at the next reset.
  void set_curriculum(const CurriculumState& c) {
    weights_.alpha2 = c.alpha2;
    o_y_dot_max_ = c.o_y_dot_max;
    ranges_.object_width = c.object_width;
    ranges_.object_offset = c.object_offset;
  }

  std::vector<double> reset() {
    RandomizationRanges effective = ranges_;
    if (!cfg_.randomize) {
      effective.kappa_range = {cfg_.fixed_kappa, cfg_.fixed_kappa};
      effective.b2_range = {cfg_.fixed_b2, cfg_.fixed_b2};
    }
    episode_ = sample_episode(effective, rng_, sample_opt_);

    contact_.rho = episode_.rho;
    contact_.f_alpha = episode_.f_alpha;
    contact_.d_p = episode_.d_p;
    actuator_.b2 = episode_.b2;

    world_ = WorldState{};
    world_.q_l = actuator_.q_max;
    world_.q_r = actuator_.q_max;
    world_.o_y = episode_.o_y;
    world_.r_o = episode_.r_o();

    h_ = {0, 0};
    a_prev_ = {0.0, 0.0};
    step_count_ = 0;
    done_ = false;

    frames_.clear();
    const std::vector<double> first = make_frame();
    for (int i = 0; i < cfg_.stack_k; ++i) frames_.push_back(first);
    return stacked_obs();
  }

  StepOutput step(const std::array<double, 2>& action) {
    if (frames_.empty()) {
      throw std::logic_error("step() called before reset()");
    }
    if (done_) {
      throw std::logic_error("step() called on a finished episode; reset() first");
    }

    StepInfo info;
    info.step = step_count_;
    info.f_goal = episode_.f_goal;
    info.a_prev = a_prev_;
    info.a = {std::clamp(action[0], -1.0, 1.0),
              std::clamp(action[1], -1.0, 1.0)};
    info.h_used = h_;

    // The bias sees the raw force errors of the pre-step state.
    if (cfg_.inductive_bias_enabled) {
      info.phi = inductive_bias({episode_.f_goal - world_.f_l,
                                 episode_.f_goal - world_.f_r},
                                episode_.f_goal, h_);
    } else {
      info.phi = {1.0, 1.0};
    }
    info.u_eff = {info.phi[0] * info.a[0], info.phi[1] * info.a[1]};

    const PhysicsStepResult res =
        physics_step(world_, info.u_eff[0], info.u_eff[1], actuator_, contact_);
    world_ = res.state;
    info.core_squeeze = res.core_squeeze;

    // Contact flags and rewards come from the raw simulator forces.
    h_ = update_contact_flags(world_.f_l, world_.f_r, h_, cfg_.f_theta);
    info.h = h_;

    info.terms.force = r_force(episode_.f_goal - world_.f_l,
                               episode_.f_goal - world_.f_r);
    info.terms.obj = r_obj(world_.o_y_dot, o_y_dot_max_);
    info.terms.act = r_act(a_prev_, info.a);
    info.reward = total_reward(info.terms, weights_);
    info.raw = world_;

    a_prev_ = info.a;
    ++step_count_;
    done_ = step_count_ >= cfg_.episode_len;

    frames_.push_back(make_frame());
    while (static_cast<int>(frames_.size()) > cfg_.stack_k) {
      frames_.pop_front();
    }

    StepOutput out;
    out.obs = stacked_obs();
    out.reward = info.reward;
    out.done = done_;
    out.info = info;
    return out;
  }

  const EpisodeParams& episode() const { return episode_; }
  const WorldState& world() const { return world_; }
  const std::array<int, 2>& flags() const { return h_; }
  const RewardWeights& weights() const { return weights_; }
  double o_y_dot_max() const { return o_y_dot_max_; }
  int step_count() const { return step_count_; }
  bool done() const { return done_; }
  int episode_len() const { return cfg_.episode_len; }

 private:
  // One 10-value observation frame, quantity-major:
  // [q_l, q_r, f_l, f_r, df_l, df_r, a_l, a_r, h_l, h_r].
  // Positions and forces carry sensor noise; the force errors are computed
  // from the noisy forces, as a real sensor pipeline would.
  std::vector<double> make_frame() {
    const double q_l = world_.q_l + rng_.normal(0.0, cfg_.sigma_q);
    const double q_r = world_.q_r + rng_.normal(0.0, cfg_.sigma_q);
    const double f_l = world_.f_l + rng_.normal(0.0, cfg_.sigma_f);
    const double f_r = world_.f_r + rng_.normal(0.0, cfg_.sigma_f);
    return {q_l,
            q_r,
            f_l,
            f_r,
            episode_.f_goal - f_l,
            episode_.f_goal - f_r,
            a_prev_[0],
            a_prev_[1],
            static_cast<double>(h_[0]),
            static_cast<double>(h_[1])};
  }

  std::vector<double> stacked_obs() const {
    std::vector<double> obs;
    obs.reserve(static_cast<std::size_t>(obs_dim()));
    for (const auto& frame : frames_) {
      obs.insert(obs.end(), frame.begin(), frame.end());
    }
    return obs;
  }

  EnvConfig cfg_;
  ActuatorParams actuator_;
  ContactParams contact_;
  RandomizationRanges ranges_;
  RewardWeights weights_;
  double o_y_dot_max_;
  SampleOptions sample_opt_;
  Rng rng_;

  EpisodeParams episode_;
  WorldState world_;
  std::deque<std::vector<double>> frames_;
  std::array<int, 2> h_{0, 0};
  std::array<double, 2> a_prev_{0.0, 0.0};
  int step_count_ = 0;
  bool done_ = true;  // step() before the first reset() is a lifecycle error
};

}  // namespace gripforce

#endif  // GRIPFORCE_ENV_HPP_
