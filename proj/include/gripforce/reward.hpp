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

#ifndef GRIPFORCE_REWARD_HPP_
#define GRIPFORCE_REWARD_HPP_

#include <array>
#include <cmath>
#include <stdexcept>

#include "gripforce/util.hpp"

// Reward terms and the training curriculum. The reward trades off force
// tracking against object disturbance and action jitter; the curriculum
// linearly ramps the task difficulty (movement penalty weight, movement
// threshold, object width and offset ranges) over the first s_end steps.

namespace gripforce {

struct RewardWeights {
  double alpha1 = 1.0;  // force-tracking weight
  double alpha2 = 0.0;  // object-movement weight (curriculum-controlled)
  double alpha3 = 0.1;  // action-smoothness weight
};

// Dense force-tracking reward in (0, 1]: 1 at perfect tracking on both
// fingers, saturating toward 0 as the total force error grows.
inline double r_force(double delta_f_l, double delta_f_r) {
  if (!std::isfinite(delta_f_l) || !std::isfinite(delta_f_r)) {
    throw std::invalid_argument("r_force: non-finite force error");
  }
  return 1.0 - std::tanh(std::abs(delta_f_l) + std::abs(delta_f_r));
}

// Sparse object-movement penalty: -1 whenever the object speed exceeds the
// threshold (in either direction), else 0.
inline double r_obj(double o_y_dot, double o_y_dot_max) {
  if (!(o_y_dot_max > 0.0)) {
    throw std::invalid_argument("r_obj: threshold must be positive");
  }
  return std::abs(o_y_dot) > o_y_dot_max ? -1.0 : 0.0;
}

// Action-smoothness penalty: negative total variation between consecutive
// commands, in [-4, 0] for two fingers with commands in [-1, 1].
inline double r_act(const std::array<double, 2>& a_prev,
                    const std::array<double, 2>& a_now) {
  return -(std::abs(a_prev[0] - a_now[0]) + std::abs(a_prev[1] - a_now[1]));
}

struct RewardTerms {
  double force = 0.0;
  double obj = 0.0;
  double act = 0.0;
};

inline double total_reward(const RewardTerms& t, const RewardWeights& w) {
  return w.alpha1 * t.force + w.alpha2 * t.obj + w.alpha3 * t.act;
}

// ---------------------------------------------------------------------------
// Curriculum
// ---------------------------------------------------------------------------

struct CurriculumSchedule {
  double s_end = 1.5e6;  // global step at which all ramps reach their finals

  double alpha2_initial = 0.0;
  double alpha2_final = 1.0;

  double o_y_dot_max_initial = 2e-4;  // [m/s]
  double o_y_dot_max_final = 5e-5;

  Interval object_width_initial{0.020, 0.025};  // [m]
  Interval object_width_final{0.015, 0.035};

  Interval object_offset_initial{0.0, 0.0};  // [m]
  Interval object_offset_final{-0.040, 0.040};
};

struct CurriculumState {
  double alpha2 = 0.0;
  double o_y_dot_max = 2e-4;
  Interval object_width{0.020, 0.025};
  Interval object_offset{0.0, 0.0};
};

// Linear anneal: every scalar and interval endpoint moves from its initial
// to its final value as step goes from 0 to s_end, frozen afterwards.
inline CurriculumState curriculum_at(double step,
                                     const CurriculumSchedule& sched) {
  if (!(step >= 0.0)) {
    throw std::invalid_argument("curriculum_at: step must be >= 0");
  }
  if (!(sched.s_end > 0.0)) {
    throw std::invalid_argument("curriculum_at: s_end must be positive");
  }
  const double u = std::min(1.0, step / sched.s_end);
  CurriculumState out;
  out.alpha2 = lerp(sched.alpha2_initial, sched.alpha2_final, u);
  out.o_y_dot_max =
      lerp(sched.o_y_dot_max_initial, sched.o_y_dot_max_final, u);
  out.object_width = {
      lerp(sched.object_width_initial.lo, sched.object_width_final.lo, u),
      lerp(sched.object_width_initial.hi, sched.object_width_final.hi, u)};
  out.object_offset = {
      lerp(sched.object_offset_initial.lo, sched.object_offset_final.lo, u),
      lerp(sched.object_offset_initial.hi, sched.object_offset_final.hi, u)};
  return out;
}

}  // namespace gripforce

#endif  // GRIPFORCE_REWARD_HPP_
