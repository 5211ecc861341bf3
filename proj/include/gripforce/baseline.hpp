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

#ifndef GRIPFORCE_BASELINE_HPP_
#define GRIPFORCE_BASELINE_HPP_

#include <algorithm>
#include <array>

#include "gripforce/physics.hpp"

// Hand-modeled phase-based grasp controller used as the comparison
// reference. Per finger: close at constant speed until first contact, hold
// still while the other finger is still approaching, then proportional
// force servo once both fingers have touched.

namespace gripforce {

struct BaselineConfig {
  double closing_speed = -1.0;  // normalized command during approach
  double kp = 0.25;             // proportional force gain [1/N]
  double f_theta = 0.039;       // contact threshold [N] (matches the env)
  double settle_band = 0.05;    // acceptable residual |df| [N]
};

// Pure function of the raw state: same inputs, same command. The sticky
// contact flags h drive the phase logic; the servo acts on the force error
// df_i = f_goal - f_i (closing is the negative command direction, so a force
// deficit produces a negative command).
inline std::array<double, 2> baseline_step(const WorldState& state,
                                           const std::array<int, 2>& h,
                                           double f_goal,
                                           const BaselineConfig& cfg) {
  const std::array<double, 2> f{state.f_l, state.f_r};
  std::array<double, 2> u{0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    if (h[i] == 0) {
      u[i] = cfg.closing_speed;                      // APPROACH
    } else if (h[j] == 0) {
      u[i] = 0.0;                                    // HOLD-OFF
    } else {
      const double df = f_goal - f[i];               // FORCE-SERVO
      u[i] = std::clamp(-cfg.kp * df, -1.0, 1.0);
    }
  }
  return u;
}

// Largest kp for which the symmetric both-contact force servo converges
// monotonically (no overshoot) in the shell regime: each step multiplies the
// force error by (1 - kp * S * lambda * dq_max), where S is the shell
// stiffness. Larger kp up to twice this bound still contracts, but
// oscillates.
inline double baseline_monotone_kp_bound(const ContactParams& cp,
                                         const ActuatorParams& ap) {
  const double lam = lambda_of_b2(ap.b2, ap.lambda0);
  return 1.0 / (shell_slope(cp) * lam * ap.dq_max);
}

}  // namespace gripforce

#endif  // GRIPFORCE_BASELINE_HPP_
