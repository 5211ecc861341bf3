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

#ifndef GRIPFORCE_RANDOMIZATION_HPP_
#define GRIPFORCE_RANDOMIZATION_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "gripforce/rng.hpp"
#include "gripforce/util.hpp"

// Per-episode domain randomization: object geometry, placement, stiffness
// (via the unified factor kappa), actuator speed, and the goal force.

namespace gripforce {

// Hard bounds of the stiffness interpolation.
inline constexpr double kRhoSoft = 0.01;    // softest: widest force ramp [m]
inline constexpr double kRhoStiff = 0.003;  // stiffest: narrowest ramp [m]
inline constexpr double kFAlphaSoft = 0.5;
inline constexpr double kFAlphaStiff = 5.0;

struct RandomizationRanges {
  Interval kappa_range{0.0, 1.0};
  Interval b2_range{-13.0, -6.0};
  Interval object_width{0.015, 0.035};   // W_o [m]
  Interval object_offset{-0.040, 0.040}; // O_y [m], symmetric about 0
  Interval f_goal_range{0.3, 1.0};       // goal force [N]
};

struct EpisodeParams {
  double o_y = 0.0;      // object center offset [m]
  double w_o = 0.025;    // object width [m]
  double kappa = 0.5;    // unified stiffness factor in [0, 1]
  double rho = 0.0065;   // derived softness width [m]
  double f_alpha = 2.75; // derived force scale
  double b2 = -9.0;      // actuator speed parameter
  double f_goal = 0.65;  // per-episode goal force [N]
  double d_p = 0.00375;  // shell depth, 0.3 * r_o [m]

  double r_o() const { return w_o / 2.0; }
};

// Maps the unified stiffness factor onto (rho, f_alpha). By default kappa=1
// is the stiffest configuration: narrow force ramp and large force scale.
// stiff_at_one=false flips the orientation for experiments that want the
// opposite convention.
inline std::pair<double, double> kappa_to_contact(double kappa,
                                                  bool stiff_at_one = true) {
  if (!std::isfinite(kappa) || kappa < 0.0 || kappa > 1.0) {
    throw std::invalid_argument("kappa must lie in [0, 1]");
  }
  const double t = stiff_at_one ? kappa : 1.0 - kappa;
  const double rho = lerp(kRhoSoft, kRhoStiff, t);
  const double f_alpha = lerp(kFAlphaSoft, kFAlphaStiff, t);
  return {rho, f_alpha};
}

// Feasibility constraints on the sampled placement, all strict:
//   (1) |o_y| + r_o < q_max   -- the object fits inside the open gripper;
//   (2) r_o - d_p > |o_y|     -- both fingers can reach the shell;
//   (3) d_p < r_o             -- the shell is thinner than the object.
inline bool placement_feasible(double o_y, double r_o, double d_p,
                               double q_max) {
  return std::abs(o_y) + r_o < q_max && r_o - d_p > std::abs(o_y) &&
         d_p < r_o;
}

struct SampleOptions {
  double q_max = 0.045;
  double d_p_ratio = 0.3;       // shell depth as a fraction of r_o
  bool stiff_at_one = true;     // kappa orientation
  int max_rejections = 1000;
};

// Draws one episode's world parameters. The object offset is rejection
// sampled against the feasibility constraints; everything else is a plain
// uniform draw.
inline EpisodeParams sample_episode(const RandomizationRanges& ranges,
                                    Rng& rng,
                                    const SampleOptions& opt = {}) {
  check_interval(ranges.kappa_range, "kappa_range");
  check_interval(ranges.b2_range, "b2_range");
  check_interval(ranges.object_width, "object_width");
  check_interval(ranges.object_offset, "object_offset");
  check_interval(ranges.f_goal_range, "f_goal_range");
  if (ranges.object_width.lo <= 0.0 ||
      ranges.object_width.hi >= 2.0 * opt.q_max) {
    throw std::invalid_argument("object_width must lie within (0, 2*q_max)");
  }
  if (ranges.object_offset.lo != -ranges.object_offset.hi) {
    throw std::invalid_argument("object_offset must be symmetric about 0");
  }
  if (ranges.kappa_range.lo < 0.0 || ranges.kappa_range.hi > 1.0) {
    throw std::invalid_argument("kappa_range must lie within [0, 1]");
  }

  EpisodeParams ep;
  ep.w_o = rng.uniform(ranges.object_width.lo, ranges.object_width.hi);
  ep.kappa = rng.uniform(ranges.kappa_range.lo, ranges.kappa_range.hi);
  ep.b2 = rng.uniform(ranges.b2_range.lo, ranges.b2_range.hi);
  ep.f_goal = rng.uniform(ranges.f_goal_range.lo, ranges.f_goal_range.hi);

  const auto [rho, f_alpha] = kappa_to_contact(ep.kappa, opt.stiff_at_one);
  ep.rho = rho;
  ep.f_alpha = f_alpha;
  ep.d_p = opt.d_p_ratio * ep.r_o();

  for (int attempt = 0; attempt < opt.max_rejections; ++attempt) {
    const double o_y =
        rng.uniform(ranges.object_offset.lo, ranges.object_offset.hi);
    if (placement_feasible(o_y, ep.r_o(), ep.d_p, opt.q_max)) {
      ep.o_y = o_y;
      return ep;
    }
  }

  // Name the constraint that cannot be met so the config error is actionable.
  std::string reason;
  if (!(ep.d_p < ep.r_o())) {
    reason = "d_p < r_o is violated for every draw";
  } else if (!(ep.r_o() < opt.q_max)) {
    reason = "|o_y| + r_o < q_max is violated for every draw";
  } else {
    reason = "r_o - d_p > |o_y| rejected all draws from object_offset";
  }
  throw std::runtime_error("sample_episode: " + reason);
}

}  // namespace gripforce

#endif  // GRIPFORCE_RANDOMIZATION_HPP_
