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

#ifndef GRIPFORCE_PHYSICS_HPP_
#define GRIPFORCE_PHYSICS_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Surrogate contact simulation for a 2-DoF parallel-jaw gripper.
//
// Geometry: both fingers translate along the world y axis. q_l and q_r are
// the distances of the left/right finger surface from the world center, so
// the left surface sits at y = -q_l and the right surface at y = +q_r
// (fully open: q = q_max). The grasped object is a disk of radius r_o
// centered at y = o_y.
//
// Contact model: each contact is a compressed shell of depth up to d_p with
// linear stiffness f_alpha * k0 / rho, backed by a much stiffer core. The
// object itself is quasi-static: it sits wherever the two contact forces
// balance, and a single finger can only displace it by compressing the shell
// past d_p.

namespace gripforce {

// ---------------------------------------------------------------------------
// Parameter structs
// ---------------------------------------------------------------------------

struct ActuatorParams {
  double b2 = -9.0;       // actuator speed parameter, negative by convention
  double dq_max = 0.003;  // per-step command bound [m]
  double q_max = 0.045;   // joint range upper bound [m]
  double dt = 0.04;       // control period [s] (25 Hz)
  double lambda0 = 0.75;  // servo response at the nominal |b2| = 9
};

struct ContactParams {
  double rho = 0.0065;      // constraint softness width [m]
  double f_alpha = 2.75;    // dimensionless force scale
  double d_p = 0.00375;     // maximum shell deformation [m]
  double k0 = 1.5;          // nominal force at full softness width [N]
  double core_stiffness_mult = 10.0;  // slope multiplier past d_p
};

struct WorldState {
  double q_l = 0.045;   // left finger distance from center [m]
  double q_r = 0.045;   // right finger distance from center [m]
  double o_y = 0.0;     // object center offset [m]
  double o_y_dot = 0.0; // object velocity [m/s]
  double delta_l = 0.0; // left shell penetration [m]
  double delta_r = 0.0; // right shell penetration [m]
  double f_l = 0.0;     // left fingertip normal force [N]
  double f_r = 0.0;     // right fingertip normal force [N]
  double r_o = 0.0125;  // object radius = w_o / 2 [m]
};

namespace detail {

inline void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(name) + " must be finite");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Actuator
// ---------------------------------------------------------------------------

// First-order servo response as a function of the actuator speed parameter.
// Larger |b2| closes faster; the nominal b2 = -9 maps to lambda0.
inline double lambda_of_b2(double b2, double lambda0 = 0.75) {
  detail::require_finite(b2, "b2");
  return std::clamp(std::abs(b2) / 9.0 * lambda0, 0.0, 1.0);
}

// One control period of a single joint. The normalized command u in [-1, 1]
// is scaled to a desired offset dq_max * u; the joint then moves a fraction
// lambda(b2) of the way to the target, never more than dq_max per step.
inline double actuator_step(double q, double u, const ActuatorParams& p) {
  detail::require_finite(q, "q");
  detail::require_finite(u, "u");
  if (q < 0.0 || q > p.q_max) {
    throw std::invalid_argument("q outside [0, q_max]");
  }
  const double dq_des = std::clamp(u, -1.0, 1.0) * p.dq_max;
  const double q_des = std::clamp(q + dq_des, 0.0, p.q_max);
  const double lam = lambda_of_b2(p.b2, p.lambda0);
  const double q_next =
      q + std::clamp(lam * (q_des - q), -p.dq_max, p.dq_max);
  return std::clamp(q_next, 0.0, p.q_max);
}

// ---------------------------------------------------------------------------
// Contact
// ---------------------------------------------------------------------------

// Shell penetrations of both fingers for a disk of radius r_o at o_y.
inline std::pair<double, double> penetrations(double q_l, double q_r,
                                              double o_y, double r_o) {
  detail::require_finite(q_l, "q_l");
  detail::require_finite(q_r, "q_r");
  detail::require_finite(o_y, "o_y");
  detail::require_finite(r_o, "r_o");
  if (r_o <= 0.0) {
    throw std::invalid_argument("r_o must be positive");
  }
  const double delta_l = std::max(0.0, r_o - o_y - q_l);
  const double delta_r = std::max(0.0, o_y + r_o - q_r);
  return {delta_l, delta_r};
}

// Shell-regime stiffness [N/m].
inline double shell_slope(const ContactParams& p) {
  return p.f_alpha * p.k0 / p.rho;
}

// Piecewise-linear normal force: linear shell up to d_p, stiff core beyond.
// Continuous, zero at zero penetration, strictly increasing for delta > 0.
inline double contact_force(double delta, const ContactParams& p) {
  detail::require_finite(delta, "delta");
  if (delta < 0.0) {
    throw std::invalid_argument("delta must be nonnegative");
  }
  const double s = shell_slope(p);
  if (delta <= p.d_p) {
    return s * delta;
  }
  return s * p.d_p + s * p.core_stiffness_mult * (delta - p.d_p);
}

// ---------------------------------------------------------------------------
// Quasi-static object motion
// ---------------------------------------------------------------------------

struct ObjectUpdate {
  double o_y = 0.0;
  double o_y_dot = 0.0;
  // True when the rigid cores of object and fingers overlap: the aperture is
  // narrower than the object minus both shells. Force balance still holds
  // (core-regime forces), but the grasp is crushing the object.
  bool core_squeeze = false;
};

// Moves the object to its quasi-static rest position given the (already
// updated) finger positions in `state`:
//   (a) no contact: the object stays put;
//   (b) one contact: the shell absorbs up to d_p of overlap; only past d_p
//       does the rigid core push the object (just enough that delta = d_p);
//   (c) both contacts: the object sits where f_l = f_r. With equal stiffness
//       on both sides this centers the two penetrations.
// A single-finger push can create a second contact, which resolves as (c).
//
// Reported velocity: `state.delta_l/delta_r` must hold the penetrations from
// before the finger move. A grasp that was already closed on both sides
// re-balances through its compliant shells -- the rigid core settles within
// the control period and samples zero velocity, like a held object whose
// micro-adjustments are damped out. Single-finger pushes and newly formed
// grasps (the closing slam) report the full jump velocity.
inline ObjectUpdate object_update(const WorldState& state,
                                  const ContactParams& p, double dt) {
  const double r_o = state.r_o;
  const double q_l = state.q_l;
  const double q_r = state.q_r;

  // Signed overlaps; positive means the finger compresses the shell.
  double signed_l = r_o - state.o_y - q_l;
  double signed_r = state.o_y + r_o - q_r;

  double o_next = state.o_y;
  bool both = signed_l > 0.0 && signed_r > 0.0;

  if (!both && signed_l > 0.0 && signed_l > p.d_p) {
    // Left core pushes the object to +y until only d_p of shell remains.
    o_next = state.o_y + (signed_l - p.d_p);
    signed_r = o_next + r_o - q_r;
    both = signed_r > 0.0;
  } else if (!both && signed_r > 0.0 && signed_r > p.d_p) {
    o_next = state.o_y - (signed_r - p.d_p);
    signed_l = r_o - o_next - q_l;
    both = signed_l > 0.0;
  }

  ObjectUpdate out;
  bool held = false;
  if (both) {
    // Equal force laws on both fingers: balance centers the penetrations.
    o_next = (q_r - q_l) / 2.0;
    const double squeeze = 2.0 * r_o - q_l - q_r;  // delta_l + delta_r
    out.core_squeeze = squeeze / 2.0 > p.d_p;
    held = state.delta_l > 0.0 && state.delta_r > 0.0;
  }
  out.o_y = o_next;
  out.o_y_dot = held ? 0.0 : (o_next - state.o_y) / dt;
  return out;
}

// ---------------------------------------------------------------------------
// Full step
// ---------------------------------------------------------------------------

struct PhysicsStepResult {
  WorldState state;
  bool core_squeeze = false;
};

// One control period of the whole world: servo both joints, settle the
// object, then recompute penetrations and forces. Purely deterministic.
inline PhysicsStepResult physics_step(const WorldState& state, double u_l,
                                      double u_r, const ActuatorParams& ap,
                                      const ContactParams& cp) {
  WorldState next = state;
  next.q_l = actuator_step(state.q_l, u_l, ap);
  next.q_r = actuator_step(state.q_r, u_r, ap);

  const ObjectUpdate upd = object_update(next, cp, ap.dt);
  next.o_y = upd.o_y;
  next.o_y_dot = upd.o_y_dot;

  const auto [delta_l, delta_r] =
      penetrations(next.q_l, next.q_r, next.o_y, next.r_o);
  next.delta_l = delta_l;
  next.delta_r = delta_r;
  next.f_l = contact_force(delta_l, cp);
  next.f_r = contact_force(delta_r, cp);

  PhysicsStepResult out;
  out.state = next;
  out.core_squeeze = upd.core_squeeze;
  return out;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

// Rig for constant-command grasp episodes. The test object is centered and
// the drive servo has finite stiffness: a finger commanded with a constant
// desired offset dq_des advances only until the unscaled elastic reaction
// k0 * delta / rho balances the drive force servo_gain * dq_des, then stalls
// (it ratchets: holding is free, it never backs off on its own). The sensed
// fingertip force includes the material's force scale f_alpha, so the
// steady-state force is linear in dq_des with slope f_alpha * servo_gain.
struct CalibrationSetup {
  double servo_gain = 100.0;     // drive stiffness of the position servo [N/m]
  double object_width = 0.025;   // test object width [m]
  double d_p_ratio = 0.3;        // shell depth as a fraction of r_o
  double start_clearance = 0.002;  // initial finger-object gap [m]
  int max_steps = 150;           // episode cap
  double steady_tol = 1e-6;      // steady state: |df| below this ...
  int steady_window = 10;        // ... for this many consecutive steps
};

struct CalibrationSample {
  double dq_des = 0.0;           // commanded per-step desired offset [m]
  double final_force = 0.0;      // per-finger steady-state force [N]
  int steps = 0;                 // steps simulated before steady state
  std::vector<double> q_history;  // finger position per step (symmetric)
  std::vector<double> f_history;  // sensed force per step
};

// Penetration at which the unscaled shell/core reaction balances the drive
// force. Inverts the piecewise force law at f_alpha = 1.
inline double stall_penetration(double drive_force, const ContactParams& p) {
  const double raw_slope = p.k0 / p.rho;
  const double shell_max = raw_slope * p.d_p;
  if (drive_force <= shell_max) {
    return drive_force / raw_slope;
  }
  return p.d_p + (drive_force - shell_max) /
                     (raw_slope * p.core_stiffness_mult);
}

// One constant-command grasp on the calibration rig. Both fingers close
// symmetrically on the centered object, so the object never moves and the
// per-finger penetration is simply r_o - q.
inline CalibrationSample calibration_episode(const ContactParams& cp,
                                             const ActuatorParams& ap,
                                             double dq_des,
                                             const CalibrationSetup& setup) {
  detail::require_finite(dq_des, "dq_des");
  if (dq_des <= 0.0 || dq_des > ap.dq_max) {
    throw std::invalid_argument("dq_des must lie in (0, dq_max]");
  }
  const double r_o = setup.object_width / 2.0;

  ContactParams rig = cp;
  rig.d_p = setup.d_p_ratio * r_o;

  const double lam = lambda_of_b2(ap.b2, ap.lambda0);
  const double delta_cap = stall_penetration(setup.servo_gain * dq_des, rig);
  const double q_stall = r_o - delta_cap;

  CalibrationSample sample;
  sample.dq_des = dq_des;

  double q = std::min(ap.q_max, r_o + setup.start_clearance);
  double f_prev = 0.0;
  int calm = 0;
  for (int step = 0; step < setup.max_steps; ++step) {
    // Servo toward q - dq_des, but never past the stall point and never
    // opening (the ratchet holds whatever has been gained).
    double q_next = q + std::clamp(lam * -dq_des, -ap.dq_max, ap.dq_max);
    q_next = std::max(q_next, std::max(q_stall, 0.0));
    q_next = std::min(q_next, q);
    q = q_next;

    const double delta = std::max(0.0, r_o - q);
    const double f = contact_force(delta, rig);
    sample.q_history.push_back(q);
    sample.f_history.push_back(f);
    sample.steps = step + 1;

    // Steady only counts once in contact; the approach phase is trivially
    // constant at zero force.
    calm = f > 0.0 && std::abs(f - f_prev) < setup.steady_tol ? calm + 1 : 0;
    f_prev = f;
    if (calm >= setup.steady_window) break;
  }
  sample.final_force = f_prev;
  return sample;
}

// Ordinary least squares slope of y against x.
inline double ols_slope(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("ols_slope needs two equal-length samples");
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(xs.size());
  mean_y /= static_cast<double>(xs.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  if (sxx <= 0.0) {
    throw std::runtime_error("ols_slope: degenerate x values");
  }
  return sxy / sxx;
}

// Runs one constant-command grasp per grid value and regresses the
// steady-state force on the commanded offset. The grid must be strictly
// increasing with every value in (0, dq_max].
inline double calibrate_slope(const ContactParams& cp,
                              const ActuatorParams& ap,
                              const std::vector<double>& dq_grid,
                              const CalibrationSetup& setup = {}) {
  if (dq_grid.size() < 2) {
    throw std::invalid_argument("calibrate_slope needs at least 2 grid points");
  }
  for (std::size_t i = 0; i < dq_grid.size(); ++i) {
    if (dq_grid[i] <= 0.0 || dq_grid[i] > ap.dq_max) {
      throw std::invalid_argument(
          "calibrate_slope: grid values must lie in (0, dq_max]");
    }
    if (i > 0 && dq_grid[i] <= dq_grid[i - 1]) {
      throw std::invalid_argument(
          "calibrate_slope: grid must be strictly increasing");
    }
  }
  std::vector<double> forces;
  bool any_contact = false;
  for (double dq : dq_grid) {
    const CalibrationSample s = calibration_episode(cp, ap, dq, setup);
    forces.push_back(s.final_force);
    any_contact = any_contact || s.final_force > 0.0;
  }
  if (!any_contact) {
    throw std::runtime_error(
        "calibrate_slope: no contact reached, regression is degenerate");
  }
  return ols_slope(dq_grid, forces);
}

// Steps a full-speed closing command (u = -1) needs to move a finger from
// start_q to first contact (q < contact_q). Used to characterize how b2
// shapes the closing speed.
inline int closing_time(const ActuatorParams& ap, double start_q,
                        double contact_q) {
  detail::require_finite(start_q, "start_q");
  detail::require_finite(contact_q, "contact_q");
  if (!(contact_q < start_q)) {
    throw std::invalid_argument("closing_time: contact_q must be < start_q");
  }
  if (lambda_of_b2(ap.b2, ap.lambda0) <= 0.0) {
    throw std::invalid_argument("closing_time: servo response is zero");
  }
  double q = start_q;
  for (int step = 1; step <= 100000; ++step) {
    q = actuator_step(q, -1.0, ap);
    if (q < contact_q) return step;
  }
  throw std::runtime_error("closing_time: contact not reached");
}

}  // namespace gripforce

#endif  // GRIPFORCE_PHYSICS_HPP_
