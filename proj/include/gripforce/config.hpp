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

#ifndef GRIPFORCE_CONFIG_HPP_
#define GRIPFORCE_CONFIG_HPP_

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gripforce/baseline.hpp"
#include "gripforce/env.hpp"
#include "gripforce/physics.hpp"
#include "gripforce/ppo.hpp"
#include "gripforce/randomization.hpp"
#include "gripforce/reward.hpp"
#include "gripforce/util.hpp"

// Experiment configuration: one flat text file of `section.key = value`
// lines (with `#` comments) covering every tunable in the project. Unknown
// keys are hard errors so typos cannot silently fall back to defaults. The
// full key list is documented in docs/configuration.md.

namespace gripforce {

struct EvalConfig {
  std::vector<double> kappa_grid;  // defaults to 11 evenly spaced values
  int trials_per_kappa = 200;
  int threads = 1;
  bool stochastic = false;  // sample from the policy instead of mean actions
};

struct ExperimentConfig {
  ActuatorParams actuator;
  ContactParams contact;  // rho/f_alpha/d_p are per-episode; k0 and the core
                          // multiplier act as global constants
  double d_p_ratio = 0.3;
  RandomizationRanges ranges;
  bool stiff_at_one = true;
  EnvConfig env;
  RewardWeights weights;
  CurriculumSchedule curriculum;
  PPOConfig ppo;
  BaselineConfig baseline;
  EvalConfig eval;
  CalibrationSetup calibration;
  double ref_slope_sponge = 278.0;  // real-robot regression references [N/m]
  double ref_slope_wood = 330.0;
};

inline std::vector<double> default_kappa_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) {
    grid.push_back(lerp(0.0, 1.0, static_cast<double>(i) / 10.0));
  }
  return grid;
}

// Grid spec syntax: either "lo:hi:count" (inclusive, evenly spaced) or a
// comma-separated value list.
inline std::vector<double> parse_kappa_grid(const std::string& spec) {
  std::vector<double> grid;
  if (spec.find(':') != std::string::npos) {
    std::stringstream ss(spec);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3) {
      throw std::invalid_argument("kappa grid spec must be lo:hi:count");
    }
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const int count = std::stoi(parts[2]);
    if (count < 1) {
      throw std::invalid_argument("kappa grid count must be >= 1");
    }
    if (count == 1) {
      grid.push_back(lo);
    } else {
      for (int i = 0; i < count; ++i) {
        grid.push_back(
            lerp(lo, hi, static_cast<double>(i) / (count - 1)));
      }
    }
  } else {
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) grid.push_back(std::stod(part));
    }
  }
  if (grid.empty()) {
    throw std::invalid_argument("kappa grid spec is empty");
  }
  for (double k : grid) {
    if (!(k >= 0.0 && k <= 1.0)) {
      throw std::invalid_argument("kappa grid values must lie in [0, 1]");
    }
  }
  return grid;
}

namespace detail {

inline double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + v + "'");
  }
  while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) {
    ++pos;
  }
  if (pos != v.size()) {
    throw std::invalid_argument("not a number: '" + v + "'");
  }
  return x;
}

inline long parse_long(const std::string& v) {
  const double x = parse_double(v);
  if (x != std::floor(x)) {
    throw std::invalid_argument("not an integer: '" + v + "'");
  }
  return static_cast<long>(x);
}

inline int parse_int(const std::string& v) {
  return static_cast<int>(parse_long(v));
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

}  // namespace detail

// Setter registry for every recognized configuration key.
inline std::map<std::string, std::function<void(const std::string&)>>
config_setters(ExperimentConfig& c) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_long;
  std::map<std::string, std::function<void(const std::string&)>> m;

  m["actuator.q_max"] = [&c](const std::string& v) { c.actuator.q_max = parse_double(v); };
  m["actuator.dq_max"] = [&c](const std::string& v) { c.actuator.dq_max = parse_double(v); };
  m["actuator.dt"] = [&c](const std::string& v) { c.actuator.dt = parse_double(v); };
  m["actuator.lambda0"] = [&c](const std::string& v) { c.actuator.lambda0 = parse_double(v); };

  m["contact.k0"] = [&c](const std::string& v) { c.contact.k0 = parse_double(v); };
  m["contact.core_stiffness_mult"] = [&c](const std::string& v) { c.contact.core_stiffness_mult = parse_double(v); };
  m["contact.d_p_ratio"] = [&c](const std::string& v) { c.d_p_ratio = parse_double(v); };

  m["random.kappa_lo"] = [&c](const std::string& v) { c.ranges.kappa_range.lo = parse_double(v); };
  m["random.kappa_hi"] = [&c](const std::string& v) { c.ranges.kappa_range.hi = parse_double(v); };
  m["random.b2_lo"] = [&c](const std::string& v) { c.ranges.b2_range.lo = parse_double(v); };
  m["random.b2_hi"] = [&c](const std::string& v) { c.ranges.b2_range.hi = parse_double(v); };
  m["random.f_goal_lo"] = [&c](const std::string& v) { c.ranges.f_goal_range.lo = parse_double(v); };
  m["random.f_goal_hi"] = [&c](const std::string& v) { c.ranges.f_goal_range.hi = parse_double(v); };
  m["random.stiff_at_one"] = [&c](const std::string& v) { c.stiff_at_one = parse_bool(v); };

  m["env.episode_len"] = [&c](const std::string& v) { c.env.episode_len = parse_int(v); };
  m["env.stack_k"] = [&c](const std::string& v) { c.env.stack_k = parse_int(v); };
  m["env.sigma_q"] = [&c](const std::string& v) { c.env.sigma_q = parse_double(v); };
  m["env.sigma_f"] = [&c](const std::string& v) { c.env.sigma_f = parse_double(v); };
  // The baseline controller detects contact with the same threshold the
  // environment uses for its sticky flags; keep the two in lockstep.
  m["env.f_theta"] = [&c](const std::string& v) {
    c.env.f_theta = parse_double(v);
    c.baseline.f_theta = c.env.f_theta;
  };
  m["env.inductive_bias"] = [&c](const std::string& v) { c.env.inductive_bias_enabled = parse_bool(v); };
  m["env.randomize"] = [&c](const std::string& v) { c.env.randomize = parse_bool(v); };
  m["env.fixed_kappa"] = [&c](const std::string& v) { c.env.fixed_kappa = parse_double(v); };
  m["env.fixed_b2"] = [&c](const std::string& v) { c.env.fixed_b2 = parse_double(v); };

  m["reward.alpha1"] = [&c](const std::string& v) { c.weights.alpha1 = parse_double(v); };
  m["reward.alpha3"] = [&c](const std::string& v) { c.weights.alpha3 = parse_double(v); };

  m["curriculum.s_end"] = [&c](const std::string& v) { c.curriculum.s_end = parse_double(v); };
  m["curriculum.alpha2_initial"] = [&c](const std::string& v) { c.curriculum.alpha2_initial = parse_double(v); };
  m["curriculum.alpha2_final"] = [&c](const std::string& v) { c.curriculum.alpha2_final = parse_double(v); };
  m["curriculum.o_y_dot_max_initial"] = [&c](const std::string& v) { c.curriculum.o_y_dot_max_initial = parse_double(v); };
  m["curriculum.o_y_dot_max_final"] = [&c](const std::string& v) { c.curriculum.o_y_dot_max_final = parse_double(v); };
  m["curriculum.w_o_initial_lo"] = [&c](const std::string& v) { c.curriculum.object_width_initial.lo = parse_double(v); };
  m["curriculum.w_o_initial_hi"] = [&c](const std::string& v) { c.curriculum.object_width_initial.hi = parse_double(v); };
  m["curriculum.w_o_final_lo"] = [&c](const std::string& v) { c.curriculum.object_width_final.lo = parse_double(v); };
  m["curriculum.w_o_final_hi"] = [&c](const std::string& v) { c.curriculum.object_width_final.hi = parse_double(v); };
  m["curriculum.o_y_initial_lo"] = [&c](const std::string& v) { c.curriculum.object_offset_initial.lo = parse_double(v); };
  m["curriculum.o_y_initial_hi"] = [&c](const std::string& v) { c.curriculum.object_offset_initial.hi = parse_double(v); };
  m["curriculum.o_y_final_lo"] = [&c](const std::string& v) { c.curriculum.object_offset_final.lo = parse_double(v); };
  m["curriculum.o_y_final_hi"] = [&c](const std::string& v) { c.curriculum.object_offset_final.hi = parse_double(v); };

  m["ppo.learning_rate"] = [&c](const std::string& v) { c.ppo.learning_rate = parse_double(v); };
  m["ppo.clip_epsilon"] = [&c](const std::string& v) { c.ppo.clip_epsilon = parse_double(v); };
  m["ppo.gamma"] = [&c](const std::string& v) { c.ppo.gamma = parse_double(v); };
  m["ppo.gae_lambda"] = [&c](const std::string& v) { c.ppo.gae_lambda = parse_double(v); };
  m["ppo.rollout_len"] = [&c](const std::string& v) { c.ppo.rollout_len = parse_int(v); };
  m["ppo.minibatch_size"] = [&c](const std::string& v) { c.ppo.minibatch_size = parse_int(v); };
  m["ppo.epochs"] = [&c](const std::string& v) { c.ppo.epochs = parse_int(v); };
  m["ppo.total_steps"] = [&c](const std::string& v) { c.ppo.total_steps = parse_long(v); };
  m["ppo.eval_window"] = [&c](const std::string& v) { c.ppo.eval_window = parse_int(v); };
  m["ppo.ent_coef"] = [&c](const std::string& v) { c.ppo.ent_coef = parse_double(v); };
  m["ppo.vf_coef"] = [&c](const std::string& v) { c.ppo.vf_coef = parse_double(v); };
  m["ppo.max_grad_norm"] = [&c](const std::string& v) { c.ppo.max_grad_norm = parse_double(v); };
  m["ppo.norm_adv"] = [&c](const std::string& v) { c.ppo.norm_adv = parse_bool(v); };
  m["ppo.hidden"] = [&c](const std::string& v) { c.ppo.hidden = parse_int(v); };
  m["ppo.shared_trunk"] = [&c](const std::string& v) { c.ppo.shared_trunk = parse_bool(v); };

  m["baseline.closing_speed"] = [&c](const std::string& v) { c.baseline.closing_speed = parse_double(v); };
  m["baseline.kp"] = [&c](const std::string& v) { c.baseline.kp = parse_double(v); };
  m["baseline.settle_band"] = [&c](const std::string& v) { c.baseline.settle_band = parse_double(v); };

  m["eval.kappa_grid"] = [&c](const std::string& v) { c.eval.kappa_grid = parse_kappa_grid(v); };
  m["eval.trials_per_kappa"] = [&c](const std::string& v) { c.eval.trials_per_kappa = parse_int(v); };
  m["eval.threads"] = [&c](const std::string& v) { c.eval.threads = parse_int(v); };
  m["eval.stochastic"] = [&c](const std::string& v) { c.eval.stochastic = parse_bool(v); };

  m["calibration.servo_gain"] = [&c](const std::string& v) { c.calibration.servo_gain = parse_double(v); };
  m["calibration.object_width"] = [&c](const std::string& v) { c.calibration.object_width = parse_double(v); };
  m["calibration.start_clearance"] = [&c](const std::string& v) { c.calibration.start_clearance = parse_double(v); };
  m["calibration.max_steps"] = [&c](const std::string& v) { c.calibration.max_steps = parse_int(v); };
  m["calibration.steady_tol"] = [&c](const std::string& v) { c.calibration.steady_tol = parse_double(v); };
  m["calibration.steady_window"] = [&c](const std::string& v) { c.calibration.steady_window = parse_int(v); };
  m["calibration.ref_slope_sponge"] = [&c](const std::string& v) { c.ref_slope_sponge = parse_double(v); };
  m["calibration.ref_slope_wood"] = [&c](const std::string& v) { c.ref_slope_wood = parse_double(v); };

  return m;
}

inline std::vector<std::string> config_keys() {
  ExperimentConfig tmp;
  std::vector<std::string> keys;
  for (const auto& [key, setter] : config_setters(tmp)) keys.push_back(key);
  return keys;
}

// Cross-field consistency and range validation. Called after every load.
inline void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (!(c.actuator.dq_max > 0.0) || !(c.actuator.dq_max < c.actuator.q_max)) {
    fail("actuator.dq_max must lie in (0, q_max)");
  }
  if (!(c.actuator.dt > 0.0)) fail("actuator.dt must be positive");
  if (!(c.contact.k0 > 0.0)) fail("contact.k0 must be positive");
  if (!(c.contact.core_stiffness_mult >= 10.0)) {
    fail("contact.core_stiffness_mult must be >= 10");
  }
  if (!(c.d_p_ratio > 0.0) || !(c.d_p_ratio < 1.0)) {
    fail("contact.d_p_ratio must lie in (0, 1)");
  }
  if (c.ranges.kappa_range.lo < 0.0 || c.ranges.kappa_range.hi > 1.0 ||
      c.ranges.kappa_range.lo > c.ranges.kappa_range.hi) {
    fail("random.kappa range must lie within [0, 1]");
  }
  if (c.ranges.b2_range.lo > c.ranges.b2_range.hi ||
      c.ranges.b2_range.hi >= 0.0) {
    fail("random.b2 range must be negative with lo <= hi");
  }
  if (!(c.ranges.f_goal_range.lo > 0.0) ||
      c.ranges.f_goal_range.lo > c.ranges.f_goal_range.hi) {
    fail("random.f_goal range must be positive with lo <= hi");
  }
  if (c.env.episode_len < 1) fail("env.episode_len must be >= 1");
  if (c.env.stack_k < 1) fail("env.stack_k must be >= 1");
  if (c.env.sigma_q < 0.0 || c.env.sigma_f < 0.0) {
    fail("env noise sigmas must be >= 0");
  }
  if (!(c.env.f_theta > 0.0)) fail("env.f_theta must be positive");
  if (!(c.weights.alpha1 > 0.0)) fail("reward.alpha1 must be positive");
  if (c.weights.alpha3 < 0.0) fail("reward.alpha3 must be >= 0");
  if (!(c.curriculum.s_end > 0.0)) fail("curriculum.s_end must be positive");
  if (!(c.ppo.learning_rate > 0.0)) fail("ppo.learning_rate must be positive");
  if (!(c.ppo.clip_epsilon > 0.0)) fail("ppo.clip_epsilon must be positive");
  if (!(c.ppo.gamma > 0.0) || c.ppo.gamma > 1.0) {
    fail("ppo.gamma must lie in (0, 1]");
  }
  if (c.ppo.rollout_len < 1 || c.ppo.minibatch_size < 1 || c.ppo.epochs < 1 ||
      c.ppo.eval_window < 1 || c.ppo.hidden < 1) {
    fail("ppo sizes must be >= 1");
  }
  if (c.ppo.total_steps < 1) fail("ppo.total_steps must be >= 1");
  if (!(c.baseline.kp > 0.0)) fail("baseline.kp must be positive");
  if (c.baseline.settle_band < 0.0) fail("baseline.settle_band must be >= 0");
  if (c.eval.trials_per_kappa < 1) fail("eval.trials_per_kappa must be >= 1");
  if (c.eval.threads < 1) fail("eval.threads must be >= 1");
  for (double k : c.eval.kappa_grid) {
    if (!(k >= 0.0 && k <= 1.0)) fail("eval.kappa_grid values must lie in [0, 1]");
  }
  if (!(c.calibration.servo_gain > 0.0)) {
    fail("calibration.servo_gain must be positive");
  }
  if (!(c.calibration.object_width > 0.0) ||
      !(c.calibration.object_width < 2.0 * c.actuator.q_max)) {
    fail("calibration.object_width must lie in (0, 2*q_max)");
  }
}

inline ExperimentConfig default_config() {
  ExperimentConfig c;
  c.eval.kappa_grid = default_kappa_grid();
  c.ppo.total_steps = 4000000;  // full-scale run; desk runs override
  return c;
}

// Loads `section.key = value` lines over the defaults. Unknown keys,
// malformed lines, and out-of-range values all throw with the line number.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  ExperimentConfig cfg = default_config();
  auto setters = config_setters(cfg);

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const char* ws = " \t\r\n";
      const std::size_t b = s.find_first_not_of(ws);
      if (b == std::string::npos) return std::string();
      const std::size_t e = s.find_last_not_of(ws);
      return s.substr(b, e - b + 1);
    };
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'section.key = value'");
    }
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
    }
    try {
      it->second(value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               key + ": " + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

inline SampleOptions make_sample_options(const ExperimentConfig& cfg) {
  SampleOptions opt;
  opt.q_max = cfg.actuator.q_max;
  opt.d_p_ratio = cfg.d_p_ratio;
  opt.stiff_at_one = cfg.stiff_at_one;
  return opt;
}

// Builds an environment from the experiment config. Object width/offset
// ranges and the annealed reward quantities start at the curriculum initial
// values; callers move them via Env::set_curriculum.
inline Env make_env(const ExperimentConfig& cfg, std::uint64_t seed) {
  RandomizationRanges ranges = cfg.ranges;
  ranges.object_width = cfg.curriculum.object_width_initial;
  ranges.object_offset = cfg.curriculum.object_offset_initial;
  RewardWeights weights = cfg.weights;
  weights.alpha2 = cfg.curriculum.alpha2_initial;
  return Env(cfg.env, cfg.actuator, cfg.contact, ranges, weights,
             cfg.curriculum.o_y_dot_max_initial, make_sample_options(cfg),
             seed);
}

}  // namespace gripforce

#endif  // GRIPFORCE_CONFIG_HPP_
