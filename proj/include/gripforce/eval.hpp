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

#ifndef GRIPFORCE_EVAL_HPP_
#define GRIPFORCE_EVAL_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gripforce/agent.hpp"
#include "gripforce/baseline.hpp"
#include "gripforce/config.hpp"
#include "gripforce/csv.hpp"
#include "gripforce/env.hpp"
#include "gripforce/physics.hpp"
#include "gripforce/randomization.hpp"
#include "gripforce/rng.hpp"

// Evaluation harness: controllers, stiffness-grid sweeps with per-trial
// records, aggregation for box plots and comparison tables, and the
// calibration report.

namespace gripforce {

// ---------------------------------------------------------------------------
// Controllers
// ---------------------------------------------------------------------------

// A controller maps the current observation (and, for the hand-modeled
// baseline, the raw environment state) to a normalized action pair.
class Controller {
 public:
  virtual ~Controller() = default;
  // Reset internal state and reseed any randomness for a new trial.
  virtual void begin_trial(std::uint64_t /*seed*/) {}
  virtual std::array<double, 2> act(const std::vector<double>& obs,
                                    const Env& env) = 0;
};

class PolicyController : public Controller {
 public:
  PolicyController(GaussianPolicy policy, bool stochastic)
      : policy_(std::move(policy)), stochastic_(stochastic) {}

  void begin_trial(std::uint64_t seed) override { rng_ = Rng(seed); }

  std::array<double, 2> act(const std::vector<double>& obs,
                            const Env& env) override {
    if (static_cast<int>(obs.size()) != policy_.obs_dim()) {
      throw std::runtime_error(
          "checkpoint/environment mismatch: policy expects obs_dim " +
          std::to_string(policy_.obs_dim()) + ", environment produces " +
          std::to_string(env.obs_dim()));
    }
    if (stochastic_) {
      return policy_.sample_action(obs, rng_);
    }
    return policy_.mean(obs);
  }

 private:
  GaussianPolicy policy_;
  bool stochastic_;
  Rng rng_;
};

// Runs the phase controller on the raw simulator state (positions, forces,
// sticky contact flags), not on the noisy observation.
class BaselineController : public Controller {
 public:
  explicit BaselineController(const BaselineConfig& cfg) : cfg_(cfg) {}

  std::array<double, 2> act(const std::vector<double>& /*obs*/,
                            const Env& env) override {
    return baseline_step(env.world(), env.flags(), env.episode().f_goal, cfg_);
  }

 private:
  BaselineConfig cfg_;
};

class ZeroController : public Controller {
 public:
  std::array<double, 2> act(const std::vector<double>&, const Env&) override {
    return {0.0, 0.0};
  }
};

class RandomController : public Controller {
 public:
  void begin_trial(std::uint64_t seed) override { rng_ = Rng(seed); }

  std::array<double, 2> act(const std::vector<double>&, const Env&) override {
    return {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
  }

 private:
  Rng rng_;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialRecord {
  std::string model_id;
  std::uint64_t seed = 0;  // derived per-trial seed
  double kappa = 0.0;
  double episode_return = 0.0;
  double sum_r_force = 0.0;  // unweighted per-term sums over the episode
  double sum_r_obj = 0.0;
  double sum_r_act = 0.0;
  double obj_displacement = 0.0;  // |o_y(end) - o_y(start)| [m]
  double final_abs_df_l = 0.0;
  double final_abs_df_r = 0.0;
  EpisodeParams params;
};

inline std::vector<std::string> trial_csv_header() {
  return {"model",   "seed",          "kappa",        "episode_return",
          "sum_r_force", "sum_r_obj", "sum_r_act",    "obj_disp_m",
          "final_abs_df_l", "final_abs_df_r", "o_y",  "w_o",
          "rho",     "f_alpha",       "b2",           "f_goal",
          "d_p"};
}

inline std::vector<std::string> trial_csv_row(const TrialRecord& r) {
  return {r.model_id,
          std::to_string(r.seed),
          format_double(r.kappa),
          format_double(r.episode_return),
          format_double(r.sum_r_force),
          format_double(r.sum_r_obj),
          format_double(r.sum_r_act),
          format_double(r.obj_displacement),
          format_double(r.final_abs_df_l),
          format_double(r.final_abs_df_r),
          format_double(r.params.o_y),
          format_double(r.params.w_o),
          format_double(r.params.rho),
          format_double(r.params.f_alpha),
          format_double(r.params.b2),
          format_double(r.params.f_goal),
          format_double(r.params.d_p)};
}

// The deterministic per-trial seed: parallel and serial evaluation agree
// because every trial derives its own RNG streams from this value alone.
inline std::uint64_t trial_seed(std::uint64_t base_seed,
                                const std::string& model_id,
                                std::size_t kappa_idx, std::size_t trial_idx) {
  return derive_seed({base_seed, fnv1a(model_id),
                      static_cast<std::uint64_t>(kappa_idx),
                      static_cast<std::uint64_t>(trial_idx)});
}

// Runs one episode with everything except kappa freshly sampled, the
// environment pinned at the final curriculum, and the controller driving.
inline TrialRecord run_trial(const ExperimentConfig& cfg, Controller& ctrl,
                             const std::string& model_id, double kappa,
                             std::uint64_t seed) {
  ExperimentConfig trial_cfg = cfg;
  trial_cfg.env.randomize = true;  // evaluation always samples the world
  trial_cfg.ranges.kappa_range = {kappa, kappa};

  std::uint64_t seed_state = seed;
  Env env = make_env(trial_cfg, splitmix64(seed_state));
  env.set_curriculum(curriculum_at(cfg.curriculum.s_end, cfg.curriculum));
  ctrl.begin_trial(splitmix64(seed_state));

  std::vector<double> obs = env.reset();
  const double o_y_start = env.world().o_y;

  TrialRecord rec;
  rec.model_id = model_id;
  rec.seed = seed;
  rec.kappa = kappa;
  rec.params = env.episode();

  StepInfo last;
  while (!env.done()) {
    const std::array<double, 2> action = ctrl.act(obs, env);
    StepOutput out = env.step(action);
    rec.episode_return += out.reward;
    rec.sum_r_force += out.info.terms.force;
    rec.sum_r_obj += out.info.terms.obj;
    rec.sum_r_act += out.info.terms.act;
    last = out.info;
    obs = std::move(out.obs);
  }
  rec.obj_displacement = std::abs(env.world().o_y - o_y_start);
  rec.final_abs_df_l = std::abs(env.episode().f_goal - env.world().f_l);
  rec.final_abs_df_r = std::abs(env.episode().f_goal - env.world().f_r);
  return rec;
}

// Full stiffness-grid sweep: |kappa_grid| x trials_per_kappa episodes.
// Records are produced in deterministic order (kappa-major); with threads > 1
// the trials run concurrently but the output order (and any streamed CSV) is
// identical to a serial run. Completed rows are flushed as they become
// available so an aborted sweep still leaves a usable prefix.
inline std::vector<TrialRecord> run_evaluation(const ExperimentConfig& cfg,
                                               const ControllerFactory& make_ctrl,
                                               const std::string& model_id,
                                               std::uint64_t base_seed,
                                               CsvWriter* csv = nullptr) {
  const std::size_t n_kappa = cfg.eval.kappa_grid.size();
  const std::size_t n_trials = static_cast<std::size_t>(cfg.eval.trials_per_kappa);
  const std::size_t total = n_kappa * n_trials;

  std::vector<TrialRecord> records(total);
  std::vector<std::atomic<bool>> ready(total);
  for (auto& r : ready) r.store(false);

  const int threads = std::max(1, cfg.eval.threads);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::condition_variable cv;
  std::mutex cv_mutex;

  auto worker = [&]() {
    std::unique_ptr<Controller> ctrl = make_ctrl();
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) break;
      const std::size_t k_idx = i / n_trials;
      const std::size_t t_idx = i % n_trials;
      try {
        const double kappa = cfg.eval.kappa_grid[k_idx];
        records[i] = run_trial(cfg, *ctrl, model_id, kappa,
                               trial_seed(base_seed, model_id, k_idx, t_idx));
        ready[i].store(true, std::memory_order_release);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(total);  // stop handing out work
      }
      cv.notify_all();
    }
    cv.notify_all();
  };

  if (threads == 1) {
    // Serial fast path: run in order, stream rows immediately.
    std::unique_ptr<Controller> ctrl = make_ctrl();
    for (std::size_t i = 0; i < total; ++i) {
      const std::size_t k_idx = i / n_trials;
      const std::size_t t_idx = i % n_trials;
      const double kappa = cfg.eval.kappa_grid[k_idx];
      records[i] = run_trial(cfg, *ctrl, model_id, kappa,
                             trial_seed(base_seed, model_id, k_idx, t_idx));
      if (csv != nullptr) csv->write_raw_row(trial_csv_row(records[i]));
    }
    return records;
  }

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);

  // Stream rows in index order as soon as each becomes ready.
  std::size_t flushed = 0;
  while (flushed < total) {
    std::unique_lock<std::mutex> lock(cv_mutex);
    cv.wait_for(lock, std::chrono::milliseconds(50));
    lock.unlock();
    while (flushed < total &&
           ready[flushed].load(std::memory_order_acquire)) {
      if (csv != nullptr) csv->write_raw_row(trial_csv_row(records[flushed]));
      ++flushed;
    }
    std::lock_guard<std::mutex> err_lock(err_mutex);
    if (first_error) break;
  }
  for (auto& th : pool) th.join();
  {
    std::lock_guard<std::mutex> err_lock(err_mutex);
    if (first_error) std::rethrow_exception(first_error);
  }
  // Flush anything that completed after the last poll.
  while (flushed < total && ready[flushed].load(std::memory_order_acquire)) {
    if (csv != nullptr) csv->write_raw_row(trial_csv_row(records[flushed]));
    ++flushed;
  }
  return records;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct KappaAggregate {
  double kappa = 0.0;
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

// Linear-interpolation quantile on a sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) {
    throw std::invalid_argument("quantile of empty sample");
  }
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::vector<KappaAggregate> aggregate_by_kappa(
    const std::vector<TrialRecord>& records) {
  std::vector<double> kappas;
  for (const TrialRecord& r : records) {
    if (std::find(kappas.begin(), kappas.end(), r.kappa) == kappas.end()) {
      kappas.push_back(r.kappa);
    }
  }
  std::sort(kappas.begin(), kappas.end());

  std::vector<KappaAggregate> out;
  for (double kappa : kappas) {
    std::vector<double> returns;
    for (const TrialRecord& r : records) {
      if (r.kappa == kappa) returns.push_back(r.episode_return);
    }
    std::sort(returns.begin(), returns.end());
    KappaAggregate agg;
    agg.kappa = kappa;
    agg.n = static_cast<int>(returns.size());
    for (double v : returns) agg.mean += v;
    agg.mean /= static_cast<double>(returns.size());
    for (double v : returns) {
      agg.stddev += (v - agg.mean) * (v - agg.mean);
    }
    agg.stddev = std::sqrt(agg.stddev / static_cast<double>(returns.size()));
    agg.min = returns.front();
    agg.max = returns.back();
    agg.q25 = sorted_quantile(returns, 0.25);
    agg.median = sorted_quantile(returns, 0.5);
    agg.q75 = sorted_quantile(returns, 0.75);
    out.push_back(agg);
  }
  return out;
}

inline double mean_return(const std::vector<TrialRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("mean_return of empty record set");
  }
  double sum = 0.0;
  for (const TrialRecord& r : records) sum += r.episode_return;
  return sum / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------
// Trajectory logging
// ---------------------------------------------------------------------------

inline std::vector<std::string> trajectory_csv_header() {
  return {"step",    "q_l",     "q_r",     "o_y",   "o_y_dot", "f_l",
          "f_r",     "f_goal",  "a_l",     "a_r",   "phi_l",   "phi_r",
          "u_eff_l", "u_eff_r", "h_l",     "h_r",   "r_force", "r_obj",
          "r_act",   "r_total"};
}

// One row per transition. Positions, object state, and forces are the raw
// post-step values; u_eff_l/u_eff_r are the bias-scaled commands the
// actuators received, and h_l/h_r are the sticky flags that scaled this
// step's action (they update only after the step).
inline std::vector<double> trajectory_csv_row(const StepInfo& info) {
  return {static_cast<double>(info.step),
          info.raw.q_l,
          info.raw.q_r,
          info.raw.o_y,
          info.raw.o_y_dot,
          info.raw.f_l,
          info.raw.f_r,
          info.f_goal,
          info.a[0],
          info.a[1],
          info.phi[0],
          info.phi[1],
          info.u_eff[0],
          info.u_eff[1],
          static_cast<double>(info.h_used[0]),
          static_cast<double>(info.h_used[1]),
          info.terms.force,
          info.terms.obj,
          info.terms.act,
          info.reward};
}

// Rolls one full episode, optionally logging every transition. Returns the
// infos for programmatic inspection.
inline std::vector<StepInfo> rollout_episode(Env& env, Controller& ctrl,
                                             CsvWriter* csv = nullptr) {
  std::vector<StepInfo> infos;
  std::vector<double> obs = env.reset();
  while (!env.done()) {
    const std::array<double, 2> action = ctrl.act(obs, env);
    StepOutput out = env.step(action);
    if (csv != nullptr) csv->write_row(trajectory_csv_row(out.info));
    infos.push_back(out.info);
    obs = std::move(out.obs);
  }
  return infos;
}

// ---------------------------------------------------------------------------
// Calibration report
// ---------------------------------------------------------------------------

struct CalibrationReport {
  struct SlopeEntry {
    double kappa = 0.0;
    double b2 = 0.0;
    double slope = 0.0;  // [N/m]
  };
  struct ClosingEntry {
    double b2 = 0.0;
    int steps = 0;
  };
  std::vector<SlopeEntry> slopes;
  std::vector<ClosingEntry> closing_times;
  double ref_slope_sponge = 0.0;
  double ref_slope_wood = 0.0;
};

// Evenly spaced constant-command grid: spacing, 2*spacing, ..., up to dq_max.
inline std::vector<double> calibration_grid(double spacing, double dq_max) {
  if (!(spacing > 0.0) || spacing > dq_max) {
    throw std::invalid_argument("calibration grid spacing must lie in (0, dq_max]");
  }
  std::vector<double> grid;
  for (int k = 1; k * spacing <= dq_max * (1.0 + 1e-12); ++k) {
    grid.push_back(std::min(k * spacing, dq_max));
  }
  return grid;
}

// Sweeps kappa x b2, regressing steady-state force on the commanded offset
// for each combination, and measures full-speed closing times per b2. When
// out_dir is nonempty, emits slope/closing-time tables and per-episode
// force/position trajectories as CSV.
inline CalibrationReport run_calibration(const ExperimentConfig& cfg,
                                         const std::string& out_dir = "") {
  const std::vector<double> kappas{0.0, 0.5, 1.0};
  const std::vector<double> b2s{-13.0, -9.0, -6.0};
  const std::vector<double> grid =
      calibration_grid(3e-4, cfg.actuator.dq_max);

  CalibrationReport report;
  report.ref_slope_sponge = cfg.ref_slope_sponge;
  report.ref_slope_wood = cfg.ref_slope_wood;

  std::unique_ptr<CsvWriter> slope_csv, closing_csv, traj_csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    slope_csv = std::make_unique<CsvWriter>(
        (std::filesystem::path(out_dir) / "calibration_slopes.csv").string(),
        std::vector<std::string>{"kappa", "b2", "slope", "ref_slope_sponge",
                                 "ref_slope_wood"});
    closing_csv = std::make_unique<CsvWriter>(
        (std::filesystem::path(out_dir) / "calibration_closing_times.csv")
            .string(),
        std::vector<std::string>{"b2", "steps_to_contact"});
    traj_csv = std::make_unique<CsvWriter>(
        (std::filesystem::path(out_dir) / "calibration_trajectories.csv")
            .string(),
        std::vector<std::string>{"kappa", "b2", "dq_des", "step", "q", "f"});
  }

  for (double kappa : kappas) {
    const auto [rho, f_alpha] = kappa_to_contact(kappa, cfg.stiff_at_one);
    ContactParams cp = cfg.contact;
    cp.rho = rho;
    cp.f_alpha = f_alpha;
    for (double b2 : b2s) {
      ActuatorParams ap = cfg.actuator;
      ap.b2 = b2;
      const double slope = calibrate_slope(cp, ap, grid, cfg.calibration);
      report.slopes.push_back({kappa, b2, slope});
      if (slope_csv) {
        slope_csv->write_row({kappa, b2, slope, cfg.ref_slope_sponge,
                              cfg.ref_slope_wood});
      }
      if (traj_csv) {
        for (double dq : grid) {
          const CalibrationSample s =
              calibration_episode(cp, ap, dq, cfg.calibration);
          for (int step = 0; step < s.steps; ++step) {
            traj_csv->write_row({kappa, b2, dq, static_cast<double>(step),
                                 s.q_history[static_cast<std::size_t>(step)],
                                 s.f_history[static_cast<std::size_t>(step)]});
          }
        }
      }
    }
  }

  const double r_o = cfg.calibration.object_width / 2.0;
  for (double b2 : b2s) {
    ActuatorParams ap = cfg.actuator;
    ap.b2 = b2;
    const int steps = closing_time(ap, ap.q_max, r_o);
    report.closing_times.push_back({b2, steps});
    if (closing_csv) closing_csv->write_row({b2, static_cast<double>(steps)});
  }
  return report;
}

}  // namespace gripforce

#endif  // GRIPFORCE_EVAL_HPP_
