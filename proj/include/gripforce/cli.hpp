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

#ifndef GRIPFORCE_CLI_HPP_
#define GRIPFORCE_CLI_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gripforce/config.hpp"
#include "gripforce/eval.hpp"
#include "gripforce/ppo.hpp"

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
// failure.

namespace gripforce {

namespace detail {

inline void print_aggregates(const std::vector<KappaAggregate>& aggs) {
  std::printf("%8s %6s %12s %12s %12s %12s %12s\n", "kappa", "n", "mean",
              "std", "q25", "median", "q75");
  for (const KappaAggregate& a : aggs) {
    std::printf("%8.2f %6d %12.4f %12.4f %12.4f %12.4f %12.4f\n", a.kappa,
                a.n, a.mean, a.stddev, a.q25, a.median, a.q75);
  }
}

struct CompareRow {
  std::string model;
  std::map<double, std::pair<double, double>> by_kappa;  // mean, std
  double overall_mean = 0.0;
};

// Re-aggregates evaluation CSVs (possibly several models per file) into one
// comparison row per model.
inline std::vector<CompareRow> build_comparison(
    const std::vector<std::string>& paths) {
  struct Bucket {
    std::vector<double> returns;
  };
  std::map<std::string, std::map<double, Bucket>> data;
  for (const std::string& path : paths) {
    const CsvTable table = read_csv(path);
    const int model_col = table.column("model");
    const int kappa_col = table.column("kappa");
    const int return_col = table.column("episode_return");
    if (model_col < 0 || kappa_col < 0 || return_col < 0) {
      throw std::runtime_error(
          "not an evaluation CSV (need model/kappa/episode_return): " + path);
    }
    for (const auto& row : table.rows) {
      data[row[static_cast<std::size_t>(model_col)]]
          [std::stod(row[static_cast<std::size_t>(kappa_col)])]
              .returns.push_back(
                  std::stod(row[static_cast<std::size_t>(return_col)]));
    }
  }
  std::vector<CompareRow> rows;
  for (const auto& [model, by_kappa] : data) {
    CompareRow row;
    row.model = model;
    double total = 0.0;
    long count = 0;
    for (const auto& [kappa, bucket] : by_kappa) {
      double mean = 0.0;
      for (double v : bucket.returns) mean += v;
      mean /= static_cast<double>(bucket.returns.size());
      double var = 0.0;
      for (double v : bucket.returns) var += (v - mean) * (v - mean);
      const double stddev =
          std::sqrt(var / static_cast<double>(bucket.returns.size()));
      row.by_kappa[kappa] = {mean, stddev};
      for (double v : bucket.returns) total += v;
      count += static_cast<long>(bucket.returns.size());
    }
    row.overall_mean = total / static_cast<double>(count);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline int cli(int argc, const char* const* argv) {
  CLI::App app{"gripforce: calibrated parallel-jaw grasp-force simulation, "
               "PPO training, and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "configuration file path")
      ->envname("GRIPFORCE_CONFIG");
  app.add_option("--seed", seed, "base random seed");
  app.add_option("--out", out_dir, "output directory");

  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "run the force-calibration sweep");

  CLI::App* train_cmd = app.add_subcommand("train", "train a PPO policy");
  bool no_randomize = false, no_inductive_bias = false;
  long steps_override = -1;
  double s_end_override = -1.0;
  train_cmd->add_flag("--no-randomize", no_randomize,
                      "pin stiffness and actuator speed (ablation)");
  train_cmd->add_flag("--no-inductive-bias", no_inductive_bias,
                      "disable the contact-state action scaling (ablation)");
  train_cmd->add_option("--steps", steps_override, "override ppo.total_steps");
  train_cmd->add_option("--s-end", s_end_override,
                        "override curriculum.s_end");

  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "evaluate a policy checkpoint");
  std::string ckpt_path, model_id;
  bool stochastic = false;
  int trials_override = -1, threads_override = -1;
  std::string grid_override;
  eval_cmd->add_option("--checkpoint", ckpt_path, "policy checkpoint")
      ->required();
  eval_cmd->add_option("--model-id", model_id,
                       "label in the output CSV (default: checkpoint stem)");
  eval_cmd->add_flag("--stochastic", stochastic,
                     "sample actions instead of using the mean");
  eval_cmd->add_option("--trials", trials_override,
                       "override eval.trials_per_kappa");
  eval_cmd->add_option("--threads", threads_override, "override eval.threads");
  eval_cmd->add_option("--kappa-grid", grid_override,
                       "override eval.kappa_grid (lo:hi:count or list)");

  CLI::App* baseline_cmd = app.add_subcommand(
      "baseline-eval", "evaluate the hand-modeled baseline controller");
  int b_trials_override = -1, b_threads_override = -1;
  std::string b_grid_override;
  baseline_cmd->add_option("--trials", b_trials_override,
                           "override eval.trials_per_kappa");
  baseline_cmd->add_option("--threads", b_threads_override,
                           "override eval.threads");
  baseline_cmd->add_option("--kappa-grid", b_grid_override,
                           "override eval.kappa_grid");

  CLI::App* rollout_cmd = app.add_subcommand(
      "rollout", "run one verbose episode and log every step to CSV");
  std::string rollout_ckpt, rollout_ctrl = "baseline";
  bool rollout_stochastic = false;
  rollout_cmd->add_option("--checkpoint", rollout_ckpt,
                          "policy checkpoint (implies --controller policy)");
  rollout_cmd
      ->add_option("--controller", rollout_ctrl,
                   "one of: baseline, zero, random, policy")
      ->check(CLI::IsMember({"baseline", "zero", "random", "policy"}));
  rollout_cmd->add_flag("--stochastic", rollout_stochastic,
                        "sample actions instead of using the mean");

  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "join evaluation CSVs into a per-model summary table");
  std::vector<std::string> compare_paths;
  compare_cmd->add_option("csvs", compare_paths, "evaluation CSV files")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    std::cerr << "run with --help for usage" << std::endl;
    return 1;
  }

  try {
    ExperimentConfig cfg =
        config_path.empty() ? default_config() : load_config(config_path);

    if (calibrate_cmd->parsed()) {
      const CalibrationReport rep = run_calibration(cfg, out_dir);
      std::printf("%8s %8s %12s\n", "kappa", "b2", "slope[N/m]");
      for (const auto& s : rep.slopes) {
        std::printf("%8.2f %8.1f %12.4f\n", s.kappa, s.b2, s.slope);
      }
      std::printf("reference slopes: sponge %.1f, wood %.1f\n",
                  rep.ref_slope_sponge, rep.ref_slope_wood);
      for (const auto& c : rep.closing_times) {
        std::printf("b2 %6.1f: %d steps to contact\n", c.b2, c.steps);
      }
      std::printf("wrote calibration CSVs to %s\n", out_dir.c_str());
      return 0;
    }

    if (train_cmd->parsed()) {
      cfg.ppo.seed = seed;
      if (no_randomize) cfg.env.randomize = false;
      if (no_inductive_bias) cfg.env.inductive_bias_enabled = false;
      if (steps_override > 0) cfg.ppo.total_steps = steps_override;
      if (s_end_override > 0.0) cfg.curriculum.s_end = s_end_override;
      const auto factory = [&cfg](std::uint64_t s) { return make_env(cfg, s); };
      const TrainResult res = train(factory, cfg.ppo, cfg.curriculum, out_dir);
      std::printf("trained %ld steps over %ld updates\n", res.steps,
                  res.updates);
      if (!res.best_checkpoint.empty()) {
        std::printf("best mean return over last %d episodes: %.4f\n",
                    cfg.ppo.eval_window, res.best_mean_return);
        std::printf("best checkpoint:  %s\n", res.best_checkpoint.c_str());
      }
      std::printf("final checkpoint: %s\n", res.final_checkpoint.c_str());
      std::printf("training curve:   %s\n", res.curve_csv.c_str());
      return 0;
    }

    if (eval_cmd->parsed()) {
      if (trials_override > 0) cfg.eval.trials_per_kappa = trials_override;
      if (threads_override > 0) cfg.eval.threads = threads_override;
      if (!grid_override.empty()) {
        cfg.eval.kappa_grid = parse_kappa_grid(grid_override);
      }
      if (stochastic) cfg.eval.stochastic = true;
      GaussianPolicy policy = checkpoint_load(ckpt_path);
      {
        const Env probe = make_env(cfg, 0);
        if (policy.obs_dim() != probe.obs_dim()) {
          throw std::runtime_error(
              "checkpoint " + ckpt_path + " has obs_dim " +
              std::to_string(policy.obs_dim()) +
              " but the configured environment produces obs_dim " +
              std::to_string(probe.obs_dim()));
        }
      }
      if (model_id.empty()) {
        model_id = std::filesystem::path(ckpt_path).stem().string();
      }
      std::filesystem::create_directories(out_dir);
      const std::string csv_path =
          (std::filesystem::path(out_dir) / ("eval_" + model_id + ".csv"))
              .string();
      CsvWriter csv(csv_path, trial_csv_header());
      const bool stoch = cfg.eval.stochastic;
      const ControllerFactory factory = [&policy, stoch]() {
        return std::make_unique<PolicyController>(policy, stoch);
      };
      const std::vector<TrialRecord> records =
          run_evaluation(cfg, factory, model_id, seed, &csv);
      detail::print_aggregates(aggregate_by_kappa(records));
      std::printf("overall mean return: %.4f over %zu trials\n",
                  mean_return(records), records.size());
      std::printf("wrote %s\n", csv_path.c_str());
      return 0;
    }

    if (baseline_cmd->parsed()) {
      if (b_trials_override > 0) cfg.eval.trials_per_kappa = b_trials_override;
      if (b_threads_override > 0) cfg.eval.threads = b_threads_override;
      if (!b_grid_override.empty()) {
        cfg.eval.kappa_grid = parse_kappa_grid(b_grid_override);
      }
      std::filesystem::create_directories(out_dir);
      const std::string csv_path =
          (std::filesystem::path(out_dir) / "eval_baseline.csv").string();
      CsvWriter csv(csv_path, trial_csv_header());
      const BaselineConfig bl = cfg.baseline;
      const ControllerFactory factory = [bl]() {
        return std::make_unique<BaselineController>(bl);
      };
      const std::vector<TrialRecord> records =
          run_evaluation(cfg, factory, "baseline", seed, &csv);
      detail::print_aggregates(aggregate_by_kappa(records));
      std::printf("overall mean return: %.4f over %zu trials\n",
                  mean_return(records), records.size());
      std::printf("wrote %s\n", csv_path.c_str());
      return 0;
    }

    if (rollout_cmd->parsed()) {
      if (!rollout_ckpt.empty()) rollout_ctrl = "policy";
      std::unique_ptr<Controller> ctrl;
      if (rollout_ctrl == "policy") {
        if (rollout_ckpt.empty()) {
          throw std::runtime_error("rollout --controller policy needs --checkpoint");
        }
        ctrl = std::make_unique<PolicyController>(checkpoint_load(rollout_ckpt),
                                                  rollout_stochastic);
      } else if (rollout_ctrl == "zero") {
        ctrl = std::make_unique<ZeroController>();
      } else if (rollout_ctrl == "random") {
        ctrl = std::make_unique<RandomController>();
      } else {
        ctrl = std::make_unique<BaselineController>(cfg.baseline);
      }
      std::uint64_t seed_state = seed;
      Env env = make_env(cfg, splitmix64(seed_state));
      env.set_curriculum(curriculum_at(cfg.curriculum.s_end, cfg.curriculum));
      ctrl->begin_trial(splitmix64(seed_state));
      std::filesystem::create_directories(out_dir);
      const std::string csv_path =
          (std::filesystem::path(out_dir) / "rollout.csv").string();
      CsvWriter csv(csv_path, trajectory_csv_header());
      const std::vector<StepInfo> infos = rollout_episode(env, *ctrl, &csv);
      double total = 0.0;
      for (const StepInfo& info : infos) total += info.reward;
      std::printf("episode return: %.4f over %zu steps\n", total,
                  infos.size());
      std::printf("final forces: %.4f / %.4f N (goal %.4f N)\n",
                  env.world().f_l, env.world().f_r, env.episode().f_goal);
      std::printf("wrote %s\n", csv_path.c_str());
      return 0;
    }

    if (compare_cmd->parsed()) {
      const std::vector<detail::CompareRow> rows =
          detail::build_comparison(compare_paths);
      // Union of kappa values across models, for the table columns.
      std::vector<double> kappas;
      for (const auto& row : rows) {
        for (const auto& [kappa, ms] : row.by_kappa) {
          if (std::find(kappas.begin(), kappas.end(), kappa) == kappas.end()) {
            kappas.push_back(kappa);
          }
        }
      }
      std::sort(kappas.begin(), kappas.end());

      std::filesystem::create_directories(out_dir);
      std::vector<std::string> header{"model"};
      for (double k : kappas) {
        header.push_back("mean_k" + format_double(k));
        header.push_back("std_k" + format_double(k));
      }
      header.push_back("overall_mean");
      CsvWriter csv((std::filesystem::path(out_dir) / "compare.csv").string(),
                    header);

      std::printf("%-16s", "model");
      for (double k : kappas) std::printf("  k=%-12.2f", k);
      std::printf("  %s\n", "overall");
      for (const auto& row : rows) {
        std::vector<std::string> cells{row.model};
        std::printf("%-16s", row.model.c_str());
        for (double k : kappas) {
          const auto it = row.by_kappa.find(k);
          if (it == row.by_kappa.end()) {
            std::printf("  %-14s", "-");
            cells.push_back("nan");
            cells.push_back("nan");
          } else {
            std::printf("  %6.1f±%-6.1f", it->second.first,
                        it->second.second);
            cells.push_back(format_double(it->second.first));
            cells.push_back(format_double(it->second.second));
          }
        }
        std::printf("  %8.2f\n", row.overall_mean);
        cells.push_back(format_double(row.overall_mean));
        csv.write_raw_row(cells);
      }
      return 0;
    }

    std::cerr << "usage error: no subcommand given" << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}

}  // namespace gripforce

#endif  // GRIPFORCE_CLI_HPP_
