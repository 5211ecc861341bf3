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

#include "gripforce/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gripforce/config.hpp"
#include "gripforce/csv.hpp"

namespace gripforce {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gripforce_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

fs::path write_file(const fs::path& dir, const std::string& name,
                    const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << body;
  return p;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("gripforce");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli(static_cast<int>(argv.size()), argv.data());
}

// ---------------------------------------------------------------------------
// Configuration files
// ---------------------------------------------------------------------------

TEST(Config, DefaultsValidateAndCoverTheGrid) {
  const ExperimentConfig cfg = default_config();
  EXPECT_NO_THROW(validate_config(cfg));
  ASSERT_EQ(cfg.eval.kappa_grid.size(), 11u);
  EXPECT_DOUBLE_EQ(cfg.eval.kappa_grid.front(), 0.0);
  EXPECT_DOUBLE_EQ(cfg.eval.kappa_grid.back(), 1.0);
  EXPECT_DOUBLE_EQ(cfg.eval.kappa_grid[5], 0.5);
  EXPECT_EQ(cfg.ppo.total_steps, 4000000);
}

TEST(Config, LoadAppliesOverrides) {
  TempDir dir;
  const fs::path p = write_file(dir.path, "exp.cfg",
                                "# experiment overrides\n"
                                "\n"
                                "ppo.learning_rate = 1e-3   # inline comment\n"
                                "  env.episode_len=80\n"
                                "random.stiff_at_one = false\n"
                                "eval.kappa_grid = 0:1:3\n"
                                "curriculum.s_end = 5e5\n");
  const ExperimentConfig cfg = load_config(p.string());
  EXPECT_DOUBLE_EQ(cfg.ppo.learning_rate, 1e-3);
  EXPECT_EQ(cfg.env.episode_len, 80);
  EXPECT_FALSE(cfg.stiff_at_one);
  ASSERT_EQ(cfg.eval.kappa_grid.size(), 3u);
  EXPECT_DOUBLE_EQ(cfg.eval.kappa_grid[1], 0.5);
  EXPECT_DOUBLE_EQ(cfg.curriculum.s_end, 5e5);
  // Untouched keys keep their defaults.
  EXPECT_DOUBLE_EQ(cfg.actuator.q_max, 0.045);
}

TEST(Config, ErrorsNameTheFileAndLine) {
  TempDir dir;
  {
    const fs::path p =
        write_file(dir.path, "unknown.cfg", "\nppo.learnig_rate = 1e-3\n");
    try {
      load_config(p.string());
      FAIL() << "expected unknown-key error";
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      EXPECT_NE(msg.find(p.string() + ":2"), std::string::npos) << msg;
      EXPECT_NE(msg.find("ppo.learnig_rate"), std::string::npos) << msg;
    }
  }
  {
    const fs::path p = write_file(dir.path, "noeq.cfg", "ppo.gamma 0.99\n");
    try {
      load_config(p.string());
      FAIL() << "expected malformed-line error";
    } catch (const std::runtime_error& e) {
      EXPECT_NE(std::string(e.what()).find(":1"), std::string::npos);
    }
  }
  {
    const fs::path p =
        write_file(dir.path, "badval.cfg", "ppo.gamma = fast\n");
    try {
      load_config(p.string());
      FAIL() << "expected bad-value error";
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      EXPECT_NE(msg.find("ppo.gamma"), std::string::npos) << msg;
      EXPECT_NE(msg.find("fast"), std::string::npos) << msg;
    }
  }
  EXPECT_THROW(load_config((dir.path / "missing.cfg").string()),
               std::runtime_error);
}

TEST(Config, ValidationCatchesCrossFieldViolations) {
  {
    ExperimentConfig cfg = default_config();
    cfg.ppo.gamma = 1.5;
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  }
  {
    ExperimentConfig cfg = default_config();
    cfg.actuator.dq_max = cfg.actuator.q_max;  // must be strictly inside
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  }
  {
    ExperimentConfig cfg = default_config();
    cfg.ranges.b2_range = {-6.0, -13.0};  // inverted
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  }
  {
    ExperimentConfig cfg = default_config();
    cfg.calibration.object_width = 2.0 * cfg.actuator.q_max;
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  }
  // A loaded file with an out-of-range value fails at validation time.
  TempDir dir;
  const fs::path p = write_file(dir.path, "bad.cfg", "ppo.gamma = 1.5\n");
  EXPECT_THROW(load_config(p.string()), std::invalid_argument);
}

TEST(Config, KappaGridSpecForms) {
  const auto linear = parse_kappa_grid("0:1:5");
  ASSERT_EQ(linear.size(), 5u);
  EXPECT_DOUBLE_EQ(linear[0], 0.0);
  EXPECT_DOUBLE_EQ(linear[1], 0.25);
  EXPECT_DOUBLE_EQ(linear[4], 1.0);

  const auto single = parse_kappa_grid("0.3:0.9:1");
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0], 0.3);

  const auto list = parse_kappa_grid("0,0.5,1");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_DOUBLE_EQ(list[1], 0.5);

  EXPECT_THROW(parse_kappa_grid("0:1"), std::invalid_argument);
  EXPECT_THROW(parse_kappa_grid("0:1:0"), std::invalid_argument);
  EXPECT_THROW(parse_kappa_grid(""), std::invalid_argument);
  EXPECT_THROW(parse_kappa_grid("0,1.5"), std::invalid_argument);
}

TEST(Config, KeyRegistryIsComplete) {
  const auto keys = config_keys();
  EXPECT_GT(keys.size(), 50u);
  for (const char* k :
       {"actuator.q_max", "contact.k0", "random.kappa_lo", "env.sigma_f",
        "reward.alpha1", "curriculum.s_end", "ppo.learning_rate",
        "baseline.kp", "eval.kappa_grid", "calibration.servo_gain"}) {
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
}

TEST(Config, MakeEnvStartsAtTheInitialCurriculum) {
  const ExperimentConfig cfg = default_config();
  std::set<double> widths;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Env env = make_env(cfg, seed);
    env.reset();
    const EpisodeParams& ep = env.episode();
    EXPECT_GE(ep.w_o, cfg.curriculum.object_width_initial.lo);
    EXPECT_LE(ep.w_o, cfg.curriculum.object_width_initial.hi);
    EXPECT_DOUBLE_EQ(ep.o_y, 0.0);  // offsets open up only later
    widths.insert(ep.w_o);
  }
  EXPECT_GT(widths.size(), 10u);
}

// ---------------------------------------------------------------------------
// Command-line interface
// ---------------------------------------------------------------------------

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli({"--help"}), 0);
  EXPECT_EQ(run_cli({"calibrate", "--help"}), 0);
  EXPECT_EQ(run_cli({}), 1);                    // a subcommand is required
  EXPECT_EQ(run_cli({"frobnicate"}), 1);        // unknown subcommand
  EXPECT_EQ(run_cli({"evaluate"}), 1);          // --checkpoint is required
  EXPECT_EQ(run_cli({"rollout", "--controller", "psychic"}), 1);
}

TEST(Cli, RuntimeFailuresExitTwo) {
  TempDir dir;
  EXPECT_EQ(run_cli({"--out", (dir.path / "out").string(), "evaluate",
                     "--checkpoint", (dir.path / "nope.ckpt").string()}),
            2);
  const fs::path bad_cfg = write_file(dir.path, "bad.cfg", "no.such.key = 1\n");
  EXPECT_EQ(run_cli({"--config", bad_cfg.string(), "calibrate"}), 2);
}

TEST(Cli, CalibrateWritesTheReport) {
  TempDir dir;
  const std::string out = (dir.path / "out").string();
  ASSERT_EQ(run_cli({"--out", out, "calibrate"}), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "calibration_slopes.csv"));
  EXPECT_TRUE(fs::exists(fs::path(out) / "calibration_closing_times.csv"));
  EXPECT_TRUE(fs::exists(fs::path(out) / "calibration_trajectories.csv"));
}

TEST(Cli, BaselineEvalRollupAndCompare) {
  TempDir dir;
  const std::string out = (dir.path / "out").string();
  ASSERT_EQ(run_cli({"--out", out, "--seed", "3", "baseline-eval", "--trials",
                     "2", "--kappa-grid", "0,1"}),
            0);
  const fs::path eval_csv = fs::path(out) / "eval_baseline.csv";
  ASSERT_TRUE(fs::exists(eval_csv));
  const CsvTable table = read_csv(eval_csv.string());
  EXPECT_EQ(table.rows.size(), 4u);  // 2 kappas x 2 trials
  EXPECT_EQ(table.header, trial_csv_header());

  ASSERT_EQ(run_cli({"--out", out, "compare", eval_csv.string()}), 0);
  const CsvTable cmp = read_csv((fs::path(out) / "compare.csv").string());
  ASSERT_EQ(cmp.rows.size(), 1u);
  EXPECT_EQ(cmp.rows[0][0], "baseline");
}

TEST(Cli, RolloutWritesATrajectory) {
  TempDir dir;
  const std::string out = (dir.path / "out").string();
  ASSERT_EQ(
      run_cli({"--out", out, "rollout", "--controller", "baseline"}), 0);
  const CsvTable table = read_csv((fs::path(out) / "rollout.csv").string());
  EXPECT_EQ(table.rows.size(), 150u);
  EXPECT_EQ(table.header, trajectory_csv_header());
}

TEST(Cli, TrainThenEvaluateRoundTrip) {
  TempDir dir;
  const std::string out = (dir.path / "out").string();
  const fs::path cfg_path = write_file(dir.path, "tiny.cfg",
                                       "ppo.hidden = 8\n"
                                       "ppo.rollout_len = 64\n"
                                       "ppo.minibatch_size = 32\n"
                                       "ppo.epochs = 2\n"
                                       "ppo.total_steps = 128\n"
                                       "curriculum.s_end = 100\n"
                                       "eval.trials_per_kappa = 2\n"
                                       "eval.kappa_grid = 0.5:0.5:1\n");
  ASSERT_EQ(run_cli({"--config", cfg_path.string(), "--out", out, "--seed",
                     "9", "train"}),
            0);
  const fs::path ckpt = fs::path(out) / "final.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(fs::path(out) / "training_curve.csv"));

  ASSERT_EQ(run_cli({"--config", cfg_path.string(), "--out", out, "evaluate",
                     "--checkpoint", ckpt.string()}),
            0);
  const CsvTable table =
      read_csv((fs::path(out) / "eval_final.csv").string());
  EXPECT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0][0], "final");  // model id defaults to the stem
}

}  // namespace
}  // namespace gripforce
