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

#include "gripforce/agent.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gripforce/mlp.hpp"
#include "gripforce/rng.hpp"
#include "test_util.hpp"

namespace gripforce {
namespace {

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

TEST(Mlp, ShapesAndParameterCount) {
  const Mlp net({3, 4, 2});
  EXPECT_EQ(net.in_dim(), 3);
  EXPECT_EQ(net.out_dim(), 2);
  EXPECT_EQ(net.layer_count(), 2);
  // (4*3 + 4) + (2*4 + 2)
  EXPECT_EQ(net.param_count(), 26);
  EXPECT_THROW(Mlp({5}), std::invalid_argument);
  EXPECT_THROW(Mlp({3, 0, 2}), std::invalid_argument);
}

TEST(Mlp, HandComputedForward) {
  Mlp net({2, 2, 1});
  // Layer 0: W = [[1, -1], [0.5, 2]], b = [0.1, -0.2]
  // Layer 1: W = [[2, -3]], b = [0.25]
  net.params() = {1.0, -1.0, 0.5, 2.0, 0.1, -0.2, 2.0, -3.0, 0.25};
  const std::vector<double> y = net.forward({1.0, 2.0});
  // z0 = [1 - 2 + 0.1, 0.5 + 4 - 0.2] = [-0.9, 4.3]; relu -> [0, 4.3]
  // y  = 2*0 - 3*4.3 + 0.25 = -12.65
  ASSERT_EQ(y.size(), 1u);
  EXPECT_DOUBLE_EQ(y[0], -12.65);
}

TEST(Mlp, ReluOutputOption) {
  Mlp net({1, 1}, /*relu_output=*/true);
  net.params() = {1.0, 0.0};  // identity weight, zero bias
  EXPECT_DOUBLE_EQ(net.forward({2.0})[0], 2.0);
  EXPECT_DOUBLE_EQ(net.forward({-2.0})[0], 0.0);
}

TEST(Mlp, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(51);
  for (int trial = 0; trial < 5; ++trial) {
    Mlp net({3, 5, 4, 2});
    std::vector<double> x(3);
    // Resample until every hidden unit is clearly away from its kink.
    double margin = 0.0;
    do {
      net.init_he(rng);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      margin = testutil::relu_margin(net.sizes(), net.params(), 0, x, false);
    } while (margin < 1e-3);

    // Loss: weighted sum of outputs (fixed weights so dL/dy is constant).
    const std::vector<double> wy{0.7, -1.3};
    Mlp::Cache cache;
    const std::vector<double> y = net.forward(x, &cache);
    (void)y;
    net.zero_grads();
    net.backward(cache, wy);

    const auto loss = [&](const std::vector<double>& theta) {
      Mlp probe({3, 5, 4, 2});
      probe.params() = theta;
      const std::vector<double> out = probe.forward(x);
      return wy[0] * out[0] + wy[1] * out[1];
    };
    const std::vector<double> fd = testutil::finite_diff(loss, net.params());
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double denom = std::max(1e-6, std::abs(fd[i]));
      EXPECT_LT(std::abs(fd[i] - net.grads()[i]) / denom, 1e-5) << "param " << i;
    }
  }
}

TEST(Mlp, InputGradientMatchesFiniteDifferences) {
  Rng rng(52);
  Mlp net({4, 6, 3});
  std::vector<double> x(4);
  double margin = 0.0;
  do {
    net.init_he(rng);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    margin = testutil::relu_margin(net.sizes(), net.params(), 0, x, false);
  } while (margin < 1e-3);

  const std::vector<double> wy{0.5, 1.0, -0.25};
  Mlp::Cache cache;
  net.forward(x, &cache);
  net.zero_grads();
  const std::vector<double> dx = net.backward(cache, wy);

  const auto loss = [&](const std::vector<double>& xin) {
    const std::vector<double> out = net.forward(xin);
    return wy[0] * out[0] + wy[1] * out[1] + wy[2] * out[2];
  };
  const std::vector<double> fd = testutil::finite_diff(loss, x);
  for (std::size_t i = 0; i < fd.size(); ++i) {
    EXPECT_NEAR(dx[i], fd[i], 1e-6 * std::max(1.0, std::abs(fd[i])));
  }
}

TEST(Mlp, GradientsAccumulateAcrossCalls) {
  Rng rng(53);
  Mlp net({2, 3, 1});
  net.init_he(rng);
  const std::vector<double> x{0.3, -0.7};
  Mlp::Cache cache;
  net.forward(x, &cache);
  net.zero_grads();
  net.backward(cache, {1.0});
  const std::vector<double> once = net.grads();
  net.backward(cache, {1.0});
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_DOUBLE_EQ(net.grads()[i], 2.0 * once[i]);
  }
  net.zero_grads();
  for (double g : net.grads()) EXPECT_EQ(g, 0.0);
}

TEST(Mlp, DimensionValidation) {
  Mlp net({2, 3, 1});
  EXPECT_THROW(net.forward({1.0}), std::invalid_argument);
  Mlp::Cache cache;
  net.forward({1.0, 2.0}, &cache);
  EXPECT_THROW(net.backward(cache, {1.0, 2.0}), std::invalid_argument);
  Mlp::Cache empty;
  EXPECT_THROW(net.backward(empty, {1.0}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Gaussian policy
// ---------------------------------------------------------------------------

GaussianPolicy make_policy(int obs_dim, int hidden, bool shared,
                           std::uint64_t seed) {
  GaussianPolicy p(obs_dim, hidden, shared);
  Rng rng(seed);
  p.init_weights(rng);
  return p;
}

TEST(GaussianPolicy, LogProbClosedForm) {
  GaussianPolicy p = make_policy(3, 4, false, 61);
  const std::array<double, 2> mu{0.2, -0.4};
  const std::array<double, 2> a{0.5, -1.0};
  // log_std is zero after init: two unit Gaussians.
  double expect = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double z = a[i] - mu[i];
    expect += -0.5 * z * z - 0.5 * std::log(2.0 * M_PI);
  }
  EXPECT_NEAR(p.log_prob(mu, a), expect, 1e-12);
}

TEST(GaussianPolicy, LogProbIntegratesToOne) {
  // Discretized 2-D integral of exp(log_prob) over a wide box.
  GaussianPolicy p = make_policy(2, 3, false, 62);
  const std::array<double, 2> mu{0.1, -0.3};
  const double step = 0.02;
  double integral = 0.0;
  for (double x = -6.0; x <= 6.0; x += step) {
    for (double y = -6.0; y <= 6.0; y += step) {
      integral += std::exp(p.log_prob(mu, {mu[0] + x, mu[1] + y}));
    }
  }
  integral *= step * step;
  EXPECT_NEAR(integral, 1.0, 1e-3);
}

TEST(GaussianPolicy, EntropyClosedForm) {
  GaussianPolicy p = make_policy(2, 3, false, 63);
  // Unit sigma in both dimensions.
  EXPECT_NEAR(p.entropy(), 1.0 + std::log(2.0 * M_PI), 1e-12);
  // Raising one log-std by c raises the entropy by exactly c.
  std::vector<double> flat = p.flat_params();
  flat[flat.size() - 2] += 0.7;
  p.set_flat_params(flat);
  EXPECT_NEAR(p.entropy(), 1.0 + std::log(2.0 * M_PI) + 0.7, 1e-12);
}

TEST(GaussianPolicy, SampleStatistics) {
  GaussianPolicy p = make_policy(3, 4, false, 64);
  const std::vector<double> obs{0.1, -0.2, 0.3};
  const std::array<double, 2> mu = p.mean(obs);
  Rng rng(65);
  const int n = 20000;
  std::array<double, 2> sum{0.0, 0.0}, sumsq{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const std::array<double, 2> a = p.sample_action(obs, rng);
    for (int k = 0; k < 2; ++k) {
      sum[k] += a[k];
      sumsq[k] += (a[k] - mu[k]) * (a[k] - mu[k]);
    }
  }
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(sum[k] / n, mu[k], 4.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(std::sqrt(sumsq[k] / n), 1.0, 0.05);  // sigma = exp(0) = 1
  }
}

TEST(GaussianPolicy, EvaluateMatchesInference) {
  for (bool shared : {false, true}) {
    GaussianPolicy p = make_policy(4, 5, shared, 66);
    const std::vector<double> obs{0.3, -0.1, 0.7, 0.2};
    const std::array<double, 2> a{0.4, -0.6};
    GaussianPolicy::Caches c;
    const GaussianPolicy::EvalResult r = p.evaluate(obs, a, c);
    const std::array<double, 2> mu = p.mean(obs);
    EXPECT_EQ(r.mean[0], mu[0]);
    EXPECT_EQ(r.mean[1], mu[1]);
    EXPECT_EQ(r.value, p.value(obs));
    EXPECT_EQ(r.log_prob, p.log_prob(mu, a));
    EXPECT_EQ(r.entropy, p.entropy());
  }
}

TEST(GaussianPolicy, PolicyHeadStartsNearZero) {
  Rng probe(67);
  for (bool shared : {false, true}) {
    GaussianPolicy p = make_policy(6, 8, shared, 68);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> obs(6);
      for (double& v : obs) v = probe.uniform(-1.0, 1.0);
      const std::array<double, 2> mu = p.mean(obs);
      EXPECT_LT(std::abs(mu[0]), 0.1);
      EXPECT_LT(std::abs(mu[1]), 0.1);
    }
  }
}

// Analytic gradients of a composite loss (log-prob + value penalty +
// entropy bonus) against central finite differences over every parameter.
TEST(GaussianPolicy, BackwardMatchesFiniteDifferences) {
  Rng rng(69);
  for (bool shared : {false, true}) {
    for (int trial = 0; trial < 3; ++trial) {
      GaussianPolicy p(4, 5, shared);
      std::vector<double> obs(4);
      std::array<double, 2> action{};
      double margin = 0.0;
      do {
        p.init_weights(rng);
        for (double& v : obs) v = rng.uniform(-1.0, 1.0);
        action = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        margin = testutil::policy_margin(p, obs);
      } while (margin < 1e-3);

      const double ent_w = 0.1;
      GaussianPolicy::Caches c;
      const GaussianPolicy::EvalResult r = p.evaluate(obs, action, c);
      p.zero_grads();
      // L = log_prob + 0.5 * V^2 + ent_w * entropy.
      std::array<double, 2> dmean{}, dlog_std{};
      const std::array<double, 2>& ls = p.log_std();
      for (int i = 0; i < 2; ++i) {
        const double sigma = std::exp(ls[i]);
        const double z = (action[i] - r.mean[i]) / sigma;
        dmean[i] = z / sigma;
        dlog_std[i] = z * z - 1.0 + ent_w;
      }
      p.backward(c, dmean, r.value, dlog_std);
      const std::vector<double> analytic = p.flat_grads();

      const auto loss = [&](const std::vector<double>& theta) {
        GaussianPolicy probe(4, 5, shared);
        probe.set_flat_params(theta);
        GaussianPolicy::Caches cc;
        const GaussianPolicy::EvalResult rr = probe.evaluate(obs, action, cc);
        return rr.log_prob + 0.5 * rr.value * rr.value + ent_w * rr.entropy;
      };
      const std::vector<double> fd =
          testutil::finite_diff(loss, p.flat_params());
      ASSERT_EQ(fd.size(), analytic.size());
      for (std::size_t i = 0; i < fd.size(); ++i) {
        const double denom = std::max(1e-4, std::abs(fd[i]));
        EXPECT_LT(std::abs(fd[i] - analytic[i]) / denom, 1e-5)
            << (shared ? "shared" : "separate") << " param " << i;
      }
    }
  }
}

TEST(GaussianPolicy, FlatParamsRoundTrip) {
  for (bool shared : {false, true}) {
    GaussianPolicy p = make_policy(5, 6, shared, 70);
    const std::vector<double> flat = p.flat_params();
    EXPECT_EQ(static_cast<int>(flat.size()), p.param_count());
    GaussianPolicy q(5, 6, shared);
    q.set_flat_params(flat);
    EXPECT_EQ(q.flat_params(), flat);
    EXPECT_THROW(q.set_flat_params(std::vector<double>(flat.size() - 1)),
                 std::invalid_argument);
  }
}

// ---------------------------------------------------------------------------
// Adam and gradient clipping
// ---------------------------------------------------------------------------

TEST(Adam, MatchesHandComputedTrajectory) {
  // Minimizing x^2 from x = 1 with lr = 0.1; reference values computed from
  // the textbook update rule step by step.
  Adam opt(1, 0.1);
  std::vector<double> x{1.0};
  std::vector<double> g{2.0 * x[0]};
  opt.step(x, g);
  EXPECT_NEAR(x[0], 0.9000000005, 1e-12);
  g[0] = 2.0 * x[0];
  opt.step(x, g);
  EXPECT_NEAR(x[0], 0.8004122286917928, 1e-12);
  g[0] = 2.0 * x[0];
  opt.step(x, g);
  EXPECT_NEAR(x[0], 0.7015862729460303, 1e-12);
}

TEST(Adam, ConvergesOnQuadraticBowl) {
  Adam opt(2, 0.05);
  std::vector<double> x{0.0, 0.0};
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> g{2.0 * (x[0] - 3.0), 2.0 * (x[1] + 2.0)};
    opt.step(x, g);
  }
  EXPECT_NEAR(x[0], 3.0, 1e-2);
  EXPECT_NEAR(x[1], -2.0, 1e-2);
}

TEST(Adam, SizeValidation) {
  Adam opt(2, 0.1);
  std::vector<double> x{1.0};
  std::vector<double> g{1.0, 1.0};
  EXPECT_THROW(opt.step(x, g), std::invalid_argument);
}

TEST(ClipGradNorm, ScalesDownOnlyWhenAboveThreshold) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-9);
  EXPECT_NEAR(g[1], 0.8, 1e-9);
  std::vector<double> small{0.1, 0.2};
  const std::vector<double> copy = small;
  EXPECT_NEAR(clip_grad_norm(small, 1.0), std::sqrt(0.05), 1e-15);
  EXPECT_EQ(small, copy);  // untouched below the threshold
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "gripforce_ckpt_test";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  // Rewrites a byte range of a file.
  static void patch(const std::string& file, std::streamoff offset,
                    const std::vector<char>& bytes) {
    std::fstream f(file, std::ios::binary | std::ios::in | std::ios::out);
    ASSERT_TRUE(f.good());
    f.seekp(offset);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  static void truncate_to(const std::string& file, std::uintmax_t size) {
    std::filesystem::resize_file(file, size);
  }

  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripPreservesEverything) {
  for (bool shared : {false, true}) {
    GaussianPolicy p = make_policy(30, 50, shared, 71);
    const std::string file = path(shared ? "shared.ckpt" : "separate.ckpt");
    checkpoint_save(file, p);
    const GaussianPolicy q = checkpoint_load(file);
    EXPECT_EQ(q.obs_dim(), 30);
    EXPECT_EQ(q.hidden(), 50);
    EXPECT_EQ(q.shared_trunk(), shared);
    EXPECT_EQ(q.flat_params(), p.flat_params());
  }
}

TEST_F(CheckpointTest, MissingFileNamesThePath) {
  const std::string file = path("does_not_exist.ckpt");
  try {
    checkpoint_load(file);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(file), std::string::npos);
  }
}

TEST_F(CheckpointTest, RejectsForeignFile) {
  const std::string file = path("foreign.bin");
  std::ofstream(file) << "definitely not a checkpoint, long enough to read";
  try {
    checkpoint_load(file);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("not a gripforce checkpoint"), std::string::npos);
    EXPECT_NE(msg.find(file), std::string::npos);
  }
}

TEST_F(CheckpointTest, RejectsUnsupportedVersion) {
  GaussianPolicy p = make_policy(4, 5, false, 72);
  const std::string file = path("version.ckpt");
  checkpoint_save(file, p);
  patch(file, 16, {9, 0, 0, 0});  // version u32 right after the magic
  try {
    checkpoint_load(file);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("version 9"), std::string::npos);
    EXPECT_NE(msg.find("expected 1"), std::string::npos);
  }
}

TEST_F(CheckpointTest, RejectsBadLayerSizes) {
  GaussianPolicy p = make_policy(4, 5, false, 73);
  const std::string file = path("sizes.ckpt");
  checkpoint_save(file, p);
  // sizes[3] lives at 16 (magic) + 4 (version) + 4 (flags) + 4 (count) + 12.
  patch(file, 40, {3, 0, 0, 0});
  try {
    checkpoint_load(file);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("layer sizes"), std::string::npos);
  }
}

TEST_F(CheckpointTest, RejectsParameterCountMismatch) {
  GaussianPolicy p = make_policy(4, 5, false, 74);
  const std::string file = path("count.ckpt");
  checkpoint_save(file, p);
  patch(file, 44, {1, 0, 0, 0, 0, 0, 0, 0});  // u64 param count
  try {
    checkpoint_load(file);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("parameter count mismatch"), std::string::npos);
    EXPECT_NE(msg.find("found 1"), std::string::npos);
  }
}

TEST_F(CheckpointTest, RejectsTruncatedFile) {
  GaussianPolicy p = make_policy(4, 5, false, 75);
  const std::string file = path("trunc.ckpt");
  checkpoint_save(file, p);
  const auto full = std::filesystem::file_size(file);
  for (std::uintmax_t cut : {full - 16, static_cast<std::uintmax_t>(52),
                             static_cast<std::uintmax_t>(20)}) {
    truncate_to(file, cut);
    EXPECT_THROW(checkpoint_load(file), std::runtime_error) << "cut=" << cut;
    checkpoint_save(file, p);  // restore for the next cut
  }
}

}  // namespace
}  // namespace gripforce
