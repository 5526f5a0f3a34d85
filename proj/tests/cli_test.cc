// Copyright 2026 The rsmc Authors. All Rights Reserved.
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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "fs_util.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell, capturing stdout and stderr together.
Run cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + RSMC_CLI_PATH + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const char* kTiny =
    " --hidden 8 --heads 2 --embed-dim 4 --classifier-hidden 8 --epochs 1 --batch 8";

TEST(Cli, SynthShapeAndDeterminism) {
  rsmc::testing::TempDir dir;
  const auto a = dir / "a.rsmc";
  const auto b = dir / "b.rsmc";
  const std::string flags = "synth --subjects 6 --classes 3 --per-subject 200 --T 10 --seed 7 --out ";
  auto r = cli(flags + a.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("B=1200"), std::string::npos) << r.out;
  ASSERT_EQ(cli(flags + b.string()).code, 0);
  EXPECT_EQ(rsmc::testing::read_file(a), rsmc::testing::read_file(b));
  EXPECT_TRUE(std::filesystem::exists(dir / "a.rsmc.json"));
}

TEST(Cli, SynthSeedFromEnvironment) {
  rsmc::testing::TempDir dir;
  const std::string base = "synth --subjects 2 --per-subject 6 --T 2 --out ";
  ASSERT_EQ(cli(base + (dir / "env.rsmc").string(), "RSMC_SEED=9").code, 0);
  ASSERT_EQ(cli(base + (dir / "flag.rsmc").string() + " --seed 9").code, 0);
  ASSERT_EQ(cli(base + (dir / "other.rsmc").string() + " --seed 10").code, 0);
  EXPECT_EQ(rsmc::testing::read_file(dir / "env.rsmc"), rsmc::testing::read_file(dir / "flag.rsmc"));
  EXPECT_NE(rsmc::testing::read_file(dir / "env.rsmc"), rsmc::testing::read_file(dir / "other.rsmc"));
  EXPECT_EQ(cli(base + (dir / "bad.rsmc").string(), "RSMC_SEED=abc").code, 2);
}

TEST(Cli, UsageErrorsExitTwo) {
  rsmc::testing::TempDir dir;
  EXPECT_EQ(cli("synth --subjects 0 --out " + (dir / "x.rsmc").string()).code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("loso --dataset " + (dir / "missing.rsmc").string() + " --out " + (dir / "r").string()).code, 2);
  EXPECT_EQ(cli("gradcheck --samples 0").code, 2);
  EXPECT_EQ(cli("gradcheck --force-dropout").code, 2);
  EXPECT_EQ(cli("export masks --run " + (dir / "nothing").string()).code, 2);
  EXPECT_EQ(cli("export spatial-attention --run " + (dir / "nothing").string()).code, 2);
}

TEST(Cli, BadConfigKeyListed) {
  rsmc::testing::TempDir dir;
  std::ofstream(dir / "run.conf") << "lr = 1e-3\nlearning_rate = 2\n";
  const auto r = cli("loso --synth --config " + (dir / "run.conf").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("learning_rate"), std::string::npos) << r.out;
}

TEST(Cli, GradcheckPasses) {
  const auto r = cli("gradcheck --samples 60");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("worst relative error"), std::string::npos);
}

TEST(Cli, HeadsOverrideEchoed) {
  rsmc::testing::TempDir dir;
  const auto r = cli("train --synth --synth-subjects 3 --synth-per-subject 6 --synth-window 2"
                     " --hidden 8 --heads 4 --embed-dim 4 --classifier-hidden 8 --epochs 1 --batch 8 --out " +
                     (dir / "run").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("heads=4\n"), std::string::npos);
  EXPECT_NE(r.out.find("d_k=2\n"), std::string::npos);
}

TEST(Cli, DumpMasksAndTopology) {
  auto r = cli("dump-masks --T 6 --w 1 --p 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("# sparse p=3\n1,0,0,1,0,0\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("# local w=1\n1,1,0,0,0,0\n"), std::string::npos) << r.out;
  EXPECT_EQ(cli("dump-masks --T 0").code, 2);
  r = cli("topology dump");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 63);
  EXPECT_NE(r.out.find("FP1,"), std::string::npos);
}

TEST(Cli, LosoArtifactsAndExports) {
  rsmc::testing::TempDir dir;
  const auto run = dir / "run";
  const auto r = cli("loso --synth --synth-subjects 3 --synth-per-subject 12 --synth-window 6 --no-codg" +
                     std::string(kTiny) + " --out " + run.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("effective_lambda_mmd=0"), std::string::npos);
  const auto agg = nlohmann::json::parse(rsmc::testing::read_file(run / "aggregate.json"));
  EXPECT_TRUE(agg.contains("accuracy"));
  EXPECT_NE(rsmc::testing::read_file(run / "config.txt").find("no_codg=true"), std::string::npos);

  ASSERT_EQ(cli("export masks --run " + run.string()).code, 0);
  // T=6 gives the default period max(1, 6/4) = 1: every position admissible.
  EXPECT_EQ(rsmc::testing::read_file(run / "exports" / "sparse_mask.csv").find('0'), std::string::npos);

  ASSERT_EQ(cli("export confusion --run " + run.string()).code, 0);
  std::istringstream conf(rsmc::testing::read_file(run / "exports" / "confusion_all.csv"));
  std::string line;
  std::getline(conf, line);
  while (std::getline(conf, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    double sum = 0.0;
    while (std::getline(cells, cell, ',')) sum += std::stod(cell);
    if (sum > 0) EXPECT_NEAR(sum, 1.0, 1e-6) << line;
  }

  ASSERT_EQ(cli("export spatial-attention --subject 1 --run " + run.string()).code, 0);
  std::istringstream att(rsmc::testing::read_file(run / "exports" / "spatial_attention_fold_1.csv"));
  std::getline(att, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3 + 62 * 5 - 1);
}

}  // namespace
