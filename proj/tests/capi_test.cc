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

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "rsmc/rsmc.h"
#include "fs_util.hpp"

namespace {

std::string get(const rsmc_config* c, const char* key) {
  size_t needed = 0;
  EXPECT_EQ(rsmc_config_get(c, key, nullptr, 0, &needed), RSMC_OK);
  std::string s(needed, '\0');
  EXPECT_EQ(rsmc_config_get(c, key, s.data(), s.size(), nullptr), RSMC_OK);
  s.resize(needed - 1);
  return s;
}

struct Config {
  rsmc_config* ptr = nullptr;
  Config() { EXPECT_EQ(rsmc_config_create(&ptr), RSMC_OK); }
  ~Config() { rsmc_config_destroy(ptr); }
};

TEST(CApi, VersionAndErrorState) {
  EXPECT_NE(std::string(rsmc_version()), "");
  Config c;
  EXPECT_EQ(rsmc_config_set(c.ptr, "no_such_key", "1"), RSMC_ERR_USAGE);
  EXPECT_NE(std::string(rsmc_last_error()).find("no_such_key"), std::string::npos);
  EXPECT_EQ(rsmc_config_set(c.ptr, "lr", "0.5"), RSMC_OK);
  EXPECT_EQ(get(c.ptr, "lr"), "0.5");
}

TEST(CApi, NullArgumentsRejected) {
  EXPECT_EQ(rsmc_config_create(nullptr), RSMC_ERR_USAGE);
  EXPECT_EQ(rsmc_dataset_load(nullptr, nullptr), RSMC_ERR_USAGE);
  rsmc_config_destroy(nullptr);
  rsmc_dataset_destroy(nullptr);
}

TEST(CApi, TruncatedStringReportsNeededSize) {
  Config c;
  char buf[4];
  size_t needed = 0;
  EXPECT_EQ(rsmc_config_get(c.ptr, "output", buf, sizeof buf, &needed), RSMC_OK);
  EXPECT_EQ(needed, std::string("rsmc_run").size() + 1);
  EXPECT_EQ(std::string(buf), "rsm");
}

TEST(CApi, EchoIncludesDerivedHeadWidth) {
  Config c;
  ASSERT_EQ(rsmc_config_set(c.ptr, "heads", "16"), RSMC_OK);
  size_t needed = 0;
  ASSERT_EQ(rsmc_config_echo(c.ptr, 10, nullptr, 0, &needed), RSMC_OK);
  std::string echo(needed, '\0');
  ASSERT_EQ(rsmc_config_echo(c.ptr, 10, echo.data(), echo.size(), nullptr), RSMC_OK);
  EXPECT_NE(echo.find("d_k=4"), std::string::npos);
}

TEST(CApi, ValidateFlagsBadValues) {
  Config c;
  EXPECT_EQ(rsmc_config_validate(c.ptr), RSMC_OK);
  ASSERT_EQ(rsmc_config_set(c.ptr, "epochs", "0"), RSMC_OK);
  EXPECT_EQ(rsmc_config_validate(c.ptr), RSMC_ERR_USAGE);
  EXPECT_NE(std::string(rsmc_last_error()).find("epochs"), std::string::npos);
}

TEST(CApi, SynthesizeSaveLoad) {
  rsmc::testing::TempDir dir;
  rsmc_synth_spec spec;
  rsmc_synth_spec_default(&spec);
  spec.per_subject = 20;
  rsmc_dataset* d = nullptr;
  ASSERT_EQ(rsmc_dataset_synthesize(&spec, &d), RSMC_OK);
  rsmc_shape shape{};
  ASSERT_EQ(rsmc_dataset_shape(d, &shape), RSMC_OK);
  EXPECT_EQ(shape.batch, 120u);
  EXPECT_EQ(shape.features, 310u);
  const std::string path = (dir / "d.rsmc").string();
  ASSERT_EQ(rsmc_dataset_save(d, path.c_str()), RSMC_OK);
  rsmc_dataset_destroy(d);
  rsmc_dataset* back = nullptr;
  ASSERT_EQ(rsmc_dataset_load(path.c_str(), &back), RSMC_OK);
  rsmc_shape again{};
  rsmc_dataset_shape(back, &again);
  EXPECT_EQ(again.batch, 120u);
  EXPECT_EQ(again.subjects, 6u);
  rsmc_dataset_destroy(back);
  EXPECT_EQ(rsmc_dataset_load((dir / "none.rsmc").string().c_str(), &back), RSMC_ERR_IO);
  spec.subjects = 0;
  EXPECT_EQ(rsmc_dataset_synthesize(&spec, &d), RSMC_ERR_USAGE);
}

TEST(CApi, GradcheckAndDropoutGuard) {
  double worst = 1.0;
  ASSERT_EQ(rsmc_gradcheck(50, 1, 0, &worst), RSMC_OK);
  EXPECT_LT(worst, 1e-4);
  EXPECT_EQ(rsmc_gradcheck(50, 1, 1, &worst), RSMC_ERR_USAGE);
}

TEST(CApi, TinyLosoThroughHandles) {
  rsmc::testing::TempDir dir;
  Config c;
  const std::vector<std::pair<const char*, const char*>> settings = {
      {"synth", "true"},      {"synth_subjects", "3"}, {"synth_per_subject", "12"}, {"synth_window", "4"},
      {"hidden", "8"},        {"heads", "2"},          {"embed_dim", "4"},          {"classifier_hidden", "8"},
      {"epochs", "1"},        {"batch", "8"}};
  for (auto [k, v] : settings) ASSERT_EQ(rsmc_config_set(c.ptr, k, v), RSMC_OK) << k;
  std::vector<std::string> lines;
  rsmc_loso_summary summary{};
  const std::string run = (dir / "run").string();
  ASSERT_EQ(rsmc_loso_run(c.ptr, run.c_str(),
                          [](const char* line, void* user) {
                            static_cast<std::vector<std::string>*>(user)->push_back(line);
                          },
                          &lines, &summary),
            RSMC_OK)
      << rsmc_last_error();
  EXPECT_EQ(summary.folds, 3u);
  EXPECT_EQ(lines.size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "aggregate.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "config.txt"));
  EXPECT_EQ(rsmc_export_confusion(run.c_str()), RSMC_OK);
  EXPECT_EQ(rsmc_export_masks(run.c_str()), RSMC_OK);
  EXPECT_EQ(rsmc_export_spatial_attention(run.c_str(), 0), RSMC_OK) << rsmc_last_error();
  EXPECT_EQ(rsmc_export_masks((dir / "nothing").string().c_str()), RSMC_ERR_IO);

  rsmc_fold_summary fold{};
  ASSERT_EQ(rsmc_train_fold(c.ptr, -1, (dir / "single").string().c_str(), &fold), RSMC_OK);
  EXPECT_EQ(fold.held_out_subject, 2);
}

TEST(CApi, MissingDatasetIsIoError) {
  Config c;
  ASSERT_EQ(rsmc_config_set(c.ptr, "dataset", "/nonexistent/data.rsmc"), RSMC_OK);
  rsmc_loso_summary summary{};
  const auto s = rsmc_loso_run(c.ptr, nullptr, nullptr, nullptr, &summary);
  EXPECT_TRUE(s == RSMC_ERR_IO || s == RSMC_ERR_USAGE);
}

}  // namespace
