// Copyright 2026 The dpwgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "dpwgan/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dpwgan/data_io.hpp"
#include "dpwgan/errors.hpp"
#include "dpwgan/text_io.hpp"

namespace dpwgan {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  const auto b = read_file_bytes(p);
  return {b.begin(), b.end()};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

// Value of `key = value` in command output.
std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
  }
  return "";
}

int line_of(std::string_view text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

TEST(RunConfig, ParsesKeysAndComments) {
  const RunConfig rc = parse_run_config(
      "# desk\n"
      "alpha_d = 0.05   # critic\n"
      "\n"
      "batch=16\n"
      "epsilon = inf\n"
      "dataset = ehr\n"
      "image_side = 0\n");
  EXPECT_EQ(rc.train.alpha_d, 0.05);
  EXPECT_EQ(rc.train.batch, 16u);
  EXPECT_FALSE(rc.train.is_private());
  EXPECT_EQ(rc.dataset, "ehr");
  EXPECT_EQ(rc.image_side, 0u);
  EXPECT_EQ(rc.noise_mode, NoiseMode::kAccountant);

  const RunConfig manual = parse_run_config("epsilon = 5\nnoise = 1.25\n");
  EXPECT_EQ(manual.noise_mode, NoiseMode::kManual);
  EXPECT_EQ(manual.manual_noise, 1.25);
  EXPECT_EQ(parse_run_config("noise = closed-form").noise_mode, NoiseMode::kClosedForm);
}

TEST(RunConfig, ErrorsCarryLineNumbers) {
  EXPECT_EQ(line_of("batch = 4\nfoo = 1\n"), 2);
  EXPECT_EQ(line_of("batch = 4\n\nbatch = 5\n"), 3);
  EXPECT_EQ(line_of("# c\nalpha_d = fast\n"), 2);
  EXPECT_EQ(line_of("just words\n"), 1);
  EXPECT_EQ(line_of("dataset = cifar\n"), 1);
  EXPECT_EQ(line_of("batch = -2\n"), 1);
  EXPECT_THROW(parse_run_config("epsilon = 5\nnoise = 0\n"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/run.cfg"), ConfigError);
}

TEST(ResolveNoise, ModesAndNonPrivate) {
  RunConfig rc;
  rc.train.batch = 32;
  rc.train.critic_iters = 5;
  rc.train.gen_iters = 100;
  const NoiseResolution np = resolve_noise(rc, 2000);
  EXPECT_EQ(np.q, 0.016);
  EXPECT_EQ(*np.sigma, 0.0);

  rc.train.epsilon_target = 10;
  rc.noise_mode = NoiseMode::kClosedForm;
  const NoiseResolution e17 = resolve_noise(rc, 2000);
  EXPECT_EQ(*e17.sigma, e17.sigma_closed_form);
  EXPECT_NEAR(e17.sigma_closed_form, 0.0242788, 1e-6);

  rc.noise_mode = NoiseMode::kAccountant;
  const NoiseResolution acc = resolve_noise(rc, 2000);
  ASSERT_TRUE(acc.sigma);
  EXPECT_GT(*acc.sigma, e17.sigma_closed_form);

  EXPECT_EQ(resolve_noise(rc, 10).q, 1.0);
  EXPECT_THROW(resolve_noise(rc, 0), ValidationError);
  rc.train.epsilon_target = 0.1;
  EXPECT_FALSE(resolve_noise(rc, 2000).sigma);
}

TEST(SamplingWarning, Thresholds) {
  TrainConfig c;
  c.critic_iters = 5;
  EXPECT_EQ(sampling_warning(c, 0.5), "");  // non-private
  c.epsilon_target = 10;
  EXPECT_EQ(sampling_warning(c, 0.05), "");
  EXPECT_NE(sampling_warning(c, 0.06), "");
  c.critic_iters = 11;
  EXPECT_NE(sampling_warning(c, 0.01), "");
  c.epsilon_target = 11;
  EXPECT_EQ(sampling_warning(c, 0.5), "");
}

TEST(Commands, CalibratePrintsClosedForm) {
  std::ostringstream out, err;
  CalibrateCommand cmd;
  ASSERT_EQ(cmd_calibrate(cmd, out, err), kExitOk);
  EXPECT_NEAR(parse_double(field(out.str(), "sigma_n_closed_form")), 0.015174, 1e-6);
  EXPECT_EQ(field(out.str(), "accountant_sigma"), "");
  cmd.steps = 1000;
  std::ostringstream out2;
  ASSERT_EQ(cmd_calibrate(cmd, out2, err), kExitOk);
  EXPECT_NE(field(out2.str(), "accountant_sigma"), "");
}

TEST(Commands, AccountantEdgeCases) {
  std::ostringstream out, err;
  AccountantCommand cmd;
  cmd.query = "eps-for-delta";
  ASSERT_EQ(cmd_accountant(cmd, out, err), kExitOk);
  // The empty ledger still carries the ln(1/delta) / lambda_max term.
  EXPECT_NEAR(parse_double(field(out.str(), "accountant_epsilon")),
              std::log(1e5) / 32.0, 1e-12);
  EXPECT_EQ(field(out.str(), "strong_composition_epsilon"), "0");

  cmd.delta = 1.0;
  EXPECT_EQ(cmd_accountant(cmd, out, err), kExitConfig);
  cmd.delta = 1e-5;
  cmd.query = "bogus";
  EXPECT_EQ(cmd_accountant(cmd, out, err), kExitConfig);

  std::ostringstream dout;
  cmd.query = "delta-for-eps";
  cmd.steps = 100;
  cmd.epsilon = 2.0;
  ASSERT_EQ(cmd_accountant(cmd, dout, err), kExitOk);
  const double d = parse_double(field(dout.str(), "accountant_delta"));
  EXPECT_GT(d, 0.0);
  EXPECT_LE(d, 1.0);
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("dpwgan_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

using SynthEhr = TempDir;

TEST_F(SynthEhr, ForcedCodesAndEmptyOutput) {
  spit(dir_ / "model.txt", "default 0\ncode 9 1\ncode 42 1\ncode 146 1\n");
  std::ostringstream out, err;
  SynthEhrCommand cmd{dir_ / "model.txt", 5, dir_ / "r.csv", 3};
  ASSERT_EQ(cmd_synth_ehr(cmd, out, err), kExitOk) << err.str();
  std::ifstream in(dir_ / "r.csv");
  const auto records = read_ehr_csv(in);
  ASSERT_EQ(records.size(), 5u);
  const Matrix m = ehr_to_matrix(records);
  ASSERT_EQ(m.cols(), static_cast<std::size_t>(kIcd9CodeCount));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const std::size_t pos = c + 1;  // positions are 1-based
      const bool on = pos == 9 || pos == 42 || pos == 146;
      EXPECT_EQ(m(i, c), on ? 1.0 : -1.0);
    }
  }

  cmd.n = 0;
  cmd.out_csv = dir_ / "empty.csv";
  ASSERT_EQ(cmd_synth_ehr(cmd, out, err), kExitOk);
  std::ifstream e(dir_ / "empty.csv");
  EXPECT_TRUE(read_ehr_csv(e).empty());

  spit(dir_ / "bad.txt", "code 9 2\n");
  cmd.model = dir_ / "bad.txt";
  EXPECT_EQ(cmd_synth_ehr(cmd, out, err), kExitConfig);
}

class TrainRun : public TempDir {
 protected:
  void SetUp() override {
    TempDir::SetUp();
    std::ostringstream out, err;
    ASSERT_EQ(cmd_make_digits({dir_ / "data", 600, 1}, out, err), kExitOk);
  }

  void config(const std::string& extra) {
    spit(dir_ / "run.cfg",
         "alpha_d = 0.05\nalpha_g = 0.05\ngrad_clip = 1\nweight_clip = 0.05\n"
         "batch = 16\nhidden = 16\nlatent_dim = 8\ngen_iters = 12\n"
         "train_size = 200\ncheckpoint_every = 4\n" +
         extra);
  }

  int run(const fs::path& out_dir, std::optional<fs::path> resume = std::nullopt) {
    std::ostringstream out;
    err_.str("");
    TrainCommand cmd{dir_ / "run.cfg", dir_ / "data", out_dir, std::nullopt, resume};
    const int rc = cmd_train(cmd, out, err_);
    stdout_ = out.str();
    return rc;
  }

  std::ostringstream err_;
  std::string stdout_;
};

TEST_F(TrainRun, NonPrivateSummary) {
  config("epsilon = inf\n");
  ASSERT_EQ(run(dir_ / "out"), kExitOk) << err_.str();
  const std::string summary = slurp(dir_ / "out" / "summary.txt");
  EXPECT_EQ(field(summary, "privacy"), "non-private");
  EXPECT_EQ(field(summary, "status"), "completed");
  EXPECT_EQ(field(summary, "sigma_n"), "0");
  EXPECT_EQ(field(summary, "iterations"), "12");
  for (int it : {4, 8, 12}) EXPECT_TRUE(fs::exists(dir_ / "out" / checkpoint_name(it)));
  const std::string metrics = slurp(dir_ / "out" / "metrics.csv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 13);
}

TEST_F(TrainRun, SmallStepConstantsCompleteWithFinalEpsilon) {
  spit(dir_ / "run.cfg",
       "alpha_d = 5e-5\nalpha_g = 5e-5\ngrad_clip = 0.01\nweight_clip = 0.01\n"
       "critic_iters = 5\ndelta = 1e-5\nepsilon = 10\ngen_iters = 2000\n"
       "batch = 16\nhidden = 16\nlatent_dim = 8\ntrain_size = 200\n"
       "checkpoint_every = 0\n");
  ASSERT_EQ(run(dir_ / "out"), kExitOk) << err_.str();
  const std::string summary = slurp(dir_ / "out" / "summary.txt");
  EXPECT_EQ(field(summary, "iterations"), "2000");
  const double eps = parse_double(field(summary, "epsilon"));
  EXPECT_GT(eps, 9.0);
  EXPECT_LE(eps, 10.0);
  EXPECT_NE(field(summary, "sigma_n_closed_form"), "");
  // q = 16 / 200 is above the sampling-rate caution threshold.
  EXPECT_NE(err_.str().find("warning"), std::string::npos);
}

TEST_F(TrainRun, RerunsAreByteIdentical) {
  config("epsilon = 10\n");
  ASSERT_EQ(run(dir_ / "a"), kExitOk) << err_.str();
  ASSERT_EQ(run(dir_ / "b"), kExitOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / checkpoint_name(12)), slurp(dir_ / "b" / checkpoint_name(12)));
  EXPECT_LE(parse_double(field(slurp(dir_ / "a" / "summary.txt"), "epsilon")), 10.0);
}

TEST_F(TrainRun, ResumeContinuesMetricsWithoutGaps) {
  config("epsilon = 10\n");
  ASSERT_EQ(run(dir_ / "full"), kExitOk);
  ASSERT_EQ(run(dir_ / "part"), kExitOk);
  // Resume from iteration 4 into a directory whose metrics ran to 12.
  ASSERT_EQ(run(dir_ / "part", dir_ / "part" / checkpoint_name(4)), kExitOk)
      << err_.str();
  const std::string metrics = slurp(dir_ / "part" / "metrics.csv");
  EXPECT_EQ(metrics, slurp(dir_ / "full" / "metrics.csv"));
  std::istringstream in(metrics);
  std::string line;
  std::getline(in, line);
  int expect = 1;
  while (std::getline(in, line)) {
    EXPECT_EQ(parse_uint(line.substr(0, line.find(','))), static_cast<std::uint64_t>(expect));
    ++expect;
  }
  EXPECT_EQ(expect, 13);
  EXPECT_EQ(slurp(dir_ / "part" / checkpoint_name(12)),
            slurp(dir_ / "full" / checkpoint_name(12)));
}

TEST_F(TrainRun, BudgetHaltExitCodes) {
  config("epsilon = 0.1\n");
  EXPECT_EQ(run(dir_ / "tiny"), kExitBudgetHalt);
  EXPECT_EQ(field(slurp(dir_ / "tiny" / "summary.txt"), "status"), "budget-halt");

  // Closed-form noise is too small for the accountant: the run halts mid-way.
  config("epsilon = 2\nnoise = closed-form\n");
  EXPECT_EQ(run(dir_ / "mid"), kExitBudgetHalt);
  const std::string summary = slurp(dir_ / "mid" / "summary.txt");
  EXPECT_EQ(field(summary, "status"), "budget-halt");
  EXPECT_LE(parse_double(field(summary, "epsilon")), 2.0);
  EXPECT_LT(parse_uint(field(summary, "iterations")), 12u);
}

TEST_F(TrainRun, DataAndConfigErrors) {
  config("epsilon = inf\n");
  std::ostringstream out, err;
  TrainCommand missing{dir_ / "run.cfg", dir_ / "nodata", dir_ / "o", std::nullopt,
                       std::nullopt};
  EXPECT_EQ(cmd_train(missing, out, err), kExitData);
  config("epsilon = inf\nimage_side = 40\n");
  EXPECT_EQ(run(dir_ / "o"), kExitData);
  spit(dir_ / "run.cfg", "hidden = none\n");
  EXPECT_EQ(run(dir_ / "o"), kExitConfig);
  EXPECT_NE(err_.str().find("line 1"), std::string::npos);
}

TEST_F(TrainRun, ScoreAppendsRows) {
  config("epsilon = inf\n");
  ASSERT_EQ(run(dir_ / "out"), kExitOk);
  std::ostringstream out, err;
  TrainLabelerCommand lab;
  lab.data_dir = dir_ / "data";
  lab.out = dir_ / "lm.bin";
  lab.count = 600;
  lab.epochs = 1;
  // One epoch on 480 rows cannot reach the accuracy gate.
  EXPECT_EQ(cmd_train_labeler(lab, out, err), kExitFailure);
  lab.epochs = 60;
  ASSERT_EQ(cmd_train_labeler(lab, out, err), kExitOk) << err.str();

  ScoreCommand sc;
  sc.checkpoint = dir_ / "out" / checkpoint_name(12);
  sc.label_model = dir_ / "lm.bin";
  sc.out_dir = dir_ / "scores";
  sc.n_samples = 100;
  ASSERT_EQ(cmd_score(sc, out, err), kExitOk) << err.str();
  sc.epsilon_label = 5.0;
  sc.seed = 2;
  ASSERT_EQ(cmd_score(sc, out, err), kExitOk);
  const std::string csv = slurp(dir_ / "scores" / "scores.csv");
  std::istringstream in(csv);
  std::string header, a, b;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(header, "eps,seed,is_mean,is_std,gs");
  EXPECT_EQ(a.substr(0, 6), "inf,1,");
  EXPECT_EQ(b.substr(0, 4), "5,2,");

  sc.n_samples = 99;  // not divisible by 10 splits
  EXPECT_EQ(cmd_score(sc, out, err), kExitFailure);
}

}  // namespace
}  // namespace dpwgan
