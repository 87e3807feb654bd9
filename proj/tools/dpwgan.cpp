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
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dpwgan/cli.hpp"

namespace {

using dpwgan::kExitConfig;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private WGAN training and evaluation"};
  app.require_subcommand(1);

  dpwgan::TrainCommand train;
  std::string resume;
  std::uint64_t train_seed = 0;
  auto* t = app.add_subcommand("train", "Train a generator from a config file");
  t->add_option("--config", train.config, "Run config (key = value lines)")->required();
  t->add_option("--data", train.data_dir, "Directory holding the dataset")->required();
  t->add_option("--out", train.out_dir, "Output directory")->required();
  auto* seed_opt = t->add_option("--seed", train_seed, "Override the config seed");
  t->add_option("--resume", resume, "Checkpoint to continue from");

  dpwgan::ScoreCommand score;
  double eps_label = 0.0;
  auto* s = app.add_subcommand("score", "Score a checkpoint with a label model");
  s->add_option("--checkpoint", score.checkpoint)->required();
  s->add_option("--label-model", score.label_model)->required();
  s->add_option("--out", score.out_dir, "Directory for scores.csv")->required();
  s->add_option("--n", score.n_samples, "Samples drawn")->capture_default_str();
  s->add_option("--splits", score.splits)->capture_default_str();
  s->add_option("--seed", score.seed)->capture_default_str();
  s->add_option("--delta", score.delta)->capture_default_str();
  auto* eps_opt = s->add_option("--eps-label", eps_label, "Epsilon written to the CSV");

  dpwgan::AccountantCommand acct;
  auto* a = app.add_subcommand("accountant", "Query the moments accountant");
  a->add_option("query", acct.query, "eps-for-delta or delta-for-eps")
      ->required()
      ->check(CLI::IsMember({"eps-for-delta", "delta-for-eps"}));
  a->add_option("--q", acct.q)->capture_default_str();
  a->add_option("--sigma", acct.sigma)->capture_default_str();
  a->add_option("--steps", acct.steps)->capture_default_str();
  a->add_option("--delta", acct.delta)->capture_default_str();
  a->add_option("--epsilon", acct.epsilon)->capture_default_str();
  a->add_option("--critic-iters", acct.critic_iters)->capture_default_str();

  dpwgan::CalibrateCommand cal;
  auto* c = app.add_subcommand("calibrate", "Noise multiplier for a privacy target");
  c->add_option("--epsilon", cal.epsilon)->capture_default_str();
  c->add_option("--delta", cal.delta)->capture_default_str();
  c->add_option("--q", cal.q)->capture_default_str();
  c->add_option("--critic-iters", cal.critic_iters)->capture_default_str();
  c->add_option("--steps", cal.steps, "Total critic steps for the accountant sigma")
      ->capture_default_str();

  dpwgan::SynthEhrCommand ehr;
  auto* e = app.add_subcommand("synth-ehr", "Generate synthetic EHR records");
  e->add_option("--model", ehr.model)->required();
  e->add_option("--n", ehr.n)->required();
  e->add_option("--out", ehr.out_csv)->required();
  e->add_option("--seed", ehr.seed)->capture_default_str();

  dpwgan::MakeDigitsCommand digits;
  auto* d = app.add_subcommand("make-digits", "Render procedural 28x28 digits as IDX");
  d->add_option("--out", digits.out_dir)->required();
  d->add_option("--count", digits.count)->capture_default_str();
  d->add_option("--seed", digits.seed)->capture_default_str();

  dpwgan::TrainLabelerCommand labeler;
  auto* l = app.add_subcommand("train-labeler", "Train the label model used by score");
  l->add_option("--data", labeler.data_dir)->required();
  l->add_option("--out", labeler.out)->required();
  l->add_option("--image-side", labeler.image_side)->capture_default_str();
  l->add_option("--count", labeler.count)->capture_default_str();
  l->add_option("--epochs", labeler.epochs)->capture_default_str();
  l->add_option("--seed", labeler.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*t) {
    if (*seed_opt) train.seed = train_seed;
    if (!resume.empty()) train.resume = resume;
    return dpwgan::cmd_train(train, std::cout, std::cerr);
  }
  if (*s) {
    if (*eps_opt) score.epsilon_label = eps_label;
    return dpwgan::cmd_score(score, std::cout, std::cerr);
  }
  if (*a) return dpwgan::cmd_accountant(acct, std::cout, std::cerr);
  if (*c) return dpwgan::cmd_calibrate(cal, std::cout, std::cerr);
  if (*e) return dpwgan::cmd_synth_ehr(ehr, std::cout, std::cerr);
  if (*d) return dpwgan::cmd_make_digits(digits, std::cout, std::cerr);
  if (*l) return dpwgan::cmd_train_labeler(labeler, std::cout, std::cerr);
  return kExitConfig;
}
