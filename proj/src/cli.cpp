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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dpwgan/accountant.hpp"
#include "dpwgan/data_io.hpp"
#include "dpwgan/errors.hpp"
#include "dpwgan/scores.hpp"
#include "dpwgan/text_io.hpp"

namespace dpwgan {

namespace {

constexpr std::uint64_t kDataStream = 2;
constexpr std::uint64_t kEvalStream = 3;

// Children of the eval stream.
constexpr std::uint64_t kLabelModelChild = 0;
constexpr std::uint64_t kScoreChild = 1;

std::size_t parse_count(std::string_view v) { return static_cast<std::size_t>(parse_uint(v)); }

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t fingerprint(const Matrix& m) {
  const auto data = m.data();
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(data.data()),
                                  data.size() * sizeof(double)));
}

// Maps library exceptions to exit codes, printing the message.
int run_guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  RunConfig rc;
  TrainConfig& t = rc.train;
  using Setter = std::function<void(std::string_view)>;
  const std::map<std::string, Setter, std::less<>> setters = {
      {"alpha_d", [&](std::string_view v) { t.alpha_d = parse_double(v); }},
      {"alpha_g", [&](std::string_view v) { t.alpha_g = parse_double(v); }},
      {"weight_clip", [&](std::string_view v) { t.weight_clip = parse_double(v); }},
      {"grad_clip", [&](std::string_view v) { t.grad_clip = parse_double(v); }},
      {"batch", [&](std::string_view v) { t.batch = parse_count(v); }},
      {"critic_iters", [&](std::string_view v) { t.critic_iters = parse_count(v); }},
      {"gen_iters", [&](std::string_view v) { t.gen_iters = parse_count(v); }},
      {"latent_dim", [&](std::string_view v) { t.latent_dim = parse_count(v); }},
      {"hidden", [&](std::string_view v) { t.hidden = parse_count(v); }},
      {"seed", [&](std::string_view v) { t.seed = parse_uint(v); }},
      {"delta", [&](std::string_view v) { t.delta = parse_double(v); }},
      {"epsilon", [&](std::string_view v) { t.epsilon_target = parse_double(v); }},
      {"noise",
       [&](std::string_view v) {
         if (v == "accountant") {
           rc.noise_mode = NoiseMode::kAccountant;
         } else if (v == "closed-form") {
           rc.noise_mode = NoiseMode::kClosedForm;
         } else {
           rc.noise_mode = NoiseMode::kManual;
           rc.manual_noise = parse_double(v);
         }
       }},
      {"dataset",
       [&](std::string_view v) {
         if (v != "digits" && v != "ehr") {
           throw FormatError("dataset must be 'digits' or 'ehr', got '" +
                             std::string(v) + "'");
         }
         rc.dataset = std::string(v);
       }},
      {"image_side", [&](std::string_view v) { rc.image_side = parse_count(v); }},
      {"train_size", [&](std::string_view v) { rc.train_size = parse_count(v); }},
      {"checkpoint_every",
       [&](std::string_view v) { rc.checkpoint_every = parse_count(v); }},
  };

  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected 'key = value', got '" + std::string(line) + "'",
                        line_no);
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("unknown key '" + std::string(key) + "'", line_no);
    }
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("key '" + std::string(key) + "' given twice", line_no);
    }
    try {
      it->second(value);
    } catch (const Error& e) {
      throw ConfigError("field '" + std::string(key) + "': " + e.what(), line_no);
    }
  }
  if (rc.noise_mode == NoiseMode::kManual &&
      !(std::isfinite(rc.manual_noise) && rc.manual_noise > 0.0) &&
      t.is_private()) {
    throw ConfigError("noise must be accountant, closed-form or a number > 0");
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file " + path.string() + " not found");
  }
  return parse_run_config(read_text(path));
}

NoiseResolution resolve_noise(const RunConfig& config, std::size_t n_records) {
  const TrainConfig& t = config.train;
  NoiseResolution r;
  if (n_records == 0) throw ValidationError("dataset is empty");
  r.q = std::min(1.0, static_cast<double>(t.batch) / static_cast<double>(n_records));
  if (!t.is_private()) {
    r.sigma = 0.0;
    return r;
  }
  const PrivacyTarget target(t.epsilon_target, t.delta);
  r.sigma_closed_form = calibrate_sigma_closed_form(target, r.q, t.critic_iters);
  switch (config.noise_mode) {
    case NoiseMode::kClosedForm:
      r.sigma = r.sigma_closed_form;
      break;
    case NoiseMode::kManual:
      r.sigma = config.manual_noise;
      break;
    case NoiseMode::kAccountant:
      r.sigma = calibrate_sigma_accountant(
          r.q, static_cast<std::uint64_t>(t.gen_iters) * t.critic_iters,
          t.epsilon_target * (1.0 - kCalibrationMargin), t.delta,
          default_lambda_grid());
      break;
  }
  return r;
}

std::string sampling_warning(const TrainConfig& config, double q) {
  if (!(config.is_private() && config.epsilon_target <= 10.0)) return "";
  if (q <= 0.05 && config.critic_iters <= 10) return "";
  return "warning: sampling rate q = " + format_double(q) + " and critic_iters = " +
         std::to_string(config.critic_iters) +
         " give the critic a weak privacy guarantee at epsilon <= 10; the larger "
         "q is, the weaker the guarantee";
}

Matrix load_training_data(const RunConfig& config,
                          const std::filesystem::path& data_dir) {
  if (config.dataset == "ehr") {
    std::ifstream in(data_dir / kEhrRecordsFile);
    if (!in) throw FormatError("cannot open " + (data_dir / kEhrRecordsFile).string());
    auto records = read_ehr_csv(in);
    if (config.train_size > 0 && records.size() > config.train_size) {
      records.resize(config.train_size);
    }
    if (records.empty()) throw ValidationError("EHR dataset has no records");
    return ehr_to_matrix(records);
  }
  LabeledImages data =
      load_idx(data_dir / kTrainImagesFile, data_dir / kTrainLabelsFile);
  if (config.train_size > 0) data = take_prefix(data, config.train_size);
  if (data.images.count == 0) throw ValidationError("image dataset is empty");
  if (config.image_side == 0) return normalize_images(data.images);
  const std::size_t side = config.image_side;
  const std::size_t block = std::min(data.images.rows, data.images.cols) / side;
  if (block == 0) {
    throw ValidationError("image_side " + std::to_string(side) +
                          " exceeds the stored images");
  }
  const IdxImageSet cropped =
      block * side == data.images.rows && block * side == data.images.cols
          ? data.images
          : center_crop(data.images, block * side);
  return normalize_images(cropped, side);
}

std::string checkpoint_name(std::uint64_t iteration) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "checkpoint-%06llu.bin",
                static_cast<unsigned long long>(iteration));
  return buf;
}

namespace {

const char* status_name(TrainStatus s) {
  switch (s) {
    case TrainStatus::kCompleted:
      return "completed";
    case TrainStatus::kBudgetHalt:
      return "budget-halt";
    case TrainStatus::kNumericAbort:
      return "numeric-abort";
  }
  return "unknown";
}

const char* noise_mode_name(NoiseMode m) {
  switch (m) {
    case NoiseMode::kAccountant:
      return "accountant";
    case NoiseMode::kClosedForm:
      return "closed-form";
    case NoiseMode::kManual:
      return "manual";
  }
  return "unknown";
}

// Keeps the header and every row up to and including `iteration`.
void truncate_metrics(const std::filesystem::path& path, std::uint64_t iteration) {
  if (!std::filesystem::exists(path)) return;
  std::istringstream in(read_text(path));
  std::string kept;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      kept += line + '\n';
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (parse_uint(std::string_view(line).substr(0, comma)) <= iteration) {
      kept += line + '\n';
    }
  }
  write_text(path, kept);
}

}  // namespace

int cmd_train(const TrainCommand& cmd, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    const std::string started = utc_now();
    RunConfig rc = load_run_config(cmd.config);
    if (cmd.seed) rc.train.seed = *cmd.seed;
    const Matrix data = load_training_data(rc, cmd.data_dir);
    const NoiseResolution noise = resolve_noise(rc, data.rows());
    if (const auto w = sampling_warning(rc.train, noise.q); !w.empty()) {
      err << w << '\n';
    }
    std::filesystem::create_directories(cmd.out_dir);

    std::ostringstream summary;
    const auto put = [&](const std::string& key, const std::string& value) {
      summary << key << " = " << value << '\n';
    };
    const auto write_summary = [&](const TrainResult* result, const std::string& status,
                                   const std::string& message) {
      put("status", status);
      put("message", message);
      put("privacy", rc.train.is_private() ? "private" : "non-private");
      put("iterations", result ? std::to_string(result->checkpoint.iteration) : "0");
      put("epsilon_target", format_double(rc.train.epsilon_target));
      put("epsilon", result ? format_double(result->epsilon) : "0");
      put("delta", format_double(rc.train.delta));
      put("noise_mode", rc.train.is_private() ? noise_mode_name(rc.noise_mode) : "none");
      put("sigma_n", noise.sigma ? format_double(*noise.sigma) : "unreachable");
      put("sigma_n_closed_form", format_double(noise.sigma_closed_form));
      put("q", format_double(noise.q));
      put("critic_steps",
          result ? std::to_string(result->checkpoint.ledger.steps()) : "0");
      put("records", std::to_string(data.rows()));
      put("dataset_fingerprint", hex64(fingerprint(data)));
      put("config_hash", hex64(rc.train.trajectory_hash()));
      put("started", started);
      put("finished", utc_now());
      write_text(cmd.out_dir / "summary.txt", summary.str());
      out << summary.str();
    };

    if (!noise.sigma) {
      write_summary(nullptr, "budget-halt",
                    "no noise level meets epsilon " +
                        format_double(rc.train.epsilon_target) + " over " +
                        std::to_string(rc.train.gen_iters * rc.train.critic_iters) +
                        " critic steps");
      err << "budget halt: epsilon target unreachable\n";
      return kExitBudgetHalt;
    }
    rc.train.noise_scale = *noise.sigma;
    rc.train.validate();
    if (rc.train.is_private()) {
      out << "sigma_n = " << format_double(*noise.sigma) << " ("
          << noise_mode_name(rc.noise_mode) << "), closed-form sigma_n = "
          << format_double(noise.sigma_closed_form) << '\n';
    } else {
      out << "non-private run: sigma_n = 0\n";
    }

    std::optional<Checkpoint> resume;
    const auto metrics_path = cmd.out_dir / "metrics.csv";
    if (cmd.resume) {
      resume = parse_checkpoint(read_file_bytes(*cmd.resume));
      truncate_metrics(metrics_path, resume->iteration);
    }
    const bool fresh = !std::filesystem::exists(metrics_path) ||
                       std::filesystem::file_size(metrics_path) == 0;
    std::ofstream metrics(metrics_path,
                          std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
    if (!metrics) throw FormatError("cannot write " + metrics_path.string());
    if (fresh) metrics << metrics_csv_header() << '\n';

    TrainHooks hooks;
    hooks.checkpoint_every = rc.checkpoint_every;
    hooks.on_iteration = [&](const StepMetrics& m) {
      metrics << metrics_csv_row(m) << '\n';
    };
    hooks.on_checkpoint = [&](const Checkpoint& c) {
      write_file_bytes(cmd.out_dir / checkpoint_name(c.iteration), serialize_checkpoint(c));
    };
    const TrainResult result = train(rc.train, data, resume, hooks);
    metrics.close();
    write_file_bytes(cmd.out_dir / checkpoint_name(result.checkpoint.iteration),
                     serialize_checkpoint(result.checkpoint));
    write_summary(&result, status_name(result.status), result.message);
    switch (result.status) {
      case TrainStatus::kCompleted:
        return kExitOk;
      case TrainStatus::kBudgetHalt:
        err << "budget halt: " << result.message << '\n';
        return kExitBudgetHalt;
      case TrainStatus::kNumericAbort:
        err << "numeric abort: " << result.message << '\n';
        return kExitNumeric;
    }
    return kExitFailure;
  });
}

int cmd_score(const ScoreCommand& cmd, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    const Checkpoint ckpt = parse_checkpoint(read_file_bytes(cmd.checkpoint));
    const LabelModel model = parse_label_model(read_file_bytes(cmd.label_model));
    RngStream rng = RngStream(cmd.seed, kEvalStream).child(kScoreChild);
    ScoreReport report = score_run(ckpt, model, cmd.n_samples, cmd.splits, rng);
    report.seed = cmd.seed;
    if (cmd.epsilon_label) {
      report.epsilon_label = *cmd.epsilon_label;
    } else {
      report.epsilon_label = ckpt.ledger.steps() == 0
                                 ? kNonPrivate
                                 : eps_for_delta(ckpt.ledger, cmd.delta);
    }
    std::filesystem::create_directories(cmd.out_dir);
    const auto path = cmd.out_dir / "scores.csv";
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream csv(path, std::ios::binary | std::ios::app);
    if (!csv) throw FormatError("cannot write " + path.string());
    if (fresh) csv << score_csv_header() << '\n';
    csv << score_csv_row(report) << '\n';
    out << score_csv_header() << '\n' << score_csv_row(report) << '\n';
    return kExitOk;
  });
}

int cmd_accountant(const AccountantCommand& cmd, std::ostream& out,
                   std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    if (cmd.critic_iters == 0) throw ParameterError("critic_iters must be >= 1");
    const MechanismStep step(cmd.q, cmd.sigma);
    const MomentLedger ledger =
        cmd.steps == 0 ? MomentLedger() : accumulate(MomentLedger(), step, cmd.steps);
    const double nd = static_cast<double>(cmd.critic_iters);
    if (cmd.query == "eps-for-delta") {
      const double eps = eps_for_delta(ledger, cmd.delta);
      // sigma_n = 2 q sqrt(n_d ln(1/delta)) / eps solved for eps.
      const double closed = 2.0 * cmd.q * std::sqrt(nd * std::log(1.0 / cmd.delta)) /
                            cmd.sigma;
      out << "accountant_epsilon = " << format_double(eps) << '\n';
      out << "closed_form_epsilon = " << format_double(closed) << '\n';
      out << "strong_composition_epsilon = "
          << format_double(strong_composition_baseline(cmd.q, cmd.sigma, cmd.steps,
                                                       cmd.delta))
          << '\n';
    } else if (cmd.query == "delta-for-eps") {
      const double delta = delta_for_eps(ledger, cmd.epsilon);
      const double r = cmd.epsilon * cmd.sigma / (2.0 * cmd.q);
      const double closed = std::min(1.0, std::exp(-r * r / nd));
      out << "accountant_delta = " << format_double(delta) << '\n';
      out << "closed_form_delta = " << format_double(closed) << '\n';
    } else {
      throw ParameterError("query must be eps-for-delta or delta-for-eps, got '" +
                           cmd.query + "'");
    }
    return kExitOk;
  });
}

int cmd_calibrate(const CalibrateCommand& cmd, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    const PrivacyTarget target(cmd.epsilon, cmd.delta);
    out << "sigma_n_closed_form = "
        << format_double(calibrate_sigma_closed_form(target, cmd.q, cmd.critic_iters)) << '\n';
    out << "gaussian_sigma = " << format_double(calibrate_sigma_gaussian(target, 1.0))
        << '\n';
    out << "gaussian_regime = " << (gaussian_regime_holds(target) ? "yes" : "no (needs epsilon < 1)")
        << '\n';
    if (cmd.steps > 0) {
      const auto sigma = calibrate_sigma_accountant(cmd.q, cmd.steps, cmd.epsilon,
                                                    cmd.delta, default_lambda_grid());
      out << "accountant_sigma = " << (sigma ? format_double(*sigma) : "unreachable")
          << '\n';
    }
    return kExitOk;
  });
}

int cmd_synth_ehr(const SynthEhrCommand& cmd, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    const SynthEhrModel model = load_ehr_model(cmd.model);
    RngStream rng(cmd.seed, kDataStream);
    const auto records = synthesize_ehr(model, cmd.n, rng);
    if (cmd.out_csv.has_parent_path()) {
      std::filesystem::create_directories(cmd.out_csv.parent_path());
    }
    {
      std::ofstream csv(cmd.out_csv, std::ios::binary | std::ios::trunc);
      if (!csv) throw FormatError("cannot write " + cmd.out_csv.string());
      write_ehr_csv(csv, records);
    }
    std::ifstream back(cmd.out_csv, std::ios::binary);
    if (read_ehr_csv(back) != records) {
      throw ValidationError("written EHR CSV does not re-read identically");
    }
    out << "wrote " << records.size() << " records of " << kIcd9CodeCount
        << " codes to " << cmd.out_csv.string() << '\n';
    return kExitOk;
  });
}

int cmd_make_digits(const MakeDigitsCommand& cmd, std::ostream& out,
                    std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RngStream rng(cmd.seed, kDataStream);
    const LabeledImages digits = synthesize_digits(cmd.count, rng);
    std::filesystem::create_directories(cmd.out_dir);
    save_idx(digits, cmd.out_dir / kTrainImagesFile, cmd.out_dir / kTrainLabelsFile);
    out << "wrote " << cmd.count << " digits to " << cmd.out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_train_labeler(const TrainLabelerCommand& cmd, std::ostream& out,
                      std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RunConfig rc;
    rc.image_side = cmd.image_side;
    rc.train_size = cmd.count;
    const Matrix images = load_training_data(rc, cmd.data_dir);
    const LabeledImages raw =
        take_prefix(load_idx(cmd.data_dir / kTrainImagesFile,
                             cmd.data_dir / kTrainLabelsFile),
                    cmd.count);
    RngStream rng = RngStream(cmd.seed, kEvalStream).child(kLabelModelChild);
    LabelModel model;
    try {
      model = train_label_model(images, raw.labels, cmd.epochs, rng);
    } catch (const TrainingError& e) {
      err << "label model: " << e.what() << '\n';
      return kExitFailure;
    }
    if (cmd.out.has_parent_path()) {
      std::filesystem::create_directories(cmd.out.parent_path());
    }
    write_file_bytes(cmd.out, serialize_label_model(model));
    out << "label model written to " << cmd.out.string() << '\n';
    return kExitOk;
  });
}

}  // namespace dpwgan
