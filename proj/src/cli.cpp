/*
 * Copyright 2026 emotag contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "emotag/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>

#include "emotag/audio.hpp"
#include "emotag/ensemble.hpp"
#include "emotag/selftrain.hpp"

namespace emotag {
namespace {

TrackManifest load_manifest_from(const RunConfig& cfg) {
  return TrackManifest::load(cfg.get("paths.manifest"), cfg.get("paths.vocab"));
}

std::filesystem::path audio_root(const RunConfig& cfg) {
  const std::string root = cfg.get("paths.audio_root");
  if (!root.empty()) return root;
  return std::filesystem::path(cfg.get("paths.manifest")).parent_path();
}

std::vector<std::string> split_track_ids(const TrackManifest& manifest, Split split) {
  std::vector<std::string> ids;
  for (const auto* r : manifest.split_records(split)) ids.push_back(r->track_id);
  if (ids.empty()) fail("empty-split", "split '", to_string(split), "' is empty");
  return ids;
}

void require_run_id(RunConfig& cfg, const std::string& fallback) {
  if (cfg.get("run.id").empty()) cfg.set("run.id", fallback);
}

std::filesystem::path run_predictions_path(const RunConfig& cfg,
                                           const std::string& run,
                                           const std::string& split) {
  return cfg.runs_dir() / run / ("predictions_" + split + ".tsv");
}

MatrixXf labels_for_ids(const TrackManifest& manifest,
                        const std::vector<std::string>& ids) {
  const int t = manifest.vocabulary.size();
  MatrixXf labels = MatrixXf::Zero(static_cast<Index>(ids.size()), t);
  for (size_t i = 0; i < ids.size(); ++i) {
    const TrackRecord& rec = manifest.find(ids[i]);
    if (rec.split == Split::unlabeled)
      fail("empty-split", "track '", ids[i], "' is unlabeled; labels undefined");
    for (const auto& tag : rec.tags)
      labels(static_cast<Index>(i), manifest.vocabulary.index.at(tag)) = 1.0f;
  }
  return labels;
}

}  // namespace

void cmd_extract(RunConfig& cfg) {
  const TrackManifest manifest = load_manifest_from(cfg);
  const auto root = audio_root(cfg);
  const auto cache = cfg.cache_dir();
  const MelConfig mel_cfg = cfg.mel_config();
  const HpcpConfig hpcp_cfg = cfg.hpcp_config();
  const int pool = cfg.get_int("features.pool_factor");

  int workers = cfg.get_int("extract.workers");
  if (workers <= 0)
    workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, std::max(1, static_cast<int>(manifest.records.size())));

  std::atomic<size_t> next{0};
  std::atomic<int> extracted{0}, skipped{0};
  std::vector<std::string> errors;
  std::mutex err_mu;

  auto work = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= manifest.records.size()) return;
      const TrackRecord& rec = manifest.records[i];
      try {
        if (cache_exists(cache, rec.track_id, FeatureKind::mel) &&
            cache_exists(cache, rec.track_id, FeatureKind::hpcp)) {
          ++skipped;
          continue;
        }
        const AudioClip clip = load_audio(rec, mel_cfg.sample_rate, root);
        FeatureMatrix mel = temporal_avg_pool(
            mel_spectrogram(clip.samples, rec.track_id, mel_cfg), pool);
        write_cache(mel, cache);
        write_cache(hpcp(clip.samples, rec.track_id, hpcp_cfg), cache);
        ++extracted;
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        errors.push_back(e.what());
      }
    }
  };
  std::vector<std::thread> pool_threads;
  for (int w = 0; w < workers; ++w) pool_threads.emplace_back(work);
  for (auto& t : pool_threads) t.join();

  if (!errors.empty()) fail("decode", errors.front());
  std::cout << "extract: " << extracted << " extracted, " << skipped
            << " cached (" << manifest.records.size() << " tracks)\n";
}

namespace {

struct TrainSetup {
  TrackManifest manifest;
  std::vector<TrainExample> train_examples, valid_examples;
  BranchMode branch;
  bool noisy = false;
};

TrainSetup prepare_training(RunConfig& cfg) {
  TrainSetup s{load_manifest_from(cfg), {}, {},
               parse_branch_mode(cfg.get("train.branch")),
               cfg.get_bool("train.noisy")};
  s.train_examples = examples_for_split(s.manifest, Split::train);
  s.valid_examples = examples_for_split(s.manifest, Split::valid);
  if (s.train_examples.empty()) fail("empty-split", "train split is empty");
  if (s.valid_examples.empty()) fail("empty-split", "valid split is empty");
  return s;
}

}  // namespace

void cmd_train(RunConfig& cfg) {
  TrainSetup s = prepare_training(cfg);
  const TrainConfig train_cfg = cfg.train_config(s.noisy);

  std::string default_id =
      std::string(to_string(train_cfg.mode)) + "-" + to_string(s.branch);
  if (s.noisy) default_id += "-noisy";
  require_run_id(cfg, default_id);
  const auto run_dir = cfg.run_dir();
  cfg.write_resolved(run_dir);

  const NetMode net_mode = s.noisy ? NetMode::student : NetMode::teacher;
  TaggerModel<float> model(
      cfg.model_config(s.manifest.vocabulary.size(), s.branch, net_mode));

  FeatureStore store(cfg.cache_dir(), s.branch == BranchMode::hpcp_fusion);
  const TrainResult result = train_model(model, s.train_examples, s.valid_examples,
                                         store, train_cfg, &run_dir);
  std::cout << "train: run " << cfg.get("run.id") << " best_epoch "
            << result.best_epoch << " val_roc_auc " << result.best_val_auc << "\n";
}

void cmd_pseudolabel(RunConfig& cfg) {
  const std::string teacher_run = cfg.get("selftrain.teacher_run");
  if (teacher_run.empty())
    fail("config", "pseudolabel requires --teacher-run (a completed train run)");
  const auto ckpt_path = cfg.runs_dir() / teacher_run / "best.ckpt";
  const CheckpointMeta meta = peek_checkpoint(ckpt_path);
  if (meta.config.branch != BranchMode::hpcp_fusion)
    fail("config", "teacher '", teacher_run,
         "' is not an hpcp-fusion model; train one with --branch hpcp");
  if (cfg.is_set("train.mode") &&
      parse_train_mode(cfg.get("train.mode")) != meta.train_mode)
    fail("config", "requested mode '", cfg.get("train.mode"),
         "' does not match teacher checkpoint mode '", to_string(meta.train_mode),
         "'");

  const TrackManifest manifest = load_manifest_from(cfg);
  if (manifest.vocabulary.size() != meta.config.num_tags)
    fail("config", "vocabulary size ", manifest.vocabulary.size(),
         " != teacher tag count ", meta.config.num_tags);

  require_run_id(cfg, teacher_run + "-pseudo");
  const auto run_dir = cfg.run_dir();
  cfg.write_resolved(run_dir);

  TaggerModel<float> teacher(meta.config);
  load_checkpoint(teacher, ckpt_path);
  FeatureStore store(cfg.cache_dir(), true);

  double tau_pos = cfg.get_double("selftrain.tau_pos");
  double tau_neg = cfg.get_double("selftrain.tau_neg");
  if (!cfg.get_bool("selftrain.fixed_thresholds")) {
    std::vector<std::string> labeled_ids = split_track_ids(manifest, Split::train);
    for (const auto& id : split_track_ids(manifest, Split::valid))
      labeled_ids.push_back(id);
    const MatrixXd scores =
        teacher_predict(teacher, store, labeled_ids, meta.train_mode);
    const MatrixXf labels = labels_for_ids(manifest, labeled_ids);
    std::tie(tau_pos, tau_neg) = calibrate_thresholds(scores, labels);
  }

  const auto unlabeled_ids = split_track_ids(manifest, Split::unlabeled);
  const MatrixXd probs =
      teacher_predict(teacher, store, unlabeled_ids, meta.train_mode);
  PseudoLabelSet set = build_pseudo_labels(probs, unlabeled_ids, tau_pos, tau_neg);
  set.teacher_run_id = teacher_run;
  set.save(run_dir / "pseudo_labels.tsv");

  std::cout << "pseudolabel: tau_pos " << set.tau_pos << " tau_neg " << set.tau_neg
            << " positives " << set.n_positive << " negatives " << set.n_negative
            << " abstain " << set.n_abstain << "\n";
}

void cmd_train_student(RunConfig& cfg) {
  const std::string teacher_run = cfg.get("selftrain.teacher_run");
  if (teacher_run.empty())
    fail("config", "train-student requires --teacher-run");
  const auto ckpt_path = cfg.runs_dir() / teacher_run / "best.ckpt";
  const CheckpointMeta teacher_meta = peek_checkpoint(ckpt_path);

  std::string pseudo_path = cfg.get("selftrain.pseudo_path");
  if (pseudo_path.empty())
    pseudo_path =
        (cfg.runs_dir() / (teacher_run + "-pseudo") / "pseudo_labels.tsv").string();
  const PseudoLabelSet pseudo = PseudoLabelSet::load(pseudo_path);

  TrainSetup s = prepare_training(cfg);
  if (s.manifest.vocabulary.size() != teacher_meta.config.num_tags)
    fail("config", "vocabulary size does not match teacher tag count");

  // The student inherits the teacher's branch and mode; noise is always on.
  if (!cfg.is_set("train.mode"))
    cfg.set("train.mode", to_string(teacher_meta.train_mode));
  cfg.set("train.noisy", "true");
  const TrainConfig train_cfg = cfg.train_config(true);

  require_run_id(cfg, std::string(to_string(train_cfg.mode)) + "-" +
                          to_string(teacher_meta.config.branch) + "-noisy");
  const auto run_dir = cfg.run_dir();
  cfg.write_resolved(run_dir);

  TaggerModel<float> student(cfg.model_config(
      s.manifest.vocabulary.size(), teacher_meta.config.branch, NetMode::student));
  {
    TaggerModel<float> teacher(teacher_meta.config);
    load_checkpoint(teacher, ckpt_path);
    if (student.count_parameters() < teacher.count_parameters())
      fail("config", "student has fewer parameters than the teacher (",
           student.count_parameters(), " < ", teacher.count_parameters(), ")");
  }

  FeatureStore store(cfg.cache_dir(),
                     teacher_meta.config.branch == BranchMode::hpcp_fusion);
  const TrainResult result = train_student(
      student, s.train_examples, s.valid_examples, pseudo, store, train_cfg,
      cfg.get_double("selftrain.mix_ratio"), &run_dir);
  std::cout << "train-student: run " << cfg.get("run.id") << " best_epoch "
            << result.best_epoch << " val_roc_auc " << result.best_val_auc << "\n";
}

void cmd_predict(RunConfig& cfg) {
  const std::string run = cfg.get("predict.run");
  if (run.empty()) fail("config", "predict requires --run");
  const std::string split_name = cfg.get("predict.split");
  const Split split = parse_split(split_name);

  const auto ckpt_path = cfg.runs_dir() / run / "best.ckpt";
  const CheckpointMeta meta = peek_checkpoint(ckpt_path);
  TaggerModel<float> model(meta.config);
  load_checkpoint(model, ckpt_path);

  const TrackManifest manifest = load_manifest_from(cfg);
  const auto ids = split_track_ids(manifest, split);
  FeatureStore store(cfg.cache_dir(), meta.config.branch == BranchMode::hpcp_fusion);
  const MatrixXd logits = predict_tracks(model, store, ids, meta.train_mode);

  const auto out_path = run_predictions_path(cfg, run, split_name);
  write_predictions(out_path, ids, logits);
  std::cout << "predict: wrote " << out_path.string() << " (" << ids.size()
            << " tracks)\n";
}

namespace {

// Reads both runs' prediction files for a split and aligns the long run's
// rows to the short run's track order.
std::pair<std::vector<std::string>, std::pair<MatrixXd, MatrixXd>> aligned_logits(
    const RunConfig& cfg, const std::string& short_run, const std::string& long_run,
    const std::string& split) {
  auto [short_ids, l_short] =
      read_predictions(run_predictions_path(cfg, short_run, split));
  auto [long_ids, l_long] =
      read_predictions(run_predictions_path(cfg, long_run, split));
  if (short_ids.size() != long_ids.size())
    fail("shape", "prediction files disagree on track count for split ", split);
  std::map<std::string, Index> long_pos;
  for (size_t i = 0; i < long_ids.size(); ++i)
    long_pos[long_ids[i]] = static_cast<Index>(i);
  MatrixXd aligned(l_long.rows(), l_long.cols());
  for (size_t i = 0; i < short_ids.size(); ++i) {
    auto it = long_pos.find(short_ids[i]);
    if (it == long_pos.end())
      fail("integrity", "track '", short_ids[i], "' missing from ", long_run,
           " predictions");
    aligned.row(static_cast<Index>(i)) = l_long.row(it->second);
  }
  return {short_ids, {l_short, aligned}};
}

}  // namespace

void cmd_ensemble(RunConfig& cfg) {
  const std::string short_run = cfg.get("ensemble.short_run");
  const std::string long_run = cfg.get("ensemble.long_run");
  if (short_run.empty() || long_run.empty())
    fail("config", "ensemble requires --short-run and --long-run");
  const std::string split = cfg.get("ensemble.split");

  require_run_id(cfg, "ensemble");
  const auto run_dir = cfg.run_dir();
  cfg.write_resolved(run_dir);

  double alpha = cfg.get_double("ensemble.alpha");
  const bool sweep = cfg.get_bool("ensemble.sweep");
  if (sweep) {
    // The sweep picks alpha on validation-set predictions of both runs.
    const TrackManifest manifest = load_manifest_from(cfg);
    auto [valid_ids, valid_logits] =
        aligned_logits(cfg, short_run, long_run, "valid");
    const MatrixXf labels = labels_for_ids(manifest, valid_ids);
    const AlphaSweep result = sweep_alpha(
        valid_logits.first, valid_logits.second, labels,
        alpha_grid(cfg.get_double("ensemble.grid_step")),
        parse_sweep_objective(cfg.get("ensemble.objective")));
    alpha = result.best_alpha;
    std::ofstream curve(run_dir / "alpha_sweep.csv", std::ios::trunc);
    curve << result.curve_csv();
    std::cout << "ensemble: sweep best alpha " << alpha << " ("
              << cfg.get("ensemble.objective") << " " << result.best_metric
              << ")\n";
  }

  auto [ids, logits] = aligned_logits(cfg, short_run, long_run, split);
  const MatrixXd combined = ensemble_logits(logits.first, logits.second, alpha);
  write_predictions(run_dir / ("predictions_" + split + ".tsv"), ids, combined);

  nlohmann::json j{{"alpha", alpha},
                   {"short_run", short_run},
                   {"long_run", long_run},
                   {"split", split},
                   {"swept", sweep}};
  std::ofstream meta(run_dir / "ensemble.json", std::ios::trunc);
  meta << j.dump(2) << "\n";
  std::cout << "ensemble: wrote "
            << (run_dir / ("predictions_" + split + ".tsv")).string() << " (alpha "
            << alpha << ")\n";
}

void cmd_evaluate(RunConfig& cfg) {
  const std::string pred_path = cfg.get("evaluate.predictions");
  if (pred_path.empty()) fail("config", "evaluate requires --predictions");
  const std::string split_name = cfg.get("evaluate.split");
  const Split split = parse_split(split_name);
  const bool micro = [&] {
    const std::string& a = cfg.get("evaluate.averaging");
    if (a == "macro") return false;
    if (a == "micro") return true;
    fail("config", "evaluate.averaging must be macro or micro");
  }();

  const TrackManifest manifest = load_manifest_from(cfg);
  auto [ids, logits] = read_predictions(pred_path);
  if (logits.cols() != manifest.vocabulary.size())
    fail("shape", "predictions have ", logits.cols(), " columns, vocabulary has ",
         manifest.vocabulary.size(), " tags");
  for (const auto& id : ids) {
    const TrackRecord& rec = manifest.find(id);
    if (rec.split != split)
      fail("integrity", "track '", id, "' is not in split '", split_name, "'");
  }
  const MatrixXf labels = labels_for_ids(manifest, ids);

  const MatrixXd probs = (1.0 / (1.0 + (-logits.array()).exp())).matrix();
  const double thr = cfg.get_double("evaluate.threshold");
  const MetricsReport report_default =
      compute_report(probs, labels, manifest.vocabulary.tags, thr, micro);
  const VectorXd tuned = tune_thresholds(probs, labels);
  const MetricsReport report_tuned =
      compute_report(probs, labels, manifest.vocabulary.tags, tuned, micro);

  const auto out_dir = std::filesystem::path(pred_path).parent_path();
  const auto report_path = out_dir / ("report_" + split_name + ".json");
  {
    nlohmann::json j;
    j["split"] = split_name;
    j["predictions"] = pred_path;
    j["default"] = nlohmann::json::parse(report_default.to_json());
    j["tuned"] = nlohmann::json::parse(report_tuned.to_json());
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) fail("io", "cannot write report ", report_path.string());
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream csv(out_dir / ("report_" + split_name + "_per_tag.csv"),
                      std::ios::trunc);
    csv << report_default.per_tag_csv();
  }
  {
    std::ofstream csv(out_dir / ("report_" + split_name + "_per_tag_tuned.csv"),
                      std::ios::trunc);
    csv << report_tuned.per_tag_csv();
  }
  std::cout << "evaluate: roc_auc " << report_default.roc_auc << " pr_auc "
            << report_default.pr_auc << " f_score " << report_default.f_score
            << " avg_tpr " << report_default.avg_tpr << " avg_tnr "
            << report_default.avg_tnr << " -> " << report_path.string() << "\n";
}

int cli_main(int argc, char** argv) {
  CLI::App app{"emotag: dual-branch music emotion tagging with noisy-student "
               "self-training"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "config file (key=value lines)");
    sub->add_option("--set", overrides, "override: key=value (repeatable)");
    sub->add_option_function<std::string>(
        "--manifest", [&](const std::string& v) { cfg.set("paths.manifest", v); },
        "manifest TSV path");
    sub->add_option_function<std::string>(
        "--vocab", [&](const std::string& v) { cfg.set("paths.vocab", v); },
        "vocabulary file path");
    sub->add_option_function<std::string>(
        "--cache-dir", [&](const std::string& v) { cfg.set("paths.cache_dir", v); },
        "feature cache directory");
    sub->add_option_function<std::string>(
        "--runs-dir", [&](const std::string& v) { cfg.set("paths.runs_dir", v); },
        "runs directory");
    sub->add_option_function<std::string>(
        "--run-id", [&](const std::string& v) { cfg.set("run.id", v); },
        "run identifier");
    sub->add_option_function<int>(
        "--seed", [&](int v) { cfg.set("run.seed", std::to_string(v)); },
        "global seed");
  };

  auto* extract = app.add_subcommand("extract", "decode audio and cache features");
  add_common(extract);

  auto* train = app.add_subcommand("train", "supervised training run");
  add_common(train);
  train->add_option_function<std::string>(
      "--mode", [&](const std::string& v) { cfg.set("train.mode", v); },
      "long|short");
  train->add_option_function<std::string>(
      "--branch", [&](const std::string& v) { cfg.set("train.branch", v); },
      "normal|hpcp");
  train->add_flag_function(
      "--noisy", [&](int64_t) { cfg.set("train.noisy", "true"); },
      "student-style noise (stronger masks, gaussian, stochastic depth)");

  auto* pseudolabel =
      app.add_subcommand("pseudolabel", "teacher predictions on the unlabeled pool");
  add_common(pseudolabel);
  pseudolabel->add_option_function<std::string>(
      "--teacher-run",
      [&](const std::string& v) { cfg.set("selftrain.teacher_run", v); },
      "run id of the trained teacher");
  pseudolabel->add_option_function<std::string>(
      "--mode", [&](const std::string& v) { cfg.set("train.mode", v); },
      "must match the teacher checkpoint");
  pseudolabel->add_flag_function(
      "--fixed-thresholds",
      [&](int64_t) { cfg.set("selftrain.fixed_thresholds", "true"); },
      "use the fixed thresholds instead of percentile calibration");

  auto* train_student_cmd =
      app.add_subcommand("train-student", "noisy student on labels + pseudo-labels");
  add_common(train_student_cmd);
  train_student_cmd->add_option_function<std::string>(
      "--teacher-run",
      [&](const std::string& v) { cfg.set("selftrain.teacher_run", v); },
      "run id of the teacher");
  train_student_cmd->add_option_function<std::string>(
      "--pseudo", [&](const std::string& v) { cfg.set("selftrain.pseudo_path", v); },
      "pseudo-label TSV path");
  train_student_cmd->add_option_function<std::string>(
      "--mode", [&](const std::string& v) { cfg.set("train.mode", v); },
      "long|short (defaults to the teacher's)");

  auto* predict = app.add_subcommand("predict", "chunk-averaged logits for a split");
  add_common(predict);
  predict->add_option_function<std::string>(
      "--run", [&](const std::string& v) { cfg.set("predict.run", v); },
      "run id to predict with");
  predict->add_option_function<std::string>(
      "--split", [&](const std::string& v) { cfg.set("predict.split", v); },
      "train|valid|test|unlabeled");

  auto* ensemble = app.add_subcommand("ensemble", "weighted-logit ensemble");
  add_common(ensemble);
  ensemble->add_option_function<std::string>(
      "--short-run", [&](const std::string& v) { cfg.set("ensemble.short_run", v); },
      "short-mode run id");
  ensemble->add_option_function<std::string>(
      "--long-run", [&](const std::string& v) { cfg.set("ensemble.long_run", v); },
      "long-mode run id");
  ensemble->add_option_function<double>(
      "--alpha", [&](double v) { cfg.set("ensemble.alpha", std::to_string(v)); },
      "weight of the short-run logits");
  ensemble->add_flag_function(
      "--sweep", [&](int64_t) { cfg.set("ensemble.sweep", "true"); },
      "pick alpha on the validation split");
  ensemble->add_option_function<std::string>(
      "--split", [&](const std::string& v) { cfg.set("ensemble.split", v); },
      "split to combine (default test)");

  auto* evaluate = app.add_subcommand("evaluate", "metric report for predictions");
  add_common(evaluate);
  evaluate->add_option_function<std::string>(
      "--predictions",
      [&](const std::string& v) { cfg.set("evaluate.predictions", v); },
      "prediction TSV path");
  evaluate->add_option_function<std::string>(
      "--split", [&](const std::string& v) { cfg.set("evaluate.split", v); },
      "split the predictions belong to");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code;
  }

  // Precedence: defaults < config file < --set < dedicated flags < EMOTAG_CACHE.
  // Dedicated flag values were captured into `cfg` during parsing.
  try {
    RunConfig merged;
    if (!config_file.empty()) merged.load_file(config_file);
    for (const auto& kv : overrides) merged.set_kv(kv);
    for (const auto& key :
         {"paths.manifest", "paths.vocab", "paths.cache_dir", "paths.runs_dir",
          "run.id", "run.seed", "train.mode", "train.branch", "train.noisy",
          "selftrain.teacher_run", "selftrain.pseudo_path",
          "selftrain.fixed_thresholds", "predict.run", "predict.split",
          "ensemble.short_run", "ensemble.long_run", "ensemble.alpha",
          "ensemble.sweep", "ensemble.split", "evaluate.predictions",
          "evaluate.split"}) {
      if (cfg.is_set(key)) merged.set(key, cfg.get(key));
    }
    cfg = merged;
    cfg.apply_env();

    if (extract->parsed()) cmd_extract(cfg);
    if (train->parsed()) cmd_train(cfg);
    if (pseudolabel->parsed()) cmd_pseudolabel(cfg);
    if (train_student_cmd->parsed()) cmd_train_student(cfg);
    if (predict->parsed()) cmd_predict(cfg);
    if (ensemble->parsed()) cmd_ensemble(cfg);
    if (evaluate->parsed()) cmd_evaluate(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace emotag
