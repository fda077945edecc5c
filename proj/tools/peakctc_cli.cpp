// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Command-line surface: synthetic data generation, training, evaluation,
// regularization-weight sweeps, and per-frame posterior dumps.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "peakctc/sweep.hpp"
#include "peakctc/trainer.hpp"

namespace fs = std::filesystem;
using namespace peakctc;

namespace {

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteFile(const std::string &path, const std::string &content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

int MaxLabelId(const Dataset &ds) {
  int max_id = 0;
  for (const Utterance &utt : ds.utterances)
    for (int tok : utt.labels) max_id = std::max(max_id, tok);
  return max_id;
}

void CheckCompatible(const Checkpoint &ckpt, const Dataset &ds) {
  const EncoderConfig &enc = ckpt.params.config;
  if (MaxLabelId(ds) >= static_cast<int>(enc.vocab_size))
    throw std::runtime_error("dataset labels exceed checkpoint vocab size " +
                             std::to_string(enc.vocab_size));
  for (const Utterance &utt : ds.utterances)
    if (utt.features.cols() != enc.feature_dim)
      throw std::runtime_error("feature dim mismatch: dataset " +
                               std::to_string(utt.features.cols()) +
                               " vs checkpoint " + std::to_string(enc.feature_dim));
}

// ---- gen-data ----

struct GenDataArgs {
  SynthConfig config;
  std::uint64_t seed = 1;
  std::size_t dev_utts = 50, test_utts = 50;
  std::string out_dir = "data";
};

int RunGenData(const GenDataArgs &args) {
  fs::create_directories(args.out_dir);
  SynthConfig cfg = args.config;
  // one prototype set shared by all three splits
  cfg.prototype_seed = args.seed;
  Dataset train = GenerateDataset(cfg, args.seed);
  cfg.utterance_count = args.dev_utts;
  Dataset dev = GenerateDataset(cfg, args.seed + 1);
  cfg.utterance_count = args.test_utts;
  Dataset test = GenerateDataset(cfg, args.seed + 2);
  WriteJsonl(train, (fs::path(args.out_dir) / "train.jsonl").string());
  WriteJsonl(dev, (fs::path(args.out_dir) / "dev.jsonl").string());
  WriteJsonl(test, (fs::path(args.out_dir) / "test.jsonl").string());

  nlohmann::json manifest;
  manifest["seed"] = args.seed;
  manifest["splits"] = {{"train", args.config.utterance_count},
                        {"dev", args.dev_utts},
                        {"test", args.test_utts}};
  manifest["config"] = {
      {"vocab_size", args.config.vocab_size},
      {"prototype_seed", cfg.prototype_seed},
      {"min_tokens", args.config.min_tokens},
      {"max_tokens", args.config.max_tokens},
      {"min_frames_per_token", args.config.min_frames_per_token},
      {"max_frames_per_token", args.config.max_frames_per_token},
      {"min_silence_frames", args.config.min_silence_frames},
      {"max_silence_frames", args.config.max_silence_frames},
      {"feature_dim", args.config.feature_dim},
      {"noise_std", args.config.noise_std},
      {"frame_ms", args.config.frame_ms}};
  WriteFile((fs::path(args.out_dir) / "manifest.json").string(),
            manifest.dump(2) + "\n");
  std::cout << "wrote " << train.utterances.size() << "/" << dev.utterances.size()
            << "/" << test.utterances.size() << " utterances to " << args.out_dir
            << "\n";
  return 0;
}

// ---- shared train flags ----

struct ModelArgs {
  TrainConfig train;
  std::size_t hidden = 32;
  std::size_t left_context = 5;
  std::size_t lookahead = 2;
  std::size_t layers = 1;
  std::size_t vocab = 0;  // 0 = derive from data
};

void AddModelFlags(CLI::App *cmd, ModelArgs &args) {
  cmd->add_option("--lambda", args.train.lambda, "regularization weight")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--tau", args.train.tau, "distillation temperature")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("!--no-detach", args.train.detach_teacher,
                "backprop through the teacher frame as well");
  cmd->add_option("--lookahead", args.lookahead, "future context frames R");
  cmd->add_option("--left-context", args.left_context, "past context frames L");
  cmd->add_option("--hidden", args.hidden, "encoder hidden width");
  cmd->add_option("--layers", args.layers, "encoder layers (1 or 2)");
  cmd->add_option("--vocab", args.vocab, "vocab size (default: derived)");
  cmd->add_option("--epochs", args.train.epochs, "training epochs");
  cmd->add_option("--batch", args.train.batch_size, "batch size");
  cmd->add_option("--lr", args.train.base_lr, "base learning rate");
  cmd->add_option("--warmup", args.train.warmup_steps, "warmup steps");
  cmd->add_option("--seed", args.train.seed, "training seed");
  cmd->add_option("--avg-last", args.train.average_last_k,
                  "checkpoints averaged into the final model");
}

EncoderConfig BuildEncoderConfig(const ModelArgs &args, const Dataset &train_set) {
  EncoderConfig enc;
  if (train_set.utterances.empty())
    throw std::runtime_error("training set is empty");
  enc.feature_dim = train_set.utterances.front().features.cols();
  enc.hidden_dim = args.hidden;
  enc.vocab_size =
      args.vocab > 0 ? args.vocab
                     : static_cast<std::size_t>(MaxLabelId(train_set)) + 1;
  if (MaxLabelId(train_set) >= static_cast<int>(enc.vocab_size))
    throw std::runtime_error("--vocab too small for the dataset labels");
  enc.left_context = args.left_context;
  enc.right_context = args.lookahead;
  enc.layers = args.layers;
  return enc;
}

// ---- train ----

int RunTrain(const std::string &data_path, const ModelArgs &args,
             const std::string &out_dir) {
  Dataset train_set = ReadJsonl(data_path);
  EncoderConfig enc = BuildEncoderConfig(args, train_set);
  TrainLog log;
  Checkpoint ckpt = Train(train_set, enc, args.train, &log);
  fs::create_directories(out_dir);
  SaveCheckpoint(ckpt, (fs::path(out_dir) / "checkpoint.json").string());
  WriteFile((fs::path(out_dir) / "train_log.csv").string(), log.StepsCsv());
  std::cout << "final epoch: ctc=" << Fmt(ckpt.final_ctc)
            << " pfr=" << Fmt(ckpt.final_pfr) << "\n";
  return 0;
}

// ---- eval ----

int RunEval(const std::string &ckpt_path, const std::string &data_path,
            const std::string &out_path, std::string model_id) {
  Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  Dataset ds = ReadJsonl(data_path);
  CheckCompatible(ckpt, ds);
  LatencyReport report = Evaluate(ckpt, ds);
  if (model_id.empty()) model_id = fs::path(ckpt_path).stem().string();
  std::string row =
      MetricsCsvRow(model_id, ckpt.train_config.lambda, ckpt.train_config.tau,
                    ckpt.params.config.right_context, report);
  std::cout << MetricsCsvHeader() << "\n" << row << "\n";
  if (!out_path.empty())
    WriteFile(out_path, MetricsCsvHeader() + "\n" + row + "\n");
  return 0;
}

// ---- peaks ----

std::string PeaksSvg(const ProbLattice &lattice, const Utterance &utt) {
  const std::size_t T = lattice.num_frames();
  const std::size_t V = lattice.vocab_size();
  const double width = 900.0, height = 300.0, margin = 40.0;
  double x_scale = (width - 2 * margin) / (static_cast<double>(T) * utt.frame_ms);
  double y_scale = height - 2 * margin;
  static const char *palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  for (std::size_t k = 1; k < V; ++k) {
    svg << "<polyline fill=\"none\" stroke=\"" << palette[(k - 1) % 8]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < T; ++t) {
      double x = margin + (static_cast<double>(t) + 1.0) * utt.frame_ms * x_scale;
      double y = height - margin - lattice.probs(t, k) * y_scale;
      svg << x << "," << y << " ";
    }
    svg << "\"/>\n";
  }
  // reference token-end markers
  for (std::size_t j = 0; j < utt.label_end_frames.size(); ++j) {
    double x = margin +
               (static_cast<double>(utt.label_end_frames[j]) + 1.0) *
                   utt.frame_ms * x_scale;
    svg << "<line x1=\"" << x << "\" y1=\"" << margin << "\" x2=\"" << x
        << "\" y2=\"" << height - margin
        << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    svg << "<text x=\"" << x + 2 << "\" y=\"" << margin + 12
        << "\" font-size=\"11\">" << utt.labels[j] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

int RunPeaks(const std::string &ckpt_path, const std::string &data_path,
             const std::string &utt_id, double min_prob,
             const std::string &out_path, const std::string &svg_path) {
  Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  Dataset ds = ReadJsonl(data_path);
  CheckCompatible(ckpt, ds);
  const Utterance *utt = nullptr;
  for (const Utterance &u : ds.utterances)
    if (u.id == utt_id) utt = &u;
  if (!utt) throw std::runtime_error("unknown utterance id: " + utt_id);

  ProbLattice lattice = Posteriors(ckpt.params, *utt);
  std::ostringstream csv;
  csv << "row_type,frame,time_ms,token_id,posterior\n";
  for (std::size_t t = 0; t < lattice.num_frames(); ++t)
    for (std::size_t k = 1; k < lattice.vocab_size(); ++k)
      if (lattice.probs(t, k) > min_prob)
        csv << "posterior," << t << ","
            << Fmt((static_cast<double>(t) + 1.0) * utt->frame_ms) << "," << k
            << "," << Fmt(lattice.probs(t, k)) << "\n";
  for (std::size_t j = 0; j < utt->labels.size(); ++j)
    csv << "ref_end," << utt->label_end_frames[j] << ","
        << Fmt((static_cast<double>(utt->label_end_frames[j]) + 1.0) *
               utt->frame_ms)
        << "," << utt->labels[j] << ",\n";
  if (out_path.empty())
    std::cout << csv.str();
  else
    WriteFile(out_path, csv.str());
  if (!svg_path.empty()) WriteFile(svg_path, PeaksSvg(lattice, *utt));
  return 0;
}

// ---- sweep ----

int RunSweepCmd(const std::string &train_path, const std::string &dev_path,
                const std::string &test_path, const std::string &lambdas_csv,
                const ModelArgs &args, const std::string &out_dir) {
  std::vector<double> lambdas;
  std::stringstream ss(lambdas_csv);
  std::string field;
  while (std::getline(ss, field, ',')) lambdas.push_back(std::stod(field));
  if (lambdas.empty()) throw std::runtime_error("--lambdas is empty");

  Dataset train_set = ReadJsonl(train_path);
  Dataset dev_set = ReadJsonl(dev_path);
  Dataset test_set = ReadJsonl(test_path);

  SweepSpec spec;
  spec.lambdas = lambdas;
  spec.encoder = BuildEncoderConfig(args, train_set);
  spec.train = args.train;

  std::vector<SweepRow> rows;
  try {
    rows = RunSweep(train_set, dev_set, test_set, spec);
  } catch (const std::exception &e) {
    std::cerr << "sweep aborted after " << rows.size() << " of "
              << lambdas.size() << " runs: " << e.what() << "\n";
    return 1;
  }
  std::string csv = SweepCsv(rows);
  fs::create_directories(out_dir);
  WriteFile((fs::path(out_dir) / "sweep.csv").string(), csv);
  for (const SweepRow &row : rows)
    WriteFile((fs::path(out_dir) / ("train_log_lambda_" + Fmt(row.lambda) + ".csv"))
                  .string(),
              row.log.StepsCsv());
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"CTC training toolkit with peak-first regularization"};
  app.require_subcommand(1);

  // gen-data
  GenDataArgs gen;
  CLI::App *gen_cmd = app.add_subcommand("gen-data", "generate synthetic splits");
  gen_cmd->add_option("--vocab", gen.config.vocab_size, "vocab size incl. blank")
      ->check(CLI::Range(static_cast<std::size_t>(2), static_cast<std::size_t>(1000)));
  gen_cmd->add_option("--utts", gen.config.utterance_count, "train utterances")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--dev-utts", gen.dev_utts, "dev utterances")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--test-utts", gen.test_utts, "test utterances")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "base seed (splits use seed, seed+1, seed+2)");
  gen_cmd->add_option("--min-tokens", gen.config.min_tokens, "");
  gen_cmd->add_option("--max-tokens", gen.config.max_tokens, "");
  gen_cmd->add_option("--min-frames", gen.config.min_frames_per_token, "");
  gen_cmd->add_option("--max-frames", gen.config.max_frames_per_token, "");
  gen_cmd->add_option("--min-silence", gen.config.min_silence_frames, "");
  gen_cmd->add_option("--max-silence", gen.config.max_silence_frames, "");
  gen_cmd->add_option("--feature-dim", gen.config.feature_dim, "");
  gen_cmd->add_option("--noise-std", gen.config.noise_std, "")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--frame-ms", gen.config.frame_ms, "")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out_dir, "output directory");

  // train
  ModelArgs train_args;
  std::string train_data, train_out = "run";
  CLI::App *train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", train_data, "training JSONL")->required();
  AddModelFlags(train_cmd, train_args);
  train_cmd->add_option("--out", train_out, "output directory");

  // eval
  std::string eval_ckpt, eval_data, eval_out, eval_model_id;
  CLI::App *eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "evaluation JSONL")->required();
  eval_cmd->add_option("--out", eval_out, "also write the CSV here");
  eval_cmd->add_option("--model-id", eval_model_id, "row id (default: file stem)");

  // peaks
  std::string peaks_ckpt, peaks_data, peaks_utt, peaks_out, peaks_svg;
  double peaks_min_prob = 0.0;
  CLI::App *peaks_cmd = app.add_subcommand("peaks", "dump per-frame posteriors");
  peaks_cmd->add_option("--ckpt", peaks_ckpt, "checkpoint path")->required();
  peaks_cmd->add_option("--data", peaks_data, "JSONL with the utterance")->required();
  peaks_cmd->add_option("--utt", peaks_utt, "utterance id")->required();
  peaks_cmd->add_option("--min-prob", peaks_min_prob, "posterior threshold");
  peaks_cmd->add_option("--out", peaks_out, "CSV path (default: stdout)");
  peaks_cmd->add_option("--svg", peaks_svg, "also render a line chart");

  // sweep
  ModelArgs sweep_args;
  std::string sweep_train, sweep_dev, sweep_test, sweep_out = "sweep";
  std::string sweep_lambdas = "0,0.5,2.0";
  CLI::App *sweep_cmd = app.add_subcommand("sweep", "train and evaluate a lambda grid");
  sweep_cmd->add_option("--train", sweep_train, "training JSONL")->required();
  sweep_cmd->add_option("--dev", sweep_dev, "dev JSONL")->required();
  sweep_cmd->add_option("--test", sweep_test, "test JSONL")->required();
  sweep_cmd->add_option("--lambdas", sweep_lambdas, "comma-separated weights");
  AddModelFlags(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--out", sweep_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return RunGenData(gen);
    if (train_cmd->parsed()) return RunTrain(train_data, train_args, train_out);
    if (eval_cmd->parsed())
      return RunEval(eval_ckpt, eval_data, eval_out, eval_model_id);
    if (peaks_cmd->parsed())
      return RunPeaks(peaks_ckpt, peaks_data, peaks_utt, peaks_min_prob,
                      peaks_out, peaks_svg);
    if (sweep_cmd->parsed())
      return RunSweepCmd(sweep_train, sweep_dev, sweep_test, sweep_lambdas,
                         sweep_args, sweep_out);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
