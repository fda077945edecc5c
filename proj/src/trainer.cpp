// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "peakctc/numerics.hpp"

namespace peakctc {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.98;
constexpr double kAdamEps = 1e-9;

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Loss components and encoder-parameter gradients for one utterance.
// CTC sees the temperature-1 softmax; the regularizer the tempered one.
// The PFR gradient is skipped entirely when lambda is 0 so a lambda=0 run
// is bitwise identical to a CTC-only trainer.
struct UttResult {
  double ctc = 0.0, pfr = 0.0;
  EncoderGrads grads;
};

UttResult UtteranceGradients(const EncoderParams &params, const Utterance &utt,
                             const PfrConfig &pfr) {
  UttResult out;
  ForwardCache cache;
  Matrix logits = EncoderForward(params, utt.features, &cache);
  ProbLattice lattice{TemperedSoftmaxRows(logits, 1.0), utt.frame_ms};
  ExtendedLabel ext = ExtendLabels(utt.labels);
  Matrix alpha = ForwardAlphas(lattice, ext);
  Matrix beta = BackwardBetas(lattice, ext);
  const std::size_t T = lattice.num_frames();
  const std::size_t S = ext.size();
  double log_p = LogSumExp2(alpha(T - 1, S - 1),
                            S > 1 ? alpha(T - 1, S - 2) : kLogZero);
  out.ctc = -log_p;
  out.pfr = PfrLoss(logits, pfr);
  Matrix occ = Occupancy(alpha, beta, ext, lattice.vocab_size(), -log_p);
  Matrix dlogits = CtcGradWrtLogits(occ, lattice);
  if (pfr.lambda != 0.0) {
    Matrix reg = PfrGradWrtLogits(logits, pfr);
    for (std::size_t i = 0; i < dlogits.size(); ++i)
      dlogits.data()[i] += pfr.lambda * reg.data()[i];
  }
  out.grads = EncoderBackward(params, cache, dlogits);
  return out;
}

}  // namespace

double LrAtStep(double base_lr, std::size_t warmup_steps, std::size_t step) {
  if (step == 0) throw std::invalid_argument("LrAtStep: step must be >= 1");
  double s = static_cast<double>(step);
  double w = static_cast<double>(warmup_steps);
  return base_lr * std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

void AdamStep(EncoderParams &params, const EncoderGrads &grads,
              OptimizerState &state, double lr) {
  auto p_tensors = params.tensors();
  auto g_tensors = grads.tensors();
  if (state.m.empty()) {
    for (const Matrix *p : p_tensors) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  ++state.step;
  double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p_tensors.size(); ++i) {
    Matrix &p = *p_tensors[i];
    const Matrix &g = *g_tensors[i];
    Matrix &m = state.m[i];
    Matrix &v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      double gj = g.data()[j];
      if (!std::isfinite(gj))
        throw TrainError(std::string("non-finite gradient in parameter block ") +
                         EncoderParams::tensor_name(i));
      m.data()[j] = kAdamBeta1 * m.data()[j] + (1.0 - kAdamBeta1) * gj;
      v.data()[j] = kAdamBeta2 * v.data()[j] + (1.0 - kAdamBeta2) * gj * gj;
      double mhat = m.data()[j] / bc1;
      double vhat = v.data()[j] / bc2;
      p.data()[j] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
  }
}

std::pair<double, double> BatchGradients(
    const EncoderParams &params, const std::vector<const Utterance *> &batch,
    const PfrConfig &pfr, EncoderGrads &grads_out, bool parallel) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("BatchGradients: empty batch");
  std::vector<UttResult> results(n);
  std::string error;

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(n); ++i) {
      try {
        results[i] = UtteranceGradients(params, *batch[i], pfr);
      } catch (const std::exception &e) {
#pragma omp critical
        error = "utterance " + batch[i]->id + ": " + e.what();
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        results[i] = UtteranceGradients(params, *batch[i], pfr);
      } catch (const std::exception &e) {
        error = "utterance " + batch[i]->id + ": " + e.what();
        break;
      }
    }
  }
  if (!error.empty()) throw TrainError(error);

  // Fixed-order reduction keeps results bitwise deterministic regardless
  // of how the parallel loop interleaved.
  grads_out = ZeroParams(params.config);
  double scale = 1.0 / static_cast<double>(n);
  double ctc_sum = 0.0, pfr_sum = 0.0;
  auto out_tensors = grads_out.tensors();
  for (std::size_t i = 0; i < n; ++i) {
    ctc_sum += results[i].ctc;
    pfr_sum += results[i].pfr;
    auto in_tensors = results[i].grads.tensors();
    for (std::size_t t = 0; t < out_tensors.size(); ++t)
      *out_tensors[t] += *in_tensors[t];
  }
  for (Matrix *t : out_tensors) *t *= scale;
  return {ctc_sum * scale, pfr_sum * scale};
}

EncoderParams AverageParams(const std::vector<EncoderParams> &snapshots) {
  if (snapshots.empty())
    throw std::invalid_argument("AverageParams: no snapshots");
  EncoderParams avg = ZeroParams(snapshots.front().config);
  auto avg_tensors = avg.tensors();
  for (const EncoderParams &snap : snapshots) {
    auto snap_tensors = snap.tensors();
    for (std::size_t t = 0; t < avg_tensors.size(); ++t)
      *avg_tensors[t] += *snap_tensors[t];
  }
  double scale = 1.0 / static_cast<double>(snapshots.size());
  for (Matrix *t : avg_tensors) *t *= scale;
  return avg;
}

Checkpoint Train(const Dataset &dataset, const EncoderConfig &encoder_config,
                 const TrainConfig &train_config, TrainLog *log) {
  if (dataset.utterances.empty())
    throw std::invalid_argument("Train: empty dataset");
  if (train_config.epochs == 0 || train_config.warmup_steps == 0)
    throw std::invalid_argument("Train: epochs and warmup_steps must be >= 1");
  if (train_config.average_last_k == 0 ||
      train_config.average_last_k > train_config.epochs)
    throw std::invalid_argument("Train: average_last_k must be in [1, epochs]");

  EncoderParams params = InitParams(encoder_config, train_config.seed);
  OptimizerState opt;
  std::mt19937_64 shuffle_rng(train_config.seed);
  PfrConfig pfr = train_config.pfr();

  std::vector<std::size_t> order(dataset.utterances.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EncoderParams> snapshots;

  double epoch_ctc = 0.0, epoch_pfr = 0.0;
  for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    epoch_ctc = epoch_pfr = 0.0;
    std::size_t batches = 0;
    double lr = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += train_config.batch_size) {
      std::size_t end = std::min(start + train_config.batch_size, order.size());
      std::vector<const Utterance *> batch;
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(&dataset.utterances[order[i]]);
      EncoderGrads grads;
      auto [ctc, pfr_loss] = BatchGradients(params, batch, pfr, grads);
      lr = LrAtStep(train_config.base_lr, train_config.warmup_steps,
                    opt.step + 1);
      AdamStep(params, grads, opt, lr);
      epoch_ctc += ctc;
      epoch_pfr += pfr_loss;
      ++batches;
      if (log)
        log->steps.push_back({epoch, opt.step, lr, ctc, pfr_loss,
                              ctc + pfr.lambda * pfr_loss});
    }
    epoch_ctc /= static_cast<double>(batches);
    epoch_pfr /= static_cast<double>(batches);
    if (log) log->epochs.push_back({epoch, epoch_ctc, epoch_pfr, lr});

    snapshots.push_back(params);
    if (snapshots.size() > train_config.average_last_k)
      snapshots.erase(snapshots.begin());
  }

  Checkpoint ckpt;
  ckpt.params = AverageParams(snapshots);
  ckpt.train_config = train_config;
  ckpt.epoch = train_config.epochs;
  ckpt.final_ctc = epoch_ctc;
  ckpt.final_pfr = epoch_pfr;
  return ckpt;
}

ProbLattice Posteriors(const EncoderParams &params, const Utterance &utt) {
  Matrix logits = EncoderForward(params, utt.features, nullptr);
  return {TemperedSoftmaxRows(logits, 1.0), utt.frame_ms};
}

LatencyReport Evaluate(const Checkpoint &checkpoint, const Dataset &dataset,
                       bool parallel) {
  const std::size_t n = dataset.utterances.size();
  std::vector<DecodeResult> results(n);
  std::vector<const Utterance *> refs(n);
  for (std::size_t i = 0; i < n; ++i) refs[i] = &dataset.utterances[i];

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(n); ++i)
      results[i] = GreedyDecode(Posteriors(checkpoint.params, *refs[i]));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      results[i] = GreedyDecode(Posteriors(checkpoint.params, *refs[i]));
  }
  return BuildLatencyReport(results, refs);
}

namespace {

nlohmann::json MatrixToJson(const Matrix &m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix MatrixFromJson(const nlohmann::json &j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size())
    throw TrainError("checkpoint: tensor size mismatch");
  m.data() = std::move(data);
  return m;
}

}  // namespace

void SaveCheckpoint(const Checkpoint &checkpoint, const std::string &path) {
  const EncoderConfig &ec = checkpoint.params.config;
  const TrainConfig &tc = checkpoint.train_config;
  nlohmann::json j;
  j["version"] = Checkpoint::kVersion;
  j["encoder"] = {{"feature_dim", ec.feature_dim}, {"hidden_dim", ec.hidden_dim},
                  {"vocab_size", ec.vocab_size}, {"left_context", ec.left_context},
                  {"right_context", ec.right_context}, {"layers", ec.layers}};
  j["train"] = {{"lambda", tc.lambda}, {"tau", tc.tau},
                {"detach_teacher", tc.detach_teacher}, {"epochs", tc.epochs},
                {"batch_size", tc.batch_size}, {"base_lr", tc.base_lr},
                {"warmup_steps", tc.warmup_steps}, {"seed", tc.seed},
                {"average_last_k", tc.average_last_k}};
  j["epoch"] = checkpoint.epoch;
  j["final_ctc"] = checkpoint.final_ctc;
  j["final_pfr"] = checkpoint.final_pfr;
  nlohmann::json tensors;
  auto p_tensors = checkpoint.params.tensors();
  for (std::size_t i = 0; i < p_tensors.size(); ++i)
    tensors[EncoderParams::tensor_name(i)] = MatrixToJson(*p_tensors[i]);
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw TrainError("cannot open checkpoint for writing: " + path);
  out << j.dump();
  if (!out) throw TrainError("checkpoint write failed: " + path);
}

Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw TrainError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw TrainError("corrupt checkpoint " + path + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != Checkpoint::kVersion)
      throw TrainError("checkpoint version mismatch in " + path);
    Checkpoint ckpt;
    const auto &ej = j.at("encoder");
    EncoderConfig ec;
    ec.feature_dim = ej.at("feature_dim").get<std::size_t>();
    ec.hidden_dim = ej.at("hidden_dim").get<std::size_t>();
    ec.vocab_size = ej.at("vocab_size").get<std::size_t>();
    ec.left_context = ej.at("left_context").get<std::size_t>();
    ec.right_context = ej.at("right_context").get<std::size_t>();
    ec.layers = ej.at("layers").get<std::size_t>();
    ckpt.params = ZeroParams(ec);
    const auto &tj = j.at("train");
    ckpt.train_config.lambda = tj.at("lambda").get<double>();
    ckpt.train_config.tau = tj.at("tau").get<double>();
    ckpt.train_config.detach_teacher = tj.at("detach_teacher").get<bool>();
    ckpt.train_config.epochs = tj.at("epochs").get<std::size_t>();
    ckpt.train_config.batch_size = tj.at("batch_size").get<std::size_t>();
    ckpt.train_config.base_lr = tj.at("base_lr").get<double>();
    ckpt.train_config.warmup_steps = tj.at("warmup_steps").get<std::size_t>();
    ckpt.train_config.seed = tj.at("seed").get<std::uint64_t>();
    ckpt.train_config.average_last_k = tj.at("average_last_k").get<std::size_t>();
    ckpt.epoch = j.at("epoch").get<std::size_t>();
    ckpt.final_ctc = j.at("final_ctc").get<double>();
    ckpt.final_pfr = j.at("final_pfr").get<double>();
    auto p_tensors = ckpt.params.tensors();
    for (std::size_t i = 0; i < p_tensors.size(); ++i)
      *p_tensors[i] = MatrixFromJson(j.at("tensors").at(EncoderParams::tensor_name(i)));
    return ckpt;
  } catch (const nlohmann::json::exception &e) {
    throw TrainError("corrupt checkpoint " + path + ": " + e.what());
  }
}

std::string TrainLog::StepsCsv() const {
  std::ostringstream out;
  out << "epoch,step,lr,ctc_loss,pfr_loss,total\n";
  for (const StepRecord &s : steps)
    out << s.epoch << "," << s.step << "," << FormatDouble(s.lr) << ","
        << FormatDouble(s.ctc) << "," << FormatDouble(s.pfr) << ","
        << FormatDouble(s.total) << "\n";
  return out.str();
}

std::string MetricsCsvHeader() {
  return "model_id,lambda,tau,lookahead_frames,cer,apl_ms,pr50_ms,pr90_ms,"
         "matched_tokens,utterances";
}

std::string MetricsCsvRow(const std::string &model_id, double lambda, double tau,
                          std::size_t lookahead_frames,
                          const LatencyReport &report) {
  std::ostringstream out;
  out << model_id << "," << FormatDouble(lambda) << "," << FormatDouble(tau)
      << "," << lookahead_frames << "," << FormatDouble(report.cer) << ","
      << FormatDouble(report.apl_ms) << "," << FormatDouble(report.pr50_ms)
      << "," << FormatDouble(report.pr90_ms) << ","
      << report.matched_token_count << "," << report.utterance_count;
  return out.str();
}

}  // namespace peakctc
