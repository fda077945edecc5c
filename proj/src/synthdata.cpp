// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/synthdata.hpp"

#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace peakctc {

namespace {

void ValidateConfig(const SynthConfig &c) {
  if (c.vocab_size < 2) throw std::invalid_argument("SynthConfig: vocab_size must be >= 2");
  if (c.min_tokens > c.max_tokens || c.min_frames_per_token > c.max_frames_per_token ||
      c.min_silence_frames > c.max_silence_frames)
    throw std::invalid_argument("SynthConfig: min > max in a range");
  if (c.min_tokens == 0) throw std::invalid_argument("SynthConfig: min_tokens must be >= 1");
  if (c.min_frames_per_token == 0)
    throw std::invalid_argument("SynthConfig: min_frames_per_token must be >= 1");
  if (!(c.frame_ms > 0)) throw std::invalid_argument("SynthConfig: frame_ms must be positive");
  if (c.noise_std < 0) throw std::invalid_argument("SynthConfig: noise_std must be >= 0");
}

}  // namespace

Dataset GenerateDataset(const SynthConfig &config, std::uint64_t seed) {
  ValidateConfig(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  // Fixed prototypes: index 0 is silence, 1..V-1 the tokens. Drawn from
  // prototype_seed, not the utterance seed, so splits share the mapping.
  std::mt19937_64 proto_rng(config.prototype_seed);
  std::vector<std::vector<double>> prototypes(config.vocab_size);
  for (auto &proto : prototypes) {
    proto.resize(config.feature_dim);
    for (double &v : proto) v = unit(proto_rng);
  }

  std::uniform_int_distribution<std::size_t> n_tokens(config.min_tokens, config.max_tokens);
  std::uniform_int_distribution<std::size_t> dur(config.min_frames_per_token,
                                                 config.max_frames_per_token);
  std::uniform_int_distribution<std::size_t> silence(config.min_silence_frames,
                                                     config.max_silence_frames);
  std::uniform_int_distribution<int> token(1, static_cast<int>(config.vocab_size) - 1);

  Dataset ds;
  ds.config = config;
  ds.seed = seed;
  ds.utterances.reserve(config.utterance_count);
  for (std::size_t i = 0; i < config.utterance_count; ++i) {
    Utterance utt;
    {
      std::ostringstream oss;
      oss << "utt" << std::setw(6) << std::setfill('0') << i;
      utt.id = oss.str();
    }
    utt.frame_ms = config.frame_ms;

    std::size_t count = n_tokens(rng);
    std::size_t lead = silence(rng), trail = silence(rng);
    utt.labels.resize(count);
    std::vector<std::size_t> durations(count);
    std::size_t speech_frames = 0;
    for (std::size_t j = 0; j < count; ++j) {
      utt.labels[j] = token(rng);
      durations[j] = dur(rng);
      speech_frames += durations[j];
    }
    std::size_t total = lead + speech_frames + trail;
    utt.features = Matrix(total, config.feature_dim);

    std::size_t frame = 0;
    auto emit_span = [&](std::size_t proto_id, std::size_t span) {
      for (std::size_t f = 0; f < span; ++f, ++frame) {
        double *row = utt.features.row_ptr(frame);
        for (std::size_t k = 0; k < config.feature_dim; ++k)
          row[k] = prototypes[proto_id][k] +
                   (config.noise_std > 0 ? config.noise_std * unit(rng) : 0.0);
      }
    };
    emit_span(0, lead);
    for (std::size_t j = 0; j < count; ++j) {
      emit_span(static_cast<std::size_t>(utt.labels[j]), durations[j]);
      utt.label_end_frames.push_back(frame - 1);
    }
    utt.speech_end_frame = frame - 1;
    emit_span(0, trail);

    ds.utterances.push_back(std::move(utt));
  }
  return ds;
}

void WriteJsonl(const Dataset &dataset, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const Utterance &utt : dataset.utterances) {
    nlohmann::json j;
    j["id"] = utt.id;
    j["frame_ms"] = utt.frame_ms;
    nlohmann::json feats = nlohmann::json::array();
    for (std::size_t t = 0; t < utt.features.rows(); ++t) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t k = 0; k < utt.features.cols(); ++k)
        row.push_back(utt.features(t, k));
      feats.push_back(std::move(row));
    }
    j["features"] = std::move(feats);
    j["labels"] = utt.labels;
    j["label_end_frames"] = utt.label_end_frames;
    j["speech_end_frame"] = utt.speech_end_frame;
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

Dataset ReadJsonl(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open for reading: " + path);
  Dataset ds;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw DataError(path + ": parse error at line " + std::to_string(line_no) +
                      ": " + e.what());
    }
    try {
      Utterance utt;
      utt.id = j.at("id").get<std::string>();
      if (!seen.insert(utt.id).second)
        throw DataError(path + ": duplicate utterance id '" + utt.id +
                        "' at line " + std::to_string(line_no));
      utt.frame_ms = j.at("frame_ms").get<double>();
      const auto &feats = j.at("features");
      std::size_t rows = feats.size();
      std::size_t cols = rows > 0 ? feats.at(0).size() : 0;
      utt.features = Matrix(rows, cols);
      for (std::size_t t = 0; t < rows; ++t) {
        const auto &row = feats.at(t);
        if (row.size() != cols)
          throw DataError(path + ": ragged feature rows at line " +
                          std::to_string(line_no));
        for (std::size_t k = 0; k < cols; ++k)
          utt.features(t, k) = row.at(k).get<double>();
      }
      utt.labels = j.at("labels").get<LabelSeq>();
      utt.label_end_frames = j.at("label_end_frames").get<std::vector<std::size_t>>();
      utt.speech_end_frame = j.at("speech_end_frame").get<std::size_t>();
      ds.utterances.push_back(std::move(utt));
    } catch (const nlohmann::json::exception &e) {
      throw DataError(path + ": invalid record at line " + std::to_string(line_no) +
                      ": " + e.what());
    }
  }
  return ds;
}

}  // namespace peakctc
