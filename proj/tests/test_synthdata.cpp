// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "peakctc/synthdata.hpp"

using namespace peakctc;

namespace {

SynthConfig SmallConfig() {
  SynthConfig cfg;
  cfg.vocab_size = 4;
  cfg.utterance_count = 10;
  cfg.min_tokens = 2;
  cfg.max_tokens = 4;
  cfg.min_frames_per_token = 2;
  cfg.max_frames_per_token = 5;
  cfg.min_silence_frames = 1;
  cfg.max_silence_frames = 3;
  cfg.feature_dim = 5;
  cfg.noise_std = 0.0;
  cfg.frame_ms = 40.0;
  return cfg;
}

struct TempPath {
  std::string path;
  explicit TempPath(const std::string &name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempPath() { std::remove(path.c_str()); }
};

bool DatasetsEqual(const Dataset &a, const Dataset &b) {
  if (a.utterances.size() != b.utterances.size()) return false;
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    const Utterance &x = a.utterances[i], &y = b.utterances[i];
    if (x.id != y.id || x.frame_ms != y.frame_ms || x.labels != y.labels ||
        x.label_end_frames != y.label_end_frames ||
        x.speech_end_frame != y.speech_end_frame || !(x.features == y.features))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("Generation is deterministic given the seed") {
  SynthConfig cfg = SmallConfig();
  Dataset a = GenerateDataset(cfg, 123);
  Dataset b = GenerateDataset(cfg, 123);
  Dataset c = GenerateDataset(cfg, 124);
  CHECK(DatasetsEqual(a, b));
  CHECK_FALSE(DatasetsEqual(a, c));
}

TEST_CASE("Noise-free token spans repeat the prototype exactly") {
  Dataset ds = GenerateDataset(SmallConfig(), 9);
  for (const Utterance &utt : ds.utterances) {
    // spans after the first are delimited by the previous end frame; the
    // first span's start is recovered by scanning back over equal frames
    for (std::size_t j = 0; j < utt.labels.size(); ++j) {
      std::size_t end = utt.label_end_frames[j];
      std::size_t span_start;
      if (j > 0) {
        span_start = utt.label_end_frames[j - 1] + 1;
      } else {
        span_start = end;
        while (span_start > 0 &&
               std::equal(utt.features.row_ptr(span_start - 1),
                          utt.features.row_ptr(span_start - 1) + utt.features.cols(),
                          utt.features.row_ptr(end)))
          --span_start;
      }
      for (std::size_t f = span_start; f <= end; ++f)
        for (std::size_t k = 0; k < utt.features.cols(); ++k)
          CHECK(utt.features(f, k) == utt.features(end, k));
    }
  }
}

TEST_CASE("Alignment fields are internally consistent") {
  SynthConfig cfg = SmallConfig();
  cfg.noise_std = 0.3;
  Dataset ds = GenerateDataset(cfg, 77);
  for (const Utterance &utt : ds.utterances) {
    CHECK(utt.labels.size() == utt.label_end_frames.size());
    for (std::size_t j = 1; j < utt.label_end_frames.size(); ++j)
      CHECK(utt.label_end_frames[j] > utt.label_end_frames[j - 1]);
    CHECK(utt.speech_end_frame == utt.label_end_frames.back());
    CHECK(utt.speech_end_frame < utt.features.rows());
    for (int tok : utt.labels) {
      CHECK(tok >= 1);
      CHECK(tok < static_cast<int>(cfg.vocab_size));
    }
  }
  // ids unique
  std::set<std::string> ids;
  for (const Utterance &utt : ds.utterances) CHECK(ids.insert(utt.id).second);
}

TEST_CASE("Token usage is near uniform over many draws") {
  SynthConfig cfg = SmallConfig();
  cfg.utterance_count = 400;
  Dataset ds = GenerateDataset(cfg, 5);
  std::vector<std::size_t> counts(cfg.vocab_size, 0);
  std::size_t total = 0;
  for (const Utterance &utt : ds.utterances)
    for (int tok : utt.labels) {
      ++counts[tok];
      ++total;
    }
  CHECK(total >= 1000);
  double expect = static_cast<double>(total) / (cfg.vocab_size - 1);
  double p = 1.0 / (cfg.vocab_size - 1);
  double sigma = std::sqrt(static_cast<double>(total) * p * (1 - p));
  for (std::size_t k = 1; k < cfg.vocab_size; ++k)
    CHECK(std::abs(static_cast<double>(counts[k]) - expect) <= 3.0 * sigma);
}

TEST_CASE("JSONL round trip is value-exact") {
  SynthConfig cfg = SmallConfig();
  cfg.noise_std = 0.37;
  Dataset ds = GenerateDataset(cfg, 31);
  TempPath tmp("peakctc_test_roundtrip.jsonl");
  WriteJsonl(ds, tmp.path);
  Dataset back = ReadJsonl(tmp.path);
  CHECK(DatasetsEqual(ds, back));
}

TEST_CASE("Empty dataset round trip") {
  Dataset empty;
  TempPath tmp("peakctc_test_empty.jsonl");
  WriteJsonl(empty, tmp.path);
  Dataset back = ReadJsonl(tmp.path);
  CHECK(back.utterances.empty());
}

TEST_CASE("Truncated line reports the line number") {
  TempPath tmp("peakctc_test_truncated.jsonl");
  {
    Dataset ds = GenerateDataset(SmallConfig(), 2);
    WriteJsonl(ds, tmp.path);
    std::ofstream out(tmp.path, std::ios::app);
    out << "{\"id\": \"broken";
  }
  try {
    ReadJsonl(tmp.path);
    FAIL("expected DataError");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("line 11") != std::string::npos);
  }
}

TEST_CASE("Duplicate ids are rejected") {
  TempPath tmp("peakctc_test_dup.jsonl");
  {
    Dataset ds = GenerateDataset(SmallConfig(), 2);
    ds.utterances.resize(2);
    ds.utterances[1].id = ds.utterances[0].id;
    WriteJsonl(ds, tmp.path);
  }
  CHECK_THROWS_AS(ReadJsonl(tmp.path), DataError);
}

TEST_CASE("Invalid configs are rejected") {
  SynthConfig bad = SmallConfig();
  bad.min_tokens = 5;
  bad.max_tokens = 2;
  CHECK_THROWS_AS(GenerateDataset(bad, 1), std::invalid_argument);
  SynthConfig bad2 = SmallConfig();
  bad2.vocab_size = 1;
  CHECK_THROWS_AS(GenerateDataset(bad2, 1), std::invalid_argument);
}
