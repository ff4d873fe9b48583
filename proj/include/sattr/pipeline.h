// Copyright (c) 2026 The sattr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SATTR_PIPELINE_H_
#define SATTR_PIPELINE_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sattr/fdsot.h"
#include "sattr/formats.h"
#include "sattr/metrics.h"
#include "sattr/synth.h"
#include "sattr/tsfilter.h"
#include "sattr/wdsot.h"

namespace sattr {

// Speaker-attributed assembly strategies.
//   fd-sot:    SOT hypotheses + diarization timestamps.
//   wd-sot:    SOT hypotheses + features + speaker profiles + scorer model.
//   ts-oracle: per-speaker recognition output, reference speakers selected.
//   ts:        per-speaker recognition output, speakers selected from
//              diarization with the minimum-duration filter.
enum class Approach { kFdSot, kWdSot, kTsOracle, kTs };

Approach ParseApproach(std::string_view name);
std::string ApproachName(Approach approach);

struct PipelineInputs {
  std::vector<Meeting> reference;  // segments attached
  std::map<std::string, std::vector<SotStream>> hyps;
  std::map<std::string, DiarizationTrack> diarization;
  FeatureArchive features;
  std::map<std::string, Eigen::VectorXd> profiles;
  const ScorerModel* model = nullptr;
  TsHypotheses ts_hyps;
};

struct PipelineOptions {
  double gap_tol = 0.3;
  SelectOptions select;
  SiCerMode si_mode = SiCerMode::kMinPerm;
};

struct MeetingScore {
  std::string meeting_id;
  EditCounts counts;
};

struct PipelineResult {
  Approach approach = Approach::kFdSot;
  std::vector<AttributedTranscript> transcripts;  // reference order
  std::vector<MeetingScore> sd_cer;
  EditCounts sd_total;
  // SI-CER of the recognition output the approach consumed.
  EditCounts si_total;
};

// Throws a usage error naming the missing input when the approach cannot
// run (for example wd-sot without profiles).
PipelineResult RunPipeline(Approach approach, const PipelineInputs& inputs,
                           const PipelineOptions& options = {});

// Machine-readable edit-count lines: one per meeting plus TOTAL.
//   <meeting> sub <S> del <D> ins <I> ref <N> rate <r>
std::string FormatEditScores(const std::vector<MeetingScore>& scores);

// Same layout for DER:
//   <meeting> miss <m> fa <f> spk <s> total <t> rate <r>
std::string FormatDerScores(
    const std::vector<std::pair<std::string, DerResult>>& scores);

// Comparison table with an SI-CER row above the SD-CER row and one column
// per approach, followed by the per-meeting SD-CER lines of each approach.
std::string FormatReport(const std::vector<PipelineResult>& results,
                         SiCerMode si_mode);

// ---------------------------------------------------------------------------
// Multi-seed benchmark on synthetic meetings.

struct BenchConfig {
  SynthConfig synth;  // seed is replaced per evaluation seed
  std::vector<uint64_t> seeds;
  // Training meetings for the WD-SOT scorer, drawn from seeds disjoint from
  // the evaluation seeds.
  int train_meetings = 200;
  int train_segments = 4;
  uint64_t train_seed_base = 1000000;
  ScorerConfig scorer;
  TrainConfig train;
  // Each scorer is trained this many times from different initial and
  // shuffling seeds; the restart with the best token accuracy on held-out
  // validation meetings is kept.
  int scorer_restarts = 3;
  int validation_meetings = 50;
  uint64_t validation_seed_base = 3000000;
  double gap_tol = 0.3;
  SelectOptions select;
  SiCerMode si_mode = SiCerMode::kMinPerm;
  // Adds the scorer ablation rows (ground-truth-only training, added
  // hypothesis transcriptions, contextual scores, oracle separators).
  bool ablation = false;
  // Worker count; 0 reads SATTR_THREADS, falling back to the hardware.
  int threads = 0;
};

struct BenchReport {
  std::vector<std::string> rows;  // SD-CER row names, report order
  std::vector<uint64_t> seeds;
  // rate[row][seed index]
  std::map<std::string, std::vector<double>> sd_cer;
  std::vector<double> si_cer;  // per seed, SOT hypotheses

  double Mean(const std::string& row) const;
  double Std(const std::string& row) const;  // population std
  std::string Format() const;
};

// Row names produced by Bench.
inline constexpr const char* kRowFdSot = "fd-sot";
inline constexpr const char* kRowWdSot = "wd-sot";
inline constexpr const char* kRowTsOracle = "ts-oracle";
inline constexpr const char* kRowTs = "ts";
inline constexpr const char* kRowGtOnly = "wd-sot:gt-only";
inline constexpr const char* kRowHypTrain = "wd-sot:+hyp";
inline constexpr const char* kRowHypContext = "wd-sot:+hyp+context";
inline constexpr const char* kRowOracleSep = "wd-sot:+hyp+context+oracle-sep";

BenchReport Bench(const BenchConfig& config);

// Training set for the bench scorer: `ground_truth` adds examples built
// from the serialized reference, `hypotheses` adds corrupted streams.
std::vector<WdsotExample> BenchTrainingSet(const BenchConfig& config,
                                           bool ground_truth,
                                           bool hypotheses);

// Resolves the worker count (explicit > SATTR_THREADS > hardware, min 1).
int WorkerCount(int requested);

}  // namespace sattr

#endif  // SATTR_PIPELINE_H_
