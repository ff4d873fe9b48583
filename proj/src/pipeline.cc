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

#include "sattr/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "sattr/sot.h"

namespace sattr {

Approach ParseApproach(std::string_view name) {
  if (name == "fd-sot") return Approach::kFdSot;
  if (name == "wd-sot") return Approach::kWdSot;
  if (name == "ts-oracle") return Approach::kTsOracle;
  if (name == "ts") return Approach::kTs;
  SATTR_THROW("unknown approach '" << name
                                   << "' (expected fd-sot, wd-sot, ts-oracle "
                                      "or ts)");
}

std::string ApproachName(Approach approach) {
  switch (approach) {
    case Approach::kFdSot:
      return "fd-sot";
    case Approach::kWdSot:
      return "wd-sot";
    case Approach::kTsOracle:
      return "ts-oracle";
    case Approach::kTs:
      return "ts";
  }
  return "?";
}

namespace {

template <typename Map>
const typename Map::mapped_type& Need(const Map& map, const std::string& key,
                                      Approach approach, const char* what) {
  auto it = map.find(key);
  SATTR_CHECK(it != map.end(), "usage: " << ApproachName(approach)
                                         << " requires " << what
                                         << " for meeting " << key);
  return it->second;
}

// Per-speaker runs of one segment restricted to the selected speakers, plus
// the SOT-style stream used for SI-CER.
SotStream AssembleTsSegment(
    const std::map<std::string, TokenRun>& runs,
    const std::vector<SelectedSpeaker>& selected, int segment_index,
    AttributedTranscript* transcript) {
  std::map<std::string, TokenRun> kept;
  std::vector<TokenRun> ordered;
  for (const SelectedSpeaker& sel : selected) {
    auto it = runs.find(sel.speaker);
    if (it == runs.end()) continue;
    kept.insert(*it);
    if (!it->second.empty()) ordered.push_back(it->second);
  }
  AssembleTsTranscript(kept, selected, segment_index, transcript);
  SotStream stream;
  stream.segment_index = segment_index;
  stream.tokens = JoinRuns(ordered);
  return stream;
}

}  // namespace

PipelineResult RunPipeline(Approach approach, const PipelineInputs& inputs,
                           const PipelineOptions& options) {
  SATTR_CHECK(!inputs.reference.empty(), "usage: no reference meetings");
  PipelineResult result;
  result.approach = approach;
  if (approach == Approach::kWdSot)
    SATTR_CHECK(inputs.model != nullptr,
                "usage: wd-sot requires a scorer model (--model)");
  for (const Meeting& meeting : inputs.reference) {
    const std::string& id = meeting.meeting_id;
    SATTR_CHECK(!meeting.segments.empty(),
                "meeting " << id << " has no segments");
    AttributedTranscript transcript;
    transcript.meeting_id = id;
    std::vector<SotStream> consumed;
    switch (approach) {
      case Approach::kFdSot: {
        const auto& hyps = Need(inputs.hyps, id, approach, "SOT hypotheses");
        const auto& track =
            Need(inputs.diarization, id, approach, "diarization");
        transcript = FdSot(track, meeting.segments, hyps,
                           FdSotOptions{options.gap_tol});
        consumed = hyps;
        break;
      }
      case Approach::kWdSot: {
        const auto& hyps = Need(inputs.hyps, id, approach, "SOT hypotheses");
        const auto& feats = Need(inputs.features, id, approach, "features");
        SATTR_CHECK(!inputs.profiles.empty(),
                    "usage: wd-sot requires speaker profiles (--embeddings)");
        transcript = WdSot(*inputs.model, id, meeting.speakers, hyps, feats,
                           inputs.profiles);
        consumed = hyps;
        break;
      }
      case Approach::kTsOracle:
      case Approach::kTs: {
        const auto& runs =
            Need(inputs.ts_hyps, id, approach, "target-speaker hypotheses");
        const DiarizationTrack* track = nullptr;
        if (approach == Approach::kTs)
          track = &Need(inputs.diarization, id, approach, "diarization");
        for (size_t s = 0; s < meeting.segments.size(); ++s) {
          const int si = static_cast<int>(s);
          std::vector<SelectedSpeaker> selected =
              approach == Approach::kTs
                  ? SelectSpeakers(*track, meeting.segments[s], options.select)
                  : OracleSpeakers(meeting.UtterancesInSegment(si));
          static const std::map<std::string, TokenRun> kNone;
          auto it = runs.find(si);
          consumed.push_back(AssembleTsSegment(
              it == runs.end() ? kNone : it->second, selected, si,
              &transcript));
        }
        break;
      }
    }
    const EditCounts sd = SdCer(transcript, meeting).pooled;
    result.sd_cer.push_back({id, sd});
    result.sd_total += sd;
    result.si_total += SiCer(consumed, meeting, options.si_mode);
    result.transcripts.push_back(std::move(transcript));
  }
  return result;
}

namespace {

std::string Fixed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

std::string EditLine(const std::string& name, const EditCounts& c) {
  std::ostringstream os;
  os << name << " sub " << c.substitutions << " del " << c.deletions
     << " ins " << c.insertions << " ref " << c.ref_length << " rate "
     << Fixed(c.Rate());
  return os.str();
}

}  // namespace

std::string FormatEditScores(const std::vector<MeetingScore>& scores) {
  std::ostringstream os;
  EditCounts total;
  for (const MeetingScore& s : scores) {
    os << EditLine(s.meeting_id, s.counts) << "\n";
    total += s.counts;
  }
  os << EditLine("TOTAL", total) << "\n";
  return os.str();
}

std::string FormatDerScores(
    const std::vector<std::pair<std::string, DerResult>>& scores) {
  std::ostringstream os;
  DerResult total;
  auto line = [&](const std::string& name, const DerResult& d) {
    os << name << " miss " << Fixed(d.miss) << " fa " << Fixed(d.false_alarm)
       << " spk " << Fixed(d.speaker_error) << " total " << Fixed(d.total)
       << " rate " << Fixed(d.total > 0.0 ? d.Rate() : 0.0) << "\n";
  };
  for (const auto& [name, d] : scores) {
    line(name, d);
    total += d;
  }
  line("TOTAL", total);
  return os.str();
}

std::string FormatReport(const std::vector<PipelineResult>& results,
                         SiCerMode si_mode) {
  std::ostringstream os;
  os << "# SI-CER pooled over all segments (mode "
     << (si_mode == SiCerMode::kFifo ? "fifo" : "minperm") << ")\n";
  os << "metric";
  for (const PipelineResult& r : results) os << "\t" << ApproachName(r.approach);
  os << "\nSI-CER";
  for (const PipelineResult& r : results) os << "\t" << Fixed(r.si_total.Rate());
  os << "\nSD-CER";
  for (const PipelineResult& r : results) os << "\t" << Fixed(r.sd_total.Rate());
  os << "\n";
  for (const PipelineResult& r : results) {
    os << "\n[sd-cer " << ApproachName(r.approach) << "]\n"
       << FormatEditScores(r.sd_cer);
  }
  return os.str();
}

// ---------------------------------------------------------------------------

int WorkerCount(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SATTR_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    SATTR_CHECK(end != env && *end == '\0' && n >= 1,
                "SATTR_THREADS must be a positive integer, got '" << env
                                                                  << "'");
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
// exception (lowest index) is rethrown after all workers finish.
template <typename Fn>
void ParallelFor(size_t n, int threads, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t count = std::min<size_t>(n, std::max(1, threads));
  std::vector<std::thread> pool;
  for (size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::pair<uint64_t, SynthMeeting>> TrainingMeetings(
    const BenchConfig& config) {
  std::vector<std::pair<uint64_t, SynthMeeting>> meetings;
  SynthConfig c = config.synth;
  c.n_segments = config.train_segments;
  const int attempts = 10 * config.train_meetings;
  for (int i = 0; i < attempts &&
                  static_cast<int>(meetings.size()) < config.train_meetings;
       ++i) {
    c.seed = config.train_seed_base + static_cast<uint64_t>(i);
    try {
      meetings.push_back({c.seed, GenMeeting(c)});
    } catch (const Error&) {
      // Too few segments to reach the overlap target; draw another meeting.
    }
  }
  SATTR_CHECK(static_cast<int>(meetings.size()) == config.train_meetings,
              "could not generate " << config.train_meetings
                                    << " training meetings");
  return meetings;
}

}  // namespace

std::vector<WdsotExample> BenchTrainingSet(const BenchConfig& config,
                                           bool ground_truth,
                                           bool hypotheses) {
  std::vector<WdsotExample> out;
  for (const auto& [seed, sm] : TrainingMeetings(config)) {
    const Meeting& m = sm.meeting;
    const Matrix profiles = ProfileMatrix(sm.profiles, m.speakers);
    std::vector<SotStream> hyps;
    if (hypotheses) hyps = CorruptMeeting(m, config.synth, false, seed);
    for (size_t s = 0; s < m.segments.size(); ++s) {
      const auto utts = m.UtterancesInSegment(static_cast<int>(s));
      if (ground_truth)
        out.push_back(MakeExample(Serialize(utts, FifoMode::kUtterance).tokens,
                                  sm.features[s], utts, m.speakers, profiles));
      if (hypotheses) {
        bool any = false;
        for (const Token& t : hyps[s].tokens) any |= !t.is_separator;
        if (any)
          out.push_back(MakeExample(hyps[s].tokens, sm.features[s], utts,
                                    m.speakers, profiles));
      }
    }
  }
  return out;
}

double BenchReport::Mean(const std::string& row) const {
  const std::vector<double>& v = sd_cer.at(row);
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double BenchReport::Std(const std::string& row) const {
  const std::vector<double>& v = sd_cer.at(row);
  const double mean = Mean(row);
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / double(v.size()));
}

std::string BenchReport::Format() const {
  std::ostringstream os;
  os << "# bench over " << seeds.size() << " seed(s); SI-CER of the SOT "
     << "hypotheses, SD-CER per approach; mean and population std\n";
  os << "metric\tapproach\tmean\tstd\n";
  {
    const double mean =
        std::accumulate(si_cer.begin(), si_cer.end(), 0.0) / si_cer.size();
    double acc = 0.0;
    for (double x : si_cer) acc += (x - mean) * (x - mean);
    os << "SI-CER\tsot\t" << Fixed(mean) << "\t"
       << Fixed(std::sqrt(acc / si_cer.size())) << "\n";
  }
  for (const std::string& row : rows)
    os << "SD-CER\t" << row << "\t" << Fixed(Mean(row)) << "\t"
       << Fixed(Std(row)) << "\n";
  os << "\nseed\tSI-CER";
  for (const std::string& row : rows) os << "\t" << row;
  os << "\n";
  for (size_t i = 0; i < seeds.size(); ++i) {
    os << seeds[i] << "\t" << Fixed(si_cer[i]);
    for (const std::string& row : rows) os << "\t" << Fixed(sd_cer.at(row)[i]);
    os << "\n";
  }
  return os.str();
}

BenchReport Bench(const BenchConfig& config) {
  SATTR_CHECK(!config.seeds.empty(), "bench needs at least one seed");
  config.synth.Validate();
  const int threads = WorkerCount(config.threads);

  // Scorers. The ablation variants are trained only when requested.
  std::vector<std::vector<WdsotExample>> sets(3);
  std::vector<ScorerConfig> scorer_configs(3, config.scorer);
  scorer_configs[0].use_context = false;  // ground truth only
  scorer_configs[1].use_context = false;  // + hypotheses
  scorer_configs[2].use_context = true;   // + hypotheses + context
  std::vector<int> needed = {2};
  if (config.ablation) needed = {0, 1, 2};
  SATTR_CHECK(config.scorer_restarts >= 1 && config.validation_meetings >= 1,
              "bench needs at least one restart and one validation meeting");
  std::vector<WdsotExample> gt_hyp = BenchTrainingSet(config, true, true);
  std::vector<WdsotExample> gt_only;
  if (config.ablation) gt_only = BenchTrainingSet(config, true, false);
  BenchConfig vc = config;
  vc.train_seed_base = config.validation_seed_base;
  vc.train_meetings = config.validation_meetings;
  const std::vector<WdsotExample> validation =
      BenchTrainingSet(vc, false, true);

  const int restarts = config.scorer_restarts;
  std::vector<ScorerModel> candidates(needed.size() * restarts);
  std::vector<double> accuracy(candidates.size(), 0.0);
  ParallelFor(candidates.size(), threads, [&](size_t k) {
    const int which = needed[k / restarts];
    const int restart = static_cast<int>(k % restarts);
    ScorerConfig sc = scorer_configs[which];
    sc.seed += restart;
    TrainConfig tc = config.train;
    tc.seed += restart;
    tc.on_epoch = nullptr;
    candidates[k] = Train(sc, which == 0 ? gt_only : gt_hyp, tc).model;
    accuracy[k] = TokenAccuracy(candidates[k], validation);
  });
  std::vector<ScorerModel> models(3);
  for (size_t i = 0; i < needed.size(); ++i) {
    auto begin = accuracy.begin() + i * restarts;
    const size_t best = std::max_element(begin, begin + restarts) -
                        accuracy.begin();
    models[needed[i]] = std::move(candidates[best]);
  }

  BenchReport report;
  report.seeds = config.seeds;
  report.rows = {kRowFdSot, kRowWdSot, kRowTsOracle, kRowTs};
  if (config.ablation)
    report.rows.insert(report.rows.end(), {kRowGtOnly, kRowHypTrain,
                                           kRowHypContext, kRowOracleSep});
  for (const std::string& row : report.rows)
    report.sd_cer[row].assign(config.seeds.size(), 0.0);
  report.si_cer.assign(config.seeds.size(), 0.0);

  std::mutex mu;
  ParallelFor(config.seeds.size(), threads, [&](size_t i) {
    SynthConfig c = config.synth;
    c.seed = config.seeds[i];
    const SynthMeeting sm = GenMeeting(c);
    const Meeting& m = sm.meeting;
    PipelineInputs in;
    in.reference = {m};
    in.hyps[m.meeting_id] = CorruptMeeting(m, c, false, c.seed);
    in.diarization[m.meeting_id] =
        JitterDiarization(sm.oracle_track, c.timestamp_jitter_std,
                          DeriveSeed(c.seed, 1), m.segments);
    in.features[m.meeting_id] = sm.features;
    in.profiles = sm.profiles;
    in.model = &models[2];
    PipelineOptions options;
    options.gap_tol = config.gap_tol;
    options.select = config.select;
    options.si_mode = config.si_mode;

    std::map<std::string, double> rates;
    PipelineResult fd = RunPipeline(Approach::kFdSot, in, options);
    rates[kRowFdSot] = fd.sd_total.Rate();
    rates[kRowWdSot] = RunPipeline(Approach::kWdSot, in, options).sd_total.Rate();

    // Simulated target-speaker recognition; each speaker's noise depends
    // only on (seed, segment, speaker), so both selections see the same
    // recognition errors.
    auto& ts = in.ts_hyps[m.meeting_id];
    for (size_t s = 0; s < m.segments.size(); ++s) {
      const auto utts = m.UtterancesInSegment(static_cast<int>(s));
      std::vector<SelectedSpeaker> all;
      for (const std::string& spk : m.speakers) all.push_back({spk, 0.0, 0.0});
      ts[static_cast<int>(s)] =
          SimulateTsRecognition(utts, all, c, DeriveSeed(c.seed, 100 + s));
    }
    rates[kRowTsOracle] =
        RunPipeline(Approach::kTsOracle, in, options).sd_total.Rate();
    rates[kRowTs] = RunPipeline(Approach::kTs, in, options).sd_total.Rate();

    if (config.ablation) {
      PipelineInputs ab = in;
      ab.model = &models[0];
      rates[kRowGtOnly] = RunPipeline(Approach::kWdSot, ab, options).sd_total.Rate();
      ab.model = &models[1];
      rates[kRowHypTrain] =
          RunPipeline(Approach::kWdSot, ab, options).sd_total.Rate();
      rates[kRowHypContext] = rates[kRowWdSot];
      ab.model = &models[2];
      ab.hyps[m.meeting_id] = CorruptMeeting(m, c, true, c.seed);
      rates[kRowOracleSep] =
          RunPipeline(Approach::kWdSot, ab, options).sd_total.Rate();
    }
    std::lock_guard<std::mutex> lock(mu);
    report.si_cer[i] = fd.si_total.Rate();
    for (const auto& [row, rate] : rates) report.sd_cer[row][i] = rate;
  });
  return report;
}

}  // namespace sattr
