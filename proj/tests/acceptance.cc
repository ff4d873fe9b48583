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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "sattr/fdsot.h"
#include "sattr/metrics.h"
#include "sattr/pipeline.h"
#include "sattr/sot.h"
#include "sattr/synth.h"
#include "sattr/tsfilter.h"
#include "sattr/wdsot.h"

namespace sattr {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, double a, double b = 0, double c = 0,
                   double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

// 1. SOT round trip on random segments in both FIFO modes.
Outcome SotRoundTrip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> n_utt(1, 6), n_tok(1, 8), spk(0, 3),
      vocab(0, 199);
  std::uniform_real_distribution<double> start(0.0, 20.0);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Utterance> utts;
    const int n = n_utt(rng);
    for (int i = 0; i < n; ++i) {
      Utterance u;
      u.speaker = "S" + std::to_string(spk(rng));
      u.start = std::round(start(rng) * 4) / 4;  // ties happen
      u.end = u.start + 0.5;
      const int k = n_tok(rng);
      for (int j = 0; j < k; ++j)
        u.tokens.push_back(Token{VocabToken(vocab(rng)), false});
      utts.push_back(u);
    }
    for (FifoMode mode : {FifoMode::kUtterance, FifoMode::kSpeaker}) {
      std::vector<TokenRun> expected;
      for (const Utterance& u : SortFifo(utts, mode))
        expected.push_back(u.tokens);
      failures += Deserialize(Serialize(utts, mode)) != expected;
    }
  }
  const double secs = Seconds(t0);
  return {failures == 0 && secs < 5.0,
          Format("%.0f/2000 mismatches, %.2f s (limit 5 s)", failures, secs)};
}

// 2. Edit distance and DER against brute-force oracles.
Outcome MetricOracles() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(0, 8);
  int edit_failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto hyp = oracle::RandomTokens(len(rng), 4, &rng);
    auto ref = oracle::RandomTokens(len(rng), 4, &rng);
    edit_failures +=
        !(EditDistance(hyp, ref) == oracle::RecursiveEditDistance(hyp, ref));
  }
  auto random_track = [&](const std::string& prefix) {
    std::uniform_int_distribution<int> n_spk(2, 4), start(0, 200), dur(1, 60),
        count(2, 8);
    DiarizationTrack t;
    t.meeting_id = "m";
    const int speakers = n_spk(rng);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double s = 0.05 * start(rng);
      t.AddInterval(prefix + std::to_string(i % speakers),
                    {s, s + 0.05 * dur(rng)});
    }
    t.Normalize();
    return t;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    DiarizationTrack ref = random_track("r"), sys = random_track("s");
    const double collar = trial % 2 ? 0.25 : 0.0;
    DerResult got = DerComponents(sys, ref, collar);
    DerResult want = oracle::FrameDer(sys, ref, collar);
    for (double diff :
         {got.miss - want.miss, got.false_alarm - want.false_alarm,
          got.speaker_error - want.speaker_error, got.total - want.total,
          got.Rate() - want.Rate()})
      worst = std::max(worst, std::abs(diff));
  }
  return {edit_failures == 0 && worst <= 1e-6,
          Format("edit distance %.0f/500 mismatches; DER max abs diff %.2e "
                 "(limit 1e-6)",
                 edit_failures, worst)};
}

// 3. Oracle inputs give zero SD-CER for every assembly.
Outcome OracleZero() {
  EditCounts fd, wd, ts;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SynthConfig c;
    c.seed = seed;
    c.leak_threshold = 0.0;
    const SynthMeeting sm = GenMeeting(c);
    const Meeting& m = sm.meeting;
    PipelineInputs in;
    in.reference = {m};
    in.hyps[m.meeting_id] = CorruptMeeting(m, c, true, seed);
    in.diarization[m.meeting_id] = sm.oracle_track;
    for (size_t s = 0; s < m.segments.size(); ++s) {
      auto utts = m.UtterancesInSegment(static_cast<int>(s));
      in.ts_hyps[m.meeting_id][static_cast<int>(s)] =
          SimulateTsRecognition(utts, OracleSpeakers(utts), c, seed);
    }
    fd += RunPipeline(Approach::kFdSot, in).sd_total;
    ts += RunPipeline(Approach::kTsOracle, in).sd_total;
    wd += SdCer(WdSotOracle(m, in.hyps[m.meeting_id]), m).pooled;
  }
  return {fd.Errors() == 0 && wd.Errors() == 0 && ts.Errors() == 0,
          Format("SD-CER fd-sot %.4f wd-sot %.4f ts-oracle %.4f on 100 "
                 "meetings",
                 fd.Rate(), wd.Rate(), ts.Rate())};
}

// 4. FD-SOT pairing against the step-by-step transcription.
Outcome FdSotFidelity() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(1, 6), len(1, 3), dur(1, 3),
      spk(0, 3);
  int more_diar = 0, more_runs = 0, failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n_diar = count(rng), n_runs = count(rng);
    if (n_diar == n_runs) (trial % 2 ? n_diar : n_runs) += 1;
    (n_diar > n_runs ? more_diar : more_runs) += 1;
    std::vector<DiarUtterance> diar;
    for (int i = 0; i < n_diar; ++i) {
      // Coarse durations so equal lengths (ties) are common.
      diar.push_back({"S" + std::to_string(spk(rng)), 0.4 * i,
                      0.4 * i + 0.5 * dur(rng)});
    }
    std::vector<TokenRun> runs;
    for (int i = 0; i < n_runs; ++i)
      runs.push_back(
          TokenRun(len(rng), Token{VocabToken(i), false}));
    failures += Align(diar, runs) != oracle::LiteralAlign(diar, runs);
  }
  std::ostringstream os;
  os << failures << "/200 mismatches (" << more_diar << " with more "
     << "diarization utterances, " << more_runs << " with more runs)";
  return {failures == 0 && more_diar > 0 && more_runs > 0, os.str()};
}

// 5. Scoring numerics, gradient check and normalisation.
Outcome WdsotNumerics() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 6);
  double worst = 0.0, row_sum = 0.0;
  auto diff = [](const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
  };
  for (int trial = 0; trial < 100; ++trial) {
    const int L = dim(rng), T = dim(rng), N = dim(rng), d = 2 * dim(rng);
    const int dx = dim(rng), dh = dim(rng);
    const bool scaled = trial % 2;
    Matrix h = oracle::RandomMatrix(L, dh, &rng);
    Matrix x = oracle::RandomMatrix(T, dx, &rng);
    Matrix wq = oracle::RandomMatrix(dh, d, &rng);
    Matrix wk = oracle::RandomMatrix(dx, d, &rng);
    Matrix wv = oracle::RandomMatrix(dx, d, &rng);
    CrossAttention got = CrossAttend(h, x, wq, wk, wv, scaled);
    CrossAttention want = oracle::LoopCrossAttend(h, x, wq, wk, wv, scaled);
    worst = std::max({worst, diff(got.weights, want.weights),
                      diff(got.aggregated, want.aggregated)});
    for (int l = 0; l < L; ++l)
      row_sum = std::max(row_sum, std::abs(got.weights.row(l).sum() - 1.0));
    Matrix v = oracle::RandomMatrix(N, d, &rng);
    worst = std::max(worst, diff(CiScores(got.aggregated, v),
                                 oracle::LoopCiScores(got.aggregated, v)));
    ContextParams ctx = oracle::RandomContext(d, 1 + trial % 2, &rng);
    std::vector<int> runs(L);
    for (int l = 0; l < L; ++l) runs[l] = l / 2;
    worst = std::max(
        worst, diff(CdScores(got.aggregated, v, ctx, runs),
                    oracle::LoopCdScores(got.aggregated, v, ctx, runs)));
  }

  SynthConfig c;
  c.seed = 5;
  c.sub_rate = 0.1;
  const SynthMeeting sm = GenMeeting(c);
  const Meeting& m = sm.meeting;
  const Matrix profiles = ProfileMatrix(sm.profiles, m.speakers);
  const auto hyps = CorruptMeeting(m, c, false, 5);
  std::vector<WdsotExample> data;
  for (size_t s = 0; s < hyps.size(); ++s)
    data.push_back(MakeExample(hyps[s].tokens, sm.features[s],
                               m.UtterancesInSegment(static_cast<int>(s)),
                               m.speakers, profiles));
  ScorerConfig sc;
  sc.d_feat = static_cast<int>(data[0].features.cols());
  sc.d_emb = static_cast<int>(profiles.cols());
  ScorerModel model(sc, BuildVocabulary(data));
  const double grad_err = GradCheck(model, data[0], 1e-4, 200);
  for (const WdsotExample& ex : data) {
    Prediction p = Predict(model, ex.tokens, ex.features, ex.profiles);
    for (int r = 0; r < p.posteriors.rows(); ++r)
      row_sum = std::max(row_sum, std::abs(p.posteriors.row(r).sum() - 1.0));
  }
  return {worst <= 1e-10 && grad_err < 1e-3 && row_sum <= 1e-6,
          Format("oracle max diff %.2e (limit 1e-10), grad check %.2e "
                 "(limit 1e-3), row-sum error %.2e (limit 1e-6)",
                 worst, grad_err, row_sum)};
}

// Labelled segments from consecutive meeting seeds.
std::vector<WdsotExample> Segments(SynthConfig c, uint64_t seed_base,
                                   size_t count) {
  std::vector<WdsotExample> out;
  for (uint64_t seed = seed_base; out.size() < count; ++seed) {
    c.seed = seed;
    const SynthMeeting sm = GenMeeting(c);
    const Meeting& m = sm.meeting;
    const Matrix profiles = ProfileMatrix(sm.profiles, m.speakers);
    const auto hyps = CorruptMeeting(m, c, false, seed);
    for (size_t s = 0; s < hyps.size() && out.size() < count; ++s) {
      auto utts = m.UtterancesInSegment(static_cast<int>(s));
      if (utts.empty()) continue;
      out.push_back(MakeExample(hyps[s].tokens, sm.features[s], utts,
                                m.speakers, profiles));
    }
  }
  return out;
}

// 6. The scorer learns speaker identity from the simulated features.
Outcome Learnability() {
  SynthConfig c;  // 3 speakers, 16-dim embeddings, separation 3, noise 1
  c.target_overlap_ratio = 0.0;
  const auto train = Segments(c, 1000, 200);
  const auto test = Segments(c, 5000, 50);
  ScorerConfig sc;
  TrainConfig tc;  // 50 epochs
  const auto t0 = Clock::now();
  TrainResult r = Train(sc, train, tc);
  const double secs = Seconds(t0);
  const double acc = TokenAccuracy(r.model, test);
  return {acc >= 0.95 && secs < 120.0,
          Format("held-out token accuracy %.4f (need 0.95) after %.0f "
                 "epochs, %.1f s (limit 120 s)",
                 acc, r.epoch_losses.size(), secs)};
}

// Jittered timestamps and character errors; `separator_error_rate` also
// moves, drops and inserts separators.
BenchConfig NoisySuite(double separator_error_rate, bool ablation) {
  BenchConfig c;
  for (uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
  c.synth.timestamp_jitter_std = 0.4;
  c.synth.sub_rate = 0.05;
  c.synth.del_rate = 0.02;
  c.synth.ins_rate = 0.02;
  c.synth.separator_error_rate = separator_error_rate;
  c.ablation = ablation;
  return c;
}

// 7. WD-SOT beats FD-SOT on the noisy suite.
Outcome Comparative(const BenchReport& r) {
  const auto& wd = r.sd_cer.at(kRowWdSot);
  const auto& fd = r.sd_cer.at(kRowFdSot);
  int wins = 0;
  for (size_t i = 0; i < wd.size(); ++i) wins += wd[i] < fd[i];
  const double wd_mean = r.Mean(kRowWdSot), fd_mean = r.Mean(kRowFdSot);
  return {wd_mean < fd_mean && wins >= 16,
          Format("mean SD-CER wd-sot %.4f fd-sot %.4f; wd-sot lower on "
                 "%.0f/%.0f seeds (need 16)",
                 wd_mean, fd_mean, wins, wd.size())};
}

// 8. Minimum-duration filtering.
Outcome MinDuration() {
  const std::vector<double> thresholds = {0.0, 0.3, 0.5, 0.7};
  int violations = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SynthConfig c;
    c.seed = seed;
    c.backchannel_rate = 0.3;
    const SynthMeeting sm = GenMeeting(c);
    const auto track = JitterDiarization(sm.oracle_track, 0.2, seed,
                                         sm.meeting.segments);
    for (const Segment& seg : sm.meeting.segments) {
      std::set<std::string> prev;
      for (size_t k = 0; k < thresholds.size(); ++k) {
        SelectOptions o;
        o.min_dur = thresholds[k];
        std::set<std::string> cur;
        for (const auto& s : SelectSpeakers(track, seg, o)) cur.insert(s.speaker);
        if (k > 0)
          for (const auto& s : cur) violations += !prev.count(s);
        prev = cur;
      }
    }
  }

  double at_zero = 0.0, at_half = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig c;
    c.seed = seed;
    c.backchannel_rate = 0.5;  // short interjections by other speakers
    c.sub_rate = 0.05;
    c.del_rate = 0.02;
    c.ins_rate = 0.02;
    const SynthMeeting sm = GenMeeting(c);
    const Meeting& m = sm.meeting;
    PipelineInputs in;
    in.reference = {m};
    in.diarization[m.meeting_id] =
        JitterDiarization(sm.oracle_track, 0.2, DeriveSeed(seed, 1),
                          m.segments);
    for (size_t s = 0; s < m.segments.size(); ++s) {
      std::vector<SelectedSpeaker> all;
      for (const std::string& spk : m.speakers) all.push_back({spk, 0.0, 0.0});
      in.ts_hyps[m.meeting_id][static_cast<int>(s)] = SimulateTsRecognition(
          m.UtterancesInSegment(static_cast<int>(s)), all, c,
          DeriveSeed(seed, 100 + s));
    }
    PipelineOptions options;
    options.select.min_dur = 0.0;
    at_zero += RunPipeline(Approach::kTs, in, options).sd_total.Rate() / 20;
    options.select.min_dur = 0.5;
    at_half += RunPipeline(Approach::kTs, in, options).sd_total.Rate() / 20;
  }
  return {violations == 0 && at_half <= at_zero,
          Format("%.0f monotonicity violations; mean ts SD-CER min_dur 0.5 "
                 "%.4f vs min_dur 0 %.4f",
                 violations, at_half, at_zero)};
}

// 9. Ablation rows exist and oracle separators do not hurt.
Outcome Ablation(const BenchReport& r) {
  bool all_rows = true;
  for (const char* row :
       {kRowGtOnly, kRowHypTrain, kRowHypContext, kRowOracleSep})
    all_rows &= r.sd_cer.count(row) > 0;
  if (!all_rows) return {false, "ablation rows missing"};
  const double oracle = r.Mean(kRowOracleSep), predicted = r.Mean(kRowHypContext);
  return {oracle <= predicted,
          Format("mean SD-CER gt-only %.4f, +hyp %.4f, +hyp+context %.4f, "
                 "+oracle-sep %.4f",
                 r.Mean(kRowGtOnly), r.Mean(kRowHypTrain), predicted,
                 oracle)};
}

int Main() {
  int failed = 0;
  auto report = [&](int id, const Outcome& o) {
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  auto guarded = [&](int id, const std::function<Outcome()>& fn) {
    try {
      report(id, fn());
    } catch (const std::exception& e) {
      report(id, {false, std::string("exception: ") + e.what()});
    }
  };
  guarded(1, SotRoundTrip);
  guarded(2, MetricOracles);
  guarded(3, OracleZero);
  guarded(4, FdSotFidelity);
  guarded(5, WdsotNumerics);
  guarded(6, Learnability);
  std::vector<std::string> tables;
  auto bench = [&](const BenchConfig& config, const char* title,
                   Outcome (*check)(const BenchReport&)) {
    BenchReport r = Bench(config);
    tables.push_back(std::string("\n# ") + title + "\n" + r.Format());
    return check(r);
  };
  guarded(7, [&] {
    return bench(NoisySuite(0.0, false), "criterion 7 suite", Comparative);
  });
  guarded(8, MinDuration);
  // Oracle separators only differ from predicted ones when separators are
  // corrupted.
  guarded(9, [&] {
    return bench(NoisySuite(0.05, true),
                 "criterion 9 suite, separator error rate 0.05", Ablation);
  });
  for (const std::string& t : tables) std::printf("%s", t.c_str());
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace sattr

int main() { return sattr::Main(); }
