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

// sattr: speaker-attributed transcript assembly toolkit.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sattr/fdsot.h"
#include "sattr/formats.h"
#include "sattr/metrics.h"
#include "sattr/pipeline.h"
#include "sattr/sot.h"
#include "sattr/synth.h"
#include "sattr/tsfilter.h"
#include "sattr/wdsot.h"

namespace fs = std::filesystem;

namespace sattr {
namespace {

const char kConfigHelp[] = R"(
Config file (--config): one `key = value` per line, `#` starts a comment.
Keys are long option names without the leading dashes (e.g. `gap-tol = 0.3`).
Precedence: command-line flag > config file > built-in default. Keys that
the chosen subcommand does not know are ignored.)";

// ---------------------------------------------------------------------------
// Config file handling.

std::map<std::string, std::string> ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  SATTR_CHECK(in, "cannot open config file " << path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw ParseError(path, line_no, "empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Fills options of `app` (and its parsed subcommands) that were not given on
// the command line from the config file.
void ApplyConfig(CLI::App* app, const std::map<std::string, std::string>& kv) {
  for (CLI::Option* opt : app->get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    auto it = kv.find(opt->get_lnames()[0]);
    if (it == kv.end()) continue;
    if (opt->get_type_size() == 0) {
      // Flag: accept true/false style values.
      const std::string& v = it->second;
      if (v == "1" || v == "true" || v == "yes" || v == "on")
        opt->add_result("true");
      else if (v == "0" || v == "false" || v == "no" || v == "off")
        opt->add_result("false");
      else
        SATTR_THROW("config key " << it->first << " expects a boolean, got '"
                                  << v << "'");
    } else {
      opt->add_result(it->second);
    }
    opt->run_callback();
  }
  for (CLI::App* sub : app->get_subcommands()) ApplyConfig(sub, kv);
}

// Required options are checked after the config file is applied, so they
// may come from either source.
struct Required {
  std::vector<std::pair<CLI::App*, CLI::Option*>> options;

  CLI::Option* operator()(CLI::App* app, CLI::Option* opt) {
    options.push_back({app, opt});
    opt->description(opt->get_description() + " (required)");
    return opt;
  }

  void Check() const {
    for (const auto& [app, opt] : options)
      if (app->parsed() && opt->count() == 0)
        SATTR_THROW("usage: " << app->get_name() << " requires "
                              << opt->get_name());
  }
};

// ---------------------------------------------------------------------------
// Shared option groups.

TokenMode ParseTokenMode(const std::string& name) {
  if (name == "char") return TokenMode::kCharacter;
  if (name == "word") return TokenMode::kWord;
  SATTR_THROW("unknown token mode '" << name << "' (expected char or word)");
}

void AddTokenMode(CLI::App* app, std::string* mode) {
  app->add_option("--token-mode", *mode, "char or word")
      ->capture_default_str();
}

void AddSynthOptions(CLI::App* app, SynthConfig* c) {
  app->add_option("--n-speakers", c->n_speakers)->capture_default_str();
  app->add_option("--n-segments", c->n_segments)->capture_default_str();
  app->add_option("--min-utterances", c->min_utterances)
      ->capture_default_str();
  app->add_option("--max-utterances", c->max_utterances)
      ->capture_default_str();
  app->add_option("--min-tokens", c->min_tokens)->capture_default_str();
  app->add_option("--max-tokens", c->max_tokens)->capture_default_str();
  app->add_option("--overlap", c->target_overlap_ratio,
                  "target overlapped-speech ratio")
      ->capture_default_str();
  app->add_option("--vocab-size", c->vocab_size)->capture_default_str();
  app->add_option("--sub-rate", c->sub_rate)->capture_default_str();
  app->add_option("--del-rate", c->del_rate)->capture_default_str();
  app->add_option("--ins-rate", c->ins_rate)->capture_default_str();
  app->add_option("--sep-error-rate", c->separator_error_rate)
      ->capture_default_str();
  app->add_option("--jitter", c->timestamp_jitter_std,
                  "diarization boundary jitter std (s)")
      ->capture_default_str();
  app->add_option("--embedding-dim", c->embedding_dim)->capture_default_str();
  app->add_option("--content-dim", c->content_dim)->capture_default_str();
  app->add_option("--separation", c->cluster_separation)
      ->capture_default_str();
  app->add_option("--noise", c->noise_std)->capture_default_str();
  app->add_option("--frame-step", c->frame_step)->capture_default_str();
  app->add_option("--backchannel-rate", c->backchannel_rate)
      ->capture_default_str();
  app->add_option("--leak-threshold", c->leak_threshold)
      ->capture_default_str();
  app->add_option("--world-seed", c->world_seed)->capture_default_str();
}

struct ScorerOptions {
  ScorerConfig scorer;
  TrainConfig train;
  bool no_context = false;
  std::string optimizer = "adam";
};

void AddScorerOptions(CLI::App* app, ScorerOptions* o) {
  app->add_option("--d-model", o->scorer.d_model)->capture_default_str();
  app->add_option("--text-layers", o->scorer.text_layers)
      ->capture_default_str();
  app->add_option("--text-heads", o->scorer.text_heads)
      ->capture_default_str();
  app->add_option("--cross-heads", o->scorer.cross_heads)
      ->capture_default_str();
  app->add_option("--context-heads", o->scorer.context_heads)
      ->capture_default_str();
  app->add_flag("--scaled-attention", o->scorer.scaled_attention);
  app->add_flag("--no-context", o->no_context,
                "score with context-independent scores only");
  app->add_option("--epochs", o->train.epochs)->capture_default_str();
  app->add_option("--batch-size", o->train.batch_size)->capture_default_str();
  app->add_option("--lr", o->train.learning_rate)->capture_default_str();
  app->add_option("--distractors", o->train.distractors,
                  "unlabelled candidate profiles added per training example")
      ->capture_default_str();
  app->add_option("--optimizer", o->optimizer, "adam or sgd")
      ->capture_default_str();
}

void FinishScorerOptions(ScorerOptions* o, uint64_t seed) {
  o->scorer.use_context = !o->no_context;
  o->scorer.seed = seed;
  o->train.seed = seed;
  if (o->optimizer == "adam")
    o->train.optimizer = OptimizerKind::kAdam;
  else if (o->optimizer == "sgd")
    o->train.optimizer = OptimizerKind::kSgdMomentum;
  else
    SATTR_THROW("unknown optimizer '" << o->optimizer
                                      << "' (expected adam or sgd)");
}

// ---------------------------------------------------------------------------
// Output helpers.

// Writes to `path`, or stdout when empty.
void Emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  SATTR_CHECK(out, "cannot write " << path);
  out << text;
}

std::vector<Meeting> LoadReference(const std::string& reference,
                                   const std::string& segments,
                                   TokenMode mode) {
  std::vector<Meeting> meetings = ReadReference(reference, mode);
  AttachSegments(ReadSegments(segments), &meetings);
  return meetings;
}

const Meeting& FindMeeting(const std::vector<Meeting>& meetings,
                           const std::string& id) {
  for (const Meeting& m : meetings)
    if (m.meeting_id == id) return m;
  SATTR_THROW("meeting " << id << " not in reference");
}

// ---------------------------------------------------------------------------
// Subcommands.

struct Globals {
  uint64_t seed = 0;
  std::string config;
};

void RunSynth(const Globals& g, SynthConfig c, int n_meetings,
              const std::string& out_dir, const std::string& mode_name) {
  SATTR_CHECK(n_meetings >= 1, "--meetings must be at least 1");
  const TokenMode mode = ParseTokenMode(mode_name);
  fs::create_directories(out_dir);
  std::vector<Meeting> meetings;
  std::map<std::string, std::vector<SotStream>> hyps, oracle_hyps;
  std::vector<DiarizationTrack> oracle_tracks, diar_tracks;
  FeatureArchive features;
  std::map<std::string, Eigen::VectorXd> embeddings;
  TsHypotheses ts;
  std::ostringstream summary;
  for (int i = 0; i < n_meetings; ++i) {
    c.seed = g.seed + static_cast<uint64_t>(i);
    const SynthMeeting sm = GenMeeting(c);
    const Meeting& m = sm.meeting;
    meetings.push_back(m);
    hyps[m.meeting_id] = CorruptMeeting(m, c, false, c.seed);
    for (size_t s = 0; s < m.segments.size(); ++s)
      oracle_hyps[m.meeting_id].push_back(
          Serialize(m.UtterancesInSegment(static_cast<int>(s)),
                    FifoMode::kUtterance));
    oracle_tracks.push_back(sm.oracle_track);
    diar_tracks.push_back(JitterDiarization(sm.oracle_track,
                                            c.timestamp_jitter_std,
                                            DeriveSeed(c.seed, 1),
                                            m.segments));
    features[m.meeting_id] = sm.features;
    for (const auto& [spk, v] : sm.profiles) embeddings[spk] = v;
    for (size_t s = 0; s < m.segments.size(); ++s) {
      std::vector<SelectedSpeaker> all;
      for (const std::string& spk : m.speakers) all.push_back({spk, 0.0, 0.0});
      ts[m.meeting_id][static_cast<int>(s)] = SimulateTsRecognition(
          m.UtterancesInSegment(static_cast<int>(s)), all, c,
          DeriveSeed(c.seed, 100 + s));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", sm.overlap_ratio);
    summary << m.meeting_id << " speakers " << m.speakers.size()
            << " segments " << m.segments.size() << " utterances "
            << m.utterances.size() << " overlap " << buf << "\n";
  }
  const fs::path dir(out_dir);
  WriteReference(meetings, (dir / "reference.tsv").string(), mode);
  WriteSegments(meetings, (dir / "segments.tsv").string());
  WriteHypotheses(hyps, (dir / "hyp.txt").string(), mode);
  WriteHypotheses(oracle_hyps, (dir / "hyp_oracle.txt").string(), mode);
  WriteRttm(oracle_tracks, (dir / "oracle.rttm").string());
  WriteRttm(diar_tracks, (dir / "diar.rttm").string());
  WriteFeatures(features, (dir / "features.txt").string());
  WriteEmbeddings(embeddings, (dir / "embeddings.txt").string());
  WriteTsHypotheses(ts, (dir / "ts_hyp.txt").string(), mode);
  std::cout << summary.str();
}

void RunSotSerialize(const std::string& reference, const std::string& segments,
                     const std::string& out, const std::string& fifo,
                     const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  const FifoMode fifo_mode = ParseFifoMode(fifo);
  std::map<std::string, std::vector<SotStream>> hyps;
  for (const Meeting& m : LoadReference(reference, segments, mode)) {
    for (size_t s = 0; s < m.segments.size(); ++s) {
      SotStream stream =
          Serialize(m.UtterancesInSegment(static_cast<int>(s)), fifo_mode);
      stream.segment = m.segments[s];
      stream.segment_index = static_cast<int>(s);
      hyps[m.meeting_id].push_back(std::move(stream));
    }
  }
  WriteHypotheses(hyps, out.empty() ? "/dev/stdout" : out, mode);
}

void RunSotDeserialize(const std::string& hyp, const std::string& out,
                       const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  std::ostringstream os;
  NormalizationStats total;
  for (const auto& [id, streams] : ReadHypotheses(hyp, mode)) {
    for (const SotStream& stream : streams) {
      NormalizationStats stats;
      const std::vector<TokenRun> runs = Deserialize(stream, &stats);
      total.collapsed_separators += stats.collapsed_separators;
      total.stripped_leading += stats.stripped_leading;
      total.stripped_trailing += stats.stripped_trailing;
      for (size_t r = 0; r < runs.size(); ++r)
        os << id << " " << stream.segment_index << " " << r << " "
           << JoinTokens(runs[r], mode) << "\n";
    }
  }
  if (total.Total() > 0)
    Warn("repaired separators: collapsed " +
         std::to_string(total.collapsed_separators) + ", leading " +
         std::to_string(total.stripped_leading) + ", trailing " +
         std::to_string(total.stripped_trailing));
  Emit(os.str(), out);
}

void RunAlignFdSot(const std::string& rttm, const std::string& segments,
                   const std::string& hyp, const std::string& out,
                   double gap_tol, const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  const auto segs = ReadSegments(segments);
  const auto tracks = ReadRttm(rttm);
  const auto hyps = ReadHypotheses(hyp, mode);
  std::vector<AttributedTranscript> transcripts;
  AlignStats total;
  for (const auto& [id, meeting_segments] : segs) {
    auto h = hyps.find(id);
    SATTR_CHECK(h != hyps.end(), "no hypotheses for meeting " << id);
    auto t = tracks.find(id);
    DiarizationTrack empty;
    empty.meeting_id = id;
    AlignStats stats;
    transcripts.push_back(FdSot(t == tracks.end() ? empty : t->second,
                                meeting_segments, h->second,
                                FdSotOptions{gap_tol}, &stats));
    total.dropped_diar += stats.dropped_diar;
    total.dropped_runs += stats.dropped_runs;
  }
  if (total.dropped_diar + total.dropped_runs > 0)
    Warn("count mismatch: dropped " + std::to_string(total.dropped_diar) +
         " diarization utterances and " + std::to_string(total.dropped_runs) +
         " SOT runs");
  WriteAttributed(transcripts, out);
}

// Training examples from the reference streams and, when given, from
// hypothesis streams labelled against the reference.
std::vector<WdsotExample> LoadExamples(const std::vector<Meeting>& meetings,
                                       const std::string& hyp_path,
                                       const FeatureArchive& features,
                                       const std::map<std::string,
                                                      Eigen::VectorXd>& emb,
                                       TokenMode mode) {
  std::map<std::string, std::vector<SotStream>> hyps;
  if (!hyp_path.empty()) hyps = ReadHypotheses(hyp_path, mode);
  std::vector<WdsotExample> out;
  for (const Meeting& m : meetings) {
    auto f = features.find(m.meeting_id);
    SATTR_CHECK(f != features.end(), "no features for meeting "
                                         << m.meeting_id);
    SATTR_CHECK(f->second.size() == m.segments.size(),
                "meeting " << m.meeting_id << " has " << m.segments.size()
                           << " segments but " << f->second.size()
                           << " feature sequences");
    const Matrix profiles = ProfileMatrix(emb, m.speakers);
    auto h = hyps.find(m.meeting_id);
    for (size_t s = 0; s < m.segments.size(); ++s) {
      const auto utts = m.UtterancesInSegment(static_cast<int>(s));
      if (utts.empty()) continue;
      out.push_back(MakeExample(Serialize(utts, FifoMode::kUtterance).tokens,
                                f->second[s], utts, m.speakers, profiles));
      if (h == hyps.end() || s >= h->second.size()) continue;
      bool any = false;
      for (const Token& t : h->second[s].tokens) any |= !t.is_separator;
      if (any)
        out.push_back(MakeExample(h->second[s].tokens, f->second[s], utts,
                                  m.speakers, profiles));
    }
  }
  return out;
}

void RunWdsotTrain(ScorerOptions o, const Globals& g,
                   const std::string& reference, const std::string& segments,
                   const std::string& hyp, const std::string& features,
                   const std::string& embeddings, const std::string& model_out,
                   const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  FinishScorerOptions(&o, g.seed);
  const auto meetings = LoadReference(reference, segments, mode);
  const auto data = LoadExamples(meetings, hyp, ReadFeatures(features),
                                 ReadEmbeddings(embeddings), mode);
  o.train.on_epoch = [](int epoch, double loss) {
    std::printf("epoch %d loss %.6f\n", epoch, loss);
    std::fflush(stdout);
  };
  TrainResult result = Train(o.scorer, data, o.train);
  result.model.Save(model_out);
  std::printf("examples %zu token_accuracy %.4f\n", data.size(),
              TokenAccuracy(result.model, data));
}

void RunWdsotPredict(const std::string& model_path,
                     const std::string& reference, const std::string& segments,
                     const std::string& hyp, const std::string& features,
                     const std::string& embeddings, const std::string& out,
                     const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  const ScorerModel model = ScorerModel::Load(model_path);
  const auto meetings = LoadReference(reference, segments, mode);
  const auto hyps = ReadHypotheses(hyp, mode);
  const auto feats = ReadFeatures(features);
  const auto emb = ReadEmbeddings(embeddings);
  std::vector<AttributedTranscript> transcripts;
  for (const Meeting& m : meetings) {
    auto h = hyps.find(m.meeting_id);
    SATTR_CHECK(h != hyps.end(), "no hypotheses for meeting " << m.meeting_id);
    auto f = feats.find(m.meeting_id);
    SATTR_CHECK(f != feats.end(), "no features for meeting " << m.meeting_id);
    transcripts.push_back(
        WdSot(model, m.meeting_id, m.speakers, h->second, f->second, emb));
  }
  WriteAttributed(transcripts, out);
}

void RunWdsotGradcheck(ScorerOptions o, const Globals& g, double epsilon,
                       int coords, double tolerance) {
  FinishScorerOptions(&o, g.seed);
  SynthConfig c;
  c.n_segments = 1;
  c.target_overlap_ratio = 0.0;
  c.embedding_dim = 4;
  c.content_dim = 4;
  c.seed = g.seed;
  const SynthMeeting sm = GenMeeting(c);
  const Meeting& m = sm.meeting;
  const auto utts = m.UtterancesInSegment(0);
  const WdsotExample ex =
      MakeExample(Serialize(utts, FifoMode::kUtterance).tokens, sm.features[0],
                  utts, m.speakers, ProfileMatrix(sm.profiles, m.speakers));
  o.scorer.d_feat = static_cast<int>(ex.features.cols());
  o.scorer.d_emb = static_cast<int>(ex.profiles.cols());
  ScorerModel model(o.scorer, BuildVocabulary({ex}));
  const double err = GradCheck(model, ex, epsilon, coords, g.seed);
  std::printf("max_rel_error %.3e\n", err);
  SATTR_CHECK(err < tolerance, "gradient check failed: max relative error "
                                   << err << " >= " << tolerance);
}

DurationRule ParseRule(const std::string& name) {
  if (name == "longest") return DurationRule::kLongestIsland;
  if (name == "total") return DurationRule::kTotalActivity;
  SATTR_THROW("unknown duration rule '" << name
                                        << "' (expected longest or total)");
}

void RunTsFilter(const std::string& rttm, const std::string& segments,
                 const std::string& ts_hyp, const std::string& out,
                 SelectOptions options, const std::string& rule,
                 const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  options.rule = ParseRule(rule);
  const auto tracks = ReadRttm(rttm);
  TsHypotheses ts;
  if (!ts_hyp.empty()) ts = ReadTsHypotheses(ts_hyp, mode);
  std::ostringstream os;
  std::vector<AttributedTranscript> transcripts;
  for (const auto& [id, segs] : ReadSegments(segments)) {
    DiarizationTrack empty;
    auto t = tracks.find(id);
    const DiarizationTrack& track = t == tracks.end() ? empty : t->second;
    AttributedTranscript transcript;
    transcript.meeting_id = id;
    for (size_t s = 0; s < segs.size(); ++s) {
      const auto selected = SelectSpeakers(track, segs[s], options);
      for (const SelectedSpeaker& sel : selected)
        os << id << " " << s << " " << sel.speaker << " "
           << FormatSeconds(sel.active_duration) << " "
           << FormatSeconds(sel.first_onset) << "\n";
      if (ts_hyp.empty()) continue;
      std::map<std::string, TokenRun> kept;
      auto m = ts.find(id);
      if (m != ts.end()) {
        auto seg = m->second.find(static_cast<int>(s));
        if (seg != m->second.end())
          for (const SelectedSpeaker& sel : selected)
            if (auto r = seg->second.find(sel.speaker); r != seg->second.end())
              kept.insert(*r);
      }
      AssembleTsTranscript(kept, selected, static_cast<int>(s), &transcript);
    }
    transcripts.push_back(std::move(transcript));
  }
  if (ts_hyp.empty()) {
    Emit(os.str(), out);
  } else {
    SATTR_CHECK(!out.empty(), "usage: tsfilter --ts-hyp requires --out");
    WriteAttributed(transcripts, out);
  }
}

void RunScoreSdCer(const std::string& attributed, const std::string& reference,
                   const std::string& out, const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  const auto meetings = ReadReference(reference, mode);
  std::map<std::string, AttributedTranscript> by_id;
  for (AttributedTranscript& t : ReadAttributed(attributed))
    by_id[t.meeting_id] = std::move(t);
  std::vector<MeetingScore> scores;
  for (const Meeting& m : meetings) {
    AttributedTranscript empty;
    empty.meeting_id = m.meeting_id;
    auto it = by_id.find(m.meeting_id);
    scores.push_back(
        {m.meeting_id,
         SdCer(it == by_id.end() ? empty : it->second, m).pooled});
  }
  for (const auto& [id, t] : by_id) FindMeeting(meetings, id);
  Emit(FormatEditScores(scores), out);
}

void RunScoreSiCer(const std::string& hyp, const std::string& reference,
                   const std::string& segments, const std::string& out,
                   const std::string& si_mode, const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  const auto meetings = LoadReference(reference, segments, mode);
  const auto hyps = ReadHypotheses(hyp, mode);
  std::vector<MeetingScore> scores;
  for (const Meeting& m : meetings) {
    auto it = hyps.find(m.meeting_id);
    SATTR_CHECK(it != hyps.end(), "no hypotheses for meeting "
                                      << m.meeting_id);
    scores.push_back(
        {m.meeting_id, SiCer(it->second, m, ParseSiCerMode(si_mode))});
  }
  Emit(FormatEditScores(scores), out);
}

void RunScoreDer(const std::string& rttm, const std::string& ref_rttm,
                 const std::string& out, double collar) {
  const auto sys = ReadRttm(rttm);
  std::vector<std::pair<std::string, DerResult>> scores;
  for (const auto& [id, ref] : ReadRttm(ref_rttm)) {
    DiarizationTrack empty;
    empty.meeting_id = id;
    auto it = sys.find(id);
    scores.push_back(
        {id, DerComponents(it == sys.end() ? empty : it->second, ref,
                           collar)});
  }
  Emit(FormatDerScores(scores), out);
}

struct PipelineArgs {
  std::vector<std::string> approaches;
  std::string reference, segments, hyp, rttm, features, embeddings, model,
      ts_hyp, transcript_dir, report;
  std::string si_mode = "minperm";
  std::string rule = "longest";
  PipelineOptions options;
};

void RunPipelineCommand(PipelineArgs a, const std::string& mode_name) {
  const TokenMode mode = ParseTokenMode(mode_name);
  a.options.select.rule = ParseRule(a.rule);
  a.options.select.gap_tol = a.options.gap_tol;
  a.options.si_mode = ParseSiCerMode(a.si_mode);
  if (a.approaches.empty()) a.approaches = {"fd-sot"};
  PipelineInputs in;
  in.reference = LoadReference(a.reference, a.segments, mode);
  if (!a.hyp.empty()) in.hyps = ReadHypotheses(a.hyp, mode);
  if (!a.rttm.empty()) in.diarization = ReadRttm(a.rttm);
  if (!a.features.empty()) in.features = ReadFeatures(a.features);
  if (!a.embeddings.empty()) in.profiles = ReadEmbeddings(a.embeddings);
  if (!a.ts_hyp.empty()) in.ts_hyps = ReadTsHypotheses(a.ts_hyp, mode);
  ScorerModel model;
  if (!a.model.empty()) {
    model = ScorerModel::Load(a.model);
    in.model = &model;
  }
  std::vector<PipelineResult> results;
  for (const std::string& name : a.approaches) {
    const Approach approach = ParseApproach(name);
    results.push_back(RunPipeline(approach, in, a.options));
    if (!a.transcript_dir.empty()) {
      fs::create_directories(a.transcript_dir);
      WriteAttributed(results.back().transcripts,
                      (fs::path(a.transcript_dir) / (name + ".txt")).string());
    }
  }
  const std::string report = FormatReport(results, a.options.si_mode);
  std::cout << report;
  if (!a.report.empty()) Emit(report, a.report);
}

void RunBench(BenchConfig config, ScorerOptions o, const Globals& g,
              int n_seeds, const std::string& rule,
              const std::string& si_mode, const std::string& out) {
  SATTR_CHECK(n_seeds >= 1, "usage: bench needs at least one seed");
  FinishScorerOptions(&o, g.seed);
  config.scorer = o.scorer;
  config.train = o.train;
  config.select.rule = ParseRule(rule);
  config.si_mode = ParseSiCerMode(si_mode);
  for (int i = 0; i < n_seeds; ++i)
    config.seeds.push_back(g.seed + static_cast<uint64_t>(i));
  const std::string report = Bench(config).Format();
  std::cout << report;
  if (!out.empty()) Emit(report, out);
}

int Main(int argc, char** argv) {
  CLI::App app{"Speaker-attributed transcript assembly from SOT "
               "hypotheses, diarization and target-speaker recognition."};
  app.footer(kConfigHelp);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed for every generator")
      ->capture_default_str();
  app.add_option("--config", g.config, "flat key = value config file");
  Required required;
  std::string token_mode = "char";

  // synth
  SynthConfig synth;
  int n_meetings = 1;
  std::string out_dir;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "generate synthetic meetings and all derived input files");
  required(synth_cmd, synth_cmd->add_option("--out-dir", out_dir));
  synth_cmd->add_option("--meetings", n_meetings,
                        "meetings with seeds seed, seed+1, ...")
      ->capture_default_str();
  AddSynthOptions(synth_cmd, &synth);
  AddTokenMode(synth_cmd, &token_mode);

  // sot
  std::string reference, segments, hyp, out, fifo = "utterance";
  CLI::App* sot_cmd = app.add_subcommand("sot", "SOT stream conversion");
  sot_cmd->require_subcommand(1);
  CLI::App* ser = sot_cmd->add_subcommand(
      "serialize", "reference utterances to FIFO-ordered SOT streams");
  required(ser, ser->add_option("--reference", reference));
  required(ser, ser->add_option("--segments", segments));
  ser->add_option("--out", out, "output file (default stdout)");
  ser->add_option("--fifo", fifo, "utterance or speaker")
      ->capture_default_str();
  AddTokenMode(ser, &token_mode);
  CLI::App* deser = sot_cmd->add_subcommand(
      "deserialize", "split SOT streams into token runs");
  required(deser, deser->add_option("--hyp", hyp));
  deser->add_option("--out", out, "output file (default stdout)");
  AddTokenMode(deser, &token_mode);

  // align
  std::string rttm;
  double gap_tol = 0.3;
  CLI::App* align_cmd = app.add_subcommand("align", "assembly by alignment");
  align_cmd->require_subcommand(1);
  CLI::App* fd = align_cmd->add_subcommand(
      "fd-sot", "attribute SOT runs using diarization timestamps");
  required(fd, fd->add_option("--rttm", rttm));
  required(fd, fd->add_option("--segments", segments));
  required(fd, fd->add_option("--hyp", hyp));
  required(fd, fd->add_option("--out", out));
  fd->add_option("--gap-tol", gap_tol)->capture_default_str();
  AddTokenMode(fd, &token_mode);

  // wdsot
  ScorerOptions scorer;
  std::string features, embeddings, model;
  double epsilon = 1e-4, tolerance = 1e-3;
  int coords = 200;
  CLI::App* wd_cmd = app.add_subcommand("wdsot", "word-level speaker scorer");
  wd_cmd->require_subcommand(1);
  CLI::App* train = wd_cmd->add_subcommand("train", "train a scorer");
  required(train, train->add_option("--reference", reference));
  required(train, train->add_option("--segments", segments));
  required(train, train->add_option("--features", features));
  required(train, train->add_option("--embeddings", embeddings));
  required(train, train->add_option("--model-out", model));
  train->add_option("--hyp", hyp,
                    "hypothesis streams added as extra training examples");
  AddScorerOptions(train, &scorer);
  AddTokenMode(train, &token_mode);
  CLI::App* predict = wd_cmd->add_subcommand(
      "predict", "attribute every hypothesis token with a trained scorer");
  required(predict, predict->add_option("--model", model));
  required(predict, predict->add_option("--reference", reference,
                                        "supplies the candidate speakers"));
  required(predict, predict->add_option("--segments", segments));
  required(predict, predict->add_option("--hyp", hyp));
  required(predict, predict->add_option("--features", features));
  required(predict, predict->add_option("--embeddings", embeddings));
  required(predict, predict->add_option("--out", out));
  AddTokenMode(predict, &token_mode);
  CLI::App* gc = wd_cmd->add_subcommand(
      "gradcheck", "finite-difference check of the scorer gradients");
  gc->add_option("--epsilon", epsilon)->capture_default_str();
  gc->add_option("--coords", coords)->capture_default_str();
  gc->add_option("--tolerance", tolerance)->capture_default_str();
  AddScorerOptions(gc, &scorer);

  // tsfilter
  SelectOptions select;
  std::string ts_hyp, rule = "longest";
  CLI::App* ts_cmd = app.add_subcommand(
      "tsfilter",
      "select speakers per segment for target-speaker recognition; with "
      "--ts-hyp, assemble the selected speakers' transcripts");
  required(ts_cmd, ts_cmd->add_option("--rttm", rttm));
  required(ts_cmd, ts_cmd->add_option("--segments", segments));
  ts_cmd->add_option("--ts-hyp", ts_hyp);
  ts_cmd->add_option("--out", out, "output file (default stdout)");
  ts_cmd->add_option("--min-dur", select.min_dur)->capture_default_str();
  ts_cmd->add_option("--gap-tol", select.gap_tol)->capture_default_str();
  ts_cmd->add_option("--rule", rule, "longest or total")
      ->capture_default_str();
  AddTokenMode(ts_cmd, &token_mode);

  // score
  std::string attributed, ref_rttm, si_mode = "minperm";
  double collar = 0.25;
  CLI::App* score_cmd = app.add_subcommand("score", "error rates");
  score_cmd->require_subcommand(1);
  CLI::App* sd = score_cmd->add_subcommand(
      "sd-cer", "speaker-dependent CER of an attributed transcript");
  required(sd, sd->add_option("--attributed", attributed));
  required(sd, sd->add_option("--reference", reference));
  sd->add_option("--out", out, "output file (default stdout)");
  AddTokenMode(sd, &token_mode);
  CLI::App* si = score_cmd->add_subcommand(
      "si-cer", "speaker-independent CER of SOT hypotheses");
  required(si, si->add_option("--hyp", hyp));
  required(si, si->add_option("--reference", reference));
  required(si, si->add_option("--segments", segments));
  si->add_option("--out", out, "output file (default stdout)");
  si->add_option("--si-mode", si_mode, "fifo or minperm")
      ->capture_default_str();
  AddTokenMode(si, &token_mode);
  CLI::App* der = score_cmd->add_subcommand("der", "diarization error rate");
  required(der, der->add_option("--rttm", rttm));
  required(der, der->add_option("--ref-rttm", ref_rttm));
  der->add_option("--out", out, "output file (default stdout)");
  der->add_option("--collar", collar)->capture_default_str();

  // pipeline
  PipelineArgs pa;
  CLI::App* pipe = app.add_subcommand(
      "pipeline", "run assembly approaches and print a comparison report");
  pipe->add_option("--approach", pa.approaches,
                   "fd-sot, wd-sot, ts-oracle or ts; repeatable");
  required(pipe, pipe->add_option("--reference", pa.reference));
  required(pipe, pipe->add_option("--segments", pa.segments));
  pipe->add_option("--hyp", pa.hyp);
  pipe->add_option("--rttm", pa.rttm);
  pipe->add_option("--features", pa.features);
  pipe->add_option("--embeddings", pa.embeddings);
  pipe->add_option("--model", pa.model);
  pipe->add_option("--ts-hyp", pa.ts_hyp);
  pipe->add_option("--transcript-dir", pa.transcript_dir,
                   "writes <approach>.txt per approach");
  pipe->add_option("--report", pa.report, "also write the report here");
  pipe->add_option("--gap-tol", pa.options.gap_tol)->capture_default_str();
  pipe->add_option("--min-dur", pa.options.select.min_dur)
      ->capture_default_str();
  pipe->add_option("--rule", pa.rule, "longest or total")
      ->capture_default_str();
  pipe->add_option("--si-mode", pa.si_mode, "fifo or minperm")
      ->capture_default_str();
  AddTokenMode(pipe, &token_mode);

  // bench
  BenchConfig bench;
  int n_seeds = 20;
  ScorerOptions bench_scorer;
  std::string bench_rule = "longest", bench_si = "minperm", bench_out;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "multi-seed comparison of all approaches on synthetic data");
  bench_cmd->add_option("--seeds", n_seeds,
                        "evaluation seeds seed, seed+1, ...")
      ->capture_default_str();
  bench_cmd->add_flag("--ablation", bench.ablation,
                      "add the scorer ablation rows");
  bench_cmd->add_option("--train-meetings", bench.train_meetings)
      ->capture_default_str();
  bench_cmd->add_option("--train-segments", bench.train_segments)
      ->capture_default_str();
  bench_cmd->add_option("--restarts", bench.scorer_restarts)
      ->capture_default_str();
  bench_cmd->add_option("--validation-meetings", bench.validation_meetings)
      ->capture_default_str();
  bench_cmd->add_option("--threads", bench.threads,
                        "worker count (0: SATTR_THREADS or hardware)")
      ->capture_default_str();
  bench_cmd->add_option("--gap-tol", bench.gap_tol)->capture_default_str();
  bench_cmd->add_option("--min-dur", bench.select.min_dur)
      ->capture_default_str();
  bench_cmd->add_option("--rule", bench_rule, "longest or total")
      ->capture_default_str();
  bench_cmd->add_option("--si-mode", bench_si, "fifo or minperm")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "also write the report here");
  AddSynthOptions(bench_cmd, &bench.synth);
  AddScorerOptions(bench_cmd, &bench_scorer);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (!g.config.empty()) ApplyConfig(&app, ReadConfigFile(g.config));
    required.Check();
    if (synth_cmd->parsed()) {
      RunSynth(g, synth, n_meetings, out_dir, token_mode);
    } else if (ser->parsed()) {
      RunSotSerialize(reference, segments, out, fifo, token_mode);
    } else if (deser->parsed()) {
      RunSotDeserialize(hyp, out, token_mode);
    } else if (fd->parsed()) {
      RunAlignFdSot(rttm, segments, hyp, out, gap_tol, token_mode);
    } else if (train->parsed()) {
      RunWdsotTrain(scorer, g, reference, segments, hyp, features, embeddings,
                    model, token_mode);
    } else if (predict->parsed()) {
      RunWdsotPredict(model, reference, segments, hyp, features, embeddings,
                      out, token_mode);
    } else if (gc->parsed()) {
      RunWdsotGradcheck(scorer, g, epsilon, coords, tolerance);
    } else if (ts_cmd->parsed()) {
      RunTsFilter(rttm, segments, ts_hyp, out, select, rule, token_mode);
    } else if (sd->parsed()) {
      RunScoreSdCer(attributed, reference, out, token_mode);
    } else if (si->parsed()) {
      RunScoreSiCer(hyp, reference, segments, out, si_mode, token_mode);
    } else if (der->parsed()) {
      RunScoreDer(rttm, ref_rttm, out, collar);
    } else if (pipe->parsed()) {
      RunPipelineCommand(pa, token_mode);
    } else if (bench_cmd->parsed()) {
      RunBench(bench, bench_scorer, g, n_seeds, bench_rule, bench_si,
               bench_out);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace sattr

int main(int argc, char** argv) { return sattr::Main(argc, argv); }
