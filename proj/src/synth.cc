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

#include "sattr/synth.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

namespace sattr {

void SynthConfig::Validate() const {
  SATTR_CHECK(n_speakers >= 2 && n_speakers <= max_speakers,
              "n_speakers must be in [2, " << max_speakers << "]");
  SATTR_CHECK(n_segments >= 1, "n_segments must be positive");
  SATTR_CHECK(min_utterances >= 1 && min_utterances <= max_utterances,
              "bad utterances-per-segment range");
  SATTR_CHECK(min_tokens >= 1 && min_tokens <= max_tokens,
              "bad tokens-per-utterance range");
  SATTR_CHECK(token_duration_min > 0.0 &&
                  token_duration_min <= token_duration_max,
              "bad token duration range");
  SATTR_CHECK(target_overlap_ratio >= 0.0 && target_overlap_ratio < 1.0,
              "target_overlap_ratio must be in [0, 1)");
  for (double r : {sub_rate, del_rate, ins_rate, separator_error_rate,
                   backchannel_rate})
    SATTR_CHECK(r >= 0.0 && r < 1.0, "error rates must be in [0, 1)");
  SATTR_CHECK(sub_rate + del_rate < 1.0, "sub_rate + del_rate must be < 1");
  SATTR_CHECK(timestamp_jitter_std >= 0.0, "negative jitter");
  SATTR_CHECK(vocab_size >= 2 && vocab_size <= 20000,
              "vocab_size must be in [2, 20000]");
  SATTR_CHECK(embedding_dim >= 1 && content_dim >= 0, "bad dimensions");
  SATTR_CHECK(cluster_separation > 0.0 && noise_std >= 0.0,
              "bad embedding scales");
  SATTR_CHECK(frame_step > 0.0, "frame_step must be positive");
}

uint64_t DeriveSeed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + salt * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string VocabToken(int index) {
  const unsigned cp = 0x4E00u + static_cast<unsigned>(index);
  std::string out;
  out += static_cast<char>(0xE0 | (cp >> 12));
  out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
  out += static_cast<char>(0x80 | (cp & 0x3F));
  return out;
}

double MeasureOverlapRatio(const std::vector<Utterance>& utterances) {
  std::vector<std::pair<double, int>> events;
  for (const Utterance& u : utterances) {
    events.push_back({u.start, +1});
    events.push_back({u.end, -1});
  }
  std::sort(events.begin(), events.end());
  double speech = 0.0, overlap = 0.0;
  int active = 0;
  for (size_t i = 0; i + 1 < events.size(); ++i) {
    active += events[i].second;
    const double dt = events[i + 1].first - events[i].first;
    if (active >= 1) speech += dt;
    if (active >= 2) overlap += dt;
  }
  return speech > 0.0 ? overlap / speech : 0.0;
}

namespace {

double Round3(double t) { return std::round(t * 1000.0) / 1000.0; }

struct PlannedUtterance {
  int speaker = 0;
  std::vector<int> tokens;
  double duration = 0.0;
};

struct PlannedSegment {
  std::vector<PlannedUtterance> utts;
  std::vector<double> pauses;
  double silence = 1.0;
  bool has_backchannel = false;
  PlannedUtterance backchannel;
  int host = 0;
  double position = 0.0;  // relative offset inside the host
};

struct Layout {
  std::vector<Utterance> utterances;
  std::vector<int> segment_of;  // per utterance
  std::vector<Segment> segments;
};

Layout Place(const std::vector<PlannedSegment>& plan,
             const std::vector<std::string>& speaker_ids,
             const std::string& meeting_id, double factor,
             double min_same_gap) {
  Layout layout;
  double t = 0.5;
  for (size_t s = 0; s < plan.size(); ++s) {
    const PlannedSegment& seg = plan[s];
    t += seg.silence;
    std::vector<Utterance> placed;
    for (size_t i = 0; i < seg.utts.size(); ++i) {
      const PlannedUtterance& pu = seg.utts[i];
      double start = t;
      if (i > 0) {
        const double shorter =
            std::min(seg.utts[i - 1].duration, pu.duration);
        const double overlap =
            std::min(factor * shorter - seg.pauses[i - 1], 0.5 * shorter);
        start = placed.back().end - overlap;
      }
      for (const Utterance& prev : placed)
        if (prev.speaker == speaker_ids[pu.speaker])
          start = std::max(start, prev.end + min_same_gap);
      Utterance utt;
      utt.speaker = speaker_ids[pu.speaker];
      utt.start = start;
      utt.end = start + pu.duration;
      for (int id : pu.tokens) utt.tokens.push_back({VocabToken(id), false});
      placed.push_back(std::move(utt));
    }
    if (seg.has_backchannel) {
      const Utterance& host = placed[seg.host];
      const PlannedUtterance& bc = seg.backchannel;
      if (host.Duration() > bc.duration) {
        Utterance utt;
        utt.speaker = speaker_ids[bc.speaker];
        utt.start = host.start + seg.position * (host.Duration() - bc.duration);
        utt.end = utt.start + bc.duration;
        bool clash = false;
        for (const Utterance& prev : placed)
          if (prev.speaker == utt.speaker &&
              !(utt.end + min_same_gap <= prev.start ||
                prev.end + min_same_gap <= utt.start))
            clash = true;
        for (int id : bc.tokens) utt.tokens.push_back({VocabToken(id), false});
        if (!clash) placed.push_back(std::move(utt));
      }
    }
    double first = placed[0].start, last = placed[0].end;
    for (Utterance& utt : placed) {
      utt.start = Round3(utt.start);
      utt.end = Round3(utt.end);
      first = std::min(first, utt.start);
      last = std::max(last, utt.end);
    }
    Segment segment{meeting_id, Round3(first - 0.2), Round3(last + 0.2)};
    layout.segments.push_back(segment);
    for (Utterance& utt : placed) {
      layout.segment_of.push_back(static_cast<int>(s));
      layout.utterances.push_back(std::move(utt));
    }
    t = segment.end;
  }
  return layout;
}

std::vector<int> DrawTokens(int count, int vocab, bool distinct,
                            std::mt19937_64* rng) {
  std::vector<int> out;
  if (distinct && count <= vocab) {
    std::vector<int> all(vocab);
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < count; ++i) {
      int j = std::uniform_int_distribution<int>(i, vocab - 1)(*rng);
      std::swap(all[i], all[j]);
      out.push_back(all[i]);
    }
    return out;
  }
  std::uniform_int_distribution<int> pick(0, vocab - 1);
  for (int i = 0; i < count; ++i) out.push_back(pick(*rng));
  return out;
}

Eigen::VectorXd GaussianVector(int dim, double stddev, std::mt19937_64* rng) {
  Eigen::VectorXd v(dim);
  if (stddev == 0.0) return v.setZero();
  std::normal_distribution<double> dist(0.0, stddev);
  for (int i = 0; i < dim; ++i) v(i) = dist(*rng);
  return v;
}

TokenRun CorruptRun(const TokenRun& run, const SynthConfig& config,
                    std::mt19937_64* rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, config.vocab_size - 1);
  TokenRun out;
  for (const Token& tok : run) {
    const double u = unit(*rng);
    if (u < config.sub_rate) {
      std::string text;
      do {
        text = VocabToken(pick(*rng));
      } while (text == tok.text);
      out.push_back({text, false});
    } else if (u >= config.sub_rate + config.del_rate) {
      out.push_back(tok);
    }
    if (unit(*rng) < config.ins_rate)
      out.push_back({VocabToken(pick(*rng)), false});
  }
  return out;
}

}  // namespace

SynthMeeting GenMeeting(const SynthConfig& config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  SynthMeeting out;
  Meeting& meeting = out.meeting;
  meeting.meeting_id = "M" + std::to_string(config.seed);
  std::vector<std::string> ids;
  std::vector<Eigen::VectorXd> centroids;
  for (int k = 0; k < config.n_speakers; ++k) {
    ids.push_back(meeting.meeting_id + "_S" + std::to_string(k + 1));
    // Random direction at a fixed radius, so no speaker wins dot-product
    // scoring by norm alone.
    Eigen::VectorXd c = GaussianVector(config.embedding_dim, 1.0, &rng);
    centroids.push_back(c.normalized() * config.cluster_separation *
                        std::sqrt(double(config.embedding_dim)));
  }
  for (int k = 0; k < config.n_speakers; ++k)
    out.profiles[ids[k]] =
        centroids[k] +
        GaussianVector(config.embedding_dim, config.noise_std, &rng);

  std::vector<PlannedSegment> plan(config.n_segments);
  for (PlannedSegment& seg : plan) {
    const int n = uniform_int(config.min_utterances, config.max_utterances);
    int total_tokens = 0;
    int prev = -1;
    for (int i = 0; i < n; ++i) {
      PlannedUtterance pu;
      do {
        pu.speaker = uniform_int(0, config.n_speakers - 1);
      } while (pu.speaker == prev);
      prev = pu.speaker;
      const int n_tok = uniform_int(config.min_tokens, config.max_tokens);
      pu.duration = n_tok * uniform(config.token_duration_min,
                                    config.token_duration_max);
      pu.tokens.resize(n_tok);
      total_tokens += n_tok;
      seg.utts.push_back(std::move(pu));
    }
    for (int i = 0; i + 1 < n; ++i) seg.pauses.push_back(uniform(0.1, 0.4));
    seg.silence = uniform(1.0, 2.0);
    if (config.backchannel_rate > 0.0 && unit(rng) < config.backchannel_rate) {
      seg.has_backchannel = true;
      seg.host = uniform_int(0, n - 1);
      std::vector<int> candidates;
      for (int k = 0; k < config.n_speakers; ++k) {
        bool present = false;
        for (const PlannedUtterance& pu : seg.utts) present |= pu.speaker == k;
        if (!present) candidates.push_back(k);
      }
      if (candidates.empty())
        for (int k = 0; k < config.n_speakers; ++k)
          if (k != seg.utts[seg.host].speaker) candidates.push_back(k);
      seg.backchannel.speaker =
          candidates[uniform_int(0, int(candidates.size()) - 1)];
      seg.backchannel.duration = uniform(0.2, 0.45);
      seg.backchannel.tokens.resize(1);
      seg.position = unit(rng);
      ++total_tokens;
    }
    std::vector<int> tokens = DrawTokens(total_tokens, config.vocab_size,
                                         config.distinct_tokens, &rng);
    size_t k = 0;
    for (PlannedUtterance& pu : seg.utts)
      for (int& t : pu.tokens) t = tokens[k++];
    if (seg.has_backchannel) seg.backchannel.tokens[0] = tokens[k++];
  }

  // Overlap grows with the factor; bisect for the target ratio.
  auto ratio_at = [&](double f) {
    return MeasureOverlapRatio(
        Place(plan, ids, meeting.meeting_id, f, config.min_same_speaker_gap)
            .utterances);
  };
  const double target = config.target_overlap_ratio;
  double factor = 0.0;
  if (ratio_at(0.0) < target) {
    double lo = 0.0, hi = 2.0;
    const double reachable = ratio_at(hi);
    SATTR_CHECK(reachable >= target - 0.1,
                "target_overlap_ratio " << target << " infeasible: at most "
                                        << reachable
                                        << " reachable with these utterance "
                                           "counts and durations");
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ratio_at(mid) < target ? lo : hi) = mid;
    }
    factor = std::abs(ratio_at(lo) - target) <= std::abs(ratio_at(hi) - target)
                 ? lo
                 : hi;
  }
  Layout layout = Place(plan, ids, meeting.meeting_id, factor,
                        config.min_same_speaker_gap);
  out.overlap_ratio = MeasureOverlapRatio(layout.utterances);
  SATTR_CHECK(std::abs(out.overlap_ratio - target) <= 0.1,
              "target_overlap_ratio " << target << " infeasible: reached "
                                      << out.overlap_ratio);
  meeting.utterances = layout.utterances;
  meeting.segments = layout.segments;
  CollectSpeakers(&meeting);
  // A speaker may never get an utterance in a short meeting; keep the full
  // inventory so profiles and reference agree.
  meeting.speakers = ids;
  std::sort(meeting.speakers.begin(), meeting.speakers.end());
  meeting.Validate(config.max_speakers);
  out.oracle_track = TrackFromMeeting(meeting);

  // Token acoustics shared by every meeting.
  std::mt19937_64 world(config.world_seed);
  Eigen::MatrixXd signatures(config.vocab_size, config.content_dim);
  {
    std::normal_distribution<double> dist(0.0, config.cluster_separation);
    for (int v = 0; v < config.vocab_size; ++v)
      for (int c = 0; c < config.content_dim; ++c) signatures(v, c) = dist(world);
  }
  std::map<std::string, int> speaker_index;
  for (int k = 0; k < config.n_speakers; ++k) speaker_index[ids[k]] = k;
  const int dim = config.embedding_dim + config.content_dim;
  for (size_t s = 0; s < layout.segments.size(); ++s) {
    const Segment& seg = layout.segments[s];
    const int frames = std::max(
        1, int(std::ceil((seg.end - seg.start) / config.frame_step - 1e-9)));
    FeatureSequence feats;
    feats.frame_step = config.frame_step;
    feats.frames.resize(frames, dim);
    for (int t = 0; t < frames; ++t) {
      Eigen::VectorXd x = GaussianVector(dim, config.noise_std, &rng);
      const double center = seg.start + (t + 0.5) * config.frame_step;
      for (size_t u = 0; u < layout.utterances.size(); ++u) {
        if (layout.segment_of[u] != static_cast<int>(s)) continue;
        const Utterance& utt = layout.utterances[u];
        if (center < utt.start || center >= utt.end) continue;
        const int n_tok = static_cast<int>(utt.tokens.size());
        const int k = std::min(
            n_tok - 1,
            int((center - utt.start) / (utt.Duration() / double(n_tok))));
        x.head(config.embedding_dim) += centroids[speaker_index[utt.speaker]];
        if (config.content_dim > 0) {
          const std::string& text = utt.tokens[k].text;
          // Recover the vocabulary index from the code point.
          const int id = ((text[0] & 0x0F) << 12 | (text[1] & 0x3F) << 6 |
                          (text[2] & 0x3F)) -
                         0x4E00;
          x.tail(config.content_dim) += signatures.row(id).transpose();
        }
      }
      feats.frames.row(t) = x.transpose();
    }
    out.features.push_back(std::move(feats));
  }
  return out;
}

SotStream CorruptHypothesis(const std::vector<Utterance>& segment_reference,
                            const SynthConfig& config, bool oracle_separator,
                            uint64_t seed) {
  std::seed_seq token_seq{seed, uint64_t{0x746f6b656e}};
  std::seed_seq sep_seq{seed, uint64_t{0x736570}};
  std::mt19937_64 token_rng(token_seq), sep_rng(sep_seq);
  std::vector<TokenRun> runs;
  for (const Utterance& utt :
       SortFifo(segment_reference, FifoMode::kUtterance))
    runs.push_back(CorruptRun(utt.tokens, config, &token_rng));

  SotStream stream;
  if (runs.empty()) return stream;
  if (oracle_separator || config.separator_error_rate == 0.0) {
    stream.tokens = JoinRuns(runs);
    return stream;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TokenRun> out{runs[0]};
  for (size_t j = 1; j < runs.size(); ++j) {
    TokenRun next = runs[j];
    if (unit(sep_rng) < config.separator_error_rate) {
      const int action = std::uniform_int_distribution<int>(0, 2)(sep_rng);
      if (action == 0) {  // dropped
        out.back().insert(out.back().end(), next.begin(), next.end());
        continue;
      }
      if (action == 1 && !out.back().empty()) {  // one token early
        next.insert(next.begin(), out.back().back());
        out.back().pop_back();
      } else if (action == 2 && !next.empty()) {  // one token late
        out.back().push_back(next.front());
        next.erase(next.begin());
      }
    }
    out.push_back(std::move(next));
  }
  stream.tokens = JoinRuns(out);
  return stream;
}

std::vector<SotStream> CorruptMeeting(const Meeting& meeting,
                                      const SynthConfig& config,
                                      bool oracle_separator, uint64_t seed) {
  std::vector<SotStream> streams;
  for (size_t s = 0; s < meeting.segments.size(); ++s) {
    SotStream stream =
        CorruptHypothesis(meeting.UtterancesInSegment(static_cast<int>(s)),
                          config, oracle_separator, seed * 1000003ULL + s);
    stream.segment = meeting.segments[s];
    stream.segment_index = static_cast<int>(s);
    streams.push_back(std::move(stream));
  }
  return streams;
}

DiarizationTrack JitterDiarization(const DiarizationTrack& track, double std,
                                   uint64_t seed,
                                   const std::vector<Segment>& segments) {
  SATTR_CHECK(std >= 0.0, "jitter std must be nonnegative");
  std::mt19937_64 rng(seed);
  auto shift = [&]() {
    if (std == 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, std);
    double z;
    do {
      z = dist(rng);
    } while (std::abs(z) > 3.0 * std);
    return z;
  };
  DiarizationTrack out;
  out.meeting_id = track.meeting_id;
  out.frame_step = track.frame_step;
  for (const auto& [spk, intervals] : track.activity) {
    for (const Interval& iv : intervals) {
      double lo = 0.0, hi = std::numeric_limits<double>::infinity();
      const double mid = 0.5 * (iv.start + iv.end);
      for (const Segment& seg : segments) {
        if (seg.start <= mid && mid < seg.end) {
          lo = seg.start;
          hi = seg.end;
          break;
        }
      }
      double start = std::max(lo, iv.start + shift());
      double end = std::min(hi, iv.end + shift());
      if (end - start < track.frame_step) {
        const double center = std::clamp(0.5 * (start + end), lo, hi);
        start = std::max(lo, center - 0.5 * track.frame_step);
        end = std::min(hi, center + 0.5 * track.frame_step);
      }
      if (end > start) out.AddInterval(spk, {start, end});
    }
  }
  out.Normalize();
  return out;
}

std::map<std::string, TokenRun> SimulateTsRecognition(
    const std::vector<Utterance>& segment_reference,
    const std::vector<SelectedSpeaker>& selected, const SynthConfig& config,
    uint64_t seed) {
  std::map<std::string, TokenRun> own;
  std::map<std::string, double> duration;
  for (const Utterance& utt :
       SortFifo(segment_reference, FifoMode::kUtterance)) {
    auto& run = own[utt.speaker];
    run.insert(run.end(), utt.tokens.begin(), utt.tokens.end());
    duration[utt.speaker] += utt.Duration();
  }
  std::map<std::string, TokenRun> out;
  for (const SelectedSpeaker& sel : selected) {
    // Per-speaker stream: the output for a speaker does not depend on who
    // else was selected.
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : sel.speaker) h = (h ^ ch) * 1099511628211ULL;
    std::seed_seq seq{seed, h};
    std::mt19937_64 rng(seq);
    TokenRun run = CorruptRun(own[sel.speaker], config, &rng);
    const double dur = duration[sel.speaker];
    if (dur < config.leak_threshold) {
      std::string interferer;
      double best = 0.0;
      for (const auto& [spk, d] : duration)
        if (spk != sel.speaker && d > best) {
          best = d;
          interferer = spk;
        }
      if (!interferer.empty()) {
        const TokenRun& other = own[interferer];
        const double leak = 1.0 - dur / config.leak_threshold;
        const size_t count = std::min(
            other.size(), size_t(std::lround(leak * double(other.size()))));
        TokenRun leaked(other.begin(), other.begin() + count);
        leaked = CorruptRun(leaked, config, &rng);
        run.insert(run.end(), leaked.begin(), leaked.end());
      }
    }
    out[sel.speaker] = std::move(run);
  }
  return out;
}

}  // namespace sattr
