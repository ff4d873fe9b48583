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

#ifndef SATTR_SYNTH_H_
#define SATTR_SYNTH_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sattr/fdsot.h"
#include "sattr/formats.h"
#include "sattr/sot.h"
#include "sattr/tsfilter.h"
#include "sattr/types.h"

namespace sattr {

// Knobs of the desk-scale meeting simulator. Every generator is a pure
// function of (config, seed).
struct SynthConfig {
  int n_speakers = 3;
  int n_segments = 8;
  int min_utterances = 2;  // per segment
  int max_utterances = 4;
  int min_tokens = 3;      // per utterance
  int max_tokens = 8;
  double token_duration_min = 0.2;
  double token_duration_max = 0.3;
  double target_overlap_ratio = 0.2;
  // Same-speaker utterances inside a segment are at least this far apart.
  double min_same_speaker_gap = 0.5;
  int vocab_size = 40;
  // Draw the tokens of a segment without replacement when the vocabulary
  // is large enough.
  bool distinct_tokens = true;

  double sub_rate = 0.0;
  double del_rate = 0.0;
  double ins_rate = 0.0;
  double separator_error_rate = 0.0;
  double timestamp_jitter_std = 0.0;

  int embedding_dim = 16;
  int content_dim = 16;
  double cluster_separation = 3.0;  // per-dimension std of speaker centroids
  double noise_std = 1.0;           // frame and profile noise, per dimension
  double frame_step = 0.1;

  // Probability per segment of a short one-token interjection by another
  // speaker, placed inside someone else's utterance.
  double backchannel_rate = 0.0;
  // Target-speaker recognition leaks interfering speech for speakers with
  // less reference speech than this in a segment.
  double leak_threshold = 1.0;

  int max_speakers = 4;
  uint64_t seed = 0;
  // Seeds the token-to-acoustics mapping shared by all meetings.
  uint64_t world_seed = 7;

  void Validate() const;
};

// Independent child seed for a named sub-stream of `seed` (splitmix64).
uint64_t DeriveSeed(uint64_t seed, uint64_t salt);

// Token text of vocabulary entry `index` (CJK ideographs from U+4E00).
std::string VocabToken(int index);

struct SynthMeeting {
  Meeting meeting;
  DiarizationTrack oracle_track;
  std::vector<FeatureSequence> features;  // per segment
  std::map<std::string, Eigen::VectorXd> profiles;
  double overlap_ratio = 0.0;
};

// Overlapped speech time over total speech time.
double MeasureOverlapRatio(const std::vector<Utterance>& utterances);

// Throws when the overlap target cannot be met within 0.1.
SynthMeeting GenMeeting(const SynthConfig& config);

// FIFO serialization of one segment followed by i.i.d. token corruption.
// Separators are moved by one position or dropped at separator_error_rate
// unless `oracle_separator`. Token and separator noise use independent
// streams, so toggling `oracle_separator` leaves token errors unchanged.
SotStream CorruptHypothesis(const std::vector<Utterance>& segment_reference,
                            const SynthConfig& config, bool oracle_separator,
                            uint64_t seed);

// One stream per segment of the meeting.
std::vector<SotStream> CorruptMeeting(const Meeting& meeting,
                                      const SynthConfig& config,
                                      bool oracle_separator, uint64_t seed);

// Shifts each boundary by Gaussian noise truncated at three standard
// deviations. Intervals are clipped to the segment containing their
// original midpoint (when segments are given) and never inverted.
DiarizationTrack JitterDiarization(const DiarizationTrack& track, double std,
                                   uint64_t seed,
                                   const std::vector<Segment>& segments = {});

// Simulated target-speaker recognition for one segment: each selected
// speaker gets its own reference tokens with token noise; speakers with
// little reference speech also pick up part of the dominant interfering
// speaker's tokens.
std::map<std::string, TokenRun> SimulateTsRecognition(
    const std::vector<Utterance>& segment_reference,
    const std::vector<SelectedSpeaker>& selected, const SynthConfig& config,
    uint64_t seed);

}  // namespace sattr

#endif  // SATTR_SYNTH_H_
