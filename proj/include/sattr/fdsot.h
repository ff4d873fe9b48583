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

#ifndef SATTR_FDSOT_H_
#define SATTR_FDSOT_H_

#include <map>
#include <string>
#include <vector>

#include "sattr/sot.h"
#include "sattr/types.h"

namespace sattr {

struct Interval {
  double start = 0.0;
  double end = 0.0;

  double Duration() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

// Sorts and unions intervals; touching intervals are joined.
std::vector<Interval> MergeIntervals(std::vector<Interval> intervals);

// Per-speaker activity of one meeting, e.g. the output of a TS-VAD system.
struct DiarizationTrack {
  std::string meeting_id;
  std::map<std::string, std::vector<Interval>> activity;
  double frame_step = 0.01;

  void AddInterval(const std::string& speaker, Interval interval);
  // Re-establishes sorted, disjoint intervals per speaker.
  void Normalize();
  double TotalSpeech() const;

  bool operator==(const DiarizationTrack&) const = default;
};

// Oracle track built from the reference utterance intervals.
DiarizationTrack TrackFromMeeting(const Meeting& meeting);

struct DiarUtterance {
  std::string speaker;
  double start = 0.0;
  double end = 0.0;

  double Duration() const { return end - start; }
  bool operator==(const DiarUtterance&) const = default;
};

// Islands of one speaker's activity clipped to `segment` after bridging
// gaps shorter than `gap_tol`. Not sorted.
std::vector<Interval> SpeakerIslands(const std::vector<Interval>& activity,
                                     const Segment& segment, double gap_tol);

// Utterances seen by diarization inside a segment: every island of every
// speaker, sorted by start (ties by speaker id). The list size is N-hat.
std::vector<DiarUtterance> CountUtterances(const DiarizationTrack& track,
                                           const Segment& segment,
                                           double gap_tol = 0.3);

struct AlignedRun {
  std::string speaker;
  int run_index = 0;  // index into the SOT runs
  TokenRun tokens;

  bool operator==(const AlignedRun&) const = default;
};

struct AlignStats {
  int dropped_diar = 0;
  int dropped_runs = 0;
};

// Reconciles diarization utterances with SOT runs and pairs them
// chronologically. With N-hat > N only the N longest diarization
// utterances are kept; with N-hat < N only the N-hat runs with the most
// tokens. Ties keep the earlier item.
std::vector<AlignedRun> Align(const std::vector<DiarUtterance>& diar_utts,
                              const std::vector<TokenRun>& sot_runs,
                              AlignStats* stats = nullptr);

struct FdSotOptions {
  double gap_tol = 0.3;
};

// Full FD-SOT assembly for one meeting. `hyps[i]` is the stream of segment i.
AttributedTranscript FdSot(const DiarizationTrack& track,
                           const std::vector<Segment>& segments,
                           const std::vector<SotStream>& hyps,
                           const FdSotOptions& options = {},
                           AlignStats* stats = nullptr);

}  // namespace sattr

#endif  // SATTR_FDSOT_H_
