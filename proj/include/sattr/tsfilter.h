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

#ifndef SATTR_TSFILTER_H_
#define SATTR_TSFILTER_H_

#include <map>
#include <string>
#include <vector>

#include "sattr/fdsot.h"
#include "sattr/types.h"

namespace sattr {

// Which duration the minimum-time threshold is compared against.
enum class DurationRule {
  kLongestIsland,  // the longest merged island of the speaker
  kTotalActivity,  // the speaker's summed activity in the segment
};

struct SelectOptions {
  double min_dur = 0.5;
  double gap_tol = 0.3;
  DurationRule rule = DurationRule::kLongestIsland;
};

struct SelectedSpeaker {
  std::string speaker;
  double active_duration = 0.0;  // total activity inside the segment
  double first_onset = 0.0;

  bool operator==(const SelectedSpeaker&) const = default;
};

// Speakers worth running target-speaker recognition for in a segment,
// sorted by first onset. With min_dur == 0 every speaker with any activity
// in the segment is kept.
std::vector<SelectedSpeaker> SelectSpeakers(const DiarizationTrack& track,
                                            const Segment& segment,
                                            const SelectOptions& options = {});

// Oracle selection: the reference speakers of the segment.
std::vector<SelectedSpeaker> OracleSpeakers(
    const std::vector<Utterance>& segment_reference);

// Appends each selected speaker's run (in selection order) to `transcript`.
// A run for a speaker that was not selected is an error; a selected speaker
// without a run contributes nothing.
void AssembleTsTranscript(const std::map<std::string, TokenRun>& runs,
                          const std::vector<SelectedSpeaker>& selected,
                          int segment_index, AttributedTranscript* transcript);

}  // namespace sattr

#endif  // SATTR_TSFILTER_H_
