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

#include "sattr/tsfilter.h"

#include <algorithm>

namespace sattr {

std::vector<SelectedSpeaker> SelectSpeakers(const DiarizationTrack& track,
                                            const Segment& segment,
                                            const SelectOptions& options) {
  SATTR_CHECK(options.min_dur >= 0.0, "min_dur must be nonnegative");
  std::vector<SelectedSpeaker> out;
  for (const auto& [spk, intervals] : track.activity) {
    auto islands = SpeakerIslands(intervals, segment, options.gap_tol);
    if (islands.empty()) continue;
    double total = 0.0, longest = 0.0;
    for (const Interval& iv : islands) {
      total += iv.Duration();
      longest = std::max(longest, iv.Duration());
    }
    const double key =
        options.rule == DurationRule::kLongestIsland ? longest : total;
    if (key >= options.min_dur) out.push_back({spk, total, islands[0].start});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SelectedSpeaker& a, const SelectedSpeaker& b) {
                     return a.first_onset < b.first_onset;
                   });
  return out;
}

std::vector<SelectedSpeaker> OracleSpeakers(
    const std::vector<Utterance>& segment_reference) {
  std::map<std::string, SelectedSpeaker> by_speaker;
  for (const Utterance& utt : segment_reference) {
    auto [it, inserted] =
        by_speaker.try_emplace(utt.speaker, SelectedSpeaker{utt.speaker, 0.0,
                                                            utt.start});
    it->second.active_duration += utt.Duration();
    it->second.first_onset = std::min(it->second.first_onset, utt.start);
  }
  std::vector<SelectedSpeaker> out;
  for (auto& [spk, sel] : by_speaker) out.push_back(sel);
  std::stable_sort(out.begin(), out.end(),
                   [](const SelectedSpeaker& a, const SelectedSpeaker& b) {
                     return a.first_onset < b.first_onset;
                   });
  return out;
}

void AssembleTsTranscript(const std::map<std::string, TokenRun>& runs,
                          const std::vector<SelectedSpeaker>& selected,
                          int segment_index, AttributedTranscript* transcript) {
  for (const auto& [spk, run] : runs) {
    bool known = std::any_of(
        selected.begin(), selected.end(),
        [&](const SelectedSpeaker& s) { return s.speaker == spk; });
    SATTR_CHECK(known, "run given for unselected speaker " << spk
                                                           << " in segment "
                                                           << segment_index);
  }
  for (const SelectedSpeaker& sel : selected) {
    auto it = runs.find(sel.speaker);
    if (it != runs.end()) transcript->Append(it->second, sel.speaker,
                                             segment_index);
  }
}

}  // namespace sattr
