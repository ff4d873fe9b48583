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

#include "sattr/fdsot.h"

#include <algorithm>
#include <numeric>

namespace sattr {

std::vector<Interval> MergeIntervals(std::vector<Interval> intervals) {
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) {
              return a.start != b.start ? a.start < b.start : a.end < b.end;
            });
  std::vector<Interval> merged;
  for (const Interval& iv : intervals) {
    if (!merged.empty() && iv.start <= merged.back().end)
      merged.back().end = std::max(merged.back().end, iv.end);
    else
      merged.push_back(iv);
  }
  return merged;
}

void DiarizationTrack::AddInterval(const std::string& speaker,
                                   Interval interval) {
  activity[speaker].push_back(interval);
}

void DiarizationTrack::Normalize() {
  for (auto it = activity.begin(); it != activity.end();) {
    it->second = MergeIntervals(std::move(it->second));
    if (it->second.empty())
      it = activity.erase(it);
    else
      ++it;
  }
}

double DiarizationTrack::TotalSpeech() const {
  double total = 0.0;
  for (const auto& [spk, intervals] : activity)
    for (const Interval& iv : intervals) total += iv.Duration();
  return total;
}

DiarizationTrack TrackFromMeeting(const Meeting& meeting) {
  DiarizationTrack track;
  track.meeting_id = meeting.meeting_id;
  for (const Utterance& utt : meeting.utterances)
    track.AddInterval(utt.speaker, {utt.start, utt.end});
  track.Normalize();
  return track;
}

std::vector<Interval> SpeakerIslands(const std::vector<Interval>& activity,
                                     const Segment& segment, double gap_tol) {
  std::vector<Interval> islands;
  for (const Interval& iv : activity) {
    Interval clipped{std::max(iv.start, segment.start),
                     std::min(iv.end, segment.end)};
    if (clipped.end <= clipped.start) continue;
    if (!islands.empty() && clipped.start - islands.back().end < gap_tol)
      islands.back().end = std::max(islands.back().end, clipped.end);
    else
      islands.push_back(clipped);
  }
  return islands;
}

std::vector<DiarUtterance> CountUtterances(const DiarizationTrack& track,
                                           const Segment& segment,
                                           double gap_tol) {
  std::vector<DiarUtterance> utts;
  for (const auto& [spk, intervals] : track.activity)
    for (const Interval& island : SpeakerIslands(intervals, segment, gap_tol))
      utts.push_back({spk, island.start, island.end});
  std::stable_sort(utts.begin(), utts.end(),
                   [](const DiarUtterance& a, const DiarUtterance& b) {
                     if (a.start != b.start) return a.start < b.start;
                     return a.speaker < b.speaker;
                   });
  return utts;
}

namespace {

// Indices of the `keep` items with the largest key, returned in original
// order. Equal keys prefer the lower index.
template <typename KeyFn>
std::vector<size_t> KeepLargest(size_t count, size_t keep, KeyFn key) {
  std::vector<size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return key(a) > key(b); });
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<AlignedRun> Align(const std::vector<DiarUtterance>& diar_utts,
                              const std::vector<TokenRun>& sot_runs,
                              AlignStats* stats) {
  const size_t n_diar = diar_utts.size();
  const size_t n_runs = sot_runs.size();
  std::vector<size_t> diar_keep(n_diar), run_keep(n_runs);
  std::iota(diar_keep.begin(), diar_keep.end(), 0);
  std::iota(run_keep.begin(), run_keep.end(), 0);
  if (n_diar > n_runs) {
    diar_keep = KeepLargest(n_diar, n_runs,
                            [&](size_t i) { return diar_utts[i].Duration(); });
  } else if (n_diar < n_runs) {
    run_keep = KeepLargest(n_runs, n_diar,
                           [&](size_t i) { return sot_runs[i].size(); });
  }
  if (stats != nullptr) {
    stats->dropped_diar += static_cast<int>(n_diar - diar_keep.size());
    stats->dropped_runs += static_cast<int>(n_runs - run_keep.size());
  }
  std::vector<AlignedRun> out;
  for (size_t k = 0; k < diar_keep.size(); ++k) {
    out.push_back({diar_utts[diar_keep[k]].speaker,
                   static_cast<int>(run_keep[k]), sot_runs[run_keep[k]]});
  }
  return out;
}

AttributedTranscript FdSot(const DiarizationTrack& track,
                           const std::vector<Segment>& segments,
                           const std::vector<SotStream>& hyps,
                           const FdSotOptions& options, AlignStats* stats) {
  SATTR_CHECK(hyps.size() == segments.size(),
              track.meeting_id << ": " << hyps.size() << " hypotheses for "
                               << segments.size() << " segments");
  AttributedTranscript transcript;
  transcript.meeting_id = track.meeting_id;
  for (size_t s = 0; s < segments.size(); ++s) {
    auto diar = CountUtterances(track, segments[s], options.gap_tol);
    auto runs = Deserialize(hyps[s]);
    for (const AlignedRun& pair : Align(diar, runs, stats))
      transcript.Append(pair.tokens, pair.speaker, static_cast<int>(s));
  }
  return transcript;
}

}  // namespace sattr
