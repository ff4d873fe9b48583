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

#ifndef SATTR_METRICS_H_
#define SATTR_METRICS_H_

#include <map>
#include <string>
#include <vector>

#include "sattr/fdsot.h"
#include "sattr/sot.h"
#include "sattr/types.h"

namespace sattr {

struct EditCounts {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long ref_length = 0;

  long Errors() const { return substitutions + deletions + insertions; }
  // Error rate; 0 for an empty reference with no errors, +inf otherwise.
  double Rate() const;

  EditCounts& operator+=(const EditCounts& other);
  bool operator==(const EditCounts&) const = default;
};

enum class EditOp { kMatch, kSubstitution, kDeletion, kInsertion };

struct AlignmentStep {
  EditOp op;
  int hyp_index;  // -1 for deletions
  int ref_index;  // -1 for insertions
};

// Minimal unit-cost Levenshtein alignment. Among minimal alignments the one
// with the most substitutions (fewest insertions plus deletions) is chosen.
std::vector<AlignmentStep> AlignTokens(const std::vector<Token>& hyp,
                                       const std::vector<Token>& ref);

EditCounts EditDistance(const std::vector<Token>& hyp,
                        const std::vector<Token>& ref);

// Rectangular min-cost assignment (Hungarian algorithm). Returns, for each
// row, the assigned column or -1 when rows outnumber columns.
std::vector<int> MinCostAssignment(
    const std::vector<std::vector<double>>& cost);

struct SdCerResult {
  std::map<std::string, EditCounts> per_speaker;
  EditCounts pooled;
};

// Speaker-dependent CER without permutation search: each reference
// speaker's utterances (start order) are compared with the tokens attributed
// to the same id, in (segment_index, position) order. Tokens attributed to
// unknown ids count as insertions.
SdCerResult SdCer(const AttributedTranscript& system, const Meeting& reference);

enum class SiCerMode { kFifo, kMinPerm };

SiCerMode ParseSiCerMode(std::string_view name);

// Speaker-independent CER, pooled over segments. `hyps[i]` scores against
// the utterances of segment i. kFifo compares the separator-stripped stream
// with the utterance-FIFO reference; kMinPerm first reorders the hypothesis
// runs to best match it (never worse than kFifo).
EditCounts SiCer(const std::vector<SotStream>& hyps, const Meeting& reference,
                 SiCerMode mode = SiCerMode::kMinPerm);

struct DerResult {
  double miss = 0.0;
  double false_alarm = 0.0;
  double speaker_error = 0.0;
  double total = 0.0;  // scored reference speech time

  double Rate() const { return (miss + false_alarm + speaker_error) / total; }
  DerResult& operator+=(const DerResult& other);
};

// Diarization error rate with an optimal one-to-one speaker mapping.
// Regions within `collar` seconds of a reference boundary are not scored.
// Throws if no reference speech remains.
DerResult Der(const DiarizationTrack& system,
              const DiarizationTrack& reference, double collar = 0.25);

// Same accounting but returns the components even when total is zero.
DerResult DerComponents(const DiarizationTrack& system,
                        const DiarizationTrack& reference, double collar);

}  // namespace sattr

#endif  // SATTR_METRICS_H_
