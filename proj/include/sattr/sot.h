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

#ifndef SATTR_SOT_H_
#define SATTR_SOT_H_

#include <vector>

#include "sattr/types.h"

namespace sattr {

// A serialized multi-talker token stream for one oracle segment.
struct SotStream {
  std::vector<Token> tokens;
  Segment segment;
  int segment_index = 0;

  int NumSeparators() const;
  bool operator==(const SotStream&) const = default;
};

// Repairs applied by Deserialize to a malformed stream.
struct NormalizationStats {
  int collapsed_separators = 0;
  int stripped_leading = 0;
  int stripped_trailing = 0;

  int Total() const {
    return collapsed_separators + stripped_leading + stripped_trailing;
  }
};

// Concatenates the FIFO-ordered token runs with one separator between runs.
// Throws if any utterance has no tokens.
SotStream Serialize(const std::vector<Utterance>& utterances, FifoMode mode);

// Splits a stream on separators. Adjacent separators are collapsed and edge
// separators stripped (counted in `stats` when non-null), so every returned
// run is non-empty.
std::vector<TokenRun> Deserialize(const SotStream& stream,
                                  NormalizationStats* stats = nullptr);

// Rebuilds a stream from runs; inverse of Deserialize on valid streams.
std::vector<Token> JoinRuns(const std::vector<TokenRun>& runs);

}  // namespace sattr

#endif  // SATTR_SOT_H_
