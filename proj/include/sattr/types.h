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

#ifndef SATTR_TYPES_H_
#define SATTR_TYPES_H_

#include <string>
#include <string_view>
#include <vector>

#include "sattr/error.h"

namespace sattr {

inline constexpr std::string_view kSeparatorText = "<sc>";

// One grapheme-level unit of a transcript, or the speaker-change separator.
struct Token {
  std::string text;
  bool is_separator = false;

  static Token Separator() { return Token{std::string(kSeparatorText), true}; }

  bool operator==(const Token&) const = default;
};

using TokenRun = std::vector<Token>;

// Character mode splits text into Unicode scalars; word mode splits on
// whitespace.
enum class TokenMode { kCharacter, kWord };

// Splits text into tokens. The literal "<sc>" becomes a separator token.
// Throws Error on invalid UTF-8 or (in word mode) a word that embeds "<sc>".
std::vector<Token> Tokenize(std::string_view text, TokenMode mode);

// Inverse of Tokenize for a run without separators: characters are
// concatenated, words joined by one space.
std::string JoinTokens(const TokenRun& run, TokenMode mode);

// Joins a token sequence that may contain separators; separators are
// rendered as " <sc> ".
std::string JoinStream(const std::vector<Token>& tokens, TokenMode mode);

// Throws unless the token is a well-formed non-separator token.
void ValidateToken(const Token& token);

struct Utterance {
  std::string speaker;
  double start = 0.0;
  double end = 0.0;
  TokenRun tokens;

  double Duration() const { return end - start; }
  bool operator==(const Utterance&) const = default;
};

struct Segment {
  std::string meeting_id;
  double start = 0.0;
  double end = 0.0;

  bool operator==(const Segment&) const = default;
};

struct Meeting {
  std::string meeting_id;
  std::vector<std::string> speakers;  // sorted, unique
  std::vector<Utterance> utterances;
  std::vector<Segment> segments;

  // Utterances whose time span overlaps segment `index` the most, in input
  // order. Every utterance belongs to exactly one segment.
  std::vector<Utterance> UtterancesInSegment(int index) const;

  // Index of the segment an utterance belongs to, or -1 without segments.
  int SegmentOf(const Utterance& utt) const;

  // Throws if an invariant is violated.
  void Validate(int max_speakers = 4) const;
};

// Rebuilds `speakers` from the utterance speaker ids.
void CollectSpeakers(Meeting* meeting);

struct AttributedEntry {
  Token token;
  std::string speaker;
  int segment_index = 0;

  bool operator==(const AttributedEntry&) const = default;
};

// "Who spoke what" for one meeting.
struct AttributedTranscript {
  std::string meeting_id;
  std::vector<AttributedEntry> entries;

  void Append(const TokenRun& run, const std::string& speaker,
              int segment_index);
  void Validate() const;

  bool operator==(const AttributedTranscript&) const = default;
};

enum class FifoMode { kUtterance, kSpeaker };

FifoMode ParseFifoMode(std::string_view name);
std::string_view FifoModeName(FifoMode mode);

// First-in first-out ordering of the references of one segment.
// Utterance mode: ascending start; ties by speaker id, then end.
// Speaker mode: each speaker's utterances contiguous, groups ordered by the
// group's earliest start.
std::vector<Utterance> SortFifo(std::vector<Utterance> utterances,
                                FifoMode mode);

}  // namespace sattr

#endif  // SATTR_TYPES_H_
