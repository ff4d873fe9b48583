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

#include "sattr/types.h"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>

namespace sattr {

void Warn(const std::string& message) {
  std::cerr << "WARNING: " << message << '\n';
}

namespace {

bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Length in bytes of the UTF-8 scalar starting at text[pos].
size_t ScalarLength(std::string_view text, size_t pos) {
  unsigned char lead = static_cast<unsigned char>(text[pos]);
  size_t len;
  if (lead < 0x80) {
    len = 1;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
  } else {
    SATTR_THROW("invalid UTF-8 lead byte at offset " << pos);
  }
  if (pos + len > text.size())
    SATTR_THROW("truncated UTF-8 sequence at offset " << pos);
  for (size_t i = 1; i < len; ++i) {
    unsigned char c = static_cast<unsigned char>(text[pos + i]);
    if ((c & 0xC0) != 0x80)
      SATTR_THROW("invalid UTF-8 continuation byte at offset " << pos + i);
  }
  return len;
}

}  // namespace

std::vector<Token> Tokenize(std::string_view text, TokenMode mode) {
  std::vector<Token> tokens;
  size_t pos = 0;
  if (mode == TokenMode::kCharacter) {
    while (pos < text.size()) {
      if (IsSpace(static_cast<unsigned char>(text[pos]))) {
        ++pos;
        continue;
      }
      if (text.substr(pos, kSeparatorText.size()) == kSeparatorText) {
        tokens.push_back(Token::Separator());
        pos += kSeparatorText.size();
        continue;
      }
      size_t len = ScalarLength(text, pos);
      tokens.push_back(Token{std::string(text.substr(pos, len)), false});
      pos += len;
    }
    return tokens;
  }
  while (pos < text.size()) {
    while (pos < text.size() && IsSpace(static_cast<unsigned char>(text[pos])))
      ++pos;
    size_t begin = pos;
    while (pos < text.size() &&
           !IsSpace(static_cast<unsigned char>(text[pos])))
      pos += ScalarLength(text, pos);
    if (pos == begin) break;
    std::string_view word = text.substr(begin, pos - begin);
    if (word == kSeparatorText) {
      tokens.push_back(Token::Separator());
    } else if (word.find(kSeparatorText) != std::string_view::npos) {
      SATTR_THROW("reserved literal " << kSeparatorText
                                      << " inside word '" << word << "'");
    } else {
      tokens.push_back(Token{std::string(word), false});
    }
  }
  return tokens;
}

std::string JoinTokens(const TokenRun& run, TokenMode mode) {
  std::string out;
  for (size_t i = 0; i < run.size(); ++i) {
    if (mode == TokenMode::kWord && i > 0) out += ' ';
    out += run[i].text;
  }
  return out;
}

std::string JoinStream(const std::vector<Token>& tokens, TokenMode mode) {
  std::string out;
  bool need_space = false;
  for (const Token& tok : tokens) {
    if (tok.is_separator) {
      if (!out.empty()) out += ' ';
      out += kSeparatorText;
      need_space = true;
      continue;
    }
    if (need_space || (mode == TokenMode::kWord && !out.empty())) out += ' ';
    need_space = false;
    out += tok.text;
  }
  return out;
}

void ValidateToken(const Token& token) {
  if (token.is_separator) SATTR_THROW("unexpected separator token");
  if (token.text.empty()) SATTR_THROW("empty token");
  for (unsigned char c : token.text)
    if (IsSpace(c)) SATTR_THROW("token '" << token.text << "' has whitespace");
  if (token.text.find(kSeparatorText) != std::string::npos)
    SATTR_THROW("token '" << token.text << "' contains reserved "
                          << kSeparatorText);
}

std::vector<Utterance> Meeting::UtterancesInSegment(int index) const {
  std::vector<Utterance> out;
  for (const Utterance& utt : utterances)
    if (SegmentOf(utt) == index) out.push_back(utt);
  return out;
}

int Meeting::SegmentOf(const Utterance& utt) const {
  int best = -1;
  double best_overlap = 0.0;
  for (size_t i = 0; i < segments.size(); ++i) {
    double overlap = std::min(utt.end, segments[i].end) -
                     std::max(utt.start, segments[i].start);
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = static_cast<int>(i);
    }
  }
  return best;
}

void Meeting::Validate(int max_speakers) const {
  std::set<std::string> known(speakers.begin(), speakers.end());
  SATTR_CHECK(known.size() == speakers.size(),
              meeting_id << ": duplicate speaker ids");
  SATTR_CHECK(static_cast<int>(speakers.size()) >= 2 &&
                  static_cast<int>(speakers.size()) <= max_speakers,
              meeting_id << ": " << speakers.size()
                         << " speakers, expected 2.." << max_speakers);
  for (const Utterance& utt : utterances) {
    SATTR_CHECK(known.count(utt.speaker),
                meeting_id << ": unknown speaker " << utt.speaker);
    SATTR_CHECK(utt.start >= 0.0 && utt.start < utt.end,
                meeting_id << ": bad utterance interval [" << utt.start
                           << ", " << utt.end << ")");
    SATTR_CHECK(!utt.tokens.empty(),
                meeting_id << ": empty reference utterance at " << utt.start);
    for (const Token& tok : utt.tokens) ValidateToken(tok);
    if (!segments.empty())
      SATTR_CHECK(SegmentOf(utt) >= 0, meeting_id << ": utterance at "
                                                  << utt.start
                                                  << " outside all segments");
  }
  for (const Segment& seg : segments)
    SATTR_CHECK(seg.start < seg.end,
                meeting_id << ": bad segment [" << seg.start << ", "
                           << seg.end << ")");
}

void CollectSpeakers(Meeting* meeting) {
  std::set<std::string> ids;
  for (const Utterance& utt : meeting->utterances) ids.insert(utt.speaker);
  meeting->speakers.assign(ids.begin(), ids.end());
}

void AttributedTranscript::Append(const TokenRun& run,
                                  const std::string& speaker,
                                  int segment_index) {
  for (const Token& tok : run)
    if (!tok.is_separator) entries.push_back({tok, speaker, segment_index});
}

void AttributedTranscript::Validate() const {
  int last = 0;
  for (const AttributedEntry& entry : entries) {
    ValidateToken(entry.token);
    SATTR_CHECK(entry.segment_index >= last,
                meeting_id << ": segment_index decreases");
    last = entry.segment_index;
  }
}

FifoMode ParseFifoMode(std::string_view name) {
  if (name == "utterance") return FifoMode::kUtterance;
  if (name == "speaker") return FifoMode::kSpeaker;
  SATTR_THROW("unknown FIFO mode '" << name << "'");
}

std::string_view FifoModeName(FifoMode mode) {
  return mode == FifoMode::kUtterance ? "utterance" : "speaker";
}

std::vector<Utterance> SortFifo(std::vector<Utterance> utterances,
                                FifoMode mode) {
  auto by_start = [](const Utterance& a, const Utterance& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.speaker != b.speaker) return a.speaker < b.speaker;
    return a.end < b.end;
  };
  std::stable_sort(utterances.begin(), utterances.end(), by_start);
  if (mode == FifoMode::kUtterance) return utterances;

  // After the start sort, first appearance order of a speaker is the order
  // of its earliest start (with the same tie-break).
  std::vector<std::string> order;
  std::map<std::string, std::vector<Utterance>> groups;
  for (Utterance& utt : utterances) {
    auto [it, inserted] = groups.try_emplace(utt.speaker);
    if (inserted) order.push_back(utt.speaker);
    it->second.push_back(std::move(utt));
  }
  std::vector<Utterance> out;
  out.reserve(utterances.size());
  for (const std::string& spk : order)
    for (Utterance& utt : groups[spk]) out.push_back(std::move(utt));
  return out;
}

}  // namespace sattr
