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

#include <algorithm>
#include <random>

#include "gtest/gtest.h"
#include "sattr/types.h"

namespace sattr {
namespace {

Utterance Utt(const std::string& spk, double start, double end,
              const std::string& text = "x") {
  return {spk, start, end, Tokenize(text, TokenMode::kCharacter)};
}

std::vector<double> Starts(const std::vector<Utterance>& utts) {
  std::vector<double> out;
  for (const Utterance& u : utts) out.push_back(u.start);
  return out;
}

TEST(TokenizeTest, CharacterModeSplitsScalars) {
  auto tokens = Tokenize("你好a", TokenMode::kCharacter);
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[0].text, "你");
  EXPECT_EQ(tokens[2].text, "a");
  EXPECT_FALSE(tokens[0].is_separator);
}

TEST(TokenizeTest, SeparatorLiteralBecomesSeparator) {
  auto tokens = Tokenize("甲 <sc> 乙", TokenMode::kCharacter);
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_TRUE(tokens[1].is_separator);
  EXPECT_EQ(tokens[1].text, "<sc>");
}

TEST(TokenizeTest, CharacterModeDropsWhitespace) {
  EXPECT_EQ(Tokenize(" a b ", TokenMode::kCharacter).size(), 2u);
}

TEST(TokenizeTest, WordMode) {
  auto tokens = Tokenize("hello  world <sc> bye", TokenMode::kWord);
  ASSERT_EQ(tokens.size(), 4u);
  EXPECT_EQ(tokens[1].text, "world");
  EXPECT_TRUE(tokens[2].is_separator);
  EXPECT_EQ(JoinTokens({tokens[0], tokens[1]}, TokenMode::kWord),
            "hello world");
}

TEST(TokenizeTest, RejectsInvalidUtf8) {
  EXPECT_THROW(Tokenize("\xff", TokenMode::kCharacter), Error);
}

TEST(TokenizeTest, RejectsEmbeddedSeparatorInWord) {
  EXPECT_THROW(Tokenize("ab<sc>cd", TokenMode::kWord), Error);
}

TEST(TokenizeTest, JoinRoundTripsCharacters) {
  const std::string text = "甲乙丙abc";
  EXPECT_EQ(JoinTokens(Tokenize(text, TokenMode::kCharacter),
                       TokenMode::kCharacter),
            text);
}

TEST(TokenTest, ValidateRejectsWhitespaceAndEmpty) {
  EXPECT_THROW(ValidateToken(Token{"", false}), Error);
  EXPECT_THROW(ValidateToken(Token{"a b", false}), Error);
  EXPECT_NO_THROW(ValidateToken(Token{"a", false}));
}

TEST(SortFifoTest, Empty) {
  EXPECT_TRUE(SortFifo({}, FifoMode::kUtterance).empty());
  EXPECT_TRUE(SortFifo({}, FifoMode::kSpeaker).empty());
}

TEST(SortFifoTest, AlreadyOrdered) {
  auto out = SortFifo({Utt("A", 0.0, 1.0), Utt("B", 0.5, 1.5)},
                      FifoMode::kUtterance);
  EXPECT_EQ(out[0].speaker, "A");
  EXPECT_EQ(out[1].speaker, "B");
}

TEST(SortFifoTest, BothModesByHand) {
  std::vector<Utterance> in = {Utt("A", 0.0, 1.0), Utt("B", 0.5, 1.5),
                               Utt("A", 2.0, 3.0)};
  EXPECT_EQ(Starts(SortFifo(in, FifoMode::kSpeaker)),
            (std::vector<double>{0.0, 2.0, 0.5}));
  EXPECT_EQ(Starts(SortFifo(in, FifoMode::kUtterance)),
            (std::vector<double>{0.0, 0.5, 2.0}));
}

TEST(SortFifoTest, TiesBreakBySpeakerThenEnd) {
  std::vector<Utterance> in = {Utt("B", 1.0, 2.0), Utt("A", 1.0, 3.0),
                               Utt("A", 1.0, 1.5)};
  auto out = SortFifo(in, FifoMode::kUtterance);
  EXPECT_EQ(out[0].speaker, "A");
  EXPECT_EQ(out[0].end, 1.5);
  EXPECT_EQ(out[1].end, 3.0);
  EXPECT_EQ(out[2].speaker, "B");
}

TEST(SortFifoTest, PermutationAndIdempotentProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> start(0.0, 5.0);
  std::uniform_int_distribution<int> spk(0, 3), count(0, 7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Utterance> in;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      // Coarse grid so start ties happen; the end breaks full ties.
      const double s = std::round(start(rng) * 2) / 2;
      in.push_back(Utt(std::string(1, char('A' + spk(rng))), s,
                       s + 0.5 + 0.01 * i, std::string(1, char('a' + i))));
    }
    for (FifoMode mode : {FifoMode::kUtterance, FifoMode::kSpeaker}) {
      auto out = SortFifo(in, mode);
      auto a = in, b = out;
      auto key = [](const Utterance& u) { return u.tokens[0].text; };
      std::sort(a.begin(), a.end(),
                [&](auto& x, auto& y) { return key(x) < key(y); });
      std::sort(b.begin(), b.end(),
                [&](auto& x, auto& y) { return key(x) < key(y); });
      EXPECT_EQ(a, b);
      EXPECT_EQ(SortFifo(out, mode), out);
      // Input order does not matter.
      std::shuffle(in.begin(), in.end(), rng);
      EXPECT_EQ(SortFifo(in, mode), out);
    }
  }
}

TEST(FifoModeTest, ParseNames) {
  EXPECT_EQ(ParseFifoMode("utterance"), FifoMode::kUtterance);
  EXPECT_EQ(ParseFifoMode("speaker"), FifoMode::kSpeaker);
  EXPECT_THROW(ParseFifoMode("bogus"), Error);
}

Meeting TwoSpeakerMeeting() {
  Meeting m;
  m.meeting_id = "m";
  m.utterances = {Utt("A", 0.0, 1.0), Utt("B", 0.8, 2.0),
                  Utt("A", 3.0, 4.0)};
  m.segments = {{"m", 0.0, 2.2}, {"m", 2.8, 4.2}};
  CollectSpeakers(&m);
  return m;
}

TEST(MeetingTest, CollectsSortedSpeakers) {
  Meeting m = TwoSpeakerMeeting();
  EXPECT_EQ(m.speakers, (std::vector<std::string>{"A", "B"}));
  EXPECT_NO_THROW(m.Validate());
}

TEST(MeetingTest, UtterancesInSegment) {
  Meeting m = TwoSpeakerMeeting();
  EXPECT_EQ(m.UtterancesInSegment(0).size(), 2u);
  EXPECT_EQ(m.UtterancesInSegment(1).size(), 1u);
  EXPECT_EQ(m.SegmentOf(m.utterances[2]), 1);
}

TEST(MeetingTest, ValidateRejectsBadSpeakerCount) {
  Meeting m = TwoSpeakerMeeting();
  m.utterances.pop_back();
  m.utterances.pop_back();
  CollectSpeakers(&m);
  EXPECT_THROW(m.Validate(), Error);
}

TEST(MeetingTest, ValidateRejectsInvertedTimes) {
  Meeting m = TwoSpeakerMeeting();
  m.utterances[0].end = -1.0;
  EXPECT_THROW(m.Validate(), Error);
}

TEST(MeetingTest, MaxSpeakersIsConfigurable) {
  Meeting m = TwoSpeakerMeeting();
  for (const char* s : {"C", "D", "E"})
    m.utterances.push_back(Utt(s, 3.0, 4.0));
  CollectSpeakers(&m);
  EXPECT_THROW(m.Validate(), Error);
  EXPECT_NO_THROW(m.Validate(5));
}

TEST(AttributedTranscriptTest, ValidateRejectsSeparatorsAndDecreasingSegment) {
  AttributedTranscript t;
  t.Append(Tokenize("ab", TokenMode::kCharacter), "A", 1);
  EXPECT_NO_THROW(t.Validate());
  t.entries.push_back({Token::Separator(), "A", 1});
  EXPECT_THROW(t.Validate(), Error);
  t.entries.pop_back();
  t.entries.push_back({Token{"c", false}, "A", 0});
  EXPECT_THROW(t.Validate(), Error);
}

}  // namespace
}  // namespace sattr
