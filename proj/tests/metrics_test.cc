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

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"
#include "sattr/metrics.h"
#include "sattr/sot.h"

namespace sattr {
namespace {

std::vector<Token> Chars(const std::string& s) {
  return Tokenize(s, TokenMode::kCharacter);
}

TEST(EditDistanceTest, Identical) {
  EXPECT_EQ(EditDistance(Chars("abc"), Chars("abc")),
            (EditCounts{0, 0, 0, 3}));
  EXPECT_DOUBLE_EQ(EditDistance(Chars("abc"), Chars("abc")).Rate(), 0.0);
}

TEST(EditDistanceTest, EmptyHypothesis) {
  EditCounts c = EditDistance({}, Chars("abc"));
  EXPECT_EQ(c, (EditCounts{0, 3, 0, 3}));
  EXPECT_DOUBLE_EQ(c.Rate(), 1.0);
}

TEST(EditDistanceTest, EmptyReferenceRate) {
  EXPECT_DOUBLE_EQ(EditDistance({}, {}).Rate(), 0.0);
  EXPECT_TRUE(std::isinf(EditDistance(Chars("a"), {}).Rate()));
}

TEST(EditDistanceTest, PrefersSubstitution) {
  EXPECT_EQ(EditDistance(Chars("axc"), Chars("abc")),
            (EditCounts{1, 0, 0, 3}));
}

TEST(EditDistanceTest, AlignmentCoversBothSequences) {
  auto steps = AlignTokens(Chars("abxd"), Chars("abcde"));
  int hyp = 0, ref = 0;
  for (const AlignmentStep& s : steps) {
    if (s.hyp_index >= 0) EXPECT_EQ(s.hyp_index, hyp++);
    if (s.ref_index >= 0) EXPECT_EQ(s.ref_index, ref++);
  }
  EXPECT_EQ(hyp, 4);
  EXPECT_EQ(ref, 5);
}

TEST(EditDistancePropertyTest, MatchesRecursiveOracle) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(0, 8);
  for (int trial = 0; trial < 500; ++trial) {
    auto hyp = oracle::RandomTokens(len(rng), 3, &rng);
    auto ref = oracle::RandomTokens(len(rng), 3, &rng);
    EditCounts got = EditDistance(hyp, ref);
    EditCounts want = oracle::RecursiveEditDistance(hyp, ref);
    EXPECT_EQ(got, want);
    EXPECT_EQ(got.ref_length, static_cast<long>(ref.size()));
    EXPECT_EQ(got.Rate() == 0.0, hyp == ref);
  }
}

TEST(EditDistancePropertyTest, SwapExchangesDeletionsAndInsertions) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> len(0, 10);
  for (int trial = 0; trial < 300; ++trial) {
    auto a = oracle::RandomTokens(len(rng), 4, &rng);
    auto b = oracle::RandomTokens(len(rng), 4, &rng);
    EditCounts ab = EditDistance(a, b), ba = EditDistance(b, a);
    EXPECT_EQ(ab.Errors(), ba.Errors());
    EXPECT_EQ(ab.substitutions, ba.substitutions);
    EXPECT_EQ(ab.deletions, ba.insertions);
    EXPECT_EQ(ab.insertions, ba.deletions);
  }
}

TEST(MinCostAssignmentTest, FindsOptimum) {
  EXPECT_EQ(MinCostAssignment({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}}),
            (std::vector<int>{1, 0, 2}));
}

Meeting TwoSpeakerMeeting() {
  Meeting m;
  m.meeting_id = "m";
  m.utterances = {{"A", 0.0, 1.0, Chars("甲乙丙丁")},
                  {"B", 0.5, 1.5, Chars("戊己庚辛")}};
  m.segments = {{"m", 0.0, 2.0}};
  CollectSpeakers(&m);
  return m;
}

AttributedTranscript Attribute(const std::string& a, const std::string& b) {
  AttributedTranscript t;
  t.meeting_id = "m";
  t.Append(Chars(a), "A", 0);
  t.Append(Chars(b), "B", 0);
  return t;
}

TEST(SdCerTest, PerfectIsZero) {
  SdCerResult r = SdCer(Attribute("甲乙丙丁", "戊己庚辛"), TwoSpeakerMeeting());
  EXPECT_EQ(r.pooled, (EditCounts{0, 0, 0, 8}));
}

TEST(SdCerTest, SwappedLabelsCountEightErrors) {
  SdCerResult r = SdCer(Attribute("戊己庚辛", "甲乙丙丁"), TwoSpeakerMeeting());
  EXPECT_EQ(r.pooled.Errors(), 8);
  EXPECT_DOUBLE_EQ(r.pooled.Rate(), 1.0);
}

TEST(SdCerTest, SilentSpeakerIsAllDeletions) {
  AttributedTranscript t;
  t.meeting_id = "m";
  t.Append(Chars("甲乙丙丁"), "A", 0);
  SdCerResult r = SdCer(t, TwoSpeakerMeeting());
  EXPECT_EQ(r.per_speaker["B"], (EditCounts{0, 4, 0, 4}));
}

TEST(SdCerTest, UnknownSpeakerIsAllInsertions) {
  AttributedTranscript t = Attribute("甲乙丙丁", "戊己庚辛");
  t.Append(Chars("壬癸"), "Z", 0);
  SdCerResult r = SdCer(t, TwoSpeakerMeeting());
  EXPECT_EQ(r.per_speaker["Z"], (EditCounts{0, 0, 2, 0}));
  EXPECT_EQ(r.pooled.Errors(), 2);
}

SotStream Stream(const std::string& text) {
  SotStream s;
  s.tokens = Chars(text);
  return s;
}

TEST(SiCerTest, FifoReferenceIsZeroBothModes) {
  Meeting m = TwoSpeakerMeeting();
  std::vector<SotStream> hyps = {Stream("甲乙丙丁 <sc> 戊己庚辛")};
  EXPECT_EQ(SiCer(hyps, m, SiCerMode::kFifo).Errors(), 0);
  EXPECT_EQ(SiCer(hyps, m, SiCerMode::kMinPerm).Errors(), 0);
  EXPECT_EQ(SdCer(Attribute("甲乙丙丁", "戊己庚辛"), m).pooled,
            SiCer(hyps, m, SiCerMode::kFifo));
}

TEST(SiCerTest, ReversedRunsOnlyHurtFifo) {
  Meeting m = TwoSpeakerMeeting();
  std::vector<SotStream> hyps = {Stream("戊己庚辛 <sc> 甲乙丙丁")};
  EXPECT_GT(SiCer(hyps, m, SiCerMode::kFifo).Errors(), 0);
  EXPECT_EQ(SiCer(hyps, m, SiCerMode::kMinPerm).Errors(), 0);
}

TEST(SiCerPropertyTest, MinPermNeverWorseThanFifo) {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> len(1, 5), runs(1, 4);
  for (int trial = 0; trial < 300; ++trial) {
    Meeting m;
    m.meeting_id = "m";
    m.segments = {{"m", 0.0, 100.0}};
    const int n = runs(rng);
    for (int i = 0; i < n; ++i)
      m.utterances.push_back({std::string(1, char('A' + i % 3)), 1.0 * i,
                              1.0 * i + 0.5,
                              oracle::RandomTokens(len(rng), 4, &rng)});
    CollectSpeakers(&m);
    SotStream hyp;
    const int k = runs(rng);
    for (int i = 0; i < k; ++i) {
      if (i) hyp.tokens.push_back(Token::Separator());
      auto r = oracle::RandomTokens(len(rng), 4, &rng);
      hyp.tokens.insert(hyp.tokens.end(), r.begin(), r.end());
    }
    EXPECT_LE(SiCer({hyp}, m, SiCerMode::kMinPerm).Errors(),
              SiCer({hyp}, m, SiCerMode::kFifo).Errors());
  }
}

TEST(SiCerTest, ModeNames) {
  EXPECT_EQ(ParseSiCerMode("fifo"), SiCerMode::kFifo);
  EXPECT_EQ(ParseSiCerMode("minperm"), SiCerMode::kMinPerm);
  EXPECT_THROW(ParseSiCerMode("x"), Error);
}

DiarizationTrack Track(
    std::initializer_list<std::pair<std::string, Interval>> items) {
  DiarizationTrack t;
  t.meeting_id = "m";
  for (const auto& [spk, iv] : items) t.AddInterval(spk, iv);
  t.Normalize();
  return t;
}

TEST(DerTest, IdentityIsZero) {
  auto ref = Track({{"A", {0, 3}}, {"B", {2, 5}}});
  EXPECT_DOUBLE_EQ(Der(ref, ref, 0.0).Rate(), 0.0);
}

TEST(DerTest, SilentSystemIsAllMiss) {
  auto ref = Track({{"A", {0, 10}}});
  DerResult r = Der(Track({}), ref, 0.0);
  EXPECT_DOUBLE_EQ(r.Rate(), 1.0);
  EXPECT_DOUBLE_EQ(r.miss, 10.0);
  EXPECT_DOUBLE_EQ(r.false_alarm, 0.0);
}

TEST(DerTest, EmptyReferenceIsError) {
  EXPECT_THROW(Der(Track({{"A", {0, 1}}}), Track({}), 0.0), Error);
}

TEST(DerTest, CraftedOverlapMatchesFrameOracle) {
  auto ref = Track({{"A", {0.0, 4.0}}, {"B", {3.0, 6.0}}});
  auto sys = Track({{"x", {0.2, 3.5}}, {"y", {3.2, 6.5}}, {"z", {5.0, 5.5}}});
  for (double collar : {0.0, 0.25}) {
    DerResult got = DerComponents(sys, ref, collar);
    DerResult want = oracle::FrameDer(sys, ref, collar);
    EXPECT_NEAR(got.miss, want.miss, 1e-6);
    EXPECT_NEAR(got.false_alarm, want.false_alarm, 1e-6);
    EXPECT_NEAR(got.speaker_error, want.speaker_error, 1e-6);
    EXPECT_NEAR(got.total, want.total, 1e-6);
  }
}

DiarizationTrack RandomTrack(std::mt19937_64* rng, int max_speakers,
                             const std::string& prefix) {
  // Boundaries on a 0.05 s grid so the frame oracle is exact.
  std::uniform_int_distribution<int> start(0, 100), len(1, 40),
      spk(0, max_speakers - 1), count(1, 6);
  DiarizationTrack t;
  t.meeting_id = "m";
  const int n = count(*rng);
  for (int i = 0; i < n; ++i) {
    const double s = 0.05 * start(*rng);
    t.AddInterval(prefix + std::to_string(spk(*rng)),
                  {s, s + 0.05 * len(*rng)});
  }
  t.Normalize();
  return t;
}

TEST(DerPropertyTest, MatchesFrameOracleAndRelabelling) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 100; ++trial) {
    auto ref = RandomTrack(&rng, 3, "r");
    auto sys = RandomTrack(&rng, 4, "s");
    const double collar = trial % 2 ? 0.25 : 0.0;
    DerResult got = DerComponents(sys, ref, collar);
    DerResult want = oracle::FrameDer(sys, ref, collar);
    EXPECT_NEAR(got.miss + got.false_alarm + got.speaker_error,
                want.miss + want.false_alarm + want.speaker_error, 1e-6);
    EXPECT_NEAR(got.total, want.total, 1e-6);

    DiarizationTrack renamed = sys;
    renamed.activity.clear();
    for (const auto& [name, ivs] : sys.activity)
      renamed.activity["zz" + name] = ivs;
    DerResult again = DerComponents(renamed, ref, collar);
    EXPECT_NEAR(again.speaker_error, got.speaker_error, 1e-9);
    EXPECT_NEAR(again.miss, got.miss, 1e-9);
  }
}

}  // namespace
}  // namespace sattr
