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

#ifndef SATTR_FORMATS_H_
#define SATTR_FORMATS_H_

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sattr/fdsot.h"
#include "sattr/sot.h"
#include "sattr/types.h"

namespace sattr {

// All readers throw ParseError ("path:line: ...") on malformed records and
// Error on I/O failure. Writers print seconds with three decimals.
//
// reference:   meeting_id \t speaker \t start \t end \t text
// segments:    meeting_id \t start \t end        (index = order per meeting)
// hypothesis:  meeting_id segment_index sot_text
// rttm:        SPEAKER meeting_id channel onset duration <NA> <NA> spk <NA> <NA>
// attributed:  meeting_id segment_index speaker token
// embeddings:  speaker dim v_1 ... v_dim
// features:    meeting_id segment_index frame_step T dim v_1 ... v_{T*dim}
// ts hyp:      meeting_id segment_index speaker text

std::string FormatSeconds(double seconds);

// Meetings in order of first appearance. Speakers are collected from the
// utterances; segments are left empty.
std::vector<Meeting> ReadReference(const std::string& path, TokenMode mode);
void WriteReference(const std::vector<Meeting>& meetings,
                    const std::string& path, TokenMode mode);

std::map<std::string, std::vector<Segment>> ReadSegments(
    const std::string& path);
void WriteSegments(const std::vector<Meeting>& meetings,
                   const std::string& path);

// Copies segments into each meeting; throws if a meeting has none.
void AttachSegments(const std::map<std::string, std::vector<Segment>>& segs,
                    std::vector<Meeting>* meetings);

// Streams per meeting, indexed by segment. Indices must be dense from 0.
std::map<std::string, std::vector<SotStream>> ReadHypotheses(
    const std::string& path, TokenMode mode);
void WriteHypotheses(const std::map<std::string, std::vector<SotStream>>& hyps,
                     const std::string& path, TokenMode mode);

std::map<std::string, DiarizationTrack> ReadRttm(const std::string& path);
void WriteRttm(const std::vector<DiarizationTrack>& tracks,
               const std::string& path);

std::vector<AttributedTranscript> ReadAttributed(const std::string& path);
void WriteAttributed(const std::vector<AttributedTranscript>& transcripts,
                     const std::string& path);

std::map<std::string, Eigen::VectorXd> ReadEmbeddings(const std::string& path);
void WriteEmbeddings(const std::map<std::string, Eigen::VectorXd>& embeddings,
                     const std::string& path);

struct FeatureSequence {
  Eigen::MatrixXd frames;  // T x dim
  double frame_step = 0.01;

  bool operator==(const FeatureSequence& other) const {
    return frame_step == other.frame_step && frames == other.frames;
  }
};

// Per meeting, indexed by segment.
using FeatureArchive = std::map<std::string, std::vector<FeatureSequence>>;
FeatureArchive ReadFeatures(const std::string& path);
void WriteFeatures(const FeatureArchive& features, const std::string& path);

// Per meeting, per segment: speaker -> recognized run.
using TsHypotheses =
    std::map<std::string, std::map<int, std::map<std::string, TokenRun>>>;
TsHypotheses ReadTsHypotheses(const std::string& path, TokenMode mode);
void WriteTsHypotheses(const TsHypotheses& hyps, const std::string& path,
                       TokenMode mode);

}  // namespace sattr

#endif  // SATTR_FORMATS_H_
