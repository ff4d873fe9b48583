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

#include "sattr/formats.h"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace sattr {

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) SATTR_THROW(path << ": cannot open for reading");
  }
  bool Next(std::string* line) {
    if (!std::getline(in_, *line)) return false;
    ++line_no_;
    if (!line->empty() && line->back() == '\r') line->pop_back();
    return true;
  }
  [[noreturn]] void Fail(const std::string& what) const {
    throw ParseError(path_, line_no_, what);
  }
  int line_no() const { return line_no_; }

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
};

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path) {
    if (!out_) SATTR_THROW(path << ": cannot open for writing");
  }
  std::ofstream& stream() { return out_; }
  void Close() {
    out_.close();
    if (!out_) SATTR_THROW(path_ << ": write failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

bool Blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

std::vector<std::string> SplitWhitespace(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream is(line);
  std::string field;
  while (is >> field) fields.push_back(field);
  return fields;
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t begin = 0;
  while (true) {
    size_t tab = line.find('\t', begin);
    fields.push_back(line.substr(begin, tab - begin));
    if (tab == std::string::npos) break;
    begin = tab + 1;
  }
  return fields;
}

// Splits off the first `n` whitespace-delimited fields; the remainder (with
// leading whitespace removed) goes into `rest`.
bool SplitHead(const std::string& line, int n, std::vector<std::string>* head,
               std::string* rest) {
  size_t pos = 0;
  head->clear();
  for (int i = 0; i < n; ++i) {
    pos = line.find_first_not_of(" \t", pos);
    if (pos == std::string::npos) return false;
    size_t end = line.find_first_of(" \t", pos);
    head->push_back(line.substr(pos, end - pos));
    pos = end;
  }
  if (pos == std::string::npos) {
    rest->clear();
  } else {
    size_t begin = line.find_first_not_of(" \t", pos);
    *rest = begin == std::string::npos ? "" : line.substr(begin);
  }
  return true;
}

double ParseDouble(const LineReader& reader, const std::string& field,
                   const char* what) {
  errno = 0;
  char* end = nullptr;
  double value = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size() || errno != 0 ||
      !std::isfinite(value))
    reader.Fail(std::string("bad ") + what + " '" + field + "'");
  return value;
}

long ParseInt(const LineReader& reader, const std::string& field,
              const char* what) {
  errno = 0;
  char* end = nullptr;
  long value = std::strtol(field.c_str(), &end, 10);
  if (field.empty() || end != field.c_str() + field.size() || errno != 0)
    reader.Fail(std::string("bad ") + what + " '" + field + "'");
  return value;
}

std::string FormatExact(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

template <typename T>
T& FindOrAppend(std::vector<T>* items, std::map<std::string, size_t>* index,
                const std::string& key) {
  auto [it, inserted] = index->try_emplace(key, items->size());
  if (inserted) items->emplace_back();
  return (*items)[it->second];
}

}  // namespace

std::string FormatSeconds(double seconds) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", seconds);
  return buf;
}

std::vector<Meeting> ReadReference(const std::string& path, TokenMode mode) {
  LineReader reader(path);
  std::vector<Meeting> meetings;
  std::map<std::string, size_t> index;
  std::string line;
  while (reader.Next(&line)) {
    if (Blank(line)) continue;
    auto fields = SplitTabs(line);
    if (fields.size() != 5)
      reader.Fail("expected 5 tab-separated fields, got " +
                  std::to_string(fields.size()));
    Utterance utt;
    utt.speaker = fields[1];
    utt.start = ParseDouble(reader, fields[2], "start");
    utt.end = ParseDouble(reader, fields[3], "end");
    if (utt.start < 0.0 || utt.end <= utt.start)
      reader.Fail("need 0 <= start < end");
    try {
      utt.tokens = Tokenize(fields[4], mode);
    } catch (const Error& e) {
      reader.Fail(e.what());
    }
    if (utt.tokens.empty()) reader.Fail("empty reference text");
    for (const Token& tok : utt.tokens)
      if (tok.is_separator)
        reader.Fail("separator inside a reference utterance");
    Meeting& meeting = FindOrAppend(&meetings, &index, fields[0]);
    meeting.meeting_id = fields[0];
    meeting.utterances.push_back(std::move(utt));
  }
  for (Meeting& m : meetings) CollectSpeakers(&m);
  return meetings;
}

void WriteReference(const std::vector<Meeting>& meetings,
                    const std::string& path, TokenMode mode) {
  Writer writer(path);
  for (const Meeting& m : meetings)
    for (const Utterance& utt : m.utterances)
      writer.stream() << m.meeting_id << '\t' << utt.speaker << '\t'
                      << FormatSeconds(utt.start) << '\t'
                      << FormatSeconds(utt.end) << '\t'
                      << JoinTokens(utt.tokens, mode) << '\n';
  writer.Close();
}

std::map<std::string, std::vector<Segment>> ReadSegments(
    const std::string& path) {
  LineReader reader(path);
  std::map<std::string, std::vector<Segment>> segments;
  std::string line;
  while (reader.Next(&line)) {
    if (Blank(line)) continue;
    auto fields = SplitWhitespace(line);
    if (fields.size() != 3)
      reader.Fail("expected 3 fields, got " + std::to_string(fields.size()));
    Segment seg{fields[0], ParseDouble(reader, fields[1], "start"),
                ParseDouble(reader, fields[2], "end")};
    if (!(seg.start < seg.end)) reader.Fail("need start < end");
    segments[seg.meeting_id].push_back(seg);
  }
  return segments;
}

void WriteSegments(const std::vector<Meeting>& meetings,
                   const std::string& path) {
  Writer writer(path);
  for (const Meeting& m : meetings)
    for (const Segment& seg : m.segments)
      writer.stream() << m.meeting_id << '\t' << FormatSeconds(seg.start)
                      << '\t' << FormatSeconds(seg.end) << '\n';
  writer.Close();
}

void AttachSegments(const std::map<std::string, std::vector<Segment>>& segs,
                    std::vector<Meeting>* meetings) {
  for (Meeting& m : *meetings) {
    auto it = segs.find(m.meeting_id);
    SATTR_CHECK(it != segs.end(), m.meeting_id << ": no segments");
    m.segments = it->second;
  }
}

std::map<std::string, std::vector<SotStream>> ReadHypotheses(
    const std::string& path, TokenMode mode) {
  LineReader reader(path);
  std::map<std::string, std::vector<SotStream>> hyps;
  std::string line, text;
  std::vector<std::string> head;
  while (reader.Next(&line)) {
    if (Blank(line)) continue;
    if (!SplitHead(line, 2, &head, &text))
      reader.Fail("expected meeting_id segment_index text");
    long index = ParseInt(reader, head[1], "segment_index");
    auto& streams = hyps[head[0]];
    if (index != static_cast<long>(streams.size()))
      reader.Fail("segment_index " + head[1] + " not dense (expected " +
                  std::to_string(streams.size()) + ")");
    SotStream stream;
    stream.segment_index = static_cast<int>(index);
    stream.segment.meeting_id = head[0];
    try {
      stream.tokens = Tokenize(text, mode);
    } catch (const Error& e) {
      reader.Fail(e.what());
    }
    streams.push_back(std::move(stream));
  }
  return hyps;
}

void WriteHypotheses(const std::map<std::string, std::vector<SotStream>>& hyps,
                     const std::string& path, TokenMode mode) {
  Writer writer(path);
  for (const auto& [meeting_id, streams] : hyps)
    for (size_t i = 0; i < streams.size(); ++i)
      writer.stream() << meeting_id << ' ' << i << ' '
                      << JoinStream(streams[i].tokens, mode) << '\n';
  writer.Close();
}

std::map<std::string, DiarizationTrack> ReadRttm(const std::string& path) {
  LineReader reader(path);
  std::map<std::string, DiarizationTrack> tracks;
  std::string line;
  while (reader.Next(&line)) {
    if (Blank(line) || line[line.find_first_not_of(" \t")] == ';') continue;
    auto fields = SplitWhitespace(line);
    if (fields[0] != "SPEAKER") {
      Warn(path + ":" + std::to_string(reader.line_no()) +
           ": skipping record type " + fields[0]);
      continue;
    }
    if (fields.size() != 9 && fields.size() != 10)
      reader.Fail("expected 10 fields, got " + std::to_string(fields.size()));
    ParseInt(reader, fields[2], "channel");
    double onset = ParseDouble(reader, fields[3], "onset");
    double duration = ParseDouble(reader, fields[4], "duration");
    if (onset < 0.0) reader.Fail("negative onset");
    if (duration <= 0.0) reader.Fail("non-positive duration");
    DiarizationTrack& track = tracks[fields[1]];
    track.meeting_id = fields[1];
    track.AddInterval(fields[7], {onset, onset + duration});
  }
  for (auto& [id, track] : tracks) track.Normalize();
  return tracks;
}

void WriteRttm(const std::vector<DiarizationTrack>& tracks,
               const std::string& path) {
  Writer writer(path);
  for (const DiarizationTrack& track : tracks)
    for (const auto& [spk, intervals] : track.activity)
      for (const Interval& iv : intervals)
        writer.stream() << "SPEAKER " << track.meeting_id << " 1 "
                        << FormatSeconds(iv.start) << ' '
                        << FormatSeconds(iv.Duration()) << " <NA> <NA> "
                        << spk << " <NA> <NA>\n";
  writer.Close();
}

std::vector<AttributedTranscript> ReadAttributed(const std::string& path) {
  LineReader reader(path);
  std::vector<AttributedTranscript> out;
  std::map<std::string, size_t> index;
  std::string line;
  while (reader.Next(&line)) {
    if (Blank(line)) continue;
    auto fields = SplitWhitespace(line);
    if (fields.size() != 4)
      reader.Fail("expected 4 fields, got " + std::to_string(fields.size()));
    AttributedEntry entry;
    entry.segment_index =
        static_cast<int>(ParseInt(reader, fields[1], "segment_index"));
    entry.speaker = fields[2];
    entry.token = Token{fields[3], false};
    if (fields[3] == kSeparatorText) reader.Fail("separator token in entry");
    try {
      ValidateToken(entry.token);
    } catch (const Error& e) {
      reader.Fail(e.what());
    }
    AttributedTranscript& t = FindOrAppend(&out, &index, fields[0]);
    t.meeting_id = fields[0];
    if (!t.entries.empty() &&
        entry.segment_index < t.entries.back().segment_index)
      reader.Fail("segment_index decreases");
    t.entries.push_back(std::move(entry));
  }
  return out;
}

void WriteAttributed(const std::vector<AttributedTranscript>& transcripts,
                     const std::string& path) {
  Writer writer(path);
  for (const AttributedTranscript& t : transcripts) {
    t.Validate();
    for (const AttributedEntry& e : t.entries)
      writer.stream() << t.meeting_id << ' ' << e.segment_index << ' '
                      << e.speaker << ' ' << e.token.text << '\n';
  }
  writer.Close();
}

std::map<std::string, Eigen::VectorXd> ReadEmbeddings(
    const std::string& path) {
  LineReader reader(path);
  std::map<std::string, Eigen::VectorXd> out;
  std::string line;
  while (reader.Next(&line)) {
    if (Blank(line)) continue;
    auto fields = SplitWhitespace(line);
    if (fields.size() < 2) reader.Fail("expected speaker dim values...");
    long dim = ParseInt(reader, fields[1], "dim");
    if (dim <= 0 || static_cast<long>(fields.size()) != dim + 2)
      reader.Fail("dimension " + fields[1] + " does not match value count");
    Eigen::VectorXd v(dim);
    for (long i = 0; i < dim; ++i)
      v(i) = ParseDouble(reader, fields[i + 2], "value");
    if (!out.emplace(fields[0], std::move(v)).second)
      reader.Fail("duplicate speaker " + fields[0]);
  }
  return out;
}

void WriteEmbeddings(const std::map<std::string, Eigen::VectorXd>& embeddings,
                     const std::string& path) {
  Writer writer(path);
  for (const auto& [spk, v] : embeddings) {
    writer.stream() << spk << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      writer.stream() << ' ' << FormatExact(v(i));
    writer.stream() << '\n';
  }
  writer.Close();
}

FeatureArchive ReadFeatures(const std::string& path) {
  LineReader reader(path);
  FeatureArchive out;
  std::string line;
  while (reader.Next(&line)) {
    if (Blank(line)) continue;
    auto fields = SplitWhitespace(line);
    if (fields.size() < 5) reader.Fail("truncated feature record");
    long index = ParseInt(reader, fields[1], "segment_index");
    auto& seqs = out[fields[0]];
    if (index != static_cast<long>(seqs.size()))
      reader.Fail("segment_index " + fields[1] + " not dense");
    FeatureSequence seq;
    seq.frame_step = ParseDouble(reader, fields[2], "frame_step");
    long frames = ParseInt(reader, fields[3], "T");
    long dim = ParseInt(reader, fields[4], "dim");
    if (frames < 1 || dim < 1 ||
        static_cast<long>(fields.size()) != 5 + frames * dim)
      reader.Fail("feature shape does not match value count");
    seq.frames.resize(frames, dim);
    size_t k = 5;
    for (long t = 0; t < frames; ++t)
      for (long d = 0; d < dim; ++d)
        seq.frames(t, d) = ParseDouble(reader, fields[k++], "value");
    seqs.push_back(std::move(seq));
  }
  return out;
}

void WriteFeatures(const FeatureArchive& features, const std::string& path) {
  Writer writer(path);
  for (const auto& [meeting_id, seqs] : features) {
    for (size_t i = 0; i < seqs.size(); ++i) {
      const auto& f = seqs[i].frames;
      auto& os = writer.stream();
      os << meeting_id << ' ' << i << ' ' << FormatExact(seqs[i].frame_step)
         << ' ' << f.rows() << ' ' << f.cols();
      for (Eigen::Index t = 0; t < f.rows(); ++t)
        for (Eigen::Index d = 0; d < f.cols(); ++d)
          os << ' ' << FormatExact(f(t, d));
      os << '\n';
    }
  }
  writer.Close();
}

TsHypotheses ReadTsHypotheses(const std::string& path, TokenMode mode) {
  LineReader reader(path);
  TsHypotheses out;
  std::string line, text;
  std::vector<std::string> head;
  while (reader.Next(&line)) {
    if (Blank(line)) continue;
    if (!SplitHead(line, 3, &head, &text))
      reader.Fail("expected meeting_id segment_index speaker text");
    int index = static_cast<int>(ParseInt(reader, head[1], "segment_index"));
    TokenRun run;
    try {
      run = Tokenize(text, mode);
    } catch (const Error& e) {
      reader.Fail(e.what());
    }
    for (const Token& tok : run)
      if (tok.is_separator) reader.Fail("separator in target-speaker run");
    auto& per_speaker = out[head[0]][index];
    if (!per_speaker.emplace(head[2], std::move(run)).second)
      reader.Fail("duplicate run for speaker " + head[2]);
  }
  return out;
}

void WriteTsHypotheses(const TsHypotheses& hyps, const std::string& path,
                       TokenMode mode) {
  Writer writer(path);
  for (const auto& [meeting_id, segs] : hyps)
    for (const auto& [index, runs] : segs)
      for (const auto& [spk, run] : runs)
        writer.stream() << meeting_id << ' ' << index << ' ' << spk << ' '
                        << JoinTokens(run, mode) << '\n';
  writer.Close();
}

}  // namespace sattr
