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

#include "sattr/sot.h"

namespace sattr {

int SotStream::NumSeparators() const {
  int count = 0;
  for (const Token& tok : tokens) count += tok.is_separator ? 1 : 0;
  return count;
}

SotStream Serialize(const std::vector<Utterance>& utterances, FifoMode mode) {
  std::vector<TokenRun> runs;
  for (const Utterance& utt : SortFifo(utterances, mode)) {
    SATTR_CHECK(!utt.tokens.empty(), "cannot serialize empty utterance of "
                                         << utt.speaker << " at "
                                         << utt.start);
    runs.push_back(utt.tokens);
  }
  SotStream stream;
  stream.tokens = JoinRuns(runs);
  return stream;
}

std::vector<Token> JoinRuns(const std::vector<TokenRun>& runs) {
  std::vector<Token> tokens;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (i > 0) tokens.push_back(Token::Separator());
    tokens.insert(tokens.end(), runs[i].begin(), runs[i].end());
  }
  return tokens;
}

std::vector<TokenRun> Deserialize(const SotStream& stream,
                                  NormalizationStats* stats) {
  NormalizationStats local;
  std::vector<TokenRun> runs;
  TokenRun current;
  bool seen_token = false;
  int pending = 0;  // separators since the last token
  for (const Token& tok : stream.tokens) {
    if (tok.is_separator) {
      ++pending;
      continue;
    }
    if (pending > 0) {
      if (!seen_token) {
        local.stripped_leading += pending;
      } else {
        local.collapsed_separators += pending - 1;
        runs.push_back(std::move(current));
        current.clear();
      }
      pending = 0;
    }
    seen_token = true;
    current.push_back(tok);
  }
  if (pending > 0) {
    if (seen_token)
      local.stripped_trailing += pending;
    else
      local.stripped_leading += pending;
  }
  if (!current.empty()) runs.push_back(std::move(current));
  if (stats != nullptr) *stats = local;
  return runs;
}

}  // namespace sattr
