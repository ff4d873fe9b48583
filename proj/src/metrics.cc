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

#include "sattr/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace sattr {

double EditCounts::Rate() const {
  if (ref_length > 0) return static_cast<double>(Errors()) / ref_length;
  return Errors() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
}

EditCounts& EditCounts::operator+=(const EditCounts& other) {
  substitutions += other.substitutions;
  deletions += other.deletions;
  insertions += other.insertions;
  ref_length += other.ref_length;
  return *this;
}

std::vector<AlignmentStep> AlignTokens(const std::vector<Token>& hyp,
                                       const std::vector<Token>& ref) {
  // cost(i, j) = (edits, insertions + deletions) for hyp[:i] vs ref[:j],
  // compared lexicographically.
  using Cost = std::pair<int, int>;
  const size_t nh = hyp.size(), nr = ref.size();
  std::vector<Cost> cost((nh + 1) * (nr + 1));
  auto at = [&](size_t i, size_t j) -> Cost& { return cost[i * (nr + 1) + j]; };
  for (size_t i = 0; i <= nh; ++i) at(i, 0) = {int(i), int(i)};
  for (size_t j = 0; j <= nr; ++j) at(0, j) = {int(j), int(j)};
  for (size_t i = 1; i <= nh; ++i) {
    for (size_t j = 1; j <= nr; ++j) {
      Cost diag = at(i - 1, j - 1);
      if (!(hyp[i - 1] == ref[j - 1])) diag.first += 1;
      Cost ins = at(i - 1, j);
      ins.first += 1;
      ins.second += 1;
      Cost del = at(i, j - 1);
      del.first += 1;
      del.second += 1;
      at(i, j) = std::min({diag, del, ins});
    }
  }
  std::vector<AlignmentStep> steps;
  size_t i = nh, j = nr;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      bool same = hyp[i - 1] == ref[j - 1];
      Cost diag = at(i - 1, j - 1);
      if (!same) diag.first += 1;
      if (diag == at(i, j)) {
        steps.push_back({same ? EditOp::kMatch : EditOp::kSubstitution,
                         int(i - 1), int(j - 1)});
        --i;
        --j;
        continue;
      }
    }
    if (j > 0) {
      Cost del = at(i, j - 1);
      if (Cost{del.first + 1, del.second + 1} == at(i, j)) {
        steps.push_back({EditOp::kDeletion, -1, int(j - 1)});
        --j;
        continue;
      }
    }
    steps.push_back({EditOp::kInsertion, int(i - 1), -1});
    --i;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

EditCounts EditDistance(const std::vector<Token>& hyp,
                        const std::vector<Token>& ref) {
  EditCounts counts;
  counts.ref_length = static_cast<long>(ref.size());
  for (const AlignmentStep& step : AlignTokens(hyp, ref)) {
    switch (step.op) {
      case EditOp::kSubstitution: ++counts.substitutions; break;
      case EditOp::kDeletion: ++counts.deletions; break;
      case EditOp::kInsertion: ++counts.insertions; break;
      case EditOp::kMatch: break;
    }
  }
  return counts;
}

std::vector<int> MinCostAssignment(
    const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(cost[0].size());
  // The potential method needs rows <= cols; pad columns with zero cost.
  const int n = rows, m = std::max(rows, cols);
  const double inf = std::numeric_limits<double>::infinity();
  auto c = [&](int i, int j) { return j < cols ? cost[i][j] : 0.0; };
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0 && j - 1 < cols) assignment[p[j] - 1] = j - 1;
  return assignment;
}

SdCerResult SdCer(const AttributedTranscript& system,
                  const Meeting& reference) {
  std::map<std::string, std::vector<Token>> ref_streams, hyp_streams;
  for (const std::string& spk : reference.speakers) ref_streams[spk];
  for (const Utterance& utt : SortFifo(reference.utterances,
                                       FifoMode::kUtterance)) {
    auto& stream = ref_streams[utt.speaker];
    stream.insert(stream.end(), utt.tokens.begin(), utt.tokens.end());
  }
  // Entries are already in (segment_index, position) order.
  for (const AttributedEntry& e : system.entries)
    hyp_streams[e.speaker].push_back(e.token);

  SdCerResult result;
  std::set<std::string> ids;
  for (const auto& [spk, s] : ref_streams) ids.insert(spk);
  for (const auto& [spk, s] : hyp_streams) ids.insert(spk);
  for (const std::string& spk : ids) {
    EditCounts counts = EditDistance(hyp_streams[spk], ref_streams[spk]);
    result.per_speaker[spk] = counts;
    result.pooled += counts;
  }
  return result;
}

SiCerMode ParseSiCerMode(std::string_view name) {
  if (name == "fifo") return SiCerMode::kFifo;
  if (name == "minperm") return SiCerMode::kMinPerm;
  SATTR_THROW("unknown SI-CER mode '" << name << "'");
}

namespace {

std::vector<Token> Concat(const std::vector<TokenRun>& runs,
                          const std::vector<int>& order) {
  std::vector<Token> out;
  for (int k : order) out.insert(out.end(), runs[k].begin(), runs[k].end());
  return out;
}

bool Better(const EditCounts& a, const EditCounts& b) {
  return a.Errors() < b.Errors();
}

EditCounts MinPermSegment(const std::vector<TokenRun>& runs,
                          const std::vector<TokenRun>& ref_runs,
                          const std::vector<Token>& ref) {
  std::vector<int> order(runs.size());
  std::iota(order.begin(), order.end(), 0);
  EditCounts best = EditDistance(Concat(runs, order), ref);
  if (runs.size() <= 6) {
    while (std::next_permutation(order.begin(), order.end())) {
      EditCounts cand = EditDistance(Concat(runs, order), ref);
      if (Better(cand, best)) best = cand;
    }
    return best;
  }
  // Assign runs to reference utterances, then emit runs in reference order.
  std::vector<std::vector<double>> cost(
      runs.size(), std::vector<double>(ref_runs.size()));
  for (size_t i = 0; i < runs.size(); ++i)
    for (size_t j = 0; j < ref_runs.size(); ++j)
      cost[i][j] = static_cast<double>(
          EditDistance(runs[i], ref_runs[j]).Errors());
  std::vector<int> assignment = MinCostAssignment(cost);
  std::vector<int> assigned(ref_runs.size(), -1), unassigned, reordered;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (assignment[i] >= 0)
      assigned[assignment[i]] = static_cast<int>(i);
    else
      unassigned.push_back(static_cast<int>(i));
  }
  for (int i : assigned)
    if (i >= 0) reordered.push_back(i);
  reordered.insert(reordered.end(), unassigned.begin(), unassigned.end());
  EditCounts cand = EditDistance(Concat(runs, reordered), ref);
  return Better(cand, best) ? cand : best;
}

}  // namespace

EditCounts SiCer(const std::vector<SotStream>& hyps, const Meeting& reference,
                 SiCerMode mode) {
  SATTR_CHECK(hyps.size() == reference.segments.size(),
              reference.meeting_id << ": " << hyps.size()
                                   << " hypotheses for "
                                   << reference.segments.size()
                                   << " segments");
  EditCounts pooled;
  for (size_t s = 0; s < hyps.size(); ++s) {
    auto utts = SortFifo(reference.UtterancesInSegment(static_cast<int>(s)),
                         FifoMode::kUtterance);
    std::vector<TokenRun> ref_runs;
    std::vector<Token> ref;
    for (const Utterance& utt : utts) {
      ref_runs.push_back(utt.tokens);
      ref.insert(ref.end(), utt.tokens.begin(), utt.tokens.end());
    }
    std::vector<TokenRun> runs = Deserialize(hyps[s]);
    if (mode == SiCerMode::kFifo) {
      std::vector<int> order(runs.size());
      std::iota(order.begin(), order.end(), 0);
      pooled += EditDistance(Concat(runs, order), ref);
    } else {
      pooled += MinPermSegment(runs, ref_runs, ref);
    }
  }
  return pooled;
}

DerResult& DerResult::operator+=(const DerResult& other) {
  miss += other.miss;
  false_alarm += other.false_alarm;
  speaker_error += other.speaker_error;
  total += other.total;
  return *this;
}

namespace {

struct Flat {
  std::vector<std::string> names;
  std::vector<std::vector<Interval>> intervals;
};

Flat Flatten(const DiarizationTrack& track) {
  Flat flat;
  for (const auto& [spk, ivs] : track.activity) {
    flat.names.push_back(spk);
    flat.intervals.push_back(MergeIntervals(ivs));
  }
  return flat;
}

bool ActiveAt(const std::vector<Interval>& ivs, double t) {
  for (const Interval& iv : ivs)
    if (iv.start <= t && t < iv.end) return true;
  return false;
}

// Max total overlap over one-to-one mappings.
std::vector<int> BestMapping(const std::vector<std::vector<double>>& overlap,
                             size_t n_sys) {
  const size_t n_ref = overlap.size();
  std::vector<int> mapping(n_ref, -1);
  if (n_ref == 0 || n_sys == 0) return mapping;
  const size_t k = std::max(n_ref, n_sys);
  if (k <= 8) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    do {
      double total = 0.0;
      for (size_t r = 0; r < n_ref; ++r)
        if (static_cast<size_t>(perm[r]) < n_sys) total += overlap[r][perm[r]];
      if (total > best) {
        best = total;
        for (size_t r = 0; r < n_ref; ++r)
          mapping[r] = static_cast<size_t>(perm[r]) < n_sys ? perm[r] : -1;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return mapping;
  }
  std::vector<std::vector<double>> cost(n_ref, std::vector<double>(n_sys));
  for (size_t r = 0; r < n_ref; ++r)
    for (size_t s = 0; s < n_sys; ++s) cost[r][s] = -overlap[r][s];
  return MinCostAssignment(cost);
}

}  // namespace

DerResult DerComponents(const DiarizationTrack& system,
                        const DiarizationTrack& reference, double collar) {
  SATTR_CHECK(collar >= 0.0, "negative collar");
  Flat ref = Flatten(reference), sys = Flatten(system);
  std::vector<Interval> excluded;
  std::vector<double> cuts;
  for (const auto& ivs : ref.intervals) {
    for (const Interval& iv : ivs) {
      cuts.push_back(iv.start);
      cuts.push_back(iv.end);
      if (collar > 0.0) {
        excluded.push_back({iv.start - collar, iv.start + collar});
        excluded.push_back({iv.end - collar, iv.end + collar});
      }
    }
  }
  excluded = MergeIntervals(std::move(excluded));
  for (const Interval& iv : excluded) {
    cuts.push_back(iv.start);
    cuts.push_back(iv.end);
  }
  for (const auto& ivs : sys.intervals) {
    for (const Interval& iv : ivs) {
      cuts.push_back(iv.start);
      cuts.push_back(iv.end);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  struct Piece {
    double dt;
    std::vector<int> ref_active, sys_active;
  };
  std::vector<Piece> pieces;
  std::vector<std::vector<double>> overlap(
      ref.names.size(), std::vector<double>(sys.names.size(), 0.0));
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    if (ActiveAt(excluded, mid)) continue;
    Piece piece{cuts[k + 1] - cuts[k], {}, {}};
    for (size_t r = 0; r < ref.names.size(); ++r)
      if (ActiveAt(ref.intervals[r], mid)) piece.ref_active.push_back(int(r));
    for (size_t s = 0; s < sys.names.size(); ++s)
      if (ActiveAt(sys.intervals[s], mid)) piece.sys_active.push_back(int(s));
    if (piece.ref_active.empty() && piece.sys_active.empty()) continue;
    for (int r : piece.ref_active)
      for (int s : piece.sys_active) overlap[r][s] += piece.dt;
    pieces.push_back(std::move(piece));
  }

  std::vector<int> mapping = BestMapping(overlap, sys.names.size());
  DerResult result;
  for (const Piece& piece : pieces) {
    const double n_ref = static_cast<double>(piece.ref_active.size());
    const double n_sys = static_cast<double>(piece.sys_active.size());
    double correct = 0.0;
    for (int r : piece.ref_active) {
      int s = mapping[r];
      if (s >= 0 && std::find(piece.sys_active.begin(), piece.sys_active.end(),
                              s) != piece.sys_active.end())
        correct += 1.0;
    }
    result.total += n_ref * piece.dt;
    result.miss += std::max(0.0, n_ref - n_sys) * piece.dt;
    result.false_alarm += std::max(0.0, n_sys - n_ref) * piece.dt;
    result.speaker_error += (std::min(n_ref, n_sys) - correct) * piece.dt;
  }
  return result;
}

DerResult Der(const DiarizationTrack& system,
              const DiarizationTrack& reference, double collar) {
  DerResult result = DerComponents(system, reference, collar);
  SATTR_CHECK(result.total > 0.0, reference.meeting_id
                                      << ": no scored reference speech, "
                                         "DER undefined");
  return result;
}

}  // namespace sattr
