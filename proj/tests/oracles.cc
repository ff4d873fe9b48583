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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace sattr::oracle {

namespace {

struct Cost {
  long errors;
  long indels;
  long sub, del, ins;
};

bool Better(const Cost& a, const Cost& b) {
  if (a.errors != b.errors) return a.errors < b.errors;
  return a.indels < b.indels;
}

Cost Recurse(const std::vector<Token>& hyp, const std::vector<Token>& ref,
             size_t i, size_t j) {
  if (i == hyp.size() && j == ref.size()) return {0, 0, 0, 0, 0};
  Cost best{std::numeric_limits<long>::max(), 0, 0, 0, 0};
  if (i < hyp.size() && j < ref.size()) {
    Cost c = Recurse(hyp, ref, i + 1, j + 1);
    if (!(hyp[i] == ref[j])) {
      ++c.errors;
      ++c.sub;
    }
    if (Better(c, best)) best = c;
  }
  if (j < ref.size()) {
    Cost c = Recurse(hyp, ref, i, j + 1);
    ++c.errors;
    ++c.indels;
    ++c.del;
    if (Better(c, best)) best = c;
  }
  if (i < hyp.size()) {
    Cost c = Recurse(hyp, ref, i + 1, j);
    ++c.errors;
    ++c.indels;
    ++c.ins;
    if (Better(c, best)) best = c;
  }
  return best;
}

bool ActiveAt(const std::vector<Interval>& intervals, double t) {
  for (const Interval& iv : intervals)
    if (iv.start <= t && t < iv.end) return true;
  return false;
}

double Softmax(std::vector<double>* row) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : *row) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : *row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : *row) v /= sum;
  return sum;
}

}  // namespace

EditCounts RecursiveEditDistance(const std::vector<Token>& hyp,
                                 const std::vector<Token>& ref) {
  const Cost c = Recurse(hyp, ref, 0, 0);
  EditCounts out;
  out.substitutions = c.sub;
  out.deletions = c.del;
  out.insertions = c.ins;
  out.ref_length = static_cast<long>(ref.size());
  return out;
}

DerResult FrameDer(const DiarizationTrack& system,
                   const DiarizationTrack& reference, double collar) {
  const double step = 0.01;
  double horizon = 0.0;
  std::vector<double> boundaries;
  for (const auto* track : {&system, &reference})
    for (const auto& [spk, ivs] : track->activity)
      for (const Interval& iv : ivs) horizon = std::max(horizon, iv.end);
  for (const auto& [spk, ivs] : reference.activity)
    for (const Interval& iv : ivs) {
      boundaries.push_back(iv.start);
      boundaries.push_back(iv.end);
    }
  std::vector<std::string> ref_spk, sys_spk;
  for (const auto& [spk, ivs] : reference.activity) ref_spk.push_back(spk);
  for (const auto& [spk, ivs] : system.activity) sys_spk.push_back(spk);

  // Per scored frame: which reference and system speakers are active.
  struct Frame {
    std::vector<bool> ref, sys;
  };
  std::vector<Frame> frames;
  const long n_frames = std::lround(horizon / step) + 1;
  for (long k = 0; k < n_frames; ++k) {
    const double t = (k + 0.5) * step;
    bool excluded = false;
    for (double b : boundaries)
      if (std::abs(t - b) < collar) excluded = true;
    if (excluded) continue;
    Frame f;
    for (const std::string& s : ref_spk)
      f.ref.push_back(ActiveAt(reference.activity.at(s), t));
    for (const std::string& s : sys_spk)
      f.sys.push_back(ActiveAt(system.activity.at(s), t));
    frames.push_back(std::move(f));
  }

  // Every injective map from system speakers to reference speakers or
  // "unmapped" (-1).
  std::vector<int> map(sys_spk.size(), -1), best_map = map;
  long best_correct = -1;
  std::function<void(size_t, std::vector<bool>&)> search =
      [&](size_t i, std::vector<bool>& used) {
        if (i == sys_spk.size()) {
          long correct = 0;
          for (const Frame& f : frames)
            for (size_t s = 0; s < sys_spk.size(); ++s)
              if (map[s] >= 0 && f.sys[s] && f.ref[map[s]]) ++correct;
          if (correct > best_correct) {
            best_correct = correct;
            best_map = map;
          }
          return;
        }
        map[i] = -1;
        search(i + 1, used);
        for (size_t r = 0; r < ref_spk.size(); ++r) {
          if (used[r]) continue;
          used[r] = true;
          map[i] = static_cast<int>(r);
          search(i + 1, used);
          used[r] = false;
        }
        map[i] = -1;
      };
  std::vector<bool> used(ref_spk.size(), false);
  search(0, used);

  DerResult d;
  for (const Frame& f : frames) {
    long n_ref = std::count(f.ref.begin(), f.ref.end(), true);
    long n_sys = std::count(f.sys.begin(), f.sys.end(), true);
    long correct = 0;
    for (size_t s = 0; s < sys_spk.size(); ++s)
      if (best_map[s] >= 0 && f.sys[s] && f.ref[best_map[s]]) ++correct;
    d.total += step * n_ref;
    d.miss += step * std::max(0L, n_ref - n_sys);
    d.false_alarm += step * std::max(0L, n_sys - n_ref);
    d.speaker_error += step * (std::min(n_ref, n_sys) - correct);
  }
  return d;
}

std::vector<AlignedRun> LiteralAlign(std::vector<DiarUtterance> diar,
                                     const std::vector<TokenRun>& runs) {
  // Step 1: N-hat is the number of diarization utterances.
  // Step 2: N is the number of SOT runs.
  std::vector<std::pair<int, TokenRun>> kept_runs;
  for (size_t i = 0; i < runs.size(); ++i)
    kept_runs.push_back({static_cast<int>(i), runs[i]});
  // Step 3: too many diarization utterances, drop the shortest.
  while (diar.size() > kept_runs.size()) {
    size_t victim = 0;
    for (size_t i = 1; i < diar.size(); ++i)
      if (diar[i].Duration() <= diar[victim].Duration()) victim = i;
    diar.erase(diar.begin() + victim);
  }
  // Step 4: too many runs, drop the one with the least text.
  while (kept_runs.size() > diar.size()) {
    size_t victim = 0;
    for (size_t i = 1; i < kept_runs.size(); ++i)
      if (kept_runs[i].second.size() <= kept_runs[victim].second.size())
        victim = i;
    kept_runs.erase(kept_runs.begin() + victim);
  }
  // Step 5: chronological pairing.
  std::vector<AlignedRun> out;
  for (size_t i = 0; i < diar.size(); ++i)
    out.push_back({diar[i].speaker, kept_runs[i].first, kept_runs[i].second});
  return out;
}

CrossAttention LoopCrossAttend(const Matrix& tokens, const Matrix& frames,
                               const Matrix& wq, const Matrix& wk,
                               const Matrix& wv, bool scaled) {
  const int L = tokens.rows(), T = frames.rows();
  const int dk = wq.cols(), dv = wv.cols();
  auto project = [](const Matrix& x, const Matrix& w, int row, int col) {
    double s = 0.0;
    for (int i = 0; i < x.cols(); ++i) s += x(row, i) * w(i, col);
    return s;
  };
  CrossAttention out;
  out.weights.resize(L, T);
  out.aggregated = Matrix::Zero(L, dv);
  for (int l = 0; l < L; ++l) {
    std::vector<double> row(T);
    for (int t = 0; t < T; ++t) {
      double dot = 0.0;
      for (int k = 0; k < dk; ++k)
        dot += project(tokens, wq, l, k) * project(frames, wk, t, k);
      row[t] = scaled ? dot / std::sqrt(double(dk)) : dot;
    }
    Softmax(&row);
    for (int t = 0; t < T; ++t) {
      out.weights(l, t) = row[t];
      for (int v = 0; v < dv; ++v)
        out.aggregated(l, v) += row[t] * project(frames, wv, t, v);
    }
  }
  return out;
}

Matrix LoopCiScores(const Matrix& aggregated, const Matrix& speakers) {
  Matrix s(aggregated.rows(), speakers.rows());
  for (int l = 0; l < aggregated.rows(); ++l)
    for (int n = 0; n < speakers.rows(); ++n) {
      double dot = 0.0;
      for (int i = 0; i < aggregated.cols(); ++i)
        dot += aggregated(l, i) * speakers(n, i);
      s(l, n) = dot;
    }
  return s;
}

Matrix LoopCdScores(const Matrix& aggregated, const Matrix& speakers,
                    const ContextParams& context,
                    const std::vector<int>& runs) {
  const int L = aggregated.rows(), d = aggregated.cols();
  // Layer norm per row.
  Matrix n(L, d);
  for (int l = 0; l < L; ++l) {
    double mean = 0.0;
    for (int i = 0; i < d; ++i) mean += aggregated(l, i);
    mean /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i)
      var += (aggregated(l, i) - mean) * (aggregated(l, i) - mean);
    var /= d;
    for (int i = 0; i < d; ++i)
      n(l, i) = (aggregated(l, i) - mean) / std::sqrt(var + 1e-5) *
                    context.ln_gain(0, i) +
                context.ln_bias(0, i);
  }
  auto proj = [&](const Matrix& w, int l, int k) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += n(l, i) * w(i, k);
    return s;
  };
  // Concatenated head outputs.
  std::vector<std::vector<double>> mixed(L);
  for (size_t h = 0; h < context.wq.size(); ++h) {
    const int dh = context.wq[h].cols();
    for (int i = 0; i < L; ++i) {
      std::vector<double> row(L);
      for (int j = 0; j < L; ++j) {
        double dot = 0.0;
        for (int k = 0; k < dh; ++k)
          dot += proj(context.wq[h], i, k) * proj(context.wk[h], j, k);
        const bool same = !runs.empty() && runs[i] == runs[j];
        row[j] = dot / std::sqrt(double(dh)) +
                 (same ? context.run_bias[h] : 0.0);
      }
      Softmax(&row);
      for (int k = 0; k < context.wv[h].cols(); ++k) {
        double acc = 0.0;
        for (int j = 0; j < L; ++j) acc += row[j] * proj(context.wv[h], j, k);
        mixed[i].push_back(acc);
      }
    }
  }
  Matrix c = aggregated;
  for (int i = 0; i < L; ++i)
    for (int o = 0; o < d; ++o)
      for (size_t k = 0; k < mixed[i].size(); ++k)
        c(i, o) += mixed[i][k] * context.wo(k, o);
  return LoopCiScores(c, speakers);
}

Matrix RandomMatrix(int rows, int cols, std::mt19937_64* rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(*rng);
  return m;
}

ContextParams RandomContext(int d, int heads, std::mt19937_64* rng) {
  ContextParams p;
  const int dh = d / heads;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int h = 0; h < heads; ++h) {
    p.wq.push_back(RandomMatrix(d, dh, rng, 0.5));
    p.wk.push_back(RandomMatrix(d, dh, rng, 0.5));
    p.wv.push_back(RandomMatrix(d, dh, rng, 0.5));
    p.run_bias.push_back(normal(*rng));
  }
  p.wo = RandomMatrix(dh * heads, d, rng, 0.5);
  p.ln_gain = RandomMatrix(1, d, rng, 0.3).array() + 1.0;
  p.ln_bias = RandomMatrix(1, d, rng, 0.3);
  return p;
}

std::vector<Token> RandomTokens(int length, int alphabet,
                                std::mt19937_64* rng) {
  std::uniform_int_distribution<int> pick(0, alphabet - 1);
  std::vector<Token> out;
  for (int i = 0; i < length; ++i)
    out.push_back(Token{std::string(1, char('a' + pick(*rng))), false});
  return out;
}

}  // namespace sattr::oracle
