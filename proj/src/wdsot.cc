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

#include "sattr/wdsot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>

#include "sattr/metrics.h"

namespace sattr {

using nn::Graph;
using Node = Graph::Node;

namespace {

void CheckFinite(const Matrix& m, const char* what) {
  SATTR_CHECK(m.allFinite(), "non-finite values in " << what);
}

}  // namespace

CrossAttention CrossAttend(const Matrix& tokens, const Matrix& frames,
                           const Matrix& wq, const Matrix& wk,
                           const Matrix& wv, bool scaled) {
  CheckFinite(tokens, "token encodings");
  CheckFinite(frames, "features");
  SATTR_CHECK(tokens.rows() >= 1 && frames.rows() >= 1,
              "cross attention needs L >= 1 and T >= 1");
  SATTR_CHECK(tokens.cols() == wq.rows() && frames.cols() == wk.rows() &&
                  frames.cols() == wv.rows() && wq.cols() == wk.cols(),
              "cross attention shape mismatch");
  Graph g;
  Node x = g.Constant(frames);
  Node alpha = g.MatMulTransB(g.MatMul(g.Constant(tokens), g.Constant(wq)),
                              g.MatMul(x, g.Constant(wk)));
  if (scaled) alpha = g.Scale(alpha, 1.0 / std::sqrt(double(wq.cols())));
  Node a = g.RowSoftmax(alpha);
  Node r = g.MatMul(a, g.MatMul(x, g.Constant(wv)));
  return {g.Value(r), g.Value(a)};
}

Matrix CiScores(const Matrix& aggregated, const Matrix& speakers) {
  SATTR_CHECK(aggregated.cols() == speakers.cols(),
              "CI score dimension mismatch: " << aggregated.cols() << " vs "
                                              << speakers.cols());
  return aggregated * speakers.transpose();
}

std::vector<int> RunIds(const std::vector<Token>& tokens) {
  std::vector<int> runs(tokens.size());
  int run = 0;
  for (size_t l = 0; l < tokens.size(); ++l) {
    if (tokens[l].is_separator) ++run;
    runs[l] = run;
  }
  return runs;
}

namespace {

// Column vector (L*L x 1, column-major) marking same-run position pairs.
Matrix SameRunMask(const std::vector<int>& runs, int length) {
  Matrix mask = Matrix::Zero(Eigen::Index(length) * length, 1);
  if (runs.empty()) return mask;
  for (int j = 0; j < length; ++j)
    for (int i = 0; i < length; ++i)
      if (runs[i] == runs[j]) mask(Eigen::Index(j) * length + i, 0) = 1.0;
  return mask;
}

// The context block on a graph; shared by CdScores and the model.
Node ContextBlock(Graph& g, Node r, const std::vector<Node>& wq,
                  const std::vector<Node>& wk, const std::vector<Node>& wv,
                  Node wo, Node gain, Node bias,
                  const std::vector<Node>& run_bias,
                  const std::vector<int>& runs, int length, int d_head) {
  Node n = g.LayerNorm(r, gain, bias);
  Node mask = g.Constant(SameRunMask(runs, length));
  std::vector<Node> heads;
  for (size_t h = 0; h < wq.size(); ++h) {
    Node scores =
        g.Scale(g.MatMulTransB(g.MatMul(n, wq[h]), g.MatMul(n, wk[h])),
                1.0 / std::sqrt(double(d_head)));
    scores = g.Add(scores,
                   g.Reshape(g.MatMul(mask, run_bias[h]), length, length));
    heads.push_back(g.MatMul(g.RowSoftmax(scores), g.MatMul(n, wv[h])));
  }
  Node mixed = g.MatMul(heads.size() == 1 ? heads[0] : g.ConcatCols(heads),
                        wo);
  return g.Add(r, mixed);
}

}  // namespace

Matrix CdScores(const Matrix& aggregated, const Matrix& speakers,
                const ContextParams& context, const std::vector<int>& runs) {
  SATTR_CHECK(aggregated.cols() == speakers.cols(),
              "CD score dimension mismatch");
  const size_t heads = context.wq.size();
  SATTR_CHECK(heads >= 1 && context.wk.size() == heads &&
                  context.wv.size() == heads &&
                  context.run_bias.size() == heads,
              "context parameters need the same number of heads throughout");
  const int L = static_cast<int>(aggregated.rows());
  SATTR_CHECK(runs.empty() || static_cast<int>(runs.size()) == L,
              "run ids must cover every position");
  CheckFinite(aggregated, "aggregated representations");
  Graph g;
  std::vector<Node> wq, wk, wv, bias;
  for (size_t h = 0; h < heads; ++h) {
    wq.push_back(g.Constant(context.wq[h]));
    wk.push_back(g.Constant(context.wk[h]));
    wv.push_back(g.Constant(context.wv[h]));
    bias.push_back(g.Constant(Matrix::Constant(1, 1, context.run_bias[h])));
  }
  Node c = ContextBlock(g, g.Constant(aggregated), wq, wk, wv,
                        g.Constant(context.wo), g.Constant(context.ln_gain),
                        g.Constant(context.ln_bias), bias, runs, L,
                        static_cast<int>(context.wq[0].cols()));
  SATTR_CHECK(g.Value(c).allFinite(), "non-finite context representation");
  return g.Value(c) * speakers.transpose();
}

// ---------------------------------------------------------------------------

ScorerConfig ScorerConfig::Large() {
  ScorerConfig c;
  c.d_model = 256;
  c.text_layers = 4;
  c.text_heads = 8;
  c.text_ff = 1024;
  return c;
}

std::map<std::string, std::string> ScorerConfig::ToMap() const {
  return {{"d_model", std::to_string(d_model)},
          {"text_layers", std::to_string(text_layers)},
          {"text_heads", std::to_string(text_heads)},
          {"text_ff", std::to_string(text_ff)},
          {"cross_heads", std::to_string(cross_heads)},
          {"post_hidden", std::to_string(post_hidden)},
          {"scaled_attention", scaled_attention ? "1" : "0"},
          {"use_context", use_context ? "1" : "0"},
          {"context_heads", std::to_string(context_heads)},
          {"d_feat", std::to_string(d_feat)},
          {"d_emb", std::to_string(d_emb)},
          {"seed", std::to_string(seed)}};
}

ScorerConfig ScorerConfig::FromMap(
    const std::map<std::string, std::string>& kv) {
  ScorerConfig c;
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    SATTR_CHECK(it != kv.end(), "scorer config lacks '" << key << "'");
    return it->second;
  };
  c.d_model = std::stoi(get("d_model"));
  c.text_layers = std::stoi(get("text_layers"));
  c.text_heads = std::stoi(get("text_heads"));
  c.text_ff = std::stoi(get("text_ff"));
  c.cross_heads = std::stoi(get("cross_heads"));
  c.post_hidden = std::stoi(get("post_hidden"));
  c.scaled_attention = get("scaled_attention") == "1";
  c.use_context = get("use_context") == "1";
  c.context_heads = std::stoi(get("context_heads"));
  c.d_feat = std::stoi(get("d_feat"));
  c.d_emb = std::stoi(get("d_emb"));
  c.seed = std::stoull(get("seed"));
  return c;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  tokens_ = {"<unk>", std::string(kSeparatorText)};
  for (const std::string& t : tokens)
    if (t != tokens_[0] && t != tokens_[1]) tokens_.push_back(t);
  for (size_t i = 0; i < tokens_.size(); ++i) {
    SATTR_CHECK(ids_.emplace(tokens_[i], int(i)).second,
                "duplicate vocabulary entry " << tokens_[i]);
  }
}

int Vocabulary::Id(const Token& token) const {
  if (token.is_separator) return 1;
  auto it = ids_.find(token.text);
  return it == ids_.end() ? 0 : it->second;
}

namespace {

Matrix Gaussian(int rows, int cols, double stddev, std::mt19937_64* rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = dist(*rng);
  return m;
}

Matrix PositionalEncoding(int length, int dim) {
  Matrix pe(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; ++i) {
      double freq = std::pow(10000.0, -2.0 * (i / 2) / double(dim));
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
    }
  }
  return pe;
}

std::string LayerName(int layer, const char* leaf) {
  return "text.layer" + std::to_string(layer) + "." + leaf;
}

std::string HeadName(const char* prefix, int head) {
  return std::string(prefix) + "." + std::to_string(head);
}

void ValidateConfig(const ScorerConfig& c) {
  SATTR_CHECK(c.d_model > 0 && c.text_layers >= 0 && c.text_heads > 0 &&
                  c.text_ff > 0 && c.cross_heads > 0 && c.post_hidden > 0,
              "invalid scorer config");
  SATTR_CHECK(c.d_model % c.text_heads == 0,
              "d_model " << c.d_model << " not divisible by text_heads "
                         << c.text_heads);
  SATTR_CHECK(c.d_model % c.cross_heads == 0,
              "d_model " << c.d_model << " not divisible by cross_heads "
                         << c.cross_heads);
  SATTR_CHECK(c.d_feat > 0 && c.d_emb > 0,
              "scorer config needs feature and embedding dimensions");
}

}  // namespace

ScorerModel::ScorerModel(const ScorerConfig& config, Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
  ValidateConfig(config_);
  std::mt19937_64 rng(config_.seed);
  const int d = config_.d_model;
  const double inv_d = 1.0 / std::sqrt(double(d));
  auto& p = params_;
  p.Add("text.embedding", Gaussian(vocab_.size(), d, 1.0, &rng));
  for (int layer = 0; layer < config_.text_layers; ++layer) {
    const int dh = d / config_.text_heads;
    p.Add(LayerName(layer, "ln1.gain"), Matrix::Ones(1, d));
    p.Add(LayerName(layer, "ln1.bias"), Matrix::Zero(1, d));
    for (int h = 0; h < config_.text_heads; ++h) {
      p.Add(HeadName(LayerName(layer, "wq").c_str(), h),
            Gaussian(d, dh, inv_d, &rng));
      p.Add(HeadName(LayerName(layer, "wk").c_str(), h),
            Gaussian(d, dh, inv_d, &rng));
      p.Add(HeadName(LayerName(layer, "wv").c_str(), h),
            Gaussian(d, dh, inv_d, &rng));
    }
    p.Add(LayerName(layer, "wo"), Gaussian(d, d, inv_d, &rng));
    p.Add(LayerName(layer, "bo"), Matrix::Zero(1, d));
    p.Add(LayerName(layer, "ln2.gain"), Matrix::Ones(1, d));
    p.Add(LayerName(layer, "ln2.bias"), Matrix::Zero(1, d));
    p.Add(LayerName(layer, "ff.w1"), Gaussian(d, config_.text_ff, inv_d, &rng));
    p.Add(LayerName(layer, "ff.b1"), Matrix::Zero(1, config_.text_ff));
    p.Add(LayerName(layer, "ff.w2"),
          Gaussian(config_.text_ff, d,
                   1.0 / std::sqrt(double(config_.text_ff)), &rng));
    p.Add(LayerName(layer, "ff.b2"), Matrix::Zero(1, d));
  }
  p.Add("text.final.gain", Matrix::Ones(1, d));
  p.Add("text.final.bias", Matrix::Zero(1, d));
  p.Add("feat.w",
        Gaussian(config_.d_feat, d, 0.3 / std::sqrt(double(config_.d_feat)),
                 &rng));
  p.Add("feat.b", Matrix::Zero(1, d));
  p.Add("feat.ln.gain", Matrix::Ones(1, d));
  p.Add("feat.ln.bias", Matrix::Zero(1, d));
  p.Add("spk.w",
        Gaussian(config_.d_emb, d, 0.3 / std::sqrt(double(config_.d_emb)),
                 &rng));
  p.Add("spk.b", Matrix::Zero(1, d));
  p.Add("spk.ln.gain", Matrix::Ones(1, d));
  p.Add("spk.ln.bias", Matrix::Zero(1, d));
  const int dc = d / config_.cross_heads;
  for (int h = 0; h < config_.cross_heads; ++h) {
    p.Add(HeadName("cross.wq", h), Gaussian(d, dc, 0.1 * inv_d, &rng));
    p.Add(HeadName("cross.wk", h), Gaussian(d, dc, inv_d, &rng));
    p.Add(HeadName("cross.wv", h), Gaussian(d, dc, inv_d, &rng));
  }
  if (config_.cross_heads > 1) p.Add("cross.wo", Gaussian(d, d, inv_d, &rng));
  if (config_.use_context) {
    const int dk = d / config_.context_heads;
    for (int h = 0; h < config_.context_heads; ++h) {
      p.Add(HeadName("context.wq", h), Gaussian(d, dk, inv_d, &rng));
      p.Add(HeadName("context.wk", h), Gaussian(d, dk, inv_d, &rng));
      p.Add(HeadName("context.wv", h), Gaussian(d, dk, inv_d, &rng));
      // Even heads start out looking inside the current run, odd heads
      // outside it.
      p.Add(HeadName("context.run_bias", h),
            Matrix::Constant(1, 1, h % 2 == 0 ? 3.0 : -3.0));
    }
    p.Add("context.wo", Gaussian(d, d, inv_d, &rng));
    p.Add("context.ln.gain", Matrix::Ones(1, d));
    p.Add("context.ln.bias", Matrix::Zero(1, d));
  }
  // Raw dot-product scores can be large; start the post-net in its linear
  // range. The small query init keeps the unscaled cross-attention near
  // uniform at first so every frame receives gradient.
  p.Add("post.w1", Gaussian(2, config_.post_hidden, 0.05, &rng));
  p.Add("post.b1", Matrix::Zero(1, config_.post_hidden));
  p.Add("post.w2",
        Gaussian(config_.post_hidden, 1,
                 1.0 / std::sqrt(double(config_.post_hidden)), &rng));
  p.Add("post.b2", Matrix::Zero(1, 1));
}

template <typename Store>
ScorerModel::Outputs ScorerModel::Build(Store& params,
                                        const ScorerConfig& config,
                                        const Vocabulary& vocab, Graph& g,
                                        const WdsotExample& ex) {
  constexpr bool kTrainable = !std::is_const_v<Store>;
  auto P = [&](const std::string& name) -> Node {
    if constexpr (kTrainable)
      return g.Param(params.Get(name));
    else
      return g.Constant(params.Get(name).value);
  };
  const int L = static_cast<int>(ex.tokens.size());
  const int N = static_cast<int>(ex.profiles.rows());
  const int d = config.d_model;
  SATTR_CHECK(L >= 1, "empty hypothesis");
  SATTR_CHECK(N >= 1, "no candidate speakers");
  SATTR_CHECK(ex.features.rows() >= 1 && ex.features.cols() == config.d_feat,
              "features must be T x " << config.d_feat << ", got "
                                      << ex.features.rows() << " x "
                                      << ex.features.cols());
  SATTR_CHECK(ex.profiles.cols() == config.d_emb,
              "profiles must have dimension " << config.d_emb << ", got "
                                              << ex.profiles.cols());
  CheckFinite(ex.features, "features");
  CheckFinite(ex.profiles, "speaker profiles");

  std::vector<int> ids(L);
  std::vector<int> keep;
  for (int l = 0; l < L; ++l) {
    ids[l] = vocab.Id(ex.tokens[l]);
    if (!ex.tokens[l].is_separator) keep.push_back(l);
  }

  // Text encoder.
  Node h;
  if constexpr (kTrainable) {
    h = g.GatherRows(P("text.embedding"), ids);
  } else {
    const Matrix& table = params.Get("text.embedding").value;
    Matrix rows(L, d);
    for (int l = 0; l < L; ++l) rows.row(l) = table.row(ids[l]);
    h = g.Constant(std::move(rows));
  }
  h = g.Add(h, g.Constant(PositionalEncoding(L, d)));
  for (int layer = 0; layer < config.text_layers; ++layer) {
    const int dh = d / config.text_heads;
    Node a = g.LayerNorm(h, P(LayerName(layer, "ln1.gain")),
                         P(LayerName(layer, "ln1.bias")));
    std::vector<Node> heads;
    for (int k = 0; k < config.text_heads; ++k) {
      Node q = g.MatMul(a, P(HeadName(LayerName(layer, "wq").c_str(), k)));
      Node kk = g.MatMul(a, P(HeadName(LayerName(layer, "wk").c_str(), k)));
      Node v = g.MatMul(a, P(HeadName(LayerName(layer, "wv").c_str(), k)));
      Node att = g.RowSoftmax(
          g.Scale(g.MatMulTransB(q, kk), 1.0 / std::sqrt(double(dh))));
      heads.push_back(g.MatMul(att, v));
    }
    Node o = g.AddBias(g.MatMul(g.ConcatCols(heads), P(LayerName(layer, "wo"))),
                       P(LayerName(layer, "bo")));
    h = g.Add(h, o);
    Node b = g.LayerNorm(h, P(LayerName(layer, "ln2.gain")),
                         P(LayerName(layer, "ln2.bias")));
    Node f = g.Tanh(g.AddBias(g.MatMul(b, P(LayerName(layer, "ff.w1"))),
                              P(LayerName(layer, "ff.b1"))));
    f = g.AddBias(g.MatMul(f, P(LayerName(layer, "ff.w2"))),
                  P(LayerName(layer, "ff.b2")));
    h = g.Add(h, f);
  }
  h = g.LayerNorm(h, P("text.final.gain"), P("text.final.bias"));

  // Feature and speaker encoders.
  Node x = g.AddBias(g.MatMul(g.Constant(ex.features), P("feat.w")),
                     P("feat.b"));
  Node v = g.AddBias(g.MatMul(g.Constant(ex.profiles), P("spk.w")),
                     P("spk.b"));
  x = g.LayerNorm(x, P("feat.ln.gain"), P("feat.ln.bias"));
  v = g.LayerNorm(v, P("spk.ln.gain"), P("spk.ln.bias"));

  // Cross-attention aggregation per token.
  Outputs out{};
  std::vector<Node> head_out;
  const int dc = d / config.cross_heads;
  for (int k = 0; k < config.cross_heads; ++k) {
    Node q = g.MatMul(h, P(HeadName("cross.wq", k)));
    Node kk = g.MatMul(x, P(HeadName("cross.wk", k)));
    Node vv = g.MatMul(x, P(HeadName("cross.wv", k)));
    Node alpha = g.MatMulTransB(q, kk);
    if (config.scaled_attention)
      alpha = g.Scale(alpha, 1.0 / std::sqrt(double(dc)));
    Node a = g.RowSoftmax(alpha);
    if (k == 0) out.attention = a;
    head_out.push_back(g.MatMul(a, vv));
  }
  Node r = config.cross_heads == 1
               ? head_out[0]
               : g.MatMul(g.ConcatCols(head_out), P("cross.wo"));
  out.aggregated = r;

  out.ci = g.MatMulTransB(r, v);
  if (config.use_context) {
    std::vector<Node> wq, wk, wv, bias;
    for (int k = 0; k < config.context_heads; ++k) {
      wq.push_back(P(HeadName("context.wq", k)));
      wk.push_back(P(HeadName("context.wk", k)));
      wv.push_back(P(HeadName("context.wv", k)));
      bias.push_back(P(HeadName("context.run_bias", k)));
    }
    Node c = ContextBlock(g, r, wq, wk, wv, P("context.wo"),
                          P("context.ln.gain"), P("context.ln.bias"), bias,
                          RunIds(ex.tokens), L, d / config.context_heads);
    out.cd = g.MatMulTransB(c, v);
  } else {
    out.cd = g.Constant(Matrix::Zero(L, N));
  }
  SATTR_CHECK(g.Value(out.ci).allFinite() && g.Value(out.cd).allFinite(),
              "non-finite speaker scores");

  // Post-net over each (token, speaker) pair [S_ci, S_cd].
  Node pairs = g.ConcatCols({g.Reshape(out.ci, L * N, 1),
                             g.Reshape(out.cd, L * N, 1)});
  Node hidden =
      g.Tanh(g.AddBias(g.MatMul(pairs, P("post.w1")), P("post.b1")));
  Node z = g.AddBias(g.MatMul(hidden, P("post.w2")), P("post.b2"));
  out.logits = g.GatherRows(g.Reshape(z, L, N), keep);
  return out;
}

ScorerModel::Outputs ScorerModel::Forward(Graph& graph,
                                          const WdsotExample& example) {
  return Build(params_, config_, vocab_, graph, example);
}

ScorerModel::Outputs ScorerModel::Forward(Graph& graph,
                                          const WdsotExample& example) const {
  return Build(params_, config_, vocab_, graph, example);
}

double ScorerModel::Loss(const WdsotExample& example, bool backward) {
  Graph g;
  Outputs out = Forward(g, example);
  Node loss = g.SoftmaxCrossEntropy(out.logits, example.labels);
  if (backward) g.Backward(loss);
  return g.Value(loss)(0, 0);
}

namespace {

constexpr const char* kCheckpointMagic = "sattr-wdsot-checkpoint";

std::string Exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ScorerModel::Save(const std::string& path) const {
  std::ofstream os(path);
  SATTR_CHECK(os, path << ": cannot open for writing");
  os << kCheckpointMagic << " 1\n";
  auto kv = config_.ToMap();
  os << "config " << kv.size() << '\n';
  for (const auto& [k, v] : kv) os << k << ' ' << v << '\n';
  os << "vocab " << vocab_.size() << '\n';
  for (const std::string& t : vocab_.tokens()) os << t << '\n';
  os << "params " << params_.names().size() << '\n';
  for (const std::string& name : params_.names()) {
    const Matrix& m = params_.Get(name).value;
    os << name << ' ' << m.rows() << ' ' << m.cols();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) os << ' ' << Exact(m(r, c));
    os << '\n';
  }
  os.close();
  SATTR_CHECK(os, path << ": write failed");
}

ScorerModel ScorerModel::Load(const std::string& path) {
  std::ifstream is(path);
  SATTR_CHECK(is, path << ": cannot open for reading");
  auto expect = [&](const std::string& word) {
    std::string got;
    is >> got;
    SATTR_CHECK(is && got == word,
                path << ": expected '" << word << "', got '" << got << "'");
  };
  expect(kCheckpointMagic);
  int version = 0;
  is >> version;
  SATTR_CHECK(version == 1, path << ": unsupported checkpoint version");
  expect("config");
  size_t n = 0;
  is >> n;
  std::map<std::string, std::string> kv;
  for (size_t i = 0; i < n; ++i) {
    std::string k, v;
    is >> k >> v;
    kv[k] = v;
  }
  expect("vocab");
  is >> n;
  std::vector<std::string> tokens(n);
  for (auto& t : tokens) is >> t;
  SATTR_CHECK(is, path << ": truncated vocabulary");
  ScorerModel model(ScorerConfig::FromMap(kv), Vocabulary(tokens));
  SATTR_CHECK(model.vocab_.tokens() == tokens,
              path << ": vocabulary does not start with <unk> <sc>");
  expect("params");
  is >> n;
  SATTR_CHECK(n == model.params_.names().size(),
              path << ": parameter count " << n << " does not match config");
  for (size_t i = 0; i < n; ++i) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    is >> name >> rows >> cols;
    Matrix& m = model.params_.Get(name).value;
    SATTR_CHECK(m.rows() == rows && m.cols() == cols,
                path << ": shape mismatch for " << name);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        std::string field;
        is >> field;
        m(r, c) = std::strtod(field.c_str(), nullptr);
      }
    }
    SATTR_CHECK(is, path << ": truncated tensor " << name);
  }
  SATTR_CHECK(model.params_.AllFinite(), path << ": non-finite parameters");
  return model;
}

Prediction Predict(const ScorerModel& model, const std::vector<Token>& hyp,
                   const Matrix& features, const Matrix& profiles) {
  SATTR_CHECK(profiles.rows() >= 1, "zero candidate speakers");
  SATTR_CHECK(std::any_of(hyp.begin(), hyp.end(),
                          [](const Token& t) { return !t.is_separator; }),
              "hypothesis has no non-separator tokens");
  WdsotExample ex{hyp, features, profiles, {}};
  Graph g;
  auto out = model.Forward(g, ex);
  Prediction pred;
  pred.posteriors = g.Value(g.RowSoftmax(out.logits));
  for (Eigen::Index r = 0; r < pred.posteriors.rows(); ++r) {
    Eigen::Index best = 0;
    pred.posteriors.row(r).maxCoeff(&best);
    pred.speaker_index.push_back(static_cast<int>(best));
  }
  return pred;
}

// ---------------------------------------------------------------------------

Vocabulary BuildVocabulary(const std::vector<WdsotExample>& dataset) {
  std::set<std::string> seen;
  for (const WdsotExample& ex : dataset)
    for (const Token& t : ex.tokens)
      if (!t.is_separator) seen.insert(t.text);
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

namespace {

void CheckDataset(const std::vector<WdsotExample>& dataset) {
  SATTR_CHECK(!dataset.empty(), "empty training set");
  for (size_t i = 0; i < dataset.size(); ++i) {
    const WdsotExample& ex = dataset[i];
    size_t tokens = std::count_if(ex.tokens.begin(), ex.tokens.end(),
                                  [](const Token& t) {
                                    return !t.is_separator;
                                  });
    SATTR_CHECK(tokens == ex.labels.size(),
                "example " << i << ": " << ex.labels.size()
                           << " labels for " << tokens
                           << " non-separator tokens");
    for (int label : ex.labels)
      SATTR_CHECK(label < ex.profiles.rows(),
                  "example " << i << ": label " << label
                             << " out of range");
  }
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, nn::ParameterStore& params)
      : config_(config), params_(params) {
    for (const std::string& name : params.names()) {
      const Matrix& v = params.Get(name).value;
      first_[name] = Matrix::Zero(v.rows(), v.cols());
      second_[name] = Matrix::Zero(v.rows(), v.cols());
    }
  }

  void Step(double lr) {
    ++steps_;
    for (const std::string& name : params_.names()) {
      nn::Parameter& p = params_.Get(name);
      Matrix& m = first_[name];
      if (config_.optimizer == OptimizerKind::kSgdMomentum) {
        m = config_.momentum * m + p.grad;
        p.value -= lr * m;
        continue;
      }
      constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
      Matrix& s = second_[name];
      m = kBeta1 * m + (1.0 - kBeta1) * p.grad;
      s = kBeta2 * s + (1.0 - kBeta2) * p.grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kBeta1, steps_);
      const double c2 = 1.0 - std::pow(kBeta2, steps_);
      p.value.array() -= lr * (m.array() / c1) /
                         ((s.array() / c2).sqrt() + kEps);
    }
  }

 private:
  const TrainConfig& config_;
  nn::ParameterStore& params_;
  std::map<std::string, Matrix> first_, second_;
  int steps_ = 0;
};

void ScaleAndClip(nn::ParameterStore& params, double scale, double clip) {
  double norm2 = 0.0;
  for (const std::string& name : params.names()) {
    nn::Parameter& p = params.Get(name);
    p.grad *= scale;
    norm2 += p.grad.squaredNorm();
  }
  const double norm = std::sqrt(norm2);
  if (clip > 0.0 && norm > clip)
    for (const std::string& name : params.names())
      params.Get(name).grad *= clip / norm;
}

}  // namespace

TrainResult Train(const ScorerConfig& config,
                  const std::vector<WdsotExample>& dataset,
                  const TrainConfig& train_config) {
  CheckDataset(dataset);
  ScorerConfig filled = config;
  if (filled.d_feat == 0) filled.d_feat = int(dataset[0].features.cols());
  if (filled.d_emb == 0) filled.d_emb = int(dataset[0].profiles.cols());
  return Train(ScorerModel(filled, BuildVocabulary(dataset)), dataset,
               train_config);
}

namespace {

// Appends up to `k` pool profiles that differ from every candidate already
// present. Labels are unchanged since the new rows go last.
WdsotExample AddDistractors(const WdsotExample& ex,
                            const std::vector<Eigen::VectorXd>& pool, int k,
                            std::mt19937_64* rng) {
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  std::vector<const Eigen::VectorXd*> chosen;
  for (int tries = 0; int(chosen.size()) < k && tries < 4 * k; ++tries) {
    const Eigen::VectorXd& p = pool[pick(*rng)];
    bool present = false;
    for (int n = 0; n < ex.profiles.rows() && !present; ++n)
      present = ex.profiles.row(n).transpose() == p;
    if (!present) chosen.push_back(&p);
  }
  WdsotExample out;
  out.tokens = ex.tokens;
  out.features = ex.features;
  out.labels = ex.labels;
  out.profiles.resize(ex.profiles.rows() + chosen.size(), ex.profiles.cols());
  out.profiles.topRows(ex.profiles.rows()) = ex.profiles;
  for (size_t j = 0; j < chosen.size(); ++j)
    out.profiles.row(ex.profiles.rows() + j) = chosen[j]->transpose();
  return out;
}

}  // namespace

TrainResult Train(ScorerModel model, const std::vector<WdsotExample>& dataset,
                  const TrainConfig& train_config) {
  CheckDataset(dataset);
  SATTR_CHECK(train_config.batch_size >= 1 && train_config.epochs >= 0,
              "invalid training config");
  TrainResult result;
  std::mt19937_64 rng(train_config.seed);
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  nn::ParameterStore& params = model.params();
  Optimizer optimizer(train_config, params);
  const size_t batch = static_cast<size_t>(train_config.batch_size);
  const int k = train_config.distractors;
  SATTR_CHECK(k >= 0, "distractors must be non-negative");
  std::vector<Eigen::VectorXd> pool;
  if (k > 0) {
    for (const WdsotExample& ex : dataset)
      for (int n = 0; n < ex.profiles.rows(); ++n)
        pool.push_back(ex.profiles.row(n).transpose());
  }
  const double total_steps =
      double(train_config.epochs) * double((order.size() + batch - 1) / batch);
  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += batch) {
      const size_t end = std::min(order.size(), begin + batch);
      params.ZeroGrad();
      double batch_loss = 0.0;
      try {
        for (size_t i = begin; i < end; ++i) {
          const WdsotExample& ex = dataset[order[i]];
          if (pool.empty()) {
            batch_loss += model.Loss(ex, true);
          } else {
            batch_loss += model.Loss(AddDistractors(ex, pool, k, &rng), true);
          }
        }
      } catch (const Error& e) {
        // Inputs were validated, so a failure after an update is divergence.
        if (result.step_losses.empty()) throw;
        SATTR_THROW("training diverged at step " << result.step_losses.size()
                                                 << " (" << e.what() << ")");
      }
      const double mean = batch_loss / double(end - begin);
      SATTR_CHECK(std::isfinite(mean), "training diverged at step "
                                           << result.step_losses.size()
                                           << " (loss " << mean << ")");
      result.step_losses.push_back(mean);
      epoch_total += batch_loss;
      ScaleAndClip(params, 1.0 / double(end - begin), train_config.clip_norm);
      double lr = train_config.learning_rate;
      if (train_config.cosine_decay)
        lr *= 0.5 * (1.0 + std::cos(M_PI * double(result.step_losses.size() - 1) /
                                    total_steps));
      optimizer.Step(lr);
    }
    const double epoch_loss = epoch_total / double(order.size());
    result.epoch_losses.push_back(epoch_loss);
    if (train_config.on_epoch) train_config.on_epoch(epoch, epoch_loss);
    if (train_config.target_loss > 0.0 &&
        epoch_loss < train_config.target_loss)
      break;
  }
  SATTR_CHECK(params.AllFinite(), "training produced non-finite parameters");
  result.model = std::move(model);
  return result;
}

double TokenAccuracy(const ScorerModel& model,
                     const std::vector<WdsotExample>& dataset) {
  long correct = 0, total = 0;
  for (const WdsotExample& ex : dataset) {
    if (ex.labels.empty()) continue;
    Prediction pred = Predict(model, ex.tokens, ex.features, ex.profiles);
    for (size_t i = 0; i < ex.labels.size(); ++i) {
      correct += pred.speaker_index[i] == ex.labels[i] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : double(correct) / double(total);
}

// ---------------------------------------------------------------------------

double GradCheck(nn::ParameterStore& params, const LossBuilder& loss,
                 double epsilon, int n_coords, uint64_t seed) {
  params.ZeroGrad();
  {
    Graph g;
    Node root = loss(g);
    g.Backward(root);
  }
  auto evaluate = [&] {
    Graph g;
    return g.Value(loss(g))(0, 0);
  };
  const auto& names = params.names();
  SATTR_CHECK(!names.empty(), "no parameters to check");
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < n_coords; ++k) {
    nn::Parameter& p = params.Get(names[k % names.size()]);
    const Eigen::Index size = p.value.size();
    // Alternate between coordinates the loss depends on and uniform picks,
    // so sparse groups such as the embedding table are still exercised.
    std::vector<Eigen::Index> live;
    if (k % 2 == 0)
      for (Eigen::Index i = 0; i < size; ++i)
        if (p.grad.data()[i] != 0.0) live.push_back(i);
    Eigen::Index idx;
    if (!live.empty()) {
      idx = live[std::uniform_int_distribution<size_t>(0, live.size() - 1)(rng)];
    } else {
      idx = std::uniform_int_distribution<Eigen::Index>(0, size - 1)(rng);
    }
    double& theta = p.value.data()[idx];
    const double saved = theta;
    theta = saved + epsilon;
    const double up = evaluate();
    theta = saved - epsilon;
    const double down = evaluate();
    theta = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = p.grad.data()[idx];
    const double denom =
        std::max(std::abs(analytic) + std::abs(numeric), 1e-7);
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

double GradCheck(ScorerModel& model, const WdsotExample& example,
                 double epsilon, int n_coords, uint64_t seed) {
  const double base = model.Loss(example, false);
  SATTR_CHECK(std::isfinite(base), "grad check needs a finite loss");
  return GradCheck(
      model.params(),
      [&](Graph& g) {
        auto out = model.Forward(g, example);
        return g.SoftmaxCrossEntropy(out.logits, example.labels);
      },
      epsilon, n_coords, seed);
}

// ---------------------------------------------------------------------------

std::vector<std::string> LabelTokens(const std::vector<Token>& hyp,
                                     const std::vector<Utterance>& reference,
                                     FifoMode mode) {
  std::vector<Token> ref_tokens;
  std::vector<std::string> ref_speakers;
  for (const Utterance& utt : SortFifo(reference, mode)) {
    for (const Token& t : utt.tokens) {
      ref_tokens.push_back(t);
      ref_speakers.push_back(utt.speaker);
    }
  }
  std::vector<Token> hyp_tokens;
  for (const Token& t : hyp)
    if (!t.is_separator) hyp_tokens.push_back(t);
  std::vector<std::string> labels(hyp_tokens.size());
  if (hyp_tokens.empty()) return labels;
  SATTR_CHECK(!ref_tokens.empty(), "cannot label tokens without reference");

  std::vector<bool> aligned(hyp_tokens.size(), false);
  for (const AlignmentStep& step : AlignTokens(hyp_tokens, ref_tokens)) {
    if (step.op == EditOp::kMatch || step.op == EditOp::kSubstitution) {
      labels[step.hyp_index] = ref_speakers[step.ref_index];
      aligned[step.hyp_index] = true;
    }
  }
  // Inserted tokens: nearest preceding aligned token, else the following.
  std::string last;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (aligned[i])
      last = labels[i];
    else if (!last.empty())
      labels[i] = last;
  }
  std::string next = ref_speakers.front();
  for (size_t i = labels.size(); i-- > 0;) {
    if (aligned[i])
      next = labels[i];
    else if (labels[i].empty())
      labels[i] = next;
  }
  return labels;
}

Matrix ProfileMatrix(const std::map<std::string, Eigen::VectorXd>& profiles,
                     const std::vector<std::string>& speakers) {
  SATTR_CHECK(!speakers.empty(), "zero candidate speakers");
  Matrix out;
  for (size_t i = 0; i < speakers.size(); ++i) {
    auto it = profiles.find(speakers[i]);
    SATTR_CHECK(it != profiles.end(), "no profile for speaker " << speakers[i]);
    if (i == 0) out.resize(Eigen::Index(speakers.size()), it->second.size());
    SATTR_CHECK(it->second.size() == out.cols(),
                "profile dimension mismatch for " << speakers[i]);
    out.row(Eigen::Index(i)) = it->second.transpose();
  }
  return out;
}

WdsotExample MakeExample(const std::vector<Token>& hyp,
                         const FeatureSequence& features,
                         const std::vector<Utterance>& reference,
                         const std::vector<std::string>& speakers,
                         const Matrix& profiles) {
  WdsotExample ex{hyp, features.frames, profiles, {}};
  for (const std::string& label : LabelTokens(hyp, reference)) {
    auto it = std::find(speakers.begin(), speakers.end(), label);
    SATTR_CHECK(it != speakers.end(), "label speaker " << label
                                                       << " not a candidate");
    ex.labels.push_back(static_cast<int>(it - speakers.begin()));
  }
  return ex;
}

AttributedTranscript WdSot(
    const ScorerModel& model, const std::string& meeting_id,
    const std::vector<std::string>& speakers,
    const std::vector<SotStream>& hyps,
    const std::vector<FeatureSequence>& features,
    const std::map<std::string, Eigen::VectorXd>& profiles) {
  SATTR_CHECK(features.size() == hyps.size(),
              meeting_id << ": " << features.size() << " feature blocks for "
                         << hyps.size() << " hypotheses");
  const Matrix candidates = ProfileMatrix(profiles, speakers);
  AttributedTranscript transcript;
  transcript.meeting_id = meeting_id;
  for (size_t s = 0; s < hyps.size(); ++s) {
    const auto& tokens = hyps[s].tokens;
    if (std::none_of(tokens.begin(), tokens.end(),
                     [](const Token& t) { return !t.is_separator; }))
      continue;
    Prediction pred = Predict(model, tokens, features[s].frames, candidates);
    size_t k = 0;
    for (const Token& t : tokens) {
      if (t.is_separator) continue;
      transcript.entries.push_back(
          {t, speakers[pred.speaker_index[k++]], static_cast<int>(s)});
    }
  }
  return transcript;
}

AttributedTranscript WdSotOracle(const Meeting& meeting,
                                 const std::vector<SotStream>& hyps) {
  AttributedTranscript transcript;
  transcript.meeting_id = meeting.meeting_id;
  for (size_t s = 0; s < hyps.size(); ++s) {
    auto reference = meeting.UtterancesInSegment(static_cast<int>(s));
    if (reference.empty()) continue;
    auto labels = LabelTokens(hyps[s].tokens, reference);
    size_t k = 0;
    for (const Token& t : hyps[s].tokens) {
      if (t.is_separator) continue;
      transcript.entries.push_back({t, labels[k++], static_cast<int>(s)});
    }
  }
  return transcript;
}

}  // namespace sattr
