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

#ifndef SATTR_WDSOT_H_
#define SATTR_WDSOT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sattr/formats.h"
#include "sattr/nn/graph.h"
#include "sattr/sot.h"
#include "sattr/types.h"

namespace sattr {

using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Scoring primitives. Row-vector convention: h_l is row l of `tokens`, and
// W_q h_l is written tokens * wq.

struct CrossAttention {
  Matrix aggregated;  // R, L x d_v
  Matrix weights;     // A, L x T, rows sum to one
};

// alpha = (H Wq)(X Wk)^T (times 1/sqrt(d_k) when `scaled`), A = row softmax
// of alpha, R = A (X Wv). Throws on non-finite input.
CrossAttention CrossAttend(const Matrix& tokens, const Matrix& frames,
                           const Matrix& wq, const Matrix& wk,
                           const Matrix& wv, bool scaled = false);

// S_ci = R V^T.
Matrix CiScores(const Matrix& aggregated, const Matrix& speakers);

// Parameters of the context function over R: one pre-norm multi-head
// self-attention block. Head h adds `run_bias[h]` to the attention logit of
// every pair of positions in the same SOT run (no separator between them),
// so heads can specialise on the current utterance or on the others.
struct ContextParams {
  std::vector<Matrix> wq, wk, wv;  // per head, d x d_head
  Matrix wo;                       // (heads * d_head) x d
  Matrix ln_gain, ln_bias;         // 1 x d
  std::vector<double> run_bias;    // per head
};

// Run index of every stream position; a separator opens the next run.
std::vector<int> RunIds(const std::vector<Token>& tokens);

// N = LayerNorm(R); head h: A_h = softmax((N Wq_h)(N Wk_h)^T / sqrt(d_head)
// + b_h M) with M[i][j] = 1 when runs[i] == runs[j]; C = R + [A_1 N Wv_1,
// ..., A_H N Wv_H] Wo; S_cd = C V^T. An empty `runs` puts every position in
// its own run.
Matrix CdScores(const Matrix& aggregated, const Matrix& speakers,
                const ContextParams& context,
                const std::vector<int>& runs = {});

// ---------------------------------------------------------------------------
// Scorer model.

struct ScorerConfig {
  int d_model = 32;
  int text_layers = 1;
  int text_heads = 2;
  int text_ff = 64;
  int cross_heads = 1;
  int post_hidden = 16;
  bool scaled_attention = false;
  bool use_context = true;  // false feeds [S_ci, 0] to the post-net
  int context_heads = 1;
  int d_feat = 0;           // filled from data when 0
  int d_emb = 0;
  uint64_t seed = 0;

  // Four self-attention layers, eight heads, 256 units.
  static ScorerConfig Large();

  std::map<std::string, std::string> ToMap() const;
  static ScorerConfig FromMap(const std::map<std::string, std::string>& kv);
  bool operator==(const ScorerConfig&) const = default;
};

// Token inventory of the text encoder. Id 0 is <unk>, id 1 is <sc>.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int Id(const Token& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

// One scoring problem: a hypothesis stream (separators included), the
// segment features, candidate speaker profiles (one row each) and, for
// training, one label per non-separator token indexing a profile row.
struct WdsotExample {
  std::vector<Token> tokens;
  Matrix features;
  Matrix profiles;
  std::vector<int> labels;
};

class ScorerModel {
 public:
  ScorerModel() = default;
  ScorerModel(const ScorerConfig& config, Vocabulary vocab);

  struct Outputs {
    nn::Graph::Node logits;     // non-separator tokens x speakers
    nn::Graph::Node attention;  // cross-attention weights of head 0, L x T
    nn::Graph::Node aggregated;
    nn::Graph::Node ci;
    nn::Graph::Node cd;
  };

  // Trainable forward pass; gradients flow into params().
  Outputs Forward(nn::Graph& graph, const WdsotExample& example);
  // Inference-only forward pass.
  Outputs Forward(nn::Graph& graph, const WdsotExample& example) const;

  // Mean cross-entropy over labelled tokens; accumulates gradients when
  // `backward` is set.
  double Loss(const WdsotExample& example, bool backward);

  const ScorerConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  void Save(const std::string& path) const;
  static ScorerModel Load(const std::string& path);

  bool operator==(const ScorerModel& other) const {
    return config_ == other.config_ && vocab_ == other.vocab_ &&
           params_ == other.params_;
  }

 private:
  template <typename Store>
  static Outputs Build(Store& params, const ScorerConfig& config,
                       const Vocabulary& vocab, nn::Graph& graph,
                       const WdsotExample& example);

  ScorerConfig config_;
  Vocabulary vocab_;
  nn::ParameterStore params_;
};

struct Prediction {
  std::vector<int> speaker_index;  // per non-separator token
  Matrix posteriors;               // tokens x speakers, rows sum to one
};

// Throws when there are no candidate speakers or no non-separator tokens.
Prediction Predict(const ScorerModel& model, const std::vector<Token>& hyp,
                   const Matrix& features, const Matrix& profiles);

// ---------------------------------------------------------------------------
// Training.

enum class OptimizerKind { kSgdMomentum, kAdam };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 8;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 3e-3;
  double momentum = 0.9;  // SGD only
  double clip_norm = 5.0;
  // Anneal the learning rate to zero along a half cosine over all steps.
  bool cosine_decay = true;
  uint64_t seed = 0;
  // Stop early once the epoch loss falls below this value (0 disables).
  double target_loss = 0.0;
  // Unlabelled candidate profiles appended to each example, drawn afresh on
  // every visit from the profiles of the whole training set.
  int distractors = 8;
  std::function<void(int epoch, double loss)> on_epoch;
};

struct TrainResult {
  ScorerModel model;
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
};

// Vocabulary from every non-separator token in the dataset, sorted.
Vocabulary BuildVocabulary(const std::vector<WdsotExample>& dataset);

// Throws on an empty dataset, separators carrying labels, or a non-finite
// loss (message names the step).
TrainResult Train(const ScorerConfig& config,
                  const std::vector<WdsotExample>& dataset,
                  const TrainConfig& train_config);

// Continues training an existing model.
TrainResult Train(ScorerModel model, const std::vector<WdsotExample>& dataset,
                  const TrainConfig& train_config);

// Token-level accuracy of Predict against example labels.
double TokenAccuracy(const ScorerModel& model,
                     const std::vector<WdsotExample>& dataset);

// ---------------------------------------------------------------------------
// Gradient verification.

using LossBuilder = std::function<nn::Graph::Node(nn::Graph&)>;

// Central finite differences against the analytic gradient on `n_coords`
// sampled coordinates spread over every parameter group. Returns the max of
// |analytic - numeric| / max(|analytic| + |numeric|, 1e-7).
double GradCheck(nn::ParameterStore& params, const LossBuilder& loss,
                 double epsilon, int n_coords = 200, uint64_t seed = 0);

double GradCheck(ScorerModel& model, const WdsotExample& example,
                 double epsilon, int n_coords = 200, uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Label and assembly helpers.

// Training targets for a (possibly noisy) hypothesis: non-separator tokens
// are aligned to the FIFO-serialized reference; aligned tokens take the
// reference speaker, inserted tokens the speaker of the nearest preceding
// aligned token (the following one at stream start).
std::vector<std::string> LabelTokens(const std::vector<Token>& hyp,
                                     const std::vector<Utterance>& reference,
                                     FifoMode mode = FifoMode::kUtterance);

// Candidate profile matrix in the order of `speakers`.
Matrix ProfileMatrix(const std::map<std::string, Eigen::VectorXd>& profiles,
                     const std::vector<std::string>& speakers);

// Builds a training example; labels come from LabelTokens.
WdsotExample MakeExample(const std::vector<Token>& hyp,
                         const FeatureSequence& features,
                         const std::vector<Utterance>& reference,
                         const std::vector<std::string>& speakers,
                         const Matrix& profiles);

// WD-SOT assembly over all segments of a meeting. Candidate speakers are
// `speakers`, looked up in `profiles`.
AttributedTranscript WdSot(const ScorerModel& model,
                           const std::string& meeting_id,
                           const std::vector<std::string>& speakers,
                           const std::vector<SotStream>& hyps,
                           const std::vector<FeatureSequence>& features,
                           const std::map<std::string, Eigen::VectorXd>& profiles);

// Same assembly with LabelTokens standing in for the scorer.
AttributedTranscript WdSotOracle(const Meeting& meeting,
                                 const std::vector<SotStream>& hyps);

}  // namespace sattr

#endif  // SATTR_WDSOT_H_
