#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ovasr/checkpoint.hpp"
#include "ovasr/core.hpp"
#include "ovasr/windowing.hpp"

namespace ovasr::ac {

// Everything an acoustic forward pass produces for one window: per-frame CTC
// logits plus the speaker-change and overlap signals and the hidden features
// the detection heads consume.
struct AcousticOutput {
  Matrix ctc_logits;                 // T x V
  std::vector<double> change_prob;   // T, in [0,1]
  std::vector<double> overlap_prob;  // T, in [0,1]
  Matrix hidden;                     // T x H
};

// Controls how far the synthetic oracle degrades its output. Overlapped
// frames halve the confidence and, with probability overlap_confusion, boost
// the interfering speaker's label instead of the dominant one.
struct OracleParams {
  double clean_confidence = 8.0;
  double overlap_confusion = 0.5;
  double noise_std = 0.5;
  double sc_match_threshold = 0.8;
  int hidden_dim = 16;
};

// Speaker-independent oracle: follows the dominant speaker's alignment.
// hidden rows are the frame's softmax probabilities sorted descending and
// padded/truncated to hidden_dim, so output uncertainty is visible to a
// linear head. change/overlap probabilities are the ground truth plus
// clamped noise at 0.1 * noise_std.
AcousticOutput oracle_si_forward(std::span<const AlignedFrame> window,
                                 const Vocabulary& vocab, const OracleParams& params,
                                 Rng& rng);

// Speaker-conditioned oracle: transcribes the enrolled speaker whose
// embedding matches `target` (cosine >= sc_match_threshold), emitting pure
// blanks when no active speaker matches.
AcousticOutput oracle_sc_forward(std::span<const AlignedFrame> window,
                                 const std::map<std::string, Embedding>& enrollment,
                                 const Embedding& target, const Vocabulary& vocab,
                                 const OracleParams& params, Rng& rng);

// --- FiLM-conditioned toy model -------------------------------------------

struct FiLMParams {
  Matrix gamma_map;  // H x D
  Matrix beta_map;   // H x D
};

// out[t] = (gamma_map . e) (*) features[t] + (beta_map . e)
Matrix film(const Matrix& features, const Embedding& embedding, const FiLMParams& p);

// Minimal speaker-conditioned stack: featurizer -> FiLM -> linear+tanh ->
// linear output over the vocabulary.
struct ToySCModel {
  Matrix featurizer;          // H x IN
  std::vector<double> feat_bias;
  FiLMParams film_params;     // H x D
  Matrix post;                // H x H
  std::vector<double> post_bias;
  Matrix output;              // V x H
  std::vector<double> out_bias;

  static ToySCModel init(int in_dim, int hidden_dim, int embed_dim, int vocab_size,
                         Rng& rng);

  int in_dim() const { return featurizer.cols; }
  int hidden_dim() const { return featurizer.rows; }
  int embed_dim() const { return film_params.gamma_map.cols; }
  int vocab_size() const { return output.rows; }

  Checkpoint to_checkpoint() const;
  static ToySCModel from_checkpoint(const Checkpoint& ck);
};

struct ToyForwardCache {
  Matrix z;       // featurizer output
  Matrix f;       // after FiLM
  Matrix a;       // tanh activations
  Matrix logits;  // T x V
};

ToyForwardCache toy_forward(const ToySCModel& m, const Matrix& features,
                            const Embedding& embedding);

// Convenience wrapper shaping a forward pass like the oracle contract
// (change/overlap signals are not produced by the toy stack).
AcousticOutput toy_output(const ToySCModel& m, const Matrix& features,
                          const Embedding& embedding);

struct ToyGrads {
  Matrix d_featurizer;
  std::vector<double> d_feat_bias;
  Matrix d_gamma, d_beta;
  Matrix d_post;
  std::vector<double> d_post_bias;
  Matrix d_output;
  std::vector<double> d_out_bias;

  static ToyGrads zeros_like(const ToySCModel& m);
  void accumulate(const ToyGrads& o);
  void scale(double s);
  double squared_norm() const;
};

// Exact backpropagation of dloss/dlogits through the stack.
ToyGrads toy_backward(const ToySCModel& m, const Matrix& features,
                      const Embedding& embedding, const ToyForwardCache& cache,
                      const Matrix& dlogits);

// One synthetic training mixture: symbolic frame features plus the full
// reference token sequence and enrollment embedding of each participant.
struct ScTrainExample {
  Matrix features;  // T x IN
  std::vector<std::vector<int>> targets;
  std::vector<Embedding> participants;
};

struct ScTrainHyper {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double grad_clip = 5.0;
  int epochs = 10;
  win::WindowingConfig windowing;
};

struct ScTrainReport {
  std::vector<double> epoch_loss;      // mean total loss per epoch
  std::vector<double> epoch_divisor;   // mean non-speaker divisor k per epoch
};

// Three passes per mini-batch (one mixture = its unfolded windows): CTC loss
// for each participant plus the normalized empty-target loss for a randomly
// drawn non-participant from `speaker_pool`. Logits are aggregated across
// windows before the loss, and gradients flow back through the aggregation.
ScTrainReport toy_sc_train(const std::vector<ScTrainExample>& corpus,
                           const std::vector<Embedding>& speaker_pool,
                           ToySCModel& model, const ScTrainHyper& hyper, Rng& rng);

struct ScEvalResult {
  double token_accuracy = 0.0;  // mean 1 - CER against the reference tokens
  double empty_rate = 0.0;      // absent-speaker conditionings decoding empty
  double mean_divisor = 0.0;    // mean non-speaker divisor k
};

ScEvalResult toy_sc_evaluate(const std::vector<ScTrainExample>& corpus,
                             const std::vector<Embedding>& speaker_pool,
                             const ToySCModel& model, const win::WindowingConfig& wcfg,
                             int blank, Rng& rng);

}  // namespace ovasr::ac
