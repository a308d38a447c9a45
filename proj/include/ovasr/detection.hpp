#pragma once

#include <string>
#include <vector>

#include "ovasr/acoustic.hpp"
#include "ovasr/core.hpp"

namespace ovasr::detect {

// Binary overlap classifier on frozen acoustic features: H weights + bias,
// nothing else is trainable.
struct OverlapHead {
  std::vector<double> weights;
  double bias = 0.0;

  static OverlapHead zeros(int hidden_dim);
  int param_count() const { return static_cast<int>(weights.size()) + 1; }
  double prob(const double* feature) const;  // sigmoid(w.x + b)
};

struct OverlapTrainHyper {
  double learning_rate = 1.0;
  int epochs = 200;
};

struct OverlapTrainReport {
  double accuracy = 0.0;  // training accuracy at the final epoch
  std::vector<double> loss_curve;
};

// Full-batch logistic-regression training on binary cross-entropy. Only the
// head parameters change. Throws on single-class data.
OverlapTrainReport train_overlap_head(const Matrix& features, const std::vector<int>& labels,
                                      OverlapHead& head, const OverlapTrainHyper& hyper);

// d(mean BCE)/d(weights, bias) for one batch; used by the gradient tests.
std::pair<std::vector<double>, double> overlap_head_gradient(const Matrix& features,
                                                             const std::vector<int>& labels,
                                                             const OverlapHead& head);

// --- segmentation ----------------------------------------------------------

struct LabelRun {
  int64_t start_frame = 0;
  int64_t end_frame = 0;  // exclusive
  bool overlap = false;
};

// Per-frame head probabilities for a window's hidden features.
std::vector<double> overlap_probs(const AcousticOutput& output, const OverlapHead& head);

// Thresholds per-frame probabilities, median-smooths the binary decisions
// (width in frames), and extracts contiguous runs. Runs shorter than
// min_run_s are absorbed into the preceding run.
std::vector<LabelRun> extract_runs(const std::vector<double>& probs, double threshold,
                                   int smooth_width = 5, double min_run_s = 0.0,
                                   int frame_rate = 50);

std::vector<LabelRun> detect_overlap(const AcousticOutput& output, const OverlapHead& head,
                                     double threshold, double min_run_s = 0.0,
                                     int frame_rate = 50);

// --- mode timeline -----------------------------------------------------------

enum class Mode { kSingle, kOverlap };

struct ModeRun {
  double start_s = 0.0;
  double end_s = 0.0;
  Mode mode = Mode::kSingle;
  std::string speaker;  // only for single-speaker runs

  bool operator==(const ModeRun&) const = default;
};

using ModeTimeline = std::vector<ModeRun>;

// The two robustness rules: single-speaker runs shorter than min_s become
// overlap; overlap runs shorter than min_s flanked by the same speaker on
// both sides become that speaker's single run. Adjacent runs with equal
// label (and speaker) are merged.
ModeTimeline postprocess_modes(const ModeTimeline& runs, double min_s = 1.0);

// --- speaker change ----------------------------------------------------------

struct CollarRegion {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct CollarLoss {
  double loss = 0.0;
  std::vector<double> grad;  // dloss/dp per frame
  std::vector<std::string> warnings;
};

// Frames outside every collar are penalized toward 0; each collar contributes
// BCE(max in-collar probability, 1), so a single confident peak anywhere
// inside the collar is enough.
CollarLoss collar_bce_loss(const std::vector<double>& change_probs,
                           const std::vector<CollarRegion>& collars, int frame_rate = 50);

// Local maxima above threshold; peaks closer than min_gap_s are suppressed,
// keeping the higher one.
std::vector<double> detect_changes(const std::vector<double>& change_probs,
                                   double threshold, double min_gap_s,
                                   int frame_rate = 50);

struct TurnAnalysis {
  std::vector<CollarRegion> collars;
  std::vector<double> boundaries;  // edges of long non-speech gaps
};

// Collars span the gap between consecutive turns of different speakers.
// Non-speech gaps longer than context_s become separate turns: boundaries at
// both gap edges, each with its own collar.
TurnAnalysis nonspeech_turns(const std::vector<Segment>& segments, double context_s = 3.0);

}  // namespace ovasr::detect
