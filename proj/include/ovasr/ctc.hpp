#pragma once

#include <cstdint>
#include <vector>

#include "ovasr/core.hpp"

namespace ovasr::ctc {

// T x V matrix of unnormalized logits; softmax is taken per frame inside the
// loss and decoders.
using LogitMatrix = Matrix;

struct CtcResult {
  double loss = 0.0;    // -log P(target | softmax(logits)); +inf if infeasible
  Matrix grad;          // dloss/dlogits, zero when infeasible
};

// Forward-backward CTC loss under the usual collapse semantics (repeats
// merge, blanks removed). Gradient is the analytic softmax-minus-posterior
// result.
CtcResult ctc_loss(const LogitMatrix& logits, const std::vector<int>& target, int blank);

// Loss-only variant (skips the backward pass).
double ctc_loss_value(const LogitMatrix& logits, const std::vector<int>& target, int blank);

// Empty-target CTC loss divided by the number of frames whose argmax is any
// non-blank label (at least 1). `inserted_frames` receives that count.
double nonspeaker_normalized_loss(const LogitMatrix& logits, int blank,
                                  int64_t* inserted_frames = nullptr);

struct DecodedToken {
  int id = 0;
  int64_t frame = 0;  // first frame of the argmax run that produced it
  bool operator==(const DecodedToken&) const = default;
};

// Per-frame argmax, collapse repeats, drop blanks.
std::vector<DecodedToken> greedy_decode(const LogitMatrix& logits, int blank);

}  // namespace ovasr::ctc
