#pragma once

#include <span>
#include <string>
#include <vector>

#include "ovasr/ctc.hpp"
#include "ovasr/lm.hpp"

namespace ovasr::ctc {

struct DecoderConfig {
  int width = 8;
  int blank = 0;
  double lm_weight = 0.0;        // lambda for shallow fusion
  double insertion_bonus = 0.0;  // added per emitted token
};

// One live hypothesis: the tokens decoded since the last commit plus the
// CTC path masses split by whether the last frame was a blank.
struct BeamHyp {
  std::vector<int> tokens;
  std::vector<int64_t> frames;  // frame each token first appeared
  double log_pb;                // paths ending in blank
  double log_pnb;               // paths ending in the last token
  double lm_score = 0.0;        // cumulative lambda*logP + bonus

  double total() const;
  double score() const { return total() + lm_score; }
};

// A speaker-attributed CTC decoder whose context (LM history and collapse
// state) survives commits and can be handed to another decoder.
struct DecoderState {
  std::string affiliation;
  std::vector<BeamHyp> beam;
  std::vector<DecodedToken> emitted;  // committed tokens with frame stamps
  std::vector<int> lm_context;        // committed history seen by the LM
  int carried_last = -1;              // open CTC run carried across commits
  int64_t frames_seen = 0;

  const BeamHyp& best() const;
};

DecoderState make_decoder(const std::string& affiliation);

// Advances the beam by one frame of logits. Pruning keeps the top `width`
// (prefix, blank/non-blank) pairs, so width 1 follows the per-frame argmax
// path exactly (greedy equivalence) while large widths recover full prefix
// posteriors.
void beam_step(DecoderState& state, std::span<const double> frame_logits,
               const DecoderConfig& cfg, const lm::NGramLM* lm, int64_t global_frame);

// Convenience: run beam_step over a whole logit matrix starting at
// `frame_offset`.
void beam_decode(DecoderState& state, const LogitMatrix& logits, const DecoderConfig& cfg,
                 const lm::NGramLM* lm, int64_t frame_offset = 0);

// Commits the best hypothesis into `emitted` and reseeds the beam so
// decoding continues seamlessly (LM context and collapse state retained).
void finalize_decoder(DecoderState& state);

// Finalizes `from`, then hands its LM context and collapse state to `to`.
// `to`'s affiliation and committed text are untouched.
void transfer_context(DecoderState& from, DecoderState& to);

}  // namespace ovasr::ctc
