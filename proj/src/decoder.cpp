#include "ovasr/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ovasr::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace

double BeamHyp::total() const { return log_add(log_pb, log_pnb); }

const BeamHyp& DecoderState::best() const {
  if (beam.empty()) throw std::logic_error("decoder has no hypotheses");
  size_t bi = 0;
  for (size_t i = 1; i < beam.size(); ++i)
    if (beam[i].score() > beam[bi].score()) bi = i;
  return beam[bi];
}

DecoderState make_decoder(const std::string& affiliation) {
  DecoderState st;
  st.affiliation = affiliation;
  BeamHyp root;
  root.log_pb = 0.0;  // empty path, mass 1, "after blank" state
  root.log_pnb = kNegInf;
  st.beam.push_back(std::move(root));
  return st;
}

void beam_step(DecoderState& state, std::span<const double> frame_logits,
               const DecoderConfig& cfg, const lm::NGramLM* lm, int64_t global_frame) {
  const int V = static_cast<int>(frame_logits.size());
  if (cfg.blank < 0 || cfg.blank >= V)
    throw std::invalid_argument("beam_step: blank index out of range");
  if (cfg.width < 1) throw std::invalid_argument("beam_step: width must be >= 1");

  // log softmax of the frame
  std::vector<double> lp(frame_logits.begin(), frame_logits.end());
  double m = *std::max_element(lp.begin(), lp.end());
  double z = 0.0;
  for (double v : lp) z += std::exp(v - m);
  double lz = m + std::log(z);
  for (double& v : lp) v -= lz;

  struct Next {
    double log_pb = kNegInf;
    double log_pnb = kNegInf;
    double lm_score = 0.0;
    std::vector<int64_t> frames;
  };
  std::map<std::vector<int>, Next> next;

  for (const auto& hyp : state.beam) {
    int last = hyp.tokens.empty() ? state.carried_last : hyp.tokens.back();
    double total = hyp.total();

    Next& stay = next[hyp.tokens];
    stay.lm_score = hyp.lm_score;
    stay.frames = hyp.frames;
    stay.log_pb = log_add(stay.log_pb, total + lp[static_cast<size_t>(cfg.blank)]);
    if (last >= 0 && hyp.log_pnb != kNegInf)
      stay.log_pnb = log_add(stay.log_pnb, hyp.log_pnb + lp[static_cast<size_t>(last)]);

    for (int c = 0; c < V; ++c) {
      if (c == cfg.blank) continue;
      double mass;
      if (c == last) {
        // same label right after a run only extends via a blank path
        if (hyp.log_pb == kNegInf) continue;
        mass = hyp.log_pb + lp[static_cast<size_t>(c)];
      } else {
        mass = total + lp[static_cast<size_t>(c)];
      }
      std::vector<int> ext = hyp.tokens;
      ext.push_back(c);
      Next& n = next[ext];
      if (n.log_pb == kNegInf && n.log_pnb == kNegInf) {
        n.frames = hyp.frames;
        n.frames.push_back(global_frame);
        n.lm_score = hyp.lm_score + cfg.insertion_bonus;
        if (lm && cfg.lm_weight != 0.0) {
          std::vector<int> ctx = state.lm_context;
          ctx.insert(ctx.end(), hyp.tokens.begin(), hyp.tokens.end());
          n.lm_score += cfg.lm_weight * lm->log_prob(ctx, c);
        }
      }
      n.log_pnb = log_add(n.log_pnb, mass);
    }
  }

  // prune at (prefix, state) granularity: width 1 then tracks the argmax path
  struct Pair {
    const std::vector<int>* prefix;
    bool blank_state;
    double score;
  };
  std::vector<Pair> pairs;
  for (const auto& [prefix, n] : next) {
    if (n.log_pb != kNegInf) pairs.push_back({&prefix, true, n.log_pb + n.lm_score});
    if (n.log_pnb != kNegInf) pairs.push_back({&prefix, false, n.log_pnb + n.lm_score});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.prefix->size() != b.prefix->size()) return a.prefix->size() < b.prefix->size();
    if (*a.prefix != *b.prefix) return *a.prefix < *b.prefix;
    return a.blank_state && !b.blank_state;
  });
  if (static_cast<int>(pairs.size()) > cfg.width) pairs.resize(static_cast<size_t>(cfg.width));

  std::map<std::vector<int>, std::pair<bool, bool>> kept;  // prefix -> keep (pb, pnb)
  for (const auto& p : pairs) {
    auto& k = kept[*p.prefix];
    (p.blank_state ? k.first : k.second) = true;
  }

  std::vector<BeamHyp> survivors;
  survivors.reserve(kept.size());
  for (const auto& [prefix, keep] : kept) {
    const Next& n = next[prefix];
    BeamHyp h;
    h.tokens = prefix;
    h.frames = n.frames;
    h.log_pb = keep.first ? n.log_pb : kNegInf;
    h.log_pnb = keep.second ? n.log_pnb : kNegInf;
    h.lm_score = n.lm_score;
    survivors.push_back(std::move(h));
  }
  std::stable_sort(survivors.begin(), survivors.end(),
                   [](const BeamHyp& a, const BeamHyp& b) { return a.score() > b.score(); });
  state.beam = std::move(survivors);
  ++state.frames_seen;
}

void beam_decode(DecoderState& state, const LogitMatrix& logits, const DecoderConfig& cfg,
                 const lm::NGramLM* lm, int64_t frame_offset) {
  for (int t = 0; t < logits.rows; ++t)
    beam_step(state, std::span<const double>(logits.row(t), static_cast<size_t>(logits.cols)),
              cfg, lm, frame_offset + t);
}

void finalize_decoder(DecoderState& state) {
  BeamHyp best = state.best();
  for (size_t i = 0; i < best.tokens.size(); ++i)
    state.emitted.push_back({best.tokens[i], best.frames[i]});
  state.lm_context.insert(state.lm_context.end(), best.tokens.begin(), best.tokens.end());
  // LM never looks further back than a few tokens
  const size_t kKeep = 8;
  if (state.lm_context.size() > kKeep)
    state.lm_context.erase(state.lm_context.begin(),
                           state.lm_context.end() - static_cast<long>(kKeep));
  if (!best.tokens.empty()) state.carried_last = best.tokens.back();

  BeamHyp seed;
  double m = std::max(best.log_pb, best.log_pnb);
  seed.log_pb = best.log_pb == kNegInf ? kNegInf : best.log_pb - m;
  seed.log_pnb = best.log_pnb == kNegInf ? kNegInf : best.log_pnb - m;
  state.beam.clear();
  state.beam.push_back(std::move(seed));
}

void transfer_context(DecoderState& from, DecoderState& to) {
  finalize_decoder(from);
  to.lm_context = from.lm_context;
  to.carried_last = from.carried_last;
  to.beam = from.beam;
}

}  // namespace ovasr::ctc
