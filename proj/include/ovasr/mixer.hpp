#pragma once

#include <map>
#include <string>
#include <vector>

#include "ovasr/core.hpp"

namespace ovasr::mixer {

// One single-speaker source piece from the pool.
struct SourceUtterance {
  std::string speaker;
  std::string text;
  double duration_s = 0.0;
};

struct MixSpec {
  enum class Scenario { kTransition, kInterruption };
  Scenario scenario = Scenario::kTransition;
  double shift_s = 0.0;  // where B starts relative to A's start
  double gain_a = 1.0;
  double gain_b = 1.0;

  static constexpr double kMinLen = 1.0;
  static constexpr double kMaxLen = 45.0;
};

// Symbolic rendering of mixture frames: each active speaker contributes its
// unit embedding scaled by the current token's amplitude (its "voice carrier
// modulated by what is being said"), plus Gaussian feature noise.
struct FeatureParams {
  std::vector<double> amplitudes;  // per token id; blank conventionally 0
  double noise_std = 0.02;

  static FeatureParams levels_for(int vocab_size);
};

struct Mixture {
  int frame_rate = 50;
  std::vector<AlignedFrame> frames;                 // ground-truth activity
  std::vector<Segment> segments;                    // utterances, sorted by start
  std::map<std::string, Embedding> enrollment;
  std::map<std::string, double> gains;
  std::vector<std::pair<double, double>> overlap_regions;
  Matrix features;      // T x D when rendered, else empty
  AudioStream audio;    // rendered on demand

  double duration_s() const {
    return static_cast<double>(frames.size()) / frame_rate;
  }
};

// Deterministic per-token frame layout of an utterance: its characters share
// the span evenly. Everything downstream (oracle alignment, reference word
// times) derives from this one rule.
std::vector<int> frame_tokens(const Segment& utterance, const Vocabulary& vocab,
                              int frame_rate);
// Word-level reference segments with times induced by frame_tokens.
std::vector<Segment> layout_words(const Segment& utterance, const Vocabulary& vocab,
                                  int frame_rate);

// Mixes two single-speaker utterances. TRANSITION: B starts shift_s into A
// and runs past A's end. INTERRUPTION: B sits fully inside A.
Mixture mix(const SourceUtterance& a, const SourceUtterance& b, const MixSpec& spec,
            const std::map<std::string, Embedding>& enrollment, const Vocabulary& vocab,
            int frame_rate = 50);

void render_features(Mixture& m, const FeatureParams& params, Rng& rng);
// Deterministic per-speaker tone render; mixed samples are the gain-weighted
// sum of the sources, rounded once.
void render_audio(Mixture& m, const Vocabulary& vocab);

// --- corpus sampling ---------------------------------------------------------

struct SpeakerPool {
  std::vector<SourceUtterance> utterances;
  std::map<std::string, Embedding> enrollment;

  std::vector<std::string> speakers() const;
};

// Synthetic single-speaker pool: speaker embeddings are rows of a random
// orthonormal basis (requires n_speakers <= embed_dim), utterance text is
// random words over the vocabulary.
SpeakerPool make_pool(int n_speakers, int utterances_per_speaker, double min_len_s,
                      double max_len_s, int embed_dim, const Vocabulary& vocab, Rng& rng);

struct CorpusConfig {
  double transition_ratio = 0.5;
  double min_overlap_s = 1.25;   // keeps runs long enough to survive the 1 s rules
  double min_single_s = 1.25;
  int frame_rate = 50;
  FeatureParams features;
  bool with_features = true;
};

std::vector<Mixture> sample_corpus(const SpeakerPool& pool, int count,
                                   const CorpusConfig& cfg, const Vocabulary& vocab,
                                   Rng& rng);

// --- overlap statistics --------------------------------------------------------

struct OverlapStats {
  double total_s = 0.0;
  double overlap_s = 0.0;                      // time with >= 2 active speakers
  std::map<int, double> time_by_cardinality;   // seconds at exactly k speakers
  std::vector<double> event_durations;         // maximal >= 2-speaker intervals

  double overlap_fraction() const { return total_s > 0 ? overlap_s / total_s : 0.0; }
  // share of cumulative overlap duration held by events longer than t
  double duration_fraction_above(double t) const;
  // share of overlap event count with duration above t
  double count_fraction_above(double t) const;
  std::vector<std::pair<double, double>> duration_histogram(
      const std::vector<double>& edges) const;  // (upper edge, seconds)
};

// Exact interval sweep over utterance segments.
OverlapStats overlap_stats(const std::vector<Segment>& segments, double total_duration_s);
OverlapStats overlap_stats(const std::vector<Mixture>& mixtures);

}  // namespace ovasr::mixer
