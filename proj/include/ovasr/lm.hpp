#pragma once

#include <map>
#include <string>
#include <vector>

#include "ovasr/core.hpp"

namespace ovasr::lm {

// Backoff n-gram language model over vocabulary token ids (the blank is not
// a language-model event). Trained with absolute discounting; add-k smoothed
// unigrams keep every token's probability positive.
class NGramLM {
 public:
  NGramLM() = default;

  static NGramLM train(const std::vector<std::vector<int>>& sequences, int order,
                       int vocab_size, double discount = 0.5);
  // Degenerate order-1 model with the given probabilities (must sum to 1).
  static NGramLM from_unigram_probs(const std::vector<double>& probs);

  // log P(token | context); natural log. Context is truncated to the last
  // order-1 tokens.
  double log_prob(const std::vector<int>& context, int token) const;

  int order() const { return order_; }
  int vocab_size() const { return vocab_size_; }

  // ARPA-style plain text round trip. Token ids are written through the
  // vocabulary's token strings (space escaped as <sp>).
  void save_arpa(const std::string& path, const Vocabulary& vocab) const;
  static NGramLM load_arpa(const std::string& path, const Vocabulary& vocab);

 private:
  struct Entry {
    double log_prob = 0.0;   // natural log
    double backoff = 0.0;    // natural log alpha, for grams below top order
  };
  // key: n-gram token ids (context + token), grouped per order
  std::vector<std::map<std::vector<int>, Entry>> grams_;
  int order_ = 1;
  int vocab_size_ = 0;
};

}  // namespace ovasr::lm
