#include "ovasr/lm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ovasr::lm {

namespace {

std::string escape_token(const std::string& t) {
  if (t == " ") return "<sp>";
  return t;
}

std::string unescape_token(const std::string& t) {
  if (t == "<sp>") return " ";
  return t;
}

}  // namespace

NGramLM NGramLM::train(const std::vector<std::vector<int>>& sequences, int order,
                       int vocab_size, double discount) {
  if (order < 1) throw std::invalid_argument("lm order must be >= 1");
  if (vocab_size < 1) throw std::invalid_argument("lm vocab_size must be >= 1");
  if (discount <= 0.0 || discount >= 1.0)
    throw std::invalid_argument("lm discount must be in (0, 1)");

  // raw counts per order
  std::vector<std::map<std::vector<int>, int64_t>> counts(static_cast<size_t>(order));
  int64_t total_tokens = 0;
  for (const auto& seq : sequences) {
    for (size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] < 0 || seq[i] >= vocab_size)
        throw std::invalid_argument("lm training token out of range");
      ++total_tokens;
      for (int n = 1; n <= order; ++n) {
        if (i + 1 < static_cast<size_t>(n)) break;
        std::vector<int> gram(seq.begin() + (i + 1 - n), seq.begin() + (i + 1));
        ++counts[static_cast<size_t>(n - 1)][gram];
      }
    }
  }

  NGramLM lm;
  lm.order_ = order;
  lm.vocab_size_ = vocab_size;
  lm.grams_.resize(static_cast<size_t>(order));

  // unigrams: add-k so every token has positive probability
  const double k = 0.5;
  double denom = static_cast<double>(total_tokens) + k * vocab_size;
  for (int w = 0; w < vocab_size; ++w) {
    auto it = counts[0].find({w});
    double c = it == counts[0].end() ? 0.0 : static_cast<double>(it->second);
    lm.grams_[0][{w}] = {std::log((c + k) / denom), 0.0};
  }

  // higher orders: absolute discounting with backoff mass alpha(h)
  for (int n = 2; n <= order; ++n) {
    std::map<std::vector<int>, std::pair<int64_t, int64_t>> ctx_stats;  // total, distinct
    for (const auto& [gram, c] : counts[static_cast<size_t>(n - 1)]) {
      std::vector<int> ctx(gram.begin(), gram.end() - 1);
      ctx_stats[ctx].first += c;
      ctx_stats[ctx].second += 1;
    }
    for (const auto& [gram, c] : counts[static_cast<size_t>(n - 1)]) {
      std::vector<int> ctx(gram.begin(), gram.end() - 1);
      const auto& [total, distinct] = ctx_stats[ctx];
      double p = (static_cast<double>(c) - discount) / static_cast<double>(total);
      lm.grams_[static_cast<size_t>(n - 1)][gram] = {std::log(p), 0.0};
    }
    // attach backoff weights to the contexts (which are (n-1)-grams)
    for (const auto& [ctx, stats] : ctx_stats) {
      double alpha = discount * static_cast<double>(stats.second) /
                     static_cast<double>(stats.first);
      auto it = lm.grams_[static_cast<size_t>(n - 2)].find(ctx);
      if (it != lm.grams_[static_cast<size_t>(n - 2)].end()) {
        it->second.backoff = std::log(alpha);
      } else {
        // context never appeared as a full (n-1)-gram event; still needs its
        // backoff recorded so queries renormalize
        lm.grams_[static_cast<size_t>(n - 2)][ctx] = {-1e30, std::log(alpha)};
      }
    }
  }
  return lm;
}

NGramLM NGramLM::from_unigram_probs(const std::vector<double>& probs) {
  NGramLM lm;
  lm.order_ = 1;
  lm.vocab_size_ = static_cast<int>(probs.size());
  lm.grams_.resize(1);
  for (int w = 0; w < lm.vocab_size_; ++w) {
    if (probs[static_cast<size_t>(w)] <= 0.0)
      throw std::invalid_argument("unigram probabilities must be positive");
    lm.grams_[0][{w}] = {std::log(probs[static_cast<size_t>(w)]), 0.0};
  }
  return lm;
}

double NGramLM::log_prob(const std::vector<int>& context, int token) const {
  if (token < 0 || token >= vocab_size_)
    throw std::invalid_argument("lm token out of range");
  int max_ctx = std::min<int>(order_ - 1, static_cast<int>(context.size()));
  double backoff_acc = 0.0;
  for (int n = max_ctx; n >= 0; --n) {
    // the (n+1)-gram `context tail + token` lives at grams_[n]
    std::vector<int> gram(context.end() - n, context.end());
    gram.push_back(token);
    auto it = grams_[static_cast<size_t>(n)].find(gram);
    if (it != grams_[static_cast<size_t>(n)].end() && it->second.log_prob > -1e29)
      return backoff_acc + it->second.log_prob;
    if (n > 0) {
      // the length-n context itself is an n-gram at grams_[n-1]; unseen
      // contexts back off with weight 1 (log 0)
      std::vector<int> ctx(context.end() - n, context.end());
      auto bit = grams_[static_cast<size_t>(n - 1)].find(ctx);
      if (bit != grams_[static_cast<size_t>(n - 1)].end())
        backoff_acc += bit->second.backoff;
    }
  }
  // unreachable: unigrams cover every token
  throw std::logic_error("lm: missing unigram");
}

void NGramLM::save_arpa(const std::string& path, const Vocabulary& vocab) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write arpa file: " + path);
  const double ln10 = std::log(10.0);
  out << "\\data\\\n";
  for (int n = 1; n <= order_; ++n)
    out << "ngram " << n << "=" << grams_[static_cast<size_t>(n - 1)].size() << "\n";
  for (int n = 1; n <= order_; ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [gram, e] : grams_[static_cast<size_t>(n - 1)]) {
      out << format_float(e.log_prob / ln10);
      for (int id : gram) out << ' ' << escape_token(vocab.tokens[static_cast<size_t>(id)]);
      if (n < order_ && e.backoff != 0.0) out << '\t' << format_float(e.backoff / ln10);
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
  if (!out) throw std::runtime_error("I/O error writing " + path);
}

NGramLM NGramLM::load_arpa(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open arpa file: " + path);
  const double ln10 = std::log(10.0);
  NGramLM lm;
  lm.vocab_size_ = vocab.size();
  std::string line;
  int section = 0;  // current n-grams section
  std::vector<size_t> expected;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\\data\\") continue;
    if (line == "\\end\\") break;
    if (line.rfind("ngram ", 0) == 0) {
      auto eq = line.find('=');
      expected.push_back(static_cast<size_t>(std::stoul(line.substr(eq + 1))));
      continue;
    }
    if (line.front() == '\\') {
      section = std::stoi(line.substr(1, line.find('-') - 1));
      if (static_cast<int>(lm.grams_.size()) < section)
        lm.grams_.resize(static_cast<size_t>(section));
      lm.order_ = std::max(lm.order_, section);
      continue;
    }
    if (section == 0) throw std::runtime_error("arpa: entry outside any section");
    // prob tok1..tokN [\t backoff]
    std::string body = line;
    double backoff = 0.0;
    auto tab = body.find('\t');
    if (tab != std::string::npos) {
      backoff = std::stod(body.substr(tab + 1)) * ln10;
      body = body.substr(0, tab);
    }
    std::istringstream ss(body);
    double lp10;
    ss >> lp10;
    std::vector<int> gram;
    std::string tok;
    while (ss >> tok) {
      int id = vocab.find(unescape_token(tok));
      if (id < 0) throw std::runtime_error("arpa: token not in vocabulary: " + tok);
      gram.push_back(id);
    }
    if (static_cast<int>(gram.size()) != section)
      throw std::runtime_error("arpa: gram length does not match section");
    lm.grams_[static_cast<size_t>(section - 1)][gram] = {lp10 * ln10, backoff};
  }
  for (size_t n = 0; n < expected.size() && n < lm.grams_.size(); ++n) {
    if (lm.grams_[n].size() != expected[n])
      throw std::runtime_error("arpa: ngram count mismatch at order " +
                               std::to_string(n + 1));
  }
  return lm;
}

}  // namespace ovasr::lm
