#include "ovasr/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ovasr::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// log softmax of one row
void log_softmax_row(const double* in, int n, double* out) {
  double m = in[0];
  for (int i = 1; i < n; ++i) m = std::max(m, in[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(in[i] - m);
  double lz = m + std::log(s);
  for (int i = 0; i < n; ++i) out[i] = in[i] - lz;
}

struct ForwardBackward {
  double log_p = kNegInf;         // log P(target)
  Matrix log_alpha, log_beta;     // T x S, S = 2*|target|+1
  std::vector<int> ext;           // blank-interleaved target
  Matrix log_probs;               // T x V log softmax
};

ForwardBackward run_forward_backward(const LogitMatrix& logits,
                                     const std::vector<int>& target, int blank,
                                     bool need_backward) {
  const int T = logits.rows;
  const int V = logits.cols;
  for (int t : target) {
    if (t < 0 || t >= V || t == blank)
      throw std::invalid_argument("ctc_loss: target token out of range");
  }

  ForwardBackward fb;
  fb.ext.reserve(2 * target.size() + 1);
  fb.ext.push_back(blank);
  for (int t : target) {
    fb.ext.push_back(t);
    fb.ext.push_back(blank);
  }
  const int S = static_cast<int>(fb.ext.size());

  fb.log_probs = Matrix(T, V);
  for (int t = 0; t < T; ++t) log_softmax_row(logits.row(t), V, fb.log_probs.row(t));

  fb.log_alpha = Matrix(T, S, kNegInf);
  fb.log_alpha.at(0, 0) = fb.log_probs.at(0, fb.ext[0]);
  if (S > 1) fb.log_alpha.at(0, 1) = fb.log_probs.at(0, fb.ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = fb.log_alpha.at(t - 1, s);
      if (s >= 1) a = log_add(a, fb.log_alpha.at(t - 1, s - 1));
      // skip a blank between distinct labels
      if (s >= 2 && fb.ext[s] != blank && fb.ext[s] != fb.ext[s - 2])
        a = log_add(a, fb.log_alpha.at(t - 1, s - 2));
      fb.log_alpha.at(t, s) = a + fb.log_probs.at(t, fb.ext[s]);
    }
  }
  fb.log_p = fb.log_alpha.at(T - 1, S - 1);
  if (S > 1) fb.log_p = log_add(fb.log_p, fb.log_alpha.at(T - 1, S - 2));

  if (need_backward && fb.log_p != kNegInf) {
    fb.log_beta = Matrix(T, S, kNegInf);
    fb.log_beta.at(T - 1, S - 1) = fb.log_probs.at(T - 1, fb.ext[S - 1]);
    if (S > 1) fb.log_beta.at(T - 1, S - 2) = fb.log_probs.at(T - 1, fb.ext[S - 2]);
    for (int t = T - 2; t >= 0; --t) {
      for (int s = S - 1; s >= 0; --s) {
        double b = fb.log_beta.at(t + 1, s);
        if (s + 1 < S) b = log_add(b, fb.log_beta.at(t + 1, s + 1));
        if (s + 2 < S && fb.ext[s + 2] != blank && fb.ext[s + 2] != fb.ext[s])
          b = log_add(b, fb.log_beta.at(t + 1, s + 2));
        fb.log_beta.at(t, s) = b + fb.log_probs.at(t, fb.ext[s]);
      }
    }
  }
  return fb;
}

}  // namespace

double ctc_loss_value(const LogitMatrix& logits, const std::vector<int>& target, int blank) {
  if (logits.rows < 1) throw std::invalid_argument("ctc_loss: empty logit matrix");
  auto fb = run_forward_backward(logits, target, blank, false);
  return fb.log_p == kNegInf ? std::numeric_limits<double>::infinity() : -fb.log_p;
}

CtcResult ctc_loss(const LogitMatrix& logits, const std::vector<int>& target, int blank) {
  if (logits.rows < 1) throw std::invalid_argument("ctc_loss: empty logit matrix");
  const int T = logits.rows;
  const int V = logits.cols;
  auto fb = run_forward_backward(logits, target, blank, true);

  CtcResult res;
  res.grad = Matrix(T, V);
  if (fb.log_p == kNegInf) {
    // infeasible alignment: infinite loss, zero gradient
    res.loss = std::numeric_limits<double>::infinity();
    return res;
  }
  res.loss = -fb.log_p;

  const int S = static_cast<int>(fb.ext.size());
  for (int t = 0; t < T; ++t) {
    // log gamma(t, v) = logsumexp_{s : ext[s]=v} alpha(t,s) + beta(t,s) - logp(t,v)
    std::vector<double> log_gamma(static_cast<size_t>(V), kNegInf);
    for (int s = 0; s < S; ++s) {
      double ab = fb.log_alpha.at(t, s) + fb.log_beta.at(t, s) -
                  fb.log_probs.at(t, fb.ext[s]);
      log_gamma[static_cast<size_t>(fb.ext[s])] =
          log_add(log_gamma[static_cast<size_t>(fb.ext[s])], ab);
    }
    for (int v = 0; v < V; ++v) {
      double posterior = (log_gamma[static_cast<size_t>(v)] == kNegInf)
                             ? 0.0
                             : std::exp(log_gamma[static_cast<size_t>(v)] - fb.log_p);
      res.grad.at(t, v) = std::exp(fb.log_probs.at(t, v)) - posterior;
    }
  }
  return res;
}

double nonspeaker_normalized_loss(const LogitMatrix& logits, int blank,
                                  int64_t* inserted_frames) {
  int64_t k = 0;
  for (int t = 0; t < logits.rows; ++t) {
    const double* row = logits.row(t);
    int best = 0;
    for (int v = 1; v < logits.cols; ++v)
      if (row[v] > row[best]) best = v;
    if (best != blank) ++k;
  }
  if (inserted_frames) *inserted_frames = k;
  double raw = ctc_loss_value(logits, {}, blank);
  return raw / static_cast<double>(std::max<int64_t>(1, k));
}

std::vector<DecodedToken> greedy_decode(const LogitMatrix& logits, int blank) {
  std::vector<DecodedToken> out;
  int prev = -1;
  for (int t = 0; t < logits.rows; ++t) {
    const double* row = logits.row(t);
    int best = 0;
    for (int v = 1; v < logits.cols; ++v)
      if (row[v] > row[best]) best = v;
    if (best != blank && best != prev) out.push_back({best, t});
    prev = best;
  }
  return out;
}

}  // namespace ovasr::ctc
