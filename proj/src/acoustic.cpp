#include "ovasr/acoustic.hpp"

#include <algorithm>
#include <cmath>

#include "ovasr/ctc.hpp"

namespace ovasr::ac {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// softmax of a logit row, sorted descending, padded/truncated to H
void hidden_from_logits(const double* logits, int v_size, double* hidden, int h_size) {
  std::vector<double> p(static_cast<size_t>(v_size));
  double m = logits[0];
  for (int v = 1; v < v_size; ++v) m = std::max(m, logits[v]);
  double z = 0.0;
  for (int v = 0; v < v_size; ++v) {
    p[static_cast<size_t>(v)] = std::exp(logits[v] - m);
    z += p[static_cast<size_t>(v)];
  }
  for (double& x : p) x /= z;
  std::sort(p.begin(), p.end(), std::greater<>());
  for (int h = 0; h < h_size; ++h)
    hidden[h] = h < v_size ? p[static_cast<size_t>(h)] : 0.0;
}

struct GtSignals {
  std::vector<double> change, overlap;
};

GtSignals gt_signals(std::span<const AlignedFrame> window, const OracleParams& params,
                     Rng& rng) {
  GtSignals out;
  out.change.resize(window.size());
  out.overlap.resize(window.size());
  const double nstd = 0.1 * params.noise_std;
  for (size_t t = 0; t < window.size(); ++t) {
    double c = window[t].change_point ? 1.0 : 0.0;
    double o = window[t].overlapped() ? 1.0 : 0.0;
    if (nstd > 0.0) {
      c += rng.normal(0.0, nstd);
      o += rng.normal(0.0, nstd);
    }
    out.change[t] = clamp01(c);
    out.overlap[t] = clamp01(o);
  }
  return out;
}

void finish_output(AcousticOutput& out, std::span<const AlignedFrame> window,
                   const OracleParams& params, Rng& rng) {
  const int T = out.ctc_logits.rows;
  const int V = out.ctc_logits.cols;
  if (params.noise_std > 0.0) {
    for (int t = 0; t < T; ++t)
      for (int v = 0; v < V; ++v)
        out.ctc_logits.at(t, v) += rng.normal(0.0, params.noise_std);
  }
  auto sig = gt_signals(window, params, rng);
  out.change_prob = std::move(sig.change);
  out.overlap_prob = std::move(sig.overlap);
  out.hidden = Matrix(T, params.hidden_dim);
  for (int t = 0; t < T; ++t)
    hidden_from_logits(out.ctc_logits.row(t), V, out.hidden.row(t), params.hidden_dim);
}

}  // namespace

AcousticOutput oracle_si_forward(std::span<const AlignedFrame> window,
                                 const Vocabulary& vocab, const OracleParams& params,
                                 Rng& rng) {
  const int T = static_cast<int>(window.size());
  const int V = vocab.size();
  AcousticOutput out;
  out.ctc_logits = Matrix(T, V);
  for (int t = 0; t < T; ++t) {
    const auto& fr = window[static_cast<size_t>(t)];
    int label;
    double conf = params.clean_confidence;
    if (fr.active.empty()) {
      label = vocab.blank_index;
    } else if (!fr.overlapped()) {
      label = fr.active[0].token;
    } else {
      // confused, low-confidence output on overlapped speech
      bool take_interferer = rng.uniform() < params.overlap_confusion;
      label = take_interferer ? fr.active[1].token : fr.active[0].token;
      conf *= 0.5;
    }
    if (label < 0 || label >= V)
      throw std::invalid_argument("oracle: aligned token outside vocabulary");
    out.ctc_logits.at(t, label) = conf;
  }
  finish_output(out, window, params, rng);
  return out;
}

AcousticOutput oracle_sc_forward(std::span<const AlignedFrame> window,
                                 const std::map<std::string, Embedding>& enrollment,
                                 const Embedding& target, const Vocabulary& vocab,
                                 const OracleParams& params, Rng& rng) {
  // which enrolled speaker, if any, does the conditioning embedding match?
  std::string matched;
  double best = -2.0;
  for (const auto& fr : window) {
    for (const auto& a : fr.active) {
      auto it = enrollment.find(a.speaker);
      if (it == enrollment.end())
        throw std::invalid_argument("oracle_sc: active speaker has no enrollment: " +
                                    a.speaker);
      double sim = cosine(target, it->second);
      if (sim > best) {
        best = sim;
        matched = a.speaker;
      }
    }
  }
  if (best < params.sc_match_threshold) matched.clear();

  const int T = static_cast<int>(window.size());
  const int V = vocab.size();
  AcousticOutput out;
  out.ctc_logits = Matrix(T, V);
  for (int t = 0; t < T; ++t) {
    const auto& fr = window[static_cast<size_t>(t)];
    int label = vocab.blank_index;
    double conf = params.clean_confidence;
    if (!matched.empty()) {
      for (const auto& a : fr.active) {
        if (a.speaker == matched) {
          label = a.token;
          if (fr.overlapped()) conf *= 0.5;
          break;
        }
      }
    }
    if (label < 0 || label >= V)
      throw std::invalid_argument("oracle: aligned token outside vocabulary");
    out.ctc_logits.at(t, label) = conf;
  }
  finish_output(out, window, params, rng);
  return out;
}

// --- FiLM and the toy stack -------------------------------------------------

namespace {

std::vector<double> map_embedding(const Matrix& map, const Embedding& e) {
  if (map.cols != static_cast<int>(e.size()))
    throw std::invalid_argument("film: embedding dimension mismatch");
  std::vector<double> out(static_cast<size_t>(map.rows), 0.0);
  for (int h = 0; h < map.rows; ++h) {
    double s = 0.0;
    for (int d = 0; d < map.cols; ++d) s += map.at(h, d) * e[static_cast<size_t>(d)];
    out[static_cast<size_t>(h)] = s;
  }
  return out;
}

}  // namespace

Matrix film(const Matrix& features, const Embedding& embedding, const FiLMParams& p) {
  if (!p.gamma_map.same_shape(p.beta_map))
    throw std::invalid_argument("film: gamma/beta map shapes differ");
  if (features.cols != p.gamma_map.rows)
    throw std::invalid_argument("film: feature width does not match map height");
  auto gamma = map_embedding(p.gamma_map, embedding);
  auto beta = map_embedding(p.beta_map, embedding);
  Matrix out(features.rows, features.cols);
  for (int t = 0; t < features.rows; ++t)
    for (int h = 0; h < features.cols; ++h)
      out.at(t, h) = gamma[static_cast<size_t>(h)] * features.at(t, h) +
                     beta[static_cast<size_t>(h)];
  return out;
}

ToySCModel ToySCModel::init(int in_dim, int hidden_dim, int embed_dim, int vocab_size,
                            Rng& rng) {
  auto randn = [&rng](int r, int c, double scale) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.normal(0.0, scale);
    return m;
  };
  ToySCModel m;
  m.featurizer = randn(hidden_dim, in_dim, 1.0 / std::sqrt(in_dim));
  m.feat_bias.assign(static_cast<size_t>(hidden_dim), 0.0);
  m.film_params.gamma_map = randn(hidden_dim, embed_dim, 1.0 / std::sqrt(embed_dim));
  m.film_params.beta_map = randn(hidden_dim, embed_dim, 1.0 / std::sqrt(embed_dim));
  m.post = randn(hidden_dim, hidden_dim, 1.0 / std::sqrt(hidden_dim));
  m.post_bias.assign(static_cast<size_t>(hidden_dim), 0.0);
  m.output = randn(vocab_size, hidden_dim, 1.0 / std::sqrt(hidden_dim));
  m.out_bias.assign(static_cast<size_t>(vocab_size), 0.0);
  return m;
}

ToyForwardCache toy_forward(const ToySCModel& m, const Matrix& features,
                            const Embedding& embedding) {
  if (features.cols != m.in_dim())
    throw std::invalid_argument("toy_forward: feature dimension mismatch");
  const int T = features.rows;
  const int H = m.hidden_dim();
  const int V = m.vocab_size();
  ToyForwardCache c;
  c.z = Matrix(T, H);
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < H; ++h) {
      double s = m.feat_bias[static_cast<size_t>(h)];
      for (int i = 0; i < m.in_dim(); ++i) s += m.featurizer.at(h, i) * features.at(t, i);
      c.z.at(t, h) = s;
    }
  c.f = film(c.z, embedding, m.film_params);
  c.a = Matrix(T, H);
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < H; ++h) {
      double s = m.post_bias[static_cast<size_t>(h)];
      for (int j = 0; j < H; ++j) s += m.post.at(h, j) * c.f.at(t, j);
      c.a.at(t, h) = std::tanh(s);
    }
  c.logits = Matrix(T, V);
  for (int t = 0; t < T; ++t)
    for (int v = 0; v < V; ++v) {
      double s = m.out_bias[static_cast<size_t>(v)];
      for (int h = 0; h < H; ++h) s += m.output.at(v, h) * c.a.at(t, h);
      c.logits.at(t, v) = s;
    }
  return c;
}

AcousticOutput toy_output(const ToySCModel& m, const Matrix& features,
                          const Embedding& embedding) {
  auto c = toy_forward(m, features, embedding);
  AcousticOutput out;
  out.ctc_logits = std::move(c.logits);
  out.change_prob.assign(static_cast<size_t>(features.rows), 0.0);
  out.overlap_prob.assign(static_cast<size_t>(features.rows), 0.0);
  out.hidden = std::move(c.a);
  return out;
}

ToyGrads ToyGrads::zeros_like(const ToySCModel& m) {
  ToyGrads g;
  g.d_featurizer = Matrix(m.featurizer.rows, m.featurizer.cols);
  g.d_feat_bias.assign(m.feat_bias.size(), 0.0);
  g.d_gamma = Matrix(m.film_params.gamma_map.rows, m.film_params.gamma_map.cols);
  g.d_beta = Matrix(m.film_params.beta_map.rows, m.film_params.beta_map.cols);
  g.d_post = Matrix(m.post.rows, m.post.cols);
  g.d_post_bias.assign(m.post_bias.size(), 0.0);
  g.d_output = Matrix(m.output.rows, m.output.cols);
  g.d_out_bias.assign(m.out_bias.size(), 0.0);
  return g;
}

void ToyGrads::accumulate(const ToyGrads& o) {
  auto addm = [](Matrix& a, const Matrix& b) {
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  };
  auto addv = [](std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  addm(d_featurizer, o.d_featurizer);
  addv(d_feat_bias, o.d_feat_bias);
  addm(d_gamma, o.d_gamma);
  addm(d_beta, o.d_beta);
  addm(d_post, o.d_post);
  addv(d_post_bias, o.d_post_bias);
  addm(d_output, o.d_output);
  addv(d_out_bias, o.d_out_bias);
}

void ToyGrads::scale(double s) {
  auto scm = [s](Matrix& m) {
    for (double& v : m.data) v *= s;
  };
  auto scv = [s](std::vector<double>& v) {
    for (double& x : v) x *= s;
  };
  scm(d_featurizer);
  scv(d_feat_bias);
  scm(d_gamma);
  scm(d_beta);
  scm(d_post);
  scv(d_post_bias);
  scm(d_output);
  scv(d_out_bias);
}

double ToyGrads::squared_norm() const {
  double s = 0.0;
  auto accm = [&s](const Matrix& m) {
    for (double v : m.data) s += v * v;
  };
  auto accv = [&s](const std::vector<double>& v) {
    for (double x : v) s += x * x;
  };
  accm(d_featurizer);
  accv(d_feat_bias);
  accm(d_gamma);
  accm(d_beta);
  accm(d_post);
  accv(d_post_bias);
  accm(d_output);
  accv(d_out_bias);
  return s;
}

ToyGrads toy_backward(const ToySCModel& m, const Matrix& features,
                      const Embedding& embedding, const ToyForwardCache& cache,
                      const Matrix& dlogits) {
  const int T = features.rows;
  const int H = m.hidden_dim();
  const int V = m.vocab_size();
  const int IN = m.in_dim();
  auto gamma = map_embedding(m.film_params.gamma_map, embedding);

  ToyGrads g = ToyGrads::zeros_like(m);
  Matrix da(T, H), dapre(T, H), df(T, H), dz(T, H);

  for (int t = 0; t < T; ++t) {
    for (int v = 0; v < V; ++v) {
      double dy = dlogits.at(t, v);
      g.d_out_bias[static_cast<size_t>(v)] += dy;
      for (int h = 0; h < H; ++h) {
        g.d_output.at(v, h) += dy * cache.a.at(t, h);
        da.at(t, h) += dy * m.output.at(v, h);
      }
    }
    for (int h = 0; h < H; ++h) {
      double a = cache.a.at(t, h);
      dapre.at(t, h) = da.at(t, h) * (1.0 - a * a);
      g.d_post_bias[static_cast<size_t>(h)] += dapre.at(t, h);
    }
    for (int h = 0; h < H; ++h) {
      double d = dapre.at(t, h);
      for (int j = 0; j < H; ++j) {
        g.d_post.at(h, j) += d * cache.f.at(t, j);
        df.at(t, j) += d * m.post.at(h, j);
      }
    }
    for (int h = 0; h < H; ++h) {
      double d = df.at(t, h);
      dz.at(t, h) = d * gamma[static_cast<size_t>(h)];
      // dgamma_h += d * z, dbeta_h += d; both are linear images of e
      for (int dd = 0; dd < static_cast<int>(embedding.size()); ++dd) {
        g.d_gamma.at(h, dd) += d * cache.z.at(t, h) * embedding[static_cast<size_t>(dd)];
        g.d_beta.at(h, dd) += d * embedding[static_cast<size_t>(dd)];
      }
    }
    for (int h = 0; h < H; ++h) {
      double d = dz.at(t, h);
      g.d_feat_bias[static_cast<size_t>(h)] += d;
      for (int i = 0; i < IN; ++i) g.d_featurizer.at(h, i) += d * features.at(t, i);
    }
  }
  return g;
}

Checkpoint ToySCModel::to_checkpoint() const {
  Checkpoint ck;
  ck.add("featurizer.weight", featurizer);
  ck.add("featurizer.bias", feat_bias);
  ck.add("film.gamma_map", film_params.gamma_map);
  ck.add("film.beta_map", film_params.beta_map);
  ck.add("post.weight", post);
  ck.add("post.bias", post_bias);
  ck.add("output.weight", output);
  ck.add("output.bias", out_bias);
  return ck;
}

ToySCModel ToySCModel::from_checkpoint(const Checkpoint& ck) {
  ToySCModel m;
  m.featurizer = ck.matrix("featurizer.weight");
  m.feat_bias = ck.vector("featurizer.bias");
  m.film_params.gamma_map = ck.matrix("film.gamma_map");
  m.film_params.beta_map = ck.matrix("film.beta_map");
  m.post = ck.matrix("post.weight");
  m.post_bias = ck.vector("post.bias");
  m.output = ck.matrix("output.weight");
  m.out_bias = ck.vector("output.bias");
  return m;
}

// --- training ----------------------------------------------------------------

namespace {

struct Momentum {
  ToyGrads v;
  bool init = false;
};

void sgd_update(ToySCModel& m, const ToyGrads& g, Momentum& mom, double lr,
                double momentum) {
  if (!mom.init) {
    mom.v = ToyGrads::zeros_like(m);
    mom.init = true;
  }
  auto upd_m = [&](Matrix& w, Matrix& v, const Matrix& grad) {
    for (size_t i = 0; i < w.data.size(); ++i) {
      v.data[i] = momentum * v.data[i] + grad.data[i];
      w.data[i] -= lr * v.data[i];
    }
  };
  auto upd_v = [&](std::vector<double>& w, std::vector<double>& v,
                   const std::vector<double>& grad) {
    for (size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum * v[i] + grad[i];
      w[i] -= lr * v[i];
    }
  };
  upd_m(m.featurizer, mom.v.d_featurizer, g.d_featurizer);
  upd_v(m.feat_bias, mom.v.d_feat_bias, g.d_feat_bias);
  upd_m(m.film_params.gamma_map, mom.v.d_gamma, g.d_gamma);
  upd_m(m.film_params.beta_map, mom.v.d_beta, g.d_beta);
  upd_m(m.post, mom.v.d_post, g.d_post);
  upd_v(m.post_bias, mom.v.d_post_bias, g.d_post_bias);
  upd_m(m.output, mom.v.d_output, g.d_output);
  upd_v(m.out_bias, mom.v.d_out_bias, g.d_out_bias);
}

// forward all windows of one example for one conditioning embedding, compute
// the aggregated-CTC loss gradient and backprop into parameter grads
struct PassResult {
  double loss = 0.0;
  int64_t divisor = -1;  // only set for the non-speaker pass
};

PassResult run_pass(const ToySCModel& model, const ScTrainExample& ex,
                    const Embedding& cond, const std::vector<int>* target, int blank,
                    const win::WindowingConfig& wcfg, ToyGrads& grads) {
  const int T = ex.features.rows;
  auto spans = win::plan_windows(T, wcfg);

  std::vector<ToyForwardCache> caches(spans.size());
  Matrix agg(T, model.vocab_size());
  for (const auto& w : spans) {
    Matrix slice(static_cast<int>(w.end - w.start), ex.features.cols);
    for (int64_t t = w.start; t < w.end; ++t)
      for (int c = 0; c < ex.features.cols; ++c)
        slice.at(static_cast<int>(t - w.start), c) = ex.features.at(static_cast<int>(t), c);
    caches[static_cast<size_t>(w.index)] = toy_forward(model, slice, cond);
    const Matrix& lg = caches[static_cast<size_t>(w.index)].logits;
    for (int64_t t = w.emit_start; t < w.emit_end; ++t)
      for (int v = 0; v < model.vocab_size(); ++v)
        agg.at(static_cast<int>(t), v) = lg.at(static_cast<int>(t - w.start), v);
  }

  PassResult res;
  Matrix dagg;
  if (target) {
    auto r = ovasr::ctc::ctc_loss(agg, *target, blank);
    res.loss = r.loss;
    dagg = std::move(r.grad);
  } else {
    int64_t k = 0;
    auto r = ovasr::ctc::ctc_loss(agg, {}, blank);
    // count inserted characters: frames whose argmax is a speech label
    for (int t = 0; t < T; ++t) {
      const double* row = agg.row(t);
      int best = 0;
      for (int v = 1; v < agg.cols; ++v)
        if (row[v] > row[best]) best = v;
      if (best != blank) ++k;
    }
    double div = static_cast<double>(std::max<int64_t>(1, k));
    res.loss = r.loss / div;
    res.divisor = k;
    dagg = std::move(r.grad);
    for (double& v : dagg.data) v /= div;
  }
  if (!std::isfinite(res.loss)) return res;  // caller reports divergence

  // route aggregated gradients back to the producing windows; edge frames
  // received no gradient
  for (const auto& w : spans) {
    const auto& cache = caches[static_cast<size_t>(w.index)];
    Matrix dlog(cache.logits.rows, cache.logits.cols);
    for (int64_t t = w.emit_start; t < w.emit_end; ++t)
      for (int v = 0; v < dlog.cols; ++v)
        dlog.at(static_cast<int>(t - w.start), v) = dagg.at(static_cast<int>(t), v);
    Matrix slice(static_cast<int>(w.end - w.start), ex.features.cols);
    for (int64_t t = w.start; t < w.end; ++t)
      for (int c = 0; c < ex.features.cols; ++c)
        slice.at(static_cast<int>(t - w.start), c) = ex.features.at(static_cast<int>(t), c);
    grads.accumulate(toy_backward(model, slice, cond, cache, dlog));
  }
  return res;
}

}  // namespace

ScTrainReport toy_sc_train(const std::vector<ScTrainExample>& corpus,
                           const std::vector<Embedding>& speaker_pool,
                           ToySCModel& model, const ScTrainHyper& hyper, Rng& rng) {
  if (corpus.empty()) throw std::invalid_argument("toy_sc_train: empty corpus");
  const int blank = 0;
  ScTrainReport report;
  Momentum mom;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double loss_sum = 0.0;
    double k_sum = 0.0;
    int64_t k_count = 0;
    for (size_t bi = 0; bi < corpus.size(); ++bi) {
      const auto& ex = corpus[bi];
      Rng brng = rng.derive((static_cast<uint64_t>(epoch) << 32) ^ bi);

      // the extra "non-speaking" conditioning embedding, drawn from the pool
      // away from the participants
      Embedding nonspeaker;
      for (int tries = 0; tries < 64; ++tries) {
        const Embedding& cand =
            speaker_pool[static_cast<size_t>(brng.uniform_int(
                static_cast<int64_t>(speaker_pool.size())))];
        bool clash = false;
        for (const auto& p : ex.participants)
          if (cosine(cand, p) > 0.9) clash = true;
        if (!clash) {
          nonspeaker = cand;
          break;
        }
      }
      if (nonspeaker.empty())
        throw std::runtime_error("toy_sc_train: speaker pool has no non-participant");

      ToyGrads grads = ToyGrads::zeros_like(model);
      double batch_loss = 0.0;
      for (size_t s = 0; s < ex.participants.size(); ++s) {
        auto pr = run_pass(model, ex, ex.participants[s], &ex.targets[s], blank,
                           hyper.windowing, grads);
        batch_loss += pr.loss;
      }
      auto npr = run_pass(model, ex, nonspeaker, nullptr, blank, hyper.windowing, grads);
      batch_loss += npr.loss;
      k_sum += static_cast<double>(npr.divisor);
      ++k_count;

      if (!std::isfinite(batch_loss))
        throw std::runtime_error("toy_sc_train: loss diverged at epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(bi) +
                                 " (batch seed " + std::to_string(brng.seed()) + ")");

      double gn = std::sqrt(grads.squared_norm());
      if (hyper.grad_clip > 0.0 && gn > hyper.grad_clip)
        grads.scale(hyper.grad_clip / gn);
      sgd_update(model, grads, mom, hyper.learning_rate, hyper.momentum);
      loss_sum += batch_loss;
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(corpus.size()));
    report.epoch_divisor.push_back(k_sum / static_cast<double>(std::max<int64_t>(1, k_count)));
  }
  return report;
}

ScEvalResult toy_sc_evaluate(const std::vector<ScTrainExample>& corpus,
                             const std::vector<Embedding>& speaker_pool,
                             const ToySCModel& model, const win::WindowingConfig& wcfg,
                             int blank, Rng& rng) {
  ScEvalResult res;
  int64_t acc_count = 0, empty_total = 0, empty_hits = 0, k_count = 0;
  double acc_sum = 0.0, k_sum = 0.0;

  auto forward_agg = [&](const ScTrainExample& ex, const Embedding& cond) {
    auto spans = win::plan_windows(ex.features.rows, wcfg);
    Matrix agg(ex.features.rows, model.vocab_size());
    for (const auto& w : spans) {
      Matrix slice(static_cast<int>(w.end - w.start), ex.features.cols);
      for (int64_t t = w.start; t < w.end; ++t)
        for (int c = 0; c < ex.features.cols; ++c)
          slice.at(static_cast<int>(t - w.start), c) = ex.features.at(static_cast<int>(t), c);
      auto cache = toy_forward(model, slice, cond);
      for (int64_t t = w.emit_start; t < w.emit_end; ++t)
        for (int v = 0; v < model.vocab_size(); ++v)
          agg.at(static_cast<int>(t), v) = cache.logits.at(static_cast<int>(t - w.start), v);
    }
    return agg;
  };

  // simple token edit distance
  auto edit = [](const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
      cur[0] = i;
      for (size_t j = 1; j <= b.size(); ++j) {
        size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
        cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
      }
      std::swap(prev, cur);
    }
    return prev[b.size()];
  };

  for (size_t bi = 0; bi < corpus.size(); ++bi) {
    const auto& ex = corpus[bi];
    Rng brng = rng.derive(0xEA11ull ^ bi);
    for (size_t s = 0; s < ex.participants.size(); ++s) {
      Matrix agg = forward_agg(ex, ex.participants[s]);
      auto decoded = ovasr::ctc::greedy_decode(agg, blank);
      std::vector<int> hyp;
      hyp.reserve(decoded.size());
      for (const auto& d : decoded) hyp.push_back(d.id);
      const auto& ref = ex.targets[s];
      size_t dist = edit(hyp, ref);
      size_t den = std::max<size_t>(1, std::max(ref.size(), hyp.size()));
      acc_sum += std::max(0.0, 1.0 - static_cast<double>(dist) / static_cast<double>(den));
      ++acc_count;
    }
    // absent-speaker conditioning
    Embedding nonspeaker;
    for (int tries = 0; tries < 64 && nonspeaker.empty(); ++tries) {
      const Embedding& cand = speaker_pool[static_cast<size_t>(
          brng.uniform_int(static_cast<int64_t>(speaker_pool.size())))];
      bool clash = false;
      for (const auto& p : ex.participants)
        if (cosine(cand, p) > 0.9) clash = true;
      if (!clash) nonspeaker = cand;
    }
    if (!nonspeaker.empty()) {
      Matrix agg = forward_agg(ex, nonspeaker);
      auto decoded = ovasr::ctc::greedy_decode(agg, blank);
      ++empty_total;
      if (decoded.empty()) ++empty_hits;
      int64_t k = 0;
      ovasr::ctc::nonspeaker_normalized_loss(agg, blank, &k);
      k_sum += static_cast<double>(k);
      ++k_count;
    }
  }
  res.token_accuracy = acc_count ? acc_sum / static_cast<double>(acc_count) : 0.0;
  res.empty_rate = empty_total
                       ? static_cast<double>(empty_hits) / static_cast<double>(empty_total)
                       : 0.0;
  res.mean_divisor = k_count ? k_sum / static_cast<double>(k_count) : 0.0;
  return res;
}

}  // namespace ovasr::ac
