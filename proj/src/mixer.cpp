#include "ovasr/mixer.hpp"

#include <algorithm>
#include <cmath>

namespace ovasr::mixer {

FeatureParams FeatureParams::levels_for(int vocab_size) {
  FeatureParams p;
  p.amplitudes.assign(static_cast<size_t>(vocab_size), 0.0);
  // symmetric levels around zero, blank stays at 0
  int k = 0;
  for (int v = 1; v < vocab_size; ++v) {
    int step = k / 2 + 1;
    double a = 0.5 * step;
    p.amplitudes[static_cast<size_t>(v)] = (k % 2 == 0) ? a : -a;
    ++k;
  }
  return p;
}

std::vector<int> frame_tokens(const Segment& utterance, const Vocabulary& vocab,
                              int frame_rate) {
  auto ids = vocab.encode(utterance.text);
  int64_t T = static_cast<int64_t>(std::llround(utterance.duration_s() * frame_rate));
  if (T < static_cast<int64_t>(ids.size()))
    throw std::invalid_argument("utterance too short for its token count: '" +
                                utterance.text + "'");
  std::vector<int> out(static_cast<size_t>(T), vocab.blank_index);
  const int64_t n = static_cast<int64_t>(ids.size());
  for (int64_t i = 0; i < n; ++i) {
    int64_t f0 = i * T / n;
    int64_t f1 = (i + 1) * T / n;
    for (int64_t t = f0; t < f1; ++t) out[static_cast<size_t>(t)] = ids[static_cast<size_t>(i)];
  }
  return out;
}

std::vector<Segment> layout_words(const Segment& utterance, const Vocabulary& vocab,
                                  int frame_rate) {
  auto ids = vocab.encode(utterance.text);
  int64_t T = static_cast<int64_t>(std::llround(utterance.duration_s() * frame_rate));
  const int64_t n = static_cast<int64_t>(ids.size());
  const int space = vocab.find(" ");
  std::vector<Segment> words;
  std::string cur;
  int64_t cur_start = -1, cur_end = -1;
  for (int64_t i = 0; i < n; ++i) {
    int64_t f0 = i * T / n;
    int64_t f1 = (i + 1) * T / n;
    if (ids[static_cast<size_t>(i)] == space) {
      if (!cur.empty()) {
        words.push_back({utterance.start_s + static_cast<double>(cur_start) / frame_rate,
                         utterance.start_s + static_cast<double>(cur_end) / frame_rate,
                         utterance.speaker, cur});
        cur.clear();
      }
    } else {
      if (cur.empty()) cur_start = f0;
      cur_end = f1;
      cur += vocab.tokens[static_cast<size_t>(ids[static_cast<size_t>(i)])];
    }
  }
  if (!cur.empty())
    words.push_back({utterance.start_s + static_cast<double>(cur_start) / frame_rate,
                     utterance.start_s + static_cast<double>(cur_end) / frame_rate,
                     utterance.speaker, cur});
  return words;
}

namespace {

// recomputes ground-truth overlap regions from the frame activity
std::vector<std::pair<double, double>> regions_from_frames(
    const std::vector<AlignedFrame>& frames, int frame_rate) {
  std::vector<std::pair<double, double>> out;
  int64_t start = -1;
  for (int64_t t = 0; t <= static_cast<int64_t>(frames.size()); ++t) {
    bool ov = t < static_cast<int64_t>(frames.size()) && frames[static_cast<size_t>(t)].overlapped();
    if (ov && start < 0) start = t;
    if (!ov && start >= 0) {
      out.push_back({static_cast<double>(start) / frame_rate, static_cast<double>(t) / frame_rate});
      start = -1;
    }
  }
  return out;
}

}  // namespace

Mixture mix(const SourceUtterance& a, const SourceUtterance& b, const MixSpec& spec,
            const std::map<std::string, Embedding>& enrollment, const Vocabulary& vocab,
            int frame_rate) {
  if (a.speaker == b.speaker)
    throw std::invalid_argument("mix: sources must come from different speakers");
  for (const auto* u : {&a, &b}) {
    if (u->duration_s < MixSpec::kMinLen - 1e-9 || u->duration_s > MixSpec::kMaxLen + 1e-9)
      throw std::invalid_argument("mix: segment length outside [1, 45] s");
  }

  double b_start = spec.shift_s;
  if (spec.scenario == MixSpec::Scenario::kTransition) {
    if (!(b_start > 0.0 && b_start < a.duration_s))
      throw std::invalid_argument("mix: transition shift must fall inside segment A");
  } else {
    if (b.duration_s >= a.duration_s)
      throw std::invalid_argument("mix: interruption requires B shorter than A");
    if (!(b_start > 0.0 && b_start + b.duration_s <= a.duration_s))
      throw std::invalid_argument("mix: interruption must embed B inside A");
  }

  Mixture m;
  m.frame_rate = frame_rate;
  double total = std::max(a.duration_s, b_start + b.duration_s);
  Segment seg_a{0.0, a.duration_s, a.speaker, a.text};
  Segment seg_b{b_start, b_start + b.duration_s, b.speaker, b.text};
  m.segments = {seg_a, seg_b};
  std::stable_sort(m.segments.begin(), m.segments.end(),
                   [](const Segment& x, const Segment& y) { return x.start_s < y.start_s; });
  m.gains[a.speaker] = spec.gain_a;
  m.gains[b.speaker] = spec.gain_b;
  for (const auto& seg : m.segments) {
    auto it = enrollment.find(seg.speaker);
    if (it == enrollment.end())
      throw std::invalid_argument("mix: missing enrollment for " + seg.speaker);
    m.enrollment[seg.speaker] = it->second;
  }

  int64_t T = static_cast<int64_t>(std::llround(total * frame_rate));
  m.frames.assign(static_cast<size_t>(T), AlignedFrame{});
  // dominant speaker first: A is the base segment in both scenarios
  for (const Segment* seg : {&seg_a, &seg_b}) {
    auto toks = frame_tokens(*seg, vocab, frame_rate);
    int64_t off = static_cast<int64_t>(std::llround(seg->start_s * frame_rate));
    for (int64_t t = 0; t < static_cast<int64_t>(toks.size()); ++t) {
      if (toks[static_cast<size_t>(t)] == vocab.blank_index) continue;
      m.frames[static_cast<size_t>(off + t)].active.push_back(
          {seg->speaker, toks[static_cast<size_t>(t)]});
    }
    if (off >= 0 && off < T) m.frames[static_cast<size_t>(off)].change_point = true;
  }
  m.overlap_regions = regions_from_frames(m.frames, frame_rate);
  return m;
}

void render_features(Mixture& m, const FeatureParams& params, Rng& rng) {
  if (m.enrollment.empty()) throw std::invalid_argument("render_features: no enrollment");
  const int D = static_cast<int>(m.enrollment.begin()->second.size());
  const int T = static_cast<int>(m.frames.size());
  m.features = Matrix(T, D);
  for (int t = 0; t < T; ++t) {
    for (const auto& act : m.frames[static_cast<size_t>(t)].active) {
      if (act.token < 0 || act.token >= static_cast<int>(params.amplitudes.size()))
        throw std::invalid_argument("render_features: token without amplitude level");
      double amp = params.amplitudes[static_cast<size_t>(act.token)];
      double gain = 1.0;
      auto git = m.gains.find(act.speaker);
      if (git != m.gains.end()) gain = git->second;
      const Embedding& e = m.enrollment.at(act.speaker);
      for (int d = 0; d < D; ++d)
        m.features.at(t, d) += gain * amp * e[static_cast<size_t>(d)];
    }
    if (params.noise_std > 0.0)
      for (int d = 0; d < D; ++d) m.features.at(t, d) += rng.normal(0.0, params.noise_std);
  }
}

void render_audio(Mixture& m, const Vocabulary& vocab) {
  const int64_t n = static_cast<int64_t>(m.duration_s() * kSampleRate + 0.5);
  std::vector<double> acc(static_cast<size_t>(n), 0.0);
  // per-speaker fundamental, token modulates the pitch; purely synthetic but
  // deterministic and summable
  int spk_index = 0;
  std::map<std::string, double> f0;
  for (const auto& [id, _] : m.enrollment) f0[id] = 140.0 + 40.0 * spk_index++;
  for (const auto& seg : m.segments) {
    auto toks = frame_tokens(seg, vocab, m.frame_rate);
    double gain = m.gains.count(seg.speaker) ? m.gains.at(seg.speaker) : 1.0;
    int64_t s0 = static_cast<int64_t>(std::llround(seg.start_s * kSampleRate));
    const int64_t samples_per_frame = kSampleRate / m.frame_rate;
    for (int64_t t = 0; t < static_cast<int64_t>(toks.size()); ++t) {
      int tok = toks[static_cast<size_t>(t)];
      if (tok == vocab.blank_index) continue;
      double freq = f0[seg.speaker] * (1.0 + 0.03 * tok);
      for (int64_t k = 0; k < samples_per_frame; ++k) {
        int64_t idx = s0 + t * samples_per_frame + k;
        if (idx < 0 || idx >= n) continue;
        double ph = 2.0 * M_PI * freq * static_cast<double>(idx) / kSampleRate;
        acc[static_cast<size_t>(idx)] += gain * 0.2 * std::sin(ph);
      }
    }
  }
  m.audio.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double v = std::clamp(acc[static_cast<size_t>(i)], -1.0, 1.0) * 32767.0;
    m.audio.samples[static_cast<size_t>(i)] = static_cast<int16_t>(std::lrint(v));
  }
}

// --- pool + corpus -----------------------------------------------------------

std::vector<std::string> SpeakerPool::speakers() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : enrollment) out.push_back(id);
  return out;
}

namespace {

// rows of a random orthonormal basis via Gram-Schmidt
std::vector<Embedding> orthonormal_embeddings(int count, int dim, Rng& rng) {
  if (count > dim)
    throw std::invalid_argument("orthonormal pool needs n_speakers <= embed_dim");
  std::vector<Embedding> rows;
  while (static_cast<int>(rows.size()) < count) {
    Embedding v(static_cast<size_t>(dim));
    for (double& x : v) x = rng.normal();
    for (const auto& r : rows) {
      double p = dot(v, r);
      for (size_t d = 0; d < v.size(); ++d) v[d] -= p * r[d];
    }
    double nv = norm(v);
    if (nv < 1e-6) continue;  // degenerate draw, retry
    for (double& x : v) x /= nv;
    rows.push_back(std::move(v));
  }
  return rows;
}

std::string random_text(double duration_s, int frame_rate, const Vocabulary& vocab,
                        Rng& rng) {
  // budget ~5 frames per character, always at least one word
  int64_t budget = std::max<int64_t>(2, static_cast<int64_t>(duration_s * frame_rate) / 5);
  std::string letters;
  for (const auto& t : vocab.tokens)
    if (t.size() == 1 && t != " " && t != vocab.tokens[static_cast<size_t>(vocab.blank_index)])
      letters += t;
  std::string text;
  int64_t used = 0;
  while (used < budget) {
    int64_t wlen = 2 + rng.uniform_int(5);
    if (!text.empty()) {
      text += ' ';
      ++used;
    }
    for (int64_t i = 0; i < wlen && used < budget; ++i) {
      text += letters[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(letters.size())))];
      ++used;
    }
  }
  return text;
}

}  // namespace

SpeakerPool make_pool(int n_speakers, int utterances_per_speaker, double min_len_s,
                      double max_len_s, int embed_dim, const Vocabulary& vocab, Rng& rng) {
  if (n_speakers < 2) throw std::invalid_argument("make_pool: need at least 2 speakers");
  SpeakerPool pool;
  auto embs = orthonormal_embeddings(n_speakers, embed_dim, rng);
  for (int s = 0; s < n_speakers; ++s) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "spk%c", 'a' + s);
    std::string id = buf;
    pool.enrollment[id] = embs[static_cast<size_t>(s)];
    for (int u = 0; u < utterances_per_speaker; ++u) {
      SourceUtterance su;
      su.speaker = id;
      su.duration_s = rng.uniform(min_len_s, max_len_s);
      // quantize to whole frames so layouts are exact
      su.duration_s = std::round(su.duration_s * 50.0) / 50.0;
      su.text = random_text(su.duration_s, 50, vocab, rng);
      pool.utterances.push_back(std::move(su));
    }
  }
  return pool;
}

std::vector<Mixture> sample_corpus(const SpeakerPool& pool, int count,
                                   const CorpusConfig& cfg, const Vocabulary& vocab,
                                   Rng& rng) {
  auto speakers = pool.speakers();
  if (speakers.size() < 2)
    throw std::invalid_argument("sample_corpus: pool must contain at least 2 speakers");
  std::map<std::string, std::vector<const SourceUtterance*>> by_spk;
  for (const auto& u : pool.utterances) by_spk[u.speaker].push_back(&u);

  std::vector<Mixture> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng mrng = rng.derive(static_cast<uint64_t>(i) + 1);
    Mixture m;
    for (int tries = 0;; ++tries) {
      if (tries > 200)
        throw std::runtime_error("sample_corpus: could not place a valid mixture");
      const auto& sa = speakers[static_cast<size_t>(mrng.uniform_int(
          static_cast<int64_t>(speakers.size())))];
      const auto& sb = speakers[static_cast<size_t>(mrng.uniform_int(
          static_cast<int64_t>(speakers.size())))];
      if (sa == sb) continue;
      const auto& ua = *by_spk[sa][static_cast<size_t>(
          mrng.uniform_int(static_cast<int64_t>(by_spk[sa].size())))];
      const auto& ub = *by_spk[sb][static_cast<size_t>(
          mrng.uniform_int(static_cast<int64_t>(by_spk[sb].size())))];

      MixSpec spec;
      bool transition = mrng.uniform() < cfg.transition_ratio;
      if (transition) {
        double max_ov = std::min(ua.duration_s - cfg.min_single_s,
                                 ub.duration_s - cfg.min_single_s);
        if (max_ov <= cfg.min_overlap_s) continue;
        double ov = mrng.uniform(cfg.min_overlap_s, max_ov);
        spec.scenario = MixSpec::Scenario::kTransition;
        spec.shift_s = ua.duration_s - ov;
      } else {
        if (ub.duration_s < cfg.min_overlap_s) continue;
        double max_off = ua.duration_s - ub.duration_s - cfg.min_single_s;
        if (max_off <= cfg.min_single_s) continue;
        spec.scenario = MixSpec::Scenario::kInterruption;
        spec.shift_s = mrng.uniform(cfg.min_single_s, max_off);
        spec.gain_b = std::exp(mrng.uniform(std::log(0.25), std::log(2.0)));
      }
      // snap to whole frames so ground truth stays exact
      spec.shift_s = std::round(spec.shift_s * cfg.frame_rate) / cfg.frame_rate;
      if (spec.shift_s <= 0.0 || spec.shift_s >= ua.duration_s) continue;

      m = mix(ua, ub, spec, pool.enrollment, vocab, cfg.frame_rate);
      break;
    }
    if (cfg.with_features) {
      Rng frng = mrng.derive(0xFEA7);
      render_features(m, cfg.features, frng);
    }
    out.push_back(std::move(m));
  }
  return out;
}

// --- stats ---------------------------------------------------------------------

double OverlapStats::duration_fraction_above(double t) const {
  double total = 0.0, above = 0.0;
  for (double d : event_durations) {
    total += d;
    if (d > t) above += d;
  }
  return total > 0 ? above / total : 0.0;
}

double OverlapStats::count_fraction_above(double t) const {
  if (event_durations.empty()) return 0.0;
  double above = 0.0;
  for (double d : event_durations)
    if (d > t) above += 1.0;
  return above / static_cast<double>(event_durations.size());
}

std::vector<std::pair<double, double>> OverlapStats::duration_histogram(
    const std::vector<double>& edges) const {
  std::vector<std::pair<double, double>> bins;
  for (double e : edges) bins.push_back({e, 0.0});
  bins.push_back({std::numeric_limits<double>::infinity(), 0.0});
  for (double d : event_durations) {
    for (auto& [upper, mass] : bins) {
      if (d <= upper) {
        mass += d;
        break;
      }
    }
  }
  return bins;
}

OverlapStats overlap_stats(const std::vector<Segment>& segments, double total_duration_s) {
  OverlapStats st;
  st.total_s = total_duration_s;
  std::vector<std::pair<double, int>> events;
  for (const auto& s : segments) {
    events.push_back({s.start_s, +1});
    events.push_back({s.end_s, -1});
  }
  std::sort(events.begin(), events.end());
  int active = 0;
  double prev = 0.0;
  double event_start = -1.0;
  for (size_t i = 0; i < events.size(); ++i) {
    double t = events[i].first;
    if (t > prev && active > 0) st.time_by_cardinality[active] += t - prev;
    if (t > prev && active >= 2) st.overlap_s += t - prev;
    int before = active;
    active += events[i].second;
    // merge zero-length event boundaries
    while (i + 1 < events.size() && events[i + 1].first == t) {
      active += events[++i].second;
    }
    if (before < 2 && active >= 2) event_start = t;
    if (before >= 2 && active < 2 && event_start >= 0) {
      st.event_durations.push_back(t - event_start);
      event_start = -1.0;
    }
    prev = t;
  }
  return st;
}

OverlapStats overlap_stats(const std::vector<Mixture>& mixtures) {
  OverlapStats st;
  for (const auto& m : mixtures) {
    auto one = overlap_stats(m.segments, m.duration_s());
    st.total_s += one.total_s;
    st.overlap_s += one.overlap_s;
    for (const auto& [k, v] : one.time_by_cardinality) st.time_by_cardinality[k] += v;
    st.event_durations.insert(st.event_durations.end(), one.event_durations.begin(),
                              one.event_durations.end());
  }
  return st;
}

}  // namespace ovasr::mixer
