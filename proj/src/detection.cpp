#include "ovasr/detection.hpp"

#include <algorithm>
#include <cmath>

namespace ovasr::detect {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_p(double p) { return std::min(1.0 - 1e-12, std::max(1e-12, p)); }

}  // namespace

OverlapHead OverlapHead::zeros(int hidden_dim) {
  OverlapHead h;
  h.weights.assign(static_cast<size_t>(hidden_dim), 0.0);
  return h;
}

double OverlapHead::prob(const double* feature) const {
  double s = bias;
  for (size_t i = 0; i < weights.size(); ++i) s += weights[i] * feature[i];
  return sigmoid(s);
}

std::pair<std::vector<double>, double> overlap_head_gradient(const Matrix& features,
                                                             const std::vector<int>& labels,
                                                             const OverlapHead& head) {
  const int N = features.rows;
  std::vector<double> dw(head.weights.size(), 0.0);
  double db = 0.0;
  for (int i = 0; i < N; ++i) {
    double p = head.prob(features.row(i));
    double err = p - static_cast<double>(labels[static_cast<size_t>(i)]);
    db += err;
    for (size_t j = 0; j < dw.size(); ++j) dw[j] += err * features.at(i, static_cast<int>(j));
  }
  for (double& v : dw) v /= N;
  db /= N;
  return {dw, db};
}

OverlapTrainReport train_overlap_head(const Matrix& features, const std::vector<int>& labels,
                                      OverlapHead& head, const OverlapTrainHyper& hyper) {
  const int N = features.rows;
  if (N == 0 || static_cast<size_t>(N) != labels.size())
    throw std::invalid_argument("train_overlap_head: feature/label size mismatch");
  if (features.cols != static_cast<int>(head.weights.size()))
    throw std::invalid_argument("train_overlap_head: feature width does not match head");
  int positives = 0;
  for (int y : labels) positives += (y != 0);
  if (positives == 0 || positives == N)
    throw std::invalid_argument("train_overlap_head: degenerate single-class data");

  OverlapTrainReport report;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double loss = 0.0;
    for (int i = 0; i < N; ++i) {
      double p = clamp_p(head.prob(features.row(i)));
      loss -= labels[static_cast<size_t>(i)] ? std::log(p) : std::log(1.0 - p);
    }
    report.loss_curve.push_back(loss / N);
    auto [dw, db] = overlap_head_gradient(features, labels, head);
    for (size_t j = 0; j < head.weights.size(); ++j)
      head.weights[j] -= hyper.learning_rate * dw[j];
    head.bias -= hyper.learning_rate * db;
  }
  int correct = 0;
  for (int i = 0; i < N; ++i) {
    int pred = head.prob(features.row(i)) >= 0.5 ? 1 : 0;
    correct += (pred == labels[static_cast<size_t>(i)]);
  }
  report.accuracy = static_cast<double>(correct) / N;
  return report;
}

std::vector<double> overlap_probs(const AcousticOutput& output, const OverlapHead& head) {
  std::vector<double> out(static_cast<size_t>(output.hidden.rows));
  for (int t = 0; t < output.hidden.rows; ++t)
    out[static_cast<size_t>(t)] = head.prob(output.hidden.row(t));
  return out;
}

std::vector<LabelRun> extract_runs(const std::vector<double>& probs, double threshold,
                                   int smooth_width, double min_run_s, int frame_rate) {
  const int64_t T = static_cast<int64_t>(probs.size());
  if (T == 0) return {};

  std::vector<char> raw(static_cast<size_t>(T));
  for (int64_t t = 0; t < T; ++t) raw[static_cast<size_t>(t)] = probs[static_cast<size_t>(t)] >= threshold;

  // median filter on the binary decisions; edges replicate
  std::vector<char> smooth(static_cast<size_t>(T));
  const int half = std::max(0, smooth_width / 2);
  for (int64_t t = 0; t < T; ++t) {
    int ones = 0, total = 0;
    for (int64_t k = t - half; k <= t + half; ++k) {
      int64_t idx = std::clamp<int64_t>(k, 0, T - 1);
      ones += raw[static_cast<size_t>(idx)];
      ++total;
    }
    smooth[static_cast<size_t>(t)] = 2 * ones > total;
  }

  std::vector<LabelRun> runs;
  for (int64_t t = 0; t < T; ++t) {
    if (runs.empty() || runs.back().overlap != static_cast<bool>(smooth[static_cast<size_t>(t)])) {
      runs.push_back({t, t + 1, static_cast<bool>(smooth[static_cast<size_t>(t)])});
    } else {
      runs.back().end_frame = t + 1;
    }
  }

  if (min_run_s > 0.0) {
    const int64_t min_frames = static_cast<int64_t>(min_run_s * frame_rate + 0.5);
    std::vector<LabelRun> merged;
    for (const auto& r : runs) {
      if (!merged.empty() && (r.end_frame - r.start_frame) < min_frames) {
        merged.back().end_frame = r.end_frame;  // absorb into the previous run
      } else if (!merged.empty() && merged.back().overlap == r.overlap) {
        merged.back().end_frame = r.end_frame;
      } else {
        merged.push_back(r);
      }
    }
    runs = std::move(merged);
  }
  return runs;
}

std::vector<LabelRun> detect_overlap(const AcousticOutput& output, const OverlapHead& head,
                                     double threshold, double min_run_s, int frame_rate) {
  return extract_runs(overlap_probs(output, head), threshold, 5, min_run_s, frame_rate);
}

namespace {

ModeTimeline merge_adjacent(const ModeTimeline& runs) {
  ModeTimeline out;
  for (const auto& r : runs) {
    if (!out.empty() && out.back().mode == r.mode &&
        (r.mode == Mode::kOverlap || out.back().speaker == r.speaker)) {
      out.back().end_s = r.end_s;
    } else {
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace

ModeTimeline postprocess_modes(const ModeTimeline& runs, double min_s) {
  for (size_t i = 1; i < runs.size(); ++i) {
    if (std::abs(runs[i].start_s - runs[i - 1].end_s) > 1e-9)
      throw std::invalid_argument("postprocess_modes: runs must be contiguous");
  }
  ModeTimeline cur = merge_adjacent(runs);

  // rule 1: short single-speaker runs cannot be identified reliably
  for (auto& r : cur) {
    if (r.mode == Mode::kSingle && (r.end_s - r.start_s) < min_s) {
      r.mode = Mode::kOverlap;
      r.speaker.clear();
    }
  }
  cur = merge_adjacent(cur);

  // rule 2: short overlaps flanked by the same speaker are brief interjections
  for (size_t i = 0; i < cur.size(); ++i) {
    if (cur[i].mode != Mode::kOverlap) continue;
    if ((cur[i].end_s - cur[i].start_s) >= min_s) continue;
    if (i == 0 || i + 1 >= cur.size()) continue;
    const auto& prev = cur[i - 1];
    const auto& next = cur[i + 1];
    if (prev.mode == Mode::kSingle && next.mode == Mode::kSingle &&
        prev.speaker == next.speaker) {
      cur[i].mode = Mode::kSingle;
      cur[i].speaker = prev.speaker;
    }
  }
  return merge_adjacent(cur);
}

CollarLoss collar_bce_loss(const std::vector<double>& change_probs,
                           const std::vector<CollarRegion>& collars, int frame_rate) {
  const int64_t T = static_cast<int64_t>(change_probs.size());
  CollarLoss res;
  res.grad.assign(change_probs.size(), 0.0);

  std::vector<char> in_collar(change_probs.size(), 0);
  struct FrameCollar {
    int64_t start, end;
  };
  std::vector<FrameCollar> fcollars;
  for (const auto& c : collars) {
    if (!(c.start_s < c.end_s))
      throw std::invalid_argument("collar_bce_loss: collar start must precede end");
    int64_t f0 = std::clamp<int64_t>(static_cast<int64_t>(std::llround(c.start_s * frame_rate)), 0, T);
    int64_t f1 = std::clamp<int64_t>(static_cast<int64_t>(std::llround(c.end_s * frame_rate)), 0, T);
    if (f1 <= f0) {
      res.warnings.push_back("collar [" + format_time(c.start_s) + ", " +
                             format_time(c.end_s) + ") empty after frame quantization");
      continue;
    }
    fcollars.push_back({f0, f1});
    for (int64_t t = f0; t < f1; ++t) in_collar[static_cast<size_t>(t)] = 1;
  }

  for (int64_t t = 0; t < T; ++t) {
    if (in_collar[static_cast<size_t>(t)]) continue;
    double p = clamp_p(change_probs[static_cast<size_t>(t)]);
    res.loss -= std::log(1.0 - p);
    res.grad[static_cast<size_t>(t)] = 1.0 / (1.0 - p);
  }
  for (const auto& c : fcollars) {
    int64_t best = c.start;
    for (int64_t t = c.start; t < c.end; ++t)
      if (change_probs[static_cast<size_t>(t)] > change_probs[static_cast<size_t>(best)])
        best = t;
    double p = clamp_p(change_probs[static_cast<size_t>(best)]);
    res.loss -= std::log(p);
    // subgradient through the max: only the peak frame moves
    res.grad[static_cast<size_t>(best)] += -1.0 / p;
  }
  return res;
}

std::vector<double> detect_changes(const std::vector<double>& change_probs,
                                   double threshold, double min_gap_s, int frame_rate) {
  const int64_t T = static_cast<int64_t>(change_probs.size());
  struct Peak {
    int64_t frame;
    double value;
  };
  std::vector<Peak> peaks;
  for (int64_t t = 0; t < T; ++t) {
    double p = change_probs[static_cast<size_t>(t)];
    if (p < threshold) continue;
    double prev = t > 0 ? change_probs[static_cast<size_t>(t - 1)] : -1.0;
    double next = t + 1 < T ? change_probs[static_cast<size_t>(t + 1)] : -1.0;
    // first frame of a plateau counts as the peak
    if (p > prev && p >= next) peaks.push_back({t, p});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.frame < b.frame;
  });
  const double min_gap_frames = min_gap_s * frame_rate;
  std::vector<int64_t> kept;
  for (const auto& p : peaks) {
    bool ok = true;
    for (int64_t k : kept)
      if (std::abs(static_cast<double>(k - p.frame)) < min_gap_frames) ok = false;
    if (ok) kept.push_back(p.frame);
  }
  std::sort(kept.begin(), kept.end());
  std::vector<double> out;
  out.reserve(kept.size());
  for (int64_t f : kept) out.push_back(static_cast<double>(f) / frame_rate);
  return out;
}

TurnAnalysis nonspeech_turns(const std::vector<Segment>& segments, double context_s) {
  TurnAnalysis res;
  for (size_t i = 1; i < segments.size(); ++i) {
    const auto& prev = segments[i - 1];
    const auto& next = segments[i];
    double gap = next.start_s - prev.end_s;
    if (gap <= 0.0) continue;  // overlapping turns carry no collar
    if (gap > context_s) {
      // long non-speech: a turn boundary at each edge of the gap
      double ext = std::min(context_s, gap / 2.0);
      res.collars.push_back({prev.end_s, prev.end_s + ext});
      res.collars.push_back({next.start_s - ext, next.start_s});
      res.boundaries.push_back(prev.end_s);
      res.boundaries.push_back(next.start_s);
    } else if (prev.speaker != next.speaker) {
      res.collars.push_back({prev.end_s, next.start_s});
    }
  }
  return res;
}

}  // namespace ovasr::detect
