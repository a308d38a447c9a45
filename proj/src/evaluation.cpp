#include "ovasr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ovasr::eval {

void WerCounts::accumulate(const WerCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  ref_words += o.ref_words;
}

WerCounts wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const size_t R = ref.size(), H = hyp.size();
  // dp[i][j]: cost aligning ref[0..i) with hyp[0..j)
  std::vector<std::vector<int64_t>> dp(R + 1, std::vector<int64_t>(H + 1, 0));
  for (size_t i = 0; i <= R; ++i) dp[i][0] = static_cast<int64_t>(i);
  for (size_t j = 0; j <= H; ++j) dp[0][j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= R; ++i) {
    for (size_t j = 1; j <= H; ++j) {
      int64_t sub = dp[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int64_t del = dp[i - 1][j] + 1;
      int64_t ins = dp[i][j - 1] + 1;
      dp[i][j] = std::min({sub, del, ins});
    }
  }
  // traceback, preferring the diagonal on ties
  WerCounts c;
  c.ref_words = static_cast<int64_t>(R);
  size_t i = R, j = H;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      int64_t sub = dp[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      if (sub == dp[i][j]) {
        if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && dp[i - 1][j] + 1 == dp[i][j]) {
      ++c.deletions;
      --i;
      continue;
    }
    ++c.insertions;
    --j;
  }
  return c;
}

namespace {

bool in_overlap(double t, const std::vector<std::pair<double, double>>& regions) {
  for (const auto& [a, b] : regions)
    if (t >= a && t < b) return true;
  return false;
}

}  // namespace

WerBreakdown region_wer(const std::map<std::string, std::vector<Segment>>& ref_words,
                        const std::map<std::string, std::vector<Segment>>& hyp_words,
                        const std::vector<std::pair<double, double>>& overlap_regions) {
  WerBreakdown out;
  std::set<std::string> speakers;
  for (const auto& [s, _] : ref_words) speakers.insert(s);
  for (const auto& [s, _] : hyp_words) speakers.insert(s);

  for (const auto& spk : speakers) {
    static const std::vector<Segment> kEmpty;
    const auto& refs = ref_words.count(spk) ? ref_words.at(spk) : kEmpty;
    const auto& hyps = hyp_words.count(spk) ? hyp_words.at(spk) : kEmpty;

    auto split = [&overlap_regions](const std::vector<Segment>& words) {
      std::pair<std::vector<std::string>, std::vector<std::string>> r;  // single, overlap
      for (const auto& w : words) {
        double mid = 0.5 * (w.start_s + w.end_s);
        (in_overlap(mid, overlap_regions) ? r.second : r.first).push_back(w.text);
      }
      return r;
    };
    auto [ref_single, ref_over] = split(refs);
    auto [hyp_single, hyp_over] = split(hyps);

    WerCounts cs = wer(ref_single, hyp_single);
    WerCounts co = wer(ref_over, hyp_over);
    out.single_region.accumulate(cs);
    out.overlap_region.accumulate(co);
    WerCounts total = cs;
    total.accumulate(co);
    out.per_speaker[spk] = total;
    out.overall.accumulate(total);
  }
  return out;
}

DetectionResult detection_f1(const std::vector<std::pair<double, double>>& truth,
                             const std::vector<std::pair<double, double>>& predicted,
                             int frame_rate, double duration_s) {
  DetectionResult res;
  const int64_t T = static_cast<int64_t>(std::llround(duration_s * frame_rate));
  auto rasterize = [&](const std::vector<std::pair<double, double>>& iv) {
    std::vector<char> mask(static_cast<size_t>(T), 0);
    for (const auto& [a, b] : iv) {
      int64_t f0 = std::clamp<int64_t>(static_cast<int64_t>(std::llround(a * frame_rate)), 0, T);
      int64_t f1 = std::clamp<int64_t>(static_cast<int64_t>(std::llround(b * frame_rate)), 0, T);
      for (int64_t t = f0; t < f1; ++t) mask[static_cast<size_t>(t)] = 1;
    }
    return mask;
  };
  auto tm = rasterize(truth);
  auto pm = rasterize(predicted);
  int64_t tp = 0, fp = 0, fn = 0;
  for (int64_t t = 0; t < T; ++t) {
    if (pm[static_cast<size_t>(t)] && tm[static_cast<size_t>(t)]) ++tp;
    else if (pm[static_cast<size_t>(t)]) ++fp;
    else if (tm[static_cast<size_t>(t)]) ++fn;
  }
  auto prf = [](int64_t tp_, int64_t fp_, int64_t fn_) {
    DetectionScore s;
    s.precision = tp_ + fp_ > 0 ? static_cast<double>(tp_) / static_cast<double>(tp_ + fp_) : 0.0;
    s.recall = tp_ + fn_ > 0 ? static_cast<double>(tp_) / static_cast<double>(tp_ + fn_) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                        : 0.0;
    return s;
  };
  res.frame = prf(tp, fp, fn);

  // event level: greedy one-to-one matching, onset within +-0.25 s
  const double collar = 0.25;
  std::vector<char> used(truth.size(), 0);
  int64_t etp = 0;
  for (const auto& p : predicted) {
    for (size_t i = 0; i < truth.size(); ++i) {
      if (used[i]) continue;
      if (std::abs(p.first - truth[i].first) <= collar) {
        used[i] = 1;
        ++etp;
        break;
      }
    }
  }
  res.event = prf(etp, static_cast<int64_t>(predicted.size()) - etp,
                  static_cast<int64_t>(truth.size()) - etp);
  return res;
}

// --- reporting -------------------------------------------------------------------

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_table(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write table: " + path);
  out << "model,N,HW,WER_mean,WER_median,WER_medoid,WER_last\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.n << ',' << fmt2(r.hw);
    if (r.wer_by_method.empty()) {
      // a single pooled number spans the method columns
      for (int i = 0; i < 4; ++i) out << ',' << fmt2(r.baseline_wer);
    } else {
      for (const auto* m : {"mean", "median", "medoid", "last"}) {
        auto it = r.wer_by_method.find(m);
        out << ',' << (it == r.wer_by_method.end() ? "" : fmt2(it->second));
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("I/O error writing " + path);
}

void write_cardinality_csv(const std::map<int, double>& time_by_cardinality,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  double total = 0.0;
  for (const auto& [_, v] : time_by_cardinality) total += v;
  out << "speakers,seconds,share\n";
  for (const auto& [k, v] : time_by_cardinality)
    out << k << ',' << fmt2(v) << ',' << fmt2(total > 0 ? 100.0 * v / total : 0.0) << '\n';
}

void write_duration_histogram_csv(const std::vector<double>& event_durations,
                                  const std::vector<double>& edges,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "bin_upper_s,seconds,share,cumulative_share_above\n";
  double total = 0.0;
  for (double d : event_durations) total += d;
  std::vector<double> all_edges = edges;
  all_edges.push_back(std::numeric_limits<double>::infinity());
  double lower = 0.0;
  for (double upper : all_edges) {
    double mass = 0.0, above = 0.0;
    for (double d : event_durations) {
      if (d > lower && d <= upper) mass += d;
      if (d > upper) above += d;
    }
    if (std::isinf(upper))
      out << "inf";
    else
      out << format_float(upper);
    out << ',' << fmt2(mass) << ',' << fmt2(total > 0 ? 100.0 * mass / total : 0.0) << ','
        << fmt2(total > 0 ? 100.0 * above / total : 0.0) << '\n';
    lower = upper;
  }
}

std::string ascii_bars(const std::vector<std::pair<std::string, double>>& rows, int width) {
  double maxv = 0.0;
  size_t label_w = 0;
  for (const auto& [label, v] : rows) {
    maxv = std::max(maxv, v);
    label_w = std::max(label_w, label.size());
  }
  std::ostringstream out;
  for (const auto& [label, v] : rows) {
    int bar = maxv > 0 ? static_cast<int>(std::lround(v / maxv * width)) : 0;
    out << label << std::string(label_w - label.size(), ' ') << " |"
        << std::string(static_cast<size_t>(bar), '#') << ' ' << fmt2(v) << '\n';
  }
  return out.str();
}

}  // namespace ovasr::eval
