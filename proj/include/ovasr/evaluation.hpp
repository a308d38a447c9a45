#pragma once

#include <map>
#include <string>
#include <vector>

#include "ovasr/core.hpp"

namespace ovasr::eval {

struct WerCounts {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t ref_words = 0;

  int64_t errors() const { return substitutions + insertions + deletions; }
  // 100 * (S+I+D) / ref_words; insertions against an empty reference are
  // rated per word with the zero-reference case reported distinctly by
  // ref_words == 0.
  double rate() const {
    return 100.0 * static_cast<double>(errors()) /
           static_cast<double>(std::max<int64_t>(1, ref_words));
  }
  void accumulate(const WerCounts& o);
};

// Levenshtein alignment with unit costs; ties prefer substitution over an
// insertion+deletion pair.
WerCounts wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

struct WerBreakdown {
  WerCounts overall;
  WerCounts single_region;
  WerCounts overlap_region;
  std::map<std::string, WerCounts> per_speaker;
};

// Hypothesis/reference words carry times; a word belongs to the overlap
// region iff its midpoint lies inside an overlap interval. Hypothesis
// speakers absent from the reference count as insertions.
WerBreakdown region_wer(const std::map<std::string, std::vector<Segment>>& ref_words,
                        const std::map<std::string, std::vector<Segment>>& hyp_words,
                        const std::vector<std::pair<double, double>>& overlap_regions);

struct DetectionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct DetectionResult {
  DetectionScore frame;   // rasterized at frame_rate
  DetectionScore event;   // one-to-one matching within a 0.25 s collar
};

DetectionResult detection_f1(const std::vector<std::pair<double, double>>& truth,
                             const std::vector<std::pair<double, double>>& predicted,
                             int frame_rate, double duration_s);

// --- reporting -----------------------------------------------------------------

struct ReportRow {
  std::string model;                         // "baseline", "si+sc", "sc-only"
  int n = 1;
  double hw = 1.0;
  std::map<std::string, double> wer_by_method;  // mean/median/medoid/last
  double baseline_wer = -1.0;                   // used when wer_by_method empty
};

// Table CSV: model,N,HW,WER_mean,WER_median,WER_medoid,WER_last
void write_table(const std::vector<ReportRow>& rows, const std::string& path);

// Simultaneous-speaker time distribution CSV (speakers,seconds,share).
void write_cardinality_csv(const std::map<int, double>& time_by_cardinality,
                           const std::string& path);

// Overlap duration histogram CSV with cumulative duration shares
// (bin_upper_s,seconds,share,cumulative_share_above).
void write_duration_histogram_csv(const std::vector<double>& event_durations,
                                  const std::vector<double>& edges,
                                  const std::string& path);

// Aligned ASCII bar chart, one row per (label, value).
std::string ascii_bars(const std::vector<std::pair<std::string, double>>& rows,
                       int width = 40);

}  // namespace ovasr::eval
