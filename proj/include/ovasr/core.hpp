#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ovasr {

constexpr int kSampleRate = 16000;
inline const std::string kNonSpeechId = "<nonspeech>";

// Deterministic random source. All stochastic procedures take one of these
// explicitly; equal seeds give equal draws on every platform, so the
// transforms below are hand-rolled instead of using std:: distributions
// (whose output is implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // [0, n)
  int64_t uniform_int(int64_t n);
  double normal(double mean = 0.0, double stddev = 1.0);

  // Independent stream for a sub-task; stable across platforms.
  Rng derive(uint64_t tag) const;

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
};

// Row-major dense matrix of doubles. Used for logits, features and weights.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Speaker embedding; unit L2 norm by convention (see normalized()).
using Embedding = std::vector<double>;

double dot(const Embedding& a, const Embedding& b);
double norm(const Embedding& a);
// Cosine similarity of two unit-norm embeddings is just their dot product;
// this one tolerates non-normalized inputs.
double cosine(const Embedding& a, const Embedding& b);
// Returns v / ||v||; throws on (near-)zero vectors.
Embedding normalized(Embedding v);

struct AudioStream {
  std::vector<int16_t> samples;
  int sample_rate = kSampleRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// One annotated span of speech: [start_s, end_s) attributed to one speaker.
// `text` holds the spoken tokens; at desk scale tokens are characters and
// words are the space-separated groups within `text`.
struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string speaker;
  std::string text;

  double duration_s() const { return end_s - start_s; }
  std::vector<std::string> words() const;
  bool operator==(const Segment&) const = default;
};

void validate_segment(const Segment& s);

struct AnnotatedStream {
  AudioStream audio;  // may be empty for symbolic streams
  std::vector<Segment> segments;

  double duration_s() const;
  // sorted by start, same-speaker spans disjoint, times within audio
  void validate() const;
};

// CTC label alphabet. Token 0 is conventionally the blank.
struct Vocabulary {
  std::vector<std::string> tokens;
  int blank_index = 0;

  int size() const { return static_cast<int>(tokens.size()); }
  // Character tokens: blank + the given symbols, one token per char.
  static Vocabulary chars(const std::string& symbols);
  // Default desk-scale alphabet: lowercase letters plus space.
  static Vocabulary default_chars();
  // Encodes text character-by-character; throws on symbols outside the
  // alphabet.
  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;
  int find(const std::string& tok) const;  // -1 when absent
};

// Ground-truth activity of one frame, shared by the mixer and the oracle
// acoustic models. `active` is ordered: the dominant speaker first.
struct ActiveToken {
  std::string speaker;
  int token = 0;
  bool operator==(const ActiveToken&) const = default;
};

struct AlignedFrame {
  std::vector<ActiveToken> active;
  bool change_point = false;  // ground-truth speaker turn start

  bool overlapped() const { return active.size() >= 2; }
  bool operator==(const AlignedFrame&) const = default;
};

// --- corpus file formats -------------------------------------------------

// Tab-separated `start_s<TAB>end_s<TAB>speaker<TAB>text`, one segment per
// line, times with 3 decimal places. Errors carry the 1-based line number.
std::vector<Segment> read_annotation(const std::string& path);
void write_annotation(const std::vector<Segment>& segments, const std::string& path);

// `speaker_id<TAB>v1,v2,...,vD`; embeddings renormalized to unit norm on
// read, printed with 6 significant digits.
std::vector<std::pair<std::string, Embedding>> read_embeddings(const std::string& path);
void write_embeddings(const std::vector<std::pair<std::string, Embedding>>& embs,
                      const std::string& path);

// RIFF/WAVE, PCM16 mono 16 kHz only; anything else is rejected.
AudioStream read_wav(const std::string& path);
void write_wav(const AudioStream& audio, const std::string& path);

std::string format_time(double seconds);   // %.3f
std::string format_float(double v);        // %.6g

}  // namespace ovasr
