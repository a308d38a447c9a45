#include "ovasr/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ovasr {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

int64_t Rng::uniform_int(int64_t n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  return static_cast<int64_t>(uniform() * static_cast<double>(n));
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller; two fresh uniforms per draw keeps the stream stateless.
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

Rng Rng::derive(uint64_t tag) const {
  return Rng(splitmix64(seed_ ^ splitmix64(tag)));
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Embedding& a) { return std::sqrt(dot(a, a)); }

double cosine(const Embedding& a, const Embedding& b) {
  double na = norm(a), nb = norm(b);
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

Embedding normalized(Embedding v) {
  double n = norm(v);
  if (n < 1e-12) throw std::invalid_argument("cannot normalize zero embedding");
  for (double& x : v) x /= n;
  return v;
}

std::vector<std::string> Segment::words() const {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void validate_segment(const Segment& s) {
  if (!(s.start_s >= 0.0))
    throw std::invalid_argument("segment start must be >= 0");
  if (!(s.start_s < s.end_s))
    throw std::invalid_argument("segment end must be greater than start");
  if (s.speaker.empty())
    throw std::invalid_argument("segment speaker must be non-empty");
  if (s.text.find('\t') != std::string::npos || s.text.find('\n') != std::string::npos)
    throw std::invalid_argument("segment text must not contain tabs or newlines");
}

double AnnotatedStream::duration_s() const {
  if (!audio.samples.empty()) return audio.duration_s();
  double end = 0.0;
  for (const auto& s : segments) end = std::max(end, s.end_s);
  return end;
}

void AnnotatedStream::validate() const {
  for (const auto& s : segments) validate_segment(s);
  for (size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].start_s < segments[i - 1].start_s)
      throw std::invalid_argument("segments must be sorted by start time");
  }
  // same-speaker spans must not overlap
  std::vector<std::pair<std::string, std::pair<double, double>>> by_spk;
  for (const auto& s : segments) by_spk.push_back({s.speaker, {s.start_s, s.end_s}});
  std::stable_sort(by_spk.begin(), by_spk.end());
  for (size_t i = 1; i < by_spk.size(); ++i) {
    if (by_spk[i].first == by_spk[i - 1].first &&
        by_spk[i].second.first < by_spk[i - 1].second.second)
      throw std::invalid_argument("same-speaker segments overlap");
  }
  if (!audio.samples.empty()) {
    double d = audio.duration_s();
    for (const auto& s : segments)
      if (s.end_s > d + 1e-9)
        throw std::invalid_argument("segment extends past audio end");
  }
}

Vocabulary Vocabulary::chars(const std::string& symbols) {
  Vocabulary v;
  v.tokens.push_back("<blank>");
  v.blank_index = 0;
  for (char c : symbols) {
    std::string t(1, c);
    if (v.find(t) >= 0) throw std::invalid_argument("duplicate vocabulary symbol");
    v.tokens.push_back(t);
  }
  return v;
}

Vocabulary Vocabulary::default_chars() {
  return chars("abcdefghijklmnopqrstuvwxyz ");
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    int id = find(std::string(1, c));
    if (id < 0)
      throw std::invalid_argument(std::string("token not in vocabulary: '") + c + "'");
    out.push_back(id);
  }
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= size()) throw std::invalid_argument("token id out of range");
    if (id == blank_index) continue;
    out += tokens[id];
  }
  return out;
}

int Vocabulary::find(const std::string& tok) const {
  for (int i = 0; i < size(); ++i)
    if (tokens[i] == tok) return i;
  return -1;
}

// --- annotation TSV -------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what, int line_no) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what +
                             " '" + s + "'");
  }
}

}  // namespace

std::vector<Segment> read_annotation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotation file: " + path);
  std::vector<Segment> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected 4 tab-separated fields, got " +
                               std::to_string(fields.size()));
    Segment s;
    s.start_s = parse_double(fields[0], "start time", line_no);
    s.end_s = parse_double(fields[1], "end time", line_no);
    s.speaker = fields[2];
    s.text = fields[3];
    try {
      validate_segment(s);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Segment& a, const Segment& b) { return a.start_s < b.start_s; });
  return out;
}

std::string format_time(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", seconds);
  return buf;
}

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_annotation(const std::vector<Segment>& segments, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write annotation file: " + path);
  for (const auto& s : segments) {
    validate_segment(s);
    out << format_time(s.start_s) << '\t' << format_time(s.end_s) << '\t'
        << s.speaker << '\t' << s.text << '\n';
  }
  if (!out) throw std::runtime_error("I/O error writing " + path);
}

// --- embedding TSV --------------------------------------------------------

std::vector<std::pair<std::string, Embedding>> read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::vector<std::pair<std::string, Embedding>> out;
  std::string line;
  int line_no = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected `speaker<TAB>values`");
    Embedding e;
    std::stringstream vs(fields[1]);
    std::string item;
    while (std::getline(vs, item, ','))
      e.push_back(parse_double(item, "embedding value", line_no));
    if (e.empty())
      throw std::runtime_error("line " + std::to_string(line_no) + ": empty embedding");
    if (dim == 0) dim = e.size();
    if (e.size() != dim)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": inconsistent embedding dimension " +
                               std::to_string(e.size()) + " (expected " +
                               std::to_string(dim) + ")");
    try {
      e = normalized(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + ex.what());
    }
    out.push_back({fields[0], std::move(e)});
  }
  return out;
}

void write_embeddings(const std::vector<std::pair<std::string, Embedding>>& embs,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  for (const auto& [id, e] : embs) {
    out << id << '\t';
    for (size_t i = 0; i < e.size(); ++i) {
      if (i) out << ',';
      out << format_float(e[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("I/O error writing " + path);
}

// --- WAV ------------------------------------------------------------------

namespace {

uint32_t read_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t read_u16le(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void put_u32le(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}
void put_u16le(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioStream read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 44 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw std::runtime_error(path + ": not a RIFF/WAVE file");

  size_t pos = 12;
  bool got_fmt = false;
  AudioStream audio;
  while (pos + 8 <= bytes.size()) {
    std::string id(bytes, pos, 4);
    uint32_t sz = read_u32le(p + pos + 4);
    size_t body = pos + 8;
    if (body + sz > bytes.size()) throw std::runtime_error(path + ": truncated chunk");
    if (id == "fmt ") {
      if (sz < 16) throw std::runtime_error(path + ": bad fmt chunk");
      uint16_t format = read_u16le(p + body);
      uint16_t channels = read_u16le(p + body + 2);
      uint32_t rate = read_u32le(p + body + 4);
      uint16_t bits = read_u16le(p + body + 14);
      if (format != 1 || bits != 16)
        throw std::runtime_error(path + ": only PCM16 is supported");
      if (channels != 1) throw std::runtime_error(path + ": only mono is supported");
      if (rate != kSampleRate)
        throw std::runtime_error(path + ": sample rate must be 16000, got " +
                                 std::to_string(rate));
      got_fmt = true;
    } else if (id == "data") {
      if (!got_fmt) throw std::runtime_error(path + ": data chunk before fmt");
      audio.samples.resize(sz / 2);
      for (size_t i = 0; i < audio.samples.size(); ++i)
        audio.samples[i] = static_cast<int16_t>(read_u16le(p + body + 2 * i));
      return audio;
    }
    pos = body + sz + (sz & 1);
  }
  throw std::runtime_error(path + ": no data chunk");
}

void write_wav(const AudioStream& audio, const std::string& path) {
  if (audio.sample_rate != kSampleRate)
    throw std::invalid_argument("write_wav: sample rate must be 16000");
  std::string s;
  uint32_t data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
  s += "RIFF";
  put_u32le(s, 36 + data_bytes);
  s += "WAVEfmt ";
  put_u32le(s, 16);
  put_u16le(s, 1);                      // PCM
  put_u16le(s, 1);                      // mono
  put_u32le(s, kSampleRate);
  put_u32le(s, kSampleRate * 2);        // byte rate
  put_u16le(s, 2);                      // block align
  put_u16le(s, 16);                     // bits
  s += "data";
  put_u32le(s, data_bytes);
  for (int16_t v : audio.samples) put_u16le(s, static_cast<uint16_t>(v));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write wav file: " + path);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw std::runtime_error("I/O error writing " + path);
}

}  // namespace ovasr
