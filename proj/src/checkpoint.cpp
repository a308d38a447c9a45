#include "ovasr/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ovasr {

namespace {

constexpr uint32_t kVersion = 1;
constexpr char kMagic[4] = {'O', 'V', 'S', 'C'};

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void Checkpoint::add(const std::string& name, const Matrix& m) {
  TensorRecord r;
  r.name = name;
  r.shape = {static_cast<uint32_t>(m.rows), static_cast<uint32_t>(m.cols)};
  r.values.assign(m.data.begin(), m.data.end());
  tensors.push_back(std::move(r));
}

void Checkpoint::add(const std::string& name, const std::vector<double>& v) {
  TensorRecord r;
  r.name = name;
  r.shape = {static_cast<uint32_t>(v.size())};
  r.values.assign(v.begin(), v.end());
  tensors.push_back(std::move(r));
}

const TensorRecord& Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw std::runtime_error("checkpoint: missing tensor " + name);
}

Matrix Checkpoint::matrix(const std::string& name) const {
  const auto& t = find(name);
  if (t.shape.size() != 2) throw std::runtime_error("checkpoint: " + name + " is not 2-d");
  Matrix m(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
  for (size_t i = 0; i < t.values.size(); ++i) m.data[i] = t.values[i];
  return m;
}

std::vector<double> Checkpoint::vector(const std::string& name) const {
  const auto& t = find(name);
  if (t.shape.size() != 1) throw std::runtime_error("checkpoint: " + name + " is not 1-d");
  return std::vector<double>(t.values.begin(), t.values.end());
}

void Checkpoint::save(const std::string& path) const {
  std::string s;
  s.append(kMagic, 4);
  put_u32(s, kVersion);
  put_u32(s, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(s, static_cast<uint32_t>(t.name.size()));
    s += t.name;
    put_u32(s, static_cast<uint32_t>(t.shape.size()));
    size_t n = 1;
    for (uint32_t d : t.shape) {
      put_u32(s, d);
      n *= d;
    }
    if (n != t.values.size()) throw std::logic_error("checkpoint: shape/data mismatch");
    for (float f : t.values) {
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(s, bits);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw std::runtime_error("I/O error writing " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a checkpoint file");
  if (get_u32(p + 4) != kVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version");
  uint32_t count = get_u32(p + 8);
  size_t pos = 12;
  auto need = [&](size_t k) {
    if (pos + k > n) throw std::runtime_error(path + ": truncated checkpoint");
  };
  Checkpoint ck;
  for (uint32_t i = 0; i < count; ++i) {
    need(4);
    uint32_t name_len = get_u32(p + pos);
    pos += 4;
    need(name_len);
    TensorRecord r;
    r.name.assign(bytes, pos, name_len);
    pos += name_len;
    need(4);
    uint32_t rank = get_u32(p + pos);
    pos += 4;
    size_t total = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      need(4);
      r.shape.push_back(get_u32(p + pos));
      pos += 4;
      total *= r.shape.back();
    }
    need(4 * total);
    r.values.resize(total);
    for (size_t k = 0; k < total; ++k) {
      uint32_t bits = get_u32(p + pos);
      pos += 4;
      float f;
      std::memcpy(&f, &bits, 4);
      r.values[k] = f;
    }
    ck.tensors.push_back(std::move(r));
  }
  return ck;
}

}  // namespace ovasr
