#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ovasr/core.hpp"

namespace ovasr {

// Flat list of named real tensors, serialized little-endian:
//   magic "OVSC", version u32, record count u32, then per record
//   name_len u32, name bytes, rank u32, dims u32..., f32 data.
struct TensorRecord {
  std::string name;
  std::vector<uint32_t> shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::vector<TensorRecord> tensors;

  void add(const std::string& name, const Matrix& m);
  void add(const std::string& name, const std::vector<double>& v);
  const TensorRecord& find(const std::string& name) const;
  Matrix matrix(const std::string& name) const;
  std::vector<double> vector(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace ovasr
