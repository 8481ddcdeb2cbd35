#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "mzet/tensor.hpp"

namespace mzet {

// 64-bit FNV-1a. Used to derive stable per-key seeds.
uint64_t HashKey(std::string_view key);

// mt19937_64 with hand-written transforms so that uniform/normal draws are
// bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  double Uniform();  // [0, 1)
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal();
  size_t Below(size_t n);

  Mat UniformMatrix(Eigen::Index rows, Eigen::Index cols, double bound);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[Below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mzet
