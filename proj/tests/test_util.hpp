#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mzet/random.hpp"
#include "mzet/tensor.hpp"

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    path_ = std::filesystem::temp_directory_path() /
            ("mzet_" + tag + "_" + std::to_string(reinterpret_cast<uintptr_t>(this)) + "_" +
             std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline mzet::Mat RandMat(mzet::Rng& rng, int rows, int cols, double scale = 1.0) {
  mzet::Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.Uniform(-1.0, 1.0);
  return m;
}

inline mzet::Vec RandVec(mzet::Rng& rng, int n, double scale = 1.0) {
  mzet::Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.Uniform(-1.0, 1.0);
  return v;
}

// Largest elementwise |a - b| / max(|a|, |b|).
inline double MaxRelDiff(const mzet::Mat& a, const mzet::Mat& b) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    const double denom = std::max(std::abs(x), std::abs(y));
    if (denom > 0) worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

}  // namespace testutil
