#pragma once

#include <Eigen/Dense>

namespace mzet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vec Sigmoid(const Vec& x) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = Sigmoid(x[i]);
  return out;
}

// Max-shifted softmax.
inline Vec Softmax(const Vec& logits) {
  Vec out = (logits.array() - logits.maxCoeff()).exp().matrix();
  return out / out.sum();
}

}  // namespace mzet
