#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "mzet/tensor.hpp"

namespace mzet {

struct GradCheckEntry {
  std::string name;
  Mat* value;
  const Mat* analytic;
};

// Loss value plus a fingerprint of the non-smooth branch taken (e.g. the
// active hinge set). Points where the fingerprint differs between the +eps
// and -eps probes straddle a kink and are excluded.
struct LossProbe {
  double loss = 0.0;
  uint64_t signature = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t checked = 0;
  size_t excluded = 0;
  std::map<std::string, double> per_tensor;
};

// Central differences on every scalar of every entry. The relative error is
// |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport GradCheck(std::span<const GradCheckEntry> entries,
                          const std::function<LossProbe()>& loss, double epsilon = 1e-4,
                          double abs_floor = 1e-7);

}  // namespace mzet
