#include "mzet/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace mzet {

GradCheckReport GradCheck(std::span<const GradCheckEntry> entries,
                          const std::function<LossProbe()>& loss, double epsilon,
                          double abs_floor) {
  GradCheckReport report;
  for (const auto& e : entries) {
    double tensor_max = 0.0;
    for (Eigen::Index k = 0; k < e.value->size(); ++k) {
      double& x = e.value->data()[k];
      const double saved = x;
      x = saved + epsilon;
      const LossProbe plus = loss();
      x = saved - epsilon;
      const LossProbe minus = loss();
      x = saved;
      if (plus.signature != minus.signature) {
        ++report.excluded;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * epsilon);
      const double analytic = e.analytic->data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      tensor_max = std::max(tensor_max, rel);
      if (rel > report.max_rel_error || report.worst_index < 0) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_tensor = e.name;
          report.worst_index = k;
          report.worst_analytic = analytic;
          report.worst_numeric = numeric;
        }
      }
    }
    report.per_tensor[e.name] = tensor_max;
  }
  return report;
}

}  // namespace mzet
