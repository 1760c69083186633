#include "vids/errors.hpp"
#include "vids/harness.hpp"

namespace vids {

ConfusionCounts count_labels(const std::vector<StepLabel>& labels) {
  ConfusionCounts c;
  for (const auto& l : labels) {
    if (l.truth) {
      (l.predicted ? c.tp : c.fn) += 1;
    } else {
      (l.predicted ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

ConfusionMetrics score(const std::vector<StepLabel>& labels, double threshold) {
  const ConfusionCounts c = count_labels(labels);
  if (c.positives() == 0 || c.negatives() == 0) {
    throw ConfigError("scoring needs at least one attacked and one clean step");
  }
  ConfusionMetrics m;
  m.counts = c;
  m.threshold = threshold;
  const double pos = static_cast<double>(c.positives());
  const double neg = static_cast<double>(c.negatives());
  m.tp_rate = c.tp / pos;
  m.fn_rate = c.fn / pos;
  m.tn_rate = c.tn / neg;
  m.fp_rate = c.fp / neg;
  if (c.tp > 0) {
    const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double recall = m.tp_rate;
    m.f1 = 2.0 * precision * recall / (precision + recall);
  }
  return m;
}

}  // namespace vids
