#include "advbilevel/evaluation.hpp"

#include "advbilevel/errors.hpp"

namespace advbilevel {

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) {
    throw DimensionError("predictions and truths differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred = predictions[i] != 0;
    const bool truth = truths[i] != 0;
    if (pred && truth) {
      ++c.tp;
    } else if (!pred && !truth) {
      ++c.tn;
    } else if (pred) {
      ++c.fp;
    } else {
      ++c.fn;
    }
  }
  return c;
}

double p4_score(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp);
  const double tn = static_cast<double>(c.tn);
  const double errors = static_cast<double>(c.fp + c.fn);
  const double num = 4.0 * tp * tn;
  const double den = num + (tp + tn) * errors;
  if (den == 0.0) return errors == 0.0 ? 1.0 : 0.0;
  return num / den;
}

double f1_score(const ConfusionCounts& c) {
  const double den = static_cast<double>(2 * c.tp + c.fp + c.fn);
  if (den == 0.0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / den;
}

ConfusionCounts flipped(const ConfusionCounts& c) { return {c.tn, c.tp, c.fn, c.fp}; }

}  // namespace advbilevel
