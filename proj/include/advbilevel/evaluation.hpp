#pragma once

#include <cstdint>
#include <span>

namespace advbilevel {

/// Confusion tallies with class 1 as the positive class.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> truths);

/// 4 TP TN / (4 TP TN + (TP + TN)(FP + FN)).
/// When the denominator vanishes the score is 1 if there are no errors
/// (including an empty tally) and 0 otherwise.
double p4_score(const ConfusionCounts& c);

/// 2 TP / (2 TP + FP + FN); 0 when the denominator vanishes.
double f1_score(const ConfusionCounts& c);

/// Swaps the roles of the two classes.
ConfusionCounts flipped(const ConfusionCounts& c);

}  // namespace advbilevel
