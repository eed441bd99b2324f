#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crg/schema.hpp"

namespace crg {

enum class Averaging { micro, macro };

const char* to_string(Averaging averaging) noexcept;

/// Precision, recall, F1 and accuracy. A ratio whose denominator is zero is
/// reported as 0.0 and flagged in the matching `*_undefined` field.
struct ClassicalMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  Averaging averaging = Averaging::micro;

  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  // Macro only: labels left out because a ratio was undefined.
  int skipped_labels = 0;
};

enum class ZeroDivision {
  as_zero,  // undefined ratios count as 0.0
  skip,     // macro: undefined ratios are left out of the average
};

/// Pooled over every cell. Throws std::invalid_argument when T == 0.
ClassicalMetrics micro_metrics(const ConfusionCounts& counts);

/// Per-label metrics averaged without weights. Throws std::invalid_argument
/// when `per_label` is empty.
ClassicalMetrics macro_metrics(std::span<const std::pair<std::string, ConfusionCounts>> per_label,
                               ZeroDivision policy = ZeroDivision::as_zero);

}  // namespace crg
