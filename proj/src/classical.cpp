#include "crg/classical.hpp"

#include <optional>
#include <stdexcept>

namespace crg {

const char* to_string(Averaging averaging) noexcept {
  return averaging == Averaging::micro ? "micro" : "macro";
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

struct LabelRatios {
  std::optional<double> precision, recall, f1;
  double accuracy;
};

LabelRatios ratios(const ConfusionCounts& c) {
  return {ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn),
          ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
          *ratio(c.tp + c.tn, c.total())};
}

}  // namespace

ClassicalMetrics micro_metrics(const ConfusionCounts& counts) {
  check_counts(counts);
  if (counts.total() == 0) throw std::invalid_argument("micro metrics need at least one cell");
  const auto r = ratios(counts);
  ClassicalMetrics m;
  m.averaging = Averaging::micro;
  m.precision = r.precision.value_or(0.0);
  m.recall = r.recall.value_or(0.0);
  m.f1 = r.f1.value_or(0.0);
  m.accuracy = r.accuracy;
  m.precision_undefined = !r.precision;
  m.recall_undefined = !r.recall;
  m.f1_undefined = !r.f1;
  return m;
}

ClassicalMetrics macro_metrics(std::span<const std::pair<std::string, ConfusionCounts>> per_label,
                               ZeroDivision policy) {
  if (per_label.empty()) throw std::invalid_argument("macro metrics need at least one label");

  struct Mean {
    double sum = 0.0;
    int n = 0;
    bool any_undefined = false;
    void add(std::optional<double> v, ZeroDivision policy) {
      if (!v) {
        any_undefined = true;
        if (policy == ZeroDivision::skip) return;
      }
      sum += v.value_or(0.0);
      ++n;
    }
    double value() const { return n == 0 ? 0.0 : sum / n; }
  } precision, recall, f1, accuracy;

  int skipped = 0;
  for (const auto& [label, counts] : per_label) {
    check_counts(counts);
    if (counts.total() == 0) throw std::invalid_argument("label '" + label + "' has no cells");
    const auto r = ratios(counts);
    precision.add(r.precision, policy);
    recall.add(r.recall, policy);
    f1.add(r.f1, policy);
    accuracy.add(r.accuracy, policy);
    if (policy == ZeroDivision::skip && (!r.precision || !r.recall || !r.f1)) ++skipped;
  }

  ClassicalMetrics m;
  m.averaging = Averaging::macro;
  m.precision = precision.value();
  m.recall = recall.value();
  m.f1 = f1.value();
  m.accuracy = accuracy.value();
  m.precision_undefined = precision.any_undefined;
  m.recall_undefined = recall.any_undefined;
  m.f1_undefined = f1.any_undefined;
  m.skipped_labels = skipped;
  return m;
}

}  // namespace crg
