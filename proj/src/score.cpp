#include "crg/score.hpp"

#include <numeric>
#include <stdexcept>

namespace crg {

namespace {

using wide = __int128;

wide gcd_wide(wide a, wide b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    wide t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// num/den rounded once. Exact whenever the reduced terms fit a double mantissa.
double ratio_to_double(wide num, wide den) {
  const wide g = gcd_wide(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  constexpr wide limit = wide{1} << 53;
  if (num < limit && num > -limit && den < limit && den > -limit) {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

std::string level_prefix(int level) { return "level " + std::to_string(level) + ": "; }

}  // namespace

CrgWeights derive_weights(std::int64_t t_total, std::int64_t a_positive) {
  if (t_total <= 0) throw std::invalid_argument("T must be positive");
  if (a_positive < 0 || a_positive > t_total) {
    throw std::invalid_argument("A must lie in [0, T]");
  }
  if (a_positive == 0) {
    throw DegenerateDistribution("degenerate: no positive labels in reference set");
  }
  if (a_positive == t_total) {
    throw DegenerateDistribution("degenerate: no negative labels in reference set");
  }
  CrgWeights w;
  w.t_total = t_total;
  w.a_positive = a_positive;
  w.ratio_num = t_total - a_positive;
  w.ratio_den = 2 * a_positive;
  w.w_tp = ratio_to_double(w.ratio_num, w.ratio_den);
  w.w_fn = w.w_tp;
  w.w_fp = 1.0;
  w.s_max = ratio_to_double(w.ratio_num, 2);
  return w;
}

CrgWeights derive_weights(const ConfusionCounts& counts) {
  check_counts(counts);
  return derive_weights(counts.total(), counts.positives());
}

double weighted_score(const ConfusionCounts& c, const CrgWeights& w) noexcept {
  return static_cast<double>(c.tp) * w.w_tp - static_cast<double>(c.fn) * w.w_fn -
         static_cast<double>(c.fp) * w.w_fp;
}

double raw_score(const ConfusionCounts& counts, const CrgWeights& weights) {
  check_counts(counts);
  if (counts.positives() != weights.a_positive || counts.total() != weights.t_total) {
    throw std::invalid_argument("counts (T=" + std::to_string(counts.total()) +
                                ", A=" + std::to_string(counts.positives()) +
                                ") do not match weights (T=" + std::to_string(weights.t_total) +
                                ", A=" + std::to_string(weights.a_positive) + ")");
  }
  // 2A*s = (T-A)(tp-fn) - 2A*fp, divided once.
  const wide num = wide{weights.ratio_num} * (counts.tp - counts.fn) -
                   wide{weights.ratio_den} * counts.fp;
  return ratio_to_double(num, weights.ratio_den);
}

CrgResult crg_from_counts(const ConfusionCounts& counts) {
  CrgResult r;
  r.counts = counts;
  r.weights = derive_weights(counts);
  r.raw_score = raw_score(counts, r.weights);
  // s_max / (2 s_max - s) multiplied through by 2A:
  // CRG = A(T-A) / ((T-A)(2A - tp + fn) + 2A*fp)
  const wide a = counts.positives();
  const wide neg = counts.negatives();
  const wide num = a * neg;
  const wide den = neg * (2 * a - counts.tp + counts.fn) + 2 * a * counts.fp;
  r.score = ratio_to_double(num, den);
  return r;
}

CrgResult crg_with_frozen_weights(const ConfusionCounts& counts, const CrgWeights& weights) {
  check_counts(counts);
  if (counts.positives() == 0) {
    throw DegenerateDistribution("degenerate: no positive labels in reference set");
  }
  CrgResult r;
  r.counts = counts;
  r.weights = weights;
  r.raw_score = weighted_score(counts, weights);
  const double s_max = static_cast<double>(counts.positives()) * weights.w_tp;
  r.score = s_max / (2.0 * s_max - r.raw_score);
  return r;
}

CrgResult crg_from_labels(const LabelMatrix& predictions, const LabelMatrix& references,
                          AlignMode mode) {
  return crg_from_counts(confusion_from_labels(align_corpora(predictions, references, mode)).total);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> conditional_mask(const PairedMatrix& pairs, const LabelMatrix& parent_refs,
                                           const LabelSchema& schema) {
  // Parent column in the previous level's reference matrix, per label.
  std::vector<std::optional<std::size_t>> parent_col;
  for (const auto& label : pairs.labels) {
    auto parent = schema.parent_of(pairs.level, label);
    if (!parent) {
      parent_col.emplace_back();
      continue;
    }
    auto col = parent_refs.label_index(*parent);
    if (!col) {
      throw SchemaViolation(level_prefix(pairs.level) + "parent '" + *parent +
                            "' missing from level " + std::to_string(parent_refs.level()) +
                            " references");
    }
    parent_col.push_back(col);
  }
  const std::size_t width = pairs.labels.size();
  std::vector<std::uint8_t> mask(pairs.cell_count(), 1);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto row = parent_refs.find(pairs.sample_ids[i]);
    for (std::size_t j = 0; j < width; ++j) {
      if (!parent_col[j]) continue;
      const bool parent_positive = row && parent_refs.value(*row, *parent_col[j]);
      mask[i * width + j] = parent_positive ? 1 : 0;
    }
  }
  return mask;
}

double mean_score(const std::vector<LevelResult>& levels) {
  double sum = 0.0;
  for (const auto& l : levels) sum += l.crg.score;
  return sum / static_cast<double>(levels.size());
}

}  // namespace

HierarchicalCrgResult crg_hierarchical(std::span<const LevelInput> levels,
                                       const HierarchicalOptions& options) {
  if (levels.empty()) throw std::invalid_argument("hierarchical CRG needs at least one level");
  if (options.conditional_levels && options.schema == nullptr) {
    throw std::invalid_argument("conditional level scoring requires a schema");
  }
  HierarchicalCrgResult out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& input = levels[i];
    const int level = input.references.level();
    auto pairs = align_corpora(input.predictions, input.references, options.mode);
    LevelResult lr;
    lr.level = level;
    if (options.conditional_levels && i > 0) {
      auto mask = conditional_mask(pairs, levels[i - 1].references, *options.schema);
      lr.confusion = confusion_from_labels(pairs, mask);
    } else {
      lr.confusion = confusion_from_labels(pairs);
    }
    try {
      lr.crg = crg_from_counts(lr.confusion.total);
    } catch (const DegenerateDistribution& e) {
      throw DegenerateDistribution(level_prefix(level) + e.what());
    }
    lr.dropped = std::move(pairs.dropped);
    out.per_level.push_back(std::move(lr));
  }
  out.final_score = mean_score(out.per_level);
  return out;
}

HierarchicalCrgResult crg_hierarchical(std::span<const ConfusionCounts> level_counts) {
  if (level_counts.empty()) throw std::invalid_argument("hierarchical CRG needs at least one level");
  HierarchicalCrgResult out;
  for (std::size_t i = 0; i < level_counts.size(); ++i) {
    LevelResult lr;
    lr.level = static_cast<int>(i) + 1;
    lr.confusion.total = level_counts[i];
    try {
      lr.crg = crg_from_counts(level_counts[i]);
    } catch (const DegenerateDistribution& e) {
      throw DegenerateDistribution(level_prefix(lr.level) + e.what());
    }
    out.per_level.push_back(std::move(lr));
  }
  out.final_score = mean_score(out.per_level);
  return out;
}

}  // namespace crg
