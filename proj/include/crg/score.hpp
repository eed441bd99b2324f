#pragma once

// The CRG score: a clinical-accuracy metric whose TP/FN/FP weights are
// derived from the reference label distribution so that both trivial
// predictors (report nothing, report everything) land on exactly 1/3 and a
// perfect report lands on 1.
//
// With T labelled cells of which A are reference-positive:
//
//   w_tp = w_fn = (T - A) / (2A),   w_fp = 1
//   s     = tp*w_tp - fn*w_fn - fp*w_fp
//   s_max = A*w_tp = (T - A) / 2
//   CRG   = s_max / (2*s_max - s)               in [0.2, 1]

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crg/schema.hpp"

namespace crg {

struct CrgWeights {
  double w_tp = 0.0;
  double w_fn = 0.0;
  double w_fp = 1.0;
  std::int64_t t_total = 0;
  std::int64_t a_positive = 0;
  double s_max = 0.0;

  // w_tp as the exact ratio (T - A) / (2A).
  std::int64_t ratio_num = 0;
  std::int64_t ratio_den = 1;

  bool operator==(const CrgWeights&) const = default;
};

/// Throws DegenerateDistribution when A == 0 or A == T, and
/// std::invalid_argument when T <= 0, A < 0 or A > T.
CrgWeights derive_weights(std::int64_t t_total, std::int64_t a_positive);

/// Weights for the reference distribution captured by `counts`.
CrgWeights derive_weights(const ConfusionCounts& counts);

/// s = tp*w_tp - fn*w_fn - fp*w_fp. Throws std::invalid_argument unless the
/// counts have the same T and A the weights were derived from.
double raw_score(const ConfusionCounts& counts, const CrgWeights& weights);

/// s with no consistency check, for weights frozen on another corpus.
double weighted_score(const ConfusionCounts& counts, const CrgWeights& weights) noexcept;

struct CrgResult {
  double score = 0.0;
  double raw_score = 0.0;
  CrgWeights weights;
  ConfusionCounts counts;
};

/// CRG with weights derived from the counts' own reference distribution.
/// The score is evaluated as a single integer ratio, so the trivial-predictor
/// value 1/3 and the floor 0.2 are the correctly rounded doubles.
CrgResult crg_from_counts(const ConfusionCounts& counts);

/// CRG of `counts` under weights frozen on a designated corpus. The maximum
/// is rescaled to the counts' own positives, s_max = (tp + fn) * w_tp.
/// Throws DegenerateDistribution when the counts hold no reference positives.
CrgResult crg_with_frozen_weights(const ConfusionCounts& counts, const CrgWeights& weights);

CrgResult crg_from_labels(const LabelMatrix& predictions, const LabelMatrix& references,
                          AlignMode mode = AlignMode::strict);

// ---------------------------------------------------------------------------
// Hierarchical CRG
// ---------------------------------------------------------------------------

struct LevelInput {
  LabelMatrix predictions;
  LabelMatrix references;
};

struct HierarchicalOptions {
  AlignMode mode = AlignMode::strict;
  /// Score level-k cells only for samples whose level-(k-1) reference has the
  /// cell label's parent positive. Requires `schema`.
  bool conditional_levels = false;
  const LabelSchema* schema = nullptr;
};

struct LevelResult {
  int level = 1;
  CrgResult crg;
  ConfusionBreakdown confusion;
  std::vector<std::string> dropped;
};

struct HierarchicalCrgResult {
  std::vector<LevelResult> per_level;
  double final_score = 0.0;  // unweighted mean of per-level scores
};

/// One CRG per level, each with its own T and A, then their mean. A
/// degenerate level raises DegenerateDistribution naming the level.
HierarchicalCrgResult crg_hierarchical(std::span<const LevelInput> levels,
                                       const HierarchicalOptions& options = {});

/// Same, from counts already aggregated per level.
HierarchicalCrgResult crg_hierarchical(std::span<const ConfusionCounts> level_counts);

}  // namespace crg
