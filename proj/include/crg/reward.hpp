#pragma once

// CRG as a training reward. Weights are frozen on a designated reference
// corpus so the reward does not drift with each minibatch's label mix; the
// CRG normalisation is then applied at sample (or batch) scale:
//
//   a > 0:  r = a*w_tp / (2*a*w_tp - s),  clamped to [0.2, 1]
//   a = 0:  r = 1 if fp == 0, else max(0.2, 1 - fp*w_fp / w_tp)
//
// where a is the number of reference positives in the scored cells.

#include <optional>
#include <string>
#include <vector>

#include "crg/schema.hpp"
#include "crg/score.hpp"

namespace crg {

enum class FluencyMetric { none, bleu4, rouge_l };

const char* to_string(FluencyMetric metric) noexcept;
/// Accepts "none", "bleu4", "rouge_l"; throws std::invalid_argument otherwise.
FluencyMetric parse_fluency_metric(const std::string& name);

struct RewardConfig {
  CrgWeights weights;
  double blend_lambda = 1.0;
  FluencyMetric fluency = FluencyMetric::none;
  /// Labels of the level the weights were frozen on. Empty skips the check.
  std::vector<std::string> labels;
};

inline constexpr double kRewardFloor = 0.2;

/// Throws std::invalid_argument on lambda outside [0, 1] or weights that are
/// not the distribution-derived triple for their own T and A.
void validate(const RewardConfig& config);

/// Weights frozen on the reference distribution of `references`.
RewardConfig frozen_config(const LabelMatrix& references, double blend_lambda = 1.0,
                           FluencyMetric fluency = FluencyMetric::none);

/// Reward for the counts of one sample or one batch under frozen weights.
double frozen_reward(const ConfusionCounts& counts, const CrgWeights& weights);

/// Throws SchemaViolation when the assignments do not cover the frozen labels.
double sample_reward(const LabelAssignment& predicted, const LabelAssignment& reference,
                     const RewardConfig& config);

/// lambda*sample_reward + (1 - lambda)*fluency_score.
double blended_reward(double sample_reward, double fluency_score, double lambda);

struct SampleReward {
  std::string sample_id;
  double crg_reward = 0.0;
  std::optional<double> fluency;
  double reward = 0.0;  // blended
};

/// Per-sample rewards over an aligned corpus. `fluency`, when given, holds one
/// score per paired sample.
std::vector<SampleReward> sample_rewards(const PairedMatrix& pairs, const RewardConfig& config,
                                         const std::vector<double>* fluency = nullptr);

/// One reward per consecutive batch of `batch_size` paired samples, computed
/// from the batch's pooled counts under the frozen weights.
std::vector<double> batch_rewards(const PairedMatrix& pairs, const RewardConfig& config,
                                  std::size_t batch_size);

}  // namespace crg
