#include "crg/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace crg {

const char* to_string(FluencyMetric metric) noexcept {
  switch (metric) {
    case FluencyMetric::bleu4:
      return "bleu4";
    case FluencyMetric::rouge_l:
      return "rouge_l";
    case FluencyMetric::none:
      break;
  }
  return "none";
}

FluencyMetric parse_fluency_metric(const std::string& name) {
  if (name == "none") return FluencyMetric::none;
  if (name == "bleu4") return FluencyMetric::bleu4;
  if (name == "rouge_l") return FluencyMetric::rouge_l;
  throw std::invalid_argument("unknown fluency metric '" + name + "'");
}

void validate(const RewardConfig& config) {
  if (!(config.blend_lambda >= 0.0 && config.blend_lambda <= 1.0)) {
    throw std::invalid_argument("blend lambda must lie in [0, 1]");
  }
  const auto& w = config.weights;
  const auto expected = derive_weights(w.t_total, w.a_positive);
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
  if (!close(w.w_tp, expected.w_tp) || !close(w.w_fn, expected.w_fn) || !close(w.w_fp, expected.w_fp) ||
      !close(w.s_max, expected.s_max)) {
    throw std::invalid_argument("frozen weights are inconsistent with their T and A");
  }
}

RewardConfig frozen_config(const LabelMatrix& references, double blend_lambda, FluencyMetric fluency) {
  std::int64_t positives = 0;
  for (std::size_t r = 0; r < references.size(); ++r) {
    for (auto v : references.row(r)) positives += v;
  }
  const auto total = static_cast<std::int64_t>(references.size() * references.label_count());
  RewardConfig config{derive_weights(total, positives), blend_lambda, fluency, references.labels()};
  validate(config);
  return config;
}

double frozen_reward(const ConfusionCounts& counts, const CrgWeights& weights) {
  check_counts(counts);
  if (counts.positives() == 0) {
    if (counts.fp == 0) return 1.0;
    return std::max(kRewardFloor, 1.0 - static_cast<double>(counts.fp) * weights.w_fp / weights.w_tp);
  }
  if (counts.fn == 0 && counts.fp == 0) return 1.0;
  const auto result = crg_with_frozen_weights(counts, weights);
  return std::clamp(result.score, kRewardFloor, 1.0);
}

double sample_reward(const LabelAssignment& predicted, const LabelAssignment& reference,
                     const RewardConfig& config) {
  auto keys = [](const LabelAssignment& a) {
    std::set<std::string> out;
    for (const auto& kv : a.values) out.insert(kv.first);
    return out;
  };
  const auto ref_keys = keys(reference);
  if (keys(predicted) != ref_keys) {
    throw SchemaViolation("sample '" + reference.sample_id + "': prediction and reference label sets differ");
  }
  if (!config.labels.empty() &&
      ref_keys != std::set<std::string>(config.labels.begin(), config.labels.end())) {
    throw SchemaViolation("sample '" + reference.sample_id +
                          "': labels do not match the level the weights were frozen on");
  }
  ConfusionCounts counts;
  for (const auto& [label, ref] : reference.values) {
    const bool pred = predicted.values.at(label);
    if (ref && pred) {
      ++counts.tp;
    } else if (ref) {
      ++counts.fn;
    } else if (pred) {
      ++counts.fp;
    } else {
      ++counts.tn;
    }
  }
  return frozen_reward(counts, config.weights);
}

double blended_reward(double sample_reward, double fluency_score, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("blend lambda must lie in [0, 1]");
  return lambda * sample_reward + (1.0 - lambda) * fluency_score;
}

namespace {

void check_pairs_against(const PairedMatrix& pairs, const RewardConfig& config) {
  if (config.labels.empty()) return;
  if (std::set<std::string>(pairs.labels.begin(), pairs.labels.end()) !=
      std::set<std::string>(config.labels.begin(), config.labels.end())) {
    throw SchemaViolation("corpus labels do not match the level the weights were frozen on");
  }
}

ConfusionCounts counts_for_rows(const PairedMatrix& pairs, std::size_t begin, std::size_t end) {
  const std::size_t width = pairs.labels.size();
  ConfusionCounts c;
  for (std::size_t cell = begin * width; cell < end * width; ++cell) {
    const bool ref = pairs.reference[cell] != 0;
    const bool pred = pairs.predicted[cell] != 0;
    if (ref && pred) {
      ++c.tp;
    } else if (ref) {
      ++c.fn;
    } else if (pred) {
      ++c.fp;
    } else {
      ++c.tn;
    }
  }
  return c;
}

}  // namespace

std::vector<SampleReward> sample_rewards(const PairedMatrix& pairs, const RewardConfig& config,
                                         const std::vector<double>* fluency) {
  validate(config);
  check_pairs_against(pairs, config);
  if (fluency && fluency->size() != pairs.size()) {
    throw std::invalid_argument("fluency scores do not match the number of samples");
  }
  std::vector<SampleReward> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    SampleReward r;
    r.sample_id = pairs.sample_ids[i];
    r.crg_reward = frozen_reward(counts_for_rows(pairs, i, i + 1), config.weights);
    if (fluency) {
      r.fluency = (*fluency)[i];
      r.reward = blended_reward(r.crg_reward, *r.fluency, config.blend_lambda);
    } else {
      r.reward = r.crg_reward;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> batch_rewards(const PairedMatrix& pairs, const RewardConfig& config,
                                  std::size_t batch_size) {
  validate(config);
  check_pairs_against(pairs, config);
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<double> out;
  for (std::size_t begin = 0; begin < pairs.size(); begin += batch_size) {
    const std::size_t end = std::min(pairs.size(), begin + batch_size);
    out.push_back(frozen_reward(counts_for_rows(pairs, begin, end), config.weights));
  }
  return out;
}

}  // namespace crg
