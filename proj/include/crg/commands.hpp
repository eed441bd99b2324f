#pragma once

// Orchestration behind the `crg` command-line tool. Each cmd_* function is a
// pure function of its options and input files, so the CLI stays a thin
// argument parser and the pipelines are testable in-process.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crg/classical.hpp"
#include "crg/extractor.hpp"
#include "crg/labeler.hpp"
#include "crg/nlg.hpp"
#include "crg/reward.hpp"
#include "crg/schema.hpp"
#include "crg/score.hpp"

namespace crg {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Ordered key/value pairs echoed into outputs for reproducibility.
using Settings = std::vector<std::pair<std::string, std::string>>;

/// Directory holding the shipped schema, rule set and prompt.
std::filesystem::path default_data_dir();

// ---------------------------------------------------------------------------
// score / crg
// ---------------------------------------------------------------------------

struct LevelClassical {
  int level = 1;
  ClassicalMetrics micro;
  std::optional<ClassicalMetrics> macro;  // needs per-label counts
};

struct EvaluationReport {
  std::string tool_version{kToolVersion};
  std::string schema_version;
  std::string input_kind;  // "text", "labels" or "counts"
  std::size_t n_candidates = 0;
  std::size_t n_references = 0;
  std::size_t n_scored = 0;
  Settings settings;
  HierarchicalCrgResult crg;
  std::vector<LevelClassical> classical;
  std::optional<NlgScores> nlg;
  std::vector<std::string> warnings;
};

struct LabelerChoice {
  /// Rule file; the shipped rule set when empty and no LLM is configured.
  std::optional<std::filesystem::path> rules;
  std::optional<ExtractorConfig> llm;
  std::shared_ptr<Transport> transport;  // defaults to HttpTransport
  std::size_t max_in_flight = 4;
};

struct ScoreOptions {
  std::optional<std::filesystem::path> schema;  // shipped CT-RATE schema when empty
  std::optional<std::filesystem::path> candidates;
  std::optional<std::filesystem::path> references;
  std::vector<std::filesystem::path> labels_pred;  // one file per level, level order
  std::vector<std::filesystem::path> labels_ref;
  std::optional<std::filesystem::path> counts;
  std::optional<int> level;  // score one level only (text input)
  AlignMode mode = AlignMode::strict;
  bool nlg = true;
  bool conditional_levels = false;
  ZeroDivision zero_division = ZeroDivision::as_zero;
  NlgConfig nlg_config;
  LabelerChoice labeler;
  std::uint64_t seed = 0;
  Settings settings;  // resolved configuration to echo
};

/// Labels, aligns and scores a run. Inputs are read in this order of
/// preference for CRG: counts file, label files, text corpora (labelled
/// first). NLG metrics need both text corpora.
EvaluationReport cmd_score(const ScoreOptions& options);

std::string to_structured(const EvaluationReport& report);
std::string to_table(const EvaluationReport& report);

// ---------------------------------------------------------------------------
// label
// ---------------------------------------------------------------------------

struct LabelOptions {
  std::filesystem::path reports;
  std::optional<std::filesystem::path> schema;
  int level = 1;
  LabelerChoice labeler;
};

LabelMatrix cmd_label(const LabelOptions& options);

// ---------------------------------------------------------------------------
// reward
// ---------------------------------------------------------------------------

struct RewardOptions {
  std::filesystem::path labels_pred;
  std::filesystem::path labels_ref;
  std::optional<std::filesystem::path> schema;
  /// Where the frozen weights come from: a counts file, else a label matrix,
  /// else the reference labels themselves.
  std::optional<std::filesystem::path> counts;
  std::optional<std::filesystem::path> weights_from;
  double lambda = 1.0;
  FluencyMetric fluency = FluencyMetric::none;
  std::optional<std::filesystem::path> candidates;  // text, for the fluency term
  std::optional<std::filesystem::path> references;
  AlignMode mode = AlignMode::strict;
  std::size_t batch_size = 0;  // 0: per-sample rewards
};

/// Line-delimited JSON: one record per sample, or per batch in batch mode.
std::string cmd_reward(const RewardOptions& options);

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

enum class PredictorKind { always_negative, always_positive, noisy };

struct SimulationSpec {
  std::int64_t n_samples = 1000;
  std::int64_t n_labels = 18;
  std::vector<double> prevalences{0.193};
  PredictorKind predictor = PredictorKind::always_negative;
  double sensitivity = 1.0;
  double specificity = 1.0;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on out-of-range fields.
void validate(const SimulationSpec& spec);
PredictorKind parse_predictor(const std::string& name);
const char* to_string(PredictorKind kind) noexcept;

struct SimulationRow {
  double prevalence = 0.0;
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double crg = 0.0;
};

struct SimulationResult {
  SimulationSpec spec;
  std::string rng;  // algorithm identifier
  std::vector<SimulationRow> rows;
};

/// Draws a reference matrix per prevalence, applies the predictor and scores
/// it through the same alignment and aggregation path as `score`.
SimulationResult cmd_simulate(const SimulationSpec& spec);

std::string to_structured(const SimulationResult& result);
std::string to_table(const SimulationResult& result);

}  // namespace crg
