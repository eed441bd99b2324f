#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "crg/schema.hpp"

namespace crg {

/// Keyword rule for one label. A trigger fires unless a negation cue ends at
/// most `window` tokens before it in the same sentence.
struct LabelRule {
  std::string label;
  std::vector<std::string> triggers;
  std::vector<std::string> negation_cues;
  int window = 5;

  bool operator==(const LabelRule&) const = default;
};

struct RuleSet {
  std::vector<LabelRule> rules;
  /// Hedging cues ("cannot exclude", "possible"). A trigger inside their
  /// window is labelled `uncertain_as_positive` regardless of negation cues.
  std::vector<std::string> uncertainty_cues;
  bool uncertain_as_positive = true;

  bool operator==(const RuleSet&) const = default;
};

/// Throws SchemaError listing rules with unknown labels, empty triggers or a
/// window below 1. A label may appear at any schema level.
void validate_rules(const RuleSet& rules, const LabelSchema& schema);

/// Labels one report at `level`. Labels with no firing trigger are 0.
/// Rules for labels at other levels are ignored.
LabelAssignment rule_label(std::string_view report_text, const RuleSet& rules,
                           const LabelSchema& schema, int level, std::string sample_id = {});

}  // namespace crg
