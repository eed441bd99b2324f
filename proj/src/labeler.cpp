#include "crg/labeler.hpp"

#include <set>

#include "crg/text.hpp"

namespace crg {

void validate_rules(const RuleSet& rules, const LabelSchema& schema) {
  std::set<std::string> known;
  for (const auto& level : schema.levels) {
    for (const auto& def : level) known.insert(def.name);
  }
  std::vector<SchemaIssue> issues;
  for (const auto& rule : rules.rules) {
    if (!known.contains(rule.label)) issues.push_back({0, rule.label, "rule references unknown label"});
    if (rule.triggers.empty()) issues.push_back({0, rule.label, "rule has no triggers"});
    for (const auto& t : rule.triggers) {
      if (tokenize(t).empty()) issues.push_back({0, rule.label, "empty trigger phrase"});
    }
    if (rule.window < 1) issues.push_back({0, rule.label, "negation window must be >= 1"});
  }
  if (!issues.empty()) throw SchemaError(std::move(issues));
}

namespace {

bool matches_at(const Tokens& sentence, std::size_t pos, const Tokens& phrase) {
  if (phrase.empty() || pos + phrase.size() > sentence.size()) return false;
  for (std::size_t k = 0; k < phrase.size(); ++k) {
    if (sentence[pos + k] != phrase[k]) return false;
  }
  return true;
}

// True when some cue ends within `window` tokens before `trigger_start`.
bool cue_in_scope(const Tokens& sentence, std::size_t trigger_start,
                  const std::vector<Tokens>& cues, int window) {
  for (const auto& cue : cues) {
    if (cue.empty() || cue.size() > trigger_start) continue;
    for (std::size_t start = 0; start + cue.size() <= trigger_start; ++start) {
      const std::size_t last = start + cue.size() - 1;
      if (trigger_start - last <= static_cast<std::size_t>(window) && matches_at(sentence, start, cue)) {
        return true;
      }
    }
  }
  return false;
}

std::vector<Tokens> tokenize_all(const std::vector<std::string>& phrases) {
  std::vector<Tokens> out;
  for (const auto& p : phrases) out.push_back(tokenize(p));
  return out;
}

bool rule_fires(const std::vector<Tokens>& sentences, const LabelRule& rule,
                const std::vector<Tokens>& uncertainty, bool uncertain_as_positive) {
  const auto triggers = tokenize_all(rule.triggers);
  const auto negations = tokenize_all(rule.negation_cues);
  for (const auto& sentence : sentences) {
    for (const auto& trigger : triggers) {
      for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
        if (!matches_at(sentence, pos, trigger)) continue;
        bool positive;
        if (cue_in_scope(sentence, pos, uncertainty, rule.window)) {
          positive = uncertain_as_positive;
        } else {
          positive = !cue_in_scope(sentence, pos, negations, rule.window);
        }
        if (positive) return true;
      }
    }
  }
  return false;
}

}  // namespace

LabelAssignment rule_label(std::string_view report_text, const RuleSet& rules,
                           const LabelSchema& schema, int level, std::string sample_id) {
  validate_rules(rules, schema);
  LabelAssignment out{std::move(sample_id), {}};
  for (const auto& name : schema.label_names(level)) out.values.emplace(name, false);

  std::vector<Tokens> sentences;
  for (const auto& s : split_sentences(report_text)) sentences.push_back(tokenize(s));
  const auto uncertainty = tokenize_all(rules.uncertainty_cues);

  for (const auto& rule : rules.rules) {
    auto it = out.values.find(rule.label);
    if (it == out.values.end() || it->second) continue;
    it->second = rule_fires(sentences, rule, uncertainty, rules.uncertain_as_positive);
  }
  return out;
}

}  // namespace crg
