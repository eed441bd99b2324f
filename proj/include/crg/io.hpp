#pragma once

// File formats.
//
//   schema        JSON  {"version": "...", "levels": [{"labels": [{"name": "...", "parent": "..."}]}]}
//   label matrix  JSONL header {"schema_level": k, "labels": [...]}, then one
//                       {"sample_id": "...", "labels": {"name": 0|1, ...}} per line
//   reports       JSONL {"sample_id": "...", "text": "..."} per line
//   counts        JSON  {"tp": n, "fn": n, "fp": n, "tn": n} or {"levels": [{...}, ...]}
//   rules         JSON  {"window": n, "negation_cues": [...], "uncertainty_cues": [...],
//                        "uncertain_as_positive": bool,
//                        "rules": [{"label": "...", "triggers": [...], "negation_cues"?: [...], "window"?: n}]}
//
// Parse failures raise ParseError carrying the source name and 1-based line.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crg/labeler.hpp"
#include "crg/schema.hpp"

namespace crg {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Parses and validates; throws ParseError or SchemaError.
LabelSchema parse_schema(std::string_view text, const std::string& source = {});
LabelSchema load_schema(const std::filesystem::path& path);
std::string emit_schema(const LabelSchema& schema);

/// Label order comes from the header's "labels", else from `schema`'s level,
/// else from the first record's key order. Records must cover exactly those
/// labels. `default_level` applies when the file has no header.
LabelMatrix parse_label_matrix(std::string_view text, const std::string& source = {},
                               const LabelSchema* schema = nullptr, int default_level = 1);
LabelMatrix load_label_matrix(const std::filesystem::path& path, const LabelSchema* schema = nullptr,
                              int default_level = 1);
std::string emit_label_matrix(const LabelMatrix& matrix);

struct ReportRecord {
  std::string sample_id;
  std::string text;

  bool operator==(const ReportRecord&) const = default;
};

std::vector<ReportRecord> parse_reports(std::string_view text, const std::string& source = {});
std::vector<ReportRecord> load_reports(const std::filesystem::path& path);
std::string emit_reports(const std::vector<ReportRecord>& reports);

/// One entry per level.
std::vector<ConfusionCounts> parse_counts(std::string_view text, const std::string& source = {});
std::vector<ConfusionCounts> load_counts(const std::filesystem::path& path);
std::string emit_counts(const std::vector<ConfusionCounts>& levels);

RuleSet parse_rules(std::string_view text, const std::string& source = {});
RuleSet load_rules(const std::filesystem::path& path);

}  // namespace crg
