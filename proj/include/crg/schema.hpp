#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crg/errors.hpp"

namespace crg {

// ---------------------------------------------------------------------------
// Label schema
// ---------------------------------------------------------------------------

struct LabelDef {
  std::string name;
  int level = 1;
  std::optional<std::string> parent;  // absent at level 1

  bool operator==(const LabelDef&) const = default;
};

/// Hierarchical label set. Level 1 holds the general abnormality classes,
/// deeper levels hold structured attributes whose parents live one level up.
struct LabelSchema {
  std::string version;
  std::vector<std::vector<LabelDef>> levels;  // levels[0] is level 1

  std::size_t depth() const noexcept { return levels.size(); }
  /// Throws std::out_of_range for levels outside [1, depth()].
  const std::vector<LabelDef>& level(int level) const;
  std::vector<std::string> label_names(int level) const;
  /// Parent name of `label` at `level`, if the label exists and has one.
  std::optional<std::string> parent_of(int level, const std::string& label) const;

  bool operator==(const LabelSchema&) const = default;
};

/// Every violated schema invariant, in level order. Empty means valid.
std::vector<SchemaIssue> schema_issues(const LabelSchema& schema);

/// Returns `schema` unchanged when valid; throws SchemaError listing every issue.
const LabelSchema& validate_schema(const LabelSchema& schema);

// ---------------------------------------------------------------------------
// Label assignments
// ---------------------------------------------------------------------------

/// Binary labels for one sample at one schema level.
struct LabelAssignment {
  std::string sample_id;
  std::map<std::string, bool> values;

  bool operator==(const LabelAssignment&) const = default;
};

/// Per-sample label assignments for a corpus at one schema level.
///
/// Cells are stored row-major against a fixed label order, so every row
/// carries exactly the same label set by construction. Sample ids are unique.
class LabelMatrix {
 public:
  LabelMatrix(int level, std::vector<std::string> labels);

  /// Builds a matrix whose label order follows `schema`'s level.
  static LabelMatrix for_schema(const LabelSchema& schema, int level);

  int level() const noexcept { return level_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t label_count() const noexcept { return labels_.size(); }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::string& sample_id(std::size_t row) const { return ids_.at(row); }
  const std::vector<std::string>& sample_ids() const noexcept { return ids_; }
  std::span<const std::uint8_t> row(std::size_t row) const;
  bool value(std::size_t row, std::size_t label) const;
  std::optional<std::size_t> find(const std::string& sample_id) const;
  std::optional<std::size_t> label_index(const std::string& label) const;

  /// Appends a row. Throws AlignmentError on a duplicate id and
  /// SchemaViolation when the keys differ from labels().
  void add(const LabelAssignment& assignment);
  /// Appends a row given in labels() order; values must be 0 or 1.
  void add_row(std::string sample_id, std::span<const std::uint8_t> values);
  LabelAssignment assignment(std::size_t row) const;

  bool operator==(const LabelMatrix&) const = default;

 private:
  int level_;
  std::vector<std::string> labels_;
  std::vector<std::string> ids_;
  std::vector<std::uint8_t> cells_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::size_t> label_pos_;
};

/// Throws SchemaViolation unless the matrix's labels equal the schema level's
/// label names (as a set).
void check_conforms(const LabelMatrix& matrix, const LabelSchema& schema);

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

enum class AlignMode { strict, lenient };

/// Prediction/reference rows joined on sample id, sorted by id, with
/// prediction columns reordered to the reference label order.
struct PairedMatrix {
  int level = 1;
  std::vector<std::string> labels;
  std::vector<std::string> sample_ids;
  std::vector<std::uint8_t> predicted;  // row-major, sample_ids × labels
  std::vector<std::uint8_t> reference;
  std::vector<std::string> dropped;  // ids missing from one side (lenient only)

  std::size_t size() const noexcept { return sample_ids.size(); }
  std::size_t cell_count() const noexcept { return predicted.size(); }
};

PairedMatrix align_corpora(const LabelMatrix& predictions, const LabelMatrix& references,
                           AlignMode mode = AlignMode::strict);

// ---------------------------------------------------------------------------
// Confusion counts
// ---------------------------------------------------------------------------

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fn = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;

  std::int64_t total() const noexcept { return tp + fn + fp + tn; }
  std::int64_t positives() const noexcept { return tp + fn; }
  std::int64_t negatives() const noexcept { return fp + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& other) noexcept;
  friend ConfusionCounts operator+(ConfusionCounts lhs, const ConfusionCounts& rhs) noexcept {
    return lhs += rhs;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Throws std::invalid_argument if any field is negative.
void check_counts(const ConfusionCounts& counts);

struct ConfusionBreakdown {
  ConfusionCounts total;
  std::vector<std::pair<std::string, ConfusionCounts>> per_label;  // reference label order
};

/// Micro aggregation over every (sample, label) cell.
ConfusionBreakdown confusion_from_labels(const PairedMatrix& pairs);

/// Same, scoring only cells whose `mask` entry is non-zero. `mask` has one
/// entry per cell in PairedMatrix order.
ConfusionBreakdown confusion_from_labels(const PairedMatrix& pairs,
                                         std::span<const std::uint8_t> mask);

}  // namespace crg
