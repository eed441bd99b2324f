#include "crg/schema.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>

namespace crg {

const std::vector<LabelDef>& LabelSchema::level(int level) const {
  if (level < 1 || static_cast<std::size_t>(level) > levels.size()) {
    throw std::out_of_range("schema has no level " + std::to_string(level));
  }
  return levels[static_cast<std::size_t>(level) - 1];
}

std::vector<std::string> LabelSchema::label_names(int lvl) const {
  std::vector<std::string> names;
  for (const auto& def : level(lvl)) names.push_back(def.name);
  return names;
}

std::optional<std::string> LabelSchema::parent_of(int lvl, const std::string& label) const {
  for (const auto& def : level(lvl)) {
    if (def.name == label) return def.parent;
  }
  return std::nullopt;
}

std::vector<SchemaIssue> schema_issues(const LabelSchema& schema) {
  std::vector<SchemaIssue> issues;
  if (schema.levels.empty()) {
    issues.push_back({0, {}, "schema has no levels"});
    return issues;
  }
  std::set<std::string> previous;
  for (std::size_t i = 0; i < schema.levels.size(); ++i) {
    const int lvl = static_cast<int>(i) + 1;
    const auto& defs = schema.levels[i];
    if (defs.empty()) issues.push_back({lvl, {}, "empty level"});
    std::set<std::string> seen;
    for (const auto& def : defs) {
      if (def.name.empty()) {
        issues.push_back({lvl, {}, "empty label name"});
        continue;
      }
      if (!seen.insert(def.name).second) {
        issues.push_back({lvl, def.name, "duplicate label"});
      }
      if (def.level != lvl) {
        issues.push_back({lvl, def.name,
                          "label declares level " + std::to_string(def.level)});
      }
      if (lvl == 1 && def.parent) {
        issues.push_back({lvl, def.name, "level-1 label cannot have a parent"});
      } else if (def.parent && !previous.contains(*def.parent)) {
        issues.push_back({lvl, def.name, "dangling parent '" + *def.parent + "'"});
      }
    }
    previous = std::move(seen);
  }
  return issues;
}

const LabelSchema& validate_schema(const LabelSchema& schema) {
  auto issues = schema_issues(schema);
  if (!issues.empty()) throw SchemaError(std::move(issues));
  return schema;
}

// ---------------------------------------------------------------------------

LabelMatrix::LabelMatrix(int level, std::vector<std::string> labels)
    : level_(level), labels_(std::move(labels)) {
  if (level_ < 1) throw std::invalid_argument("schema level must be >= 1");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!label_pos_.emplace(labels_[i], i).second) {
      throw SchemaViolation("duplicate label '" + labels_[i] + "' in label matrix");
    }
  }
}

LabelMatrix LabelMatrix::for_schema(const LabelSchema& schema, int level) {
  return LabelMatrix(level, schema.label_names(level));
}

std::span<const std::uint8_t> LabelMatrix::row(std::size_t r) const {
  if (r >= ids_.size()) throw std::out_of_range("label matrix row out of range");
  return std::span<const std::uint8_t>(cells_).subspan(r * labels_.size(), labels_.size());
}

bool LabelMatrix::value(std::size_t r, std::size_t label) const {
  return row(r)[label] != 0;
}

std::optional<std::size_t> LabelMatrix::find(const std::string& sample_id) const {
  auto it = index_.find(sample_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> LabelMatrix::label_index(const std::string& label) const {
  auto it = label_pos_.find(label);
  if (it == label_pos_.end()) return std::nullopt;
  return it->second;
}

void LabelMatrix::add(const LabelAssignment& assignment) {
  std::vector<std::uint8_t> values(labels_.size(), 0);
  std::vector<std::string> unknown;
  for (const auto& [name, v] : assignment.values) {
    auto pos = label_index(name);
    if (!pos) {
      unknown.push_back(name);
      continue;
    }
    values[*pos] = v ? 1 : 0;
  }
  std::vector<std::string> missing;
  for (const auto& name : labels_) {
    if (!assignment.values.contains(name)) missing.push_back(name);
  }
  if (!unknown.empty() || !missing.empty()) {
    std::string msg = "sample '" + assignment.sample_id + "' does not match level " +
                      std::to_string(level_) + " labels";
    if (!missing.empty()) {
      msg += "; missing:";
      for (const auto& m : missing) msg += " " + m;
    }
    if (!unknown.empty()) {
      msg += "; unknown:";
      for (const auto& u : unknown) msg += " " + u;
    }
    throw SchemaViolation(msg);
  }
  add_row(assignment.sample_id, values);
}

void LabelMatrix::add_row(std::string sample_id, std::span<const std::uint8_t> values) {
  if (values.size() != labels_.size()) {
    throw SchemaViolation("sample '" + sample_id + "' has " + std::to_string(values.size()) +
                          " values, expected " + std::to_string(labels_.size()));
  }
  for (auto v : values) {
    if (v > 1) throw SchemaViolation("sample '" + sample_id + "' has a non-binary value");
  }
  if (index_.contains(sample_id)) {
    throw AlignmentError("duplicate sample_id '" + sample_id + "'");
  }
  index_.emplace(sample_id, ids_.size());
  ids_.push_back(std::move(sample_id));
  cells_.insert(cells_.end(), values.begin(), values.end());
}

LabelAssignment LabelMatrix::assignment(std::size_t r) const {
  LabelAssignment out{sample_id(r), {}};
  auto cells = row(r);
  for (std::size_t j = 0; j < labels_.size(); ++j) out.values.emplace(labels_[j], cells[j] != 0);
  return out;
}

void check_conforms(const LabelMatrix& matrix, const LabelSchema& schema) {
  auto expected = schema.label_names(matrix.level());
  std::set<std::string> want(expected.begin(), expected.end());
  std::set<std::string> have(matrix.labels().begin(), matrix.labels().end());
  if (want != have) {
    throw SchemaViolation("label matrix labels do not match schema level " +
                          std::to_string(matrix.level()));
  }
}

// ---------------------------------------------------------------------------

PairedMatrix align_corpora(const LabelMatrix& predictions, const LabelMatrix& references,
                           AlignMode mode) {
  if (predictions.level() != references.level()) {
    throw AlignmentError("schema level mismatch: predictions at level " +
                         std::to_string(predictions.level()) + ", references at level " +
                         std::to_string(references.level()));
  }
  // Prediction column for each reference label.
  std::vector<std::size_t> column;
  column.reserve(references.label_count());
  for (const auto& name : references.labels()) {
    auto pos = predictions.label_index(name);
    if (!pos) throw AlignmentError("label-set mismatch: predictions lack '" + name + "'");
    column.push_back(*pos);
  }
  if (predictions.label_count() != references.label_count()) {
    throw AlignmentError("label-set mismatch: predictions carry extra labels");
  }

  std::vector<std::string> ids = references.sample_ids();
  std::sort(ids.begin(), ids.end());
  std::vector<std::string> only_ref;
  std::vector<std::string> only_pred;
  for (const auto& id : ids) {
    if (!predictions.find(id)) only_ref.push_back(id);
  }
  for (const auto& id : predictions.sample_ids()) {
    if (!references.find(id)) only_pred.push_back(id);
  }
  std::sort(only_pred.begin(), only_pred.end());

  if (mode == AlignMode::strict && (!only_ref.empty() || !only_pred.empty())) {
    std::string msg = "unaligned samples:";
    for (const auto& id : only_ref) msg += " " + id + " (no prediction)";
    for (const auto& id : only_pred) msg += " " + id + " (no reference)";
    throw AlignmentError(msg);
  }

  PairedMatrix out;
  out.level = references.level();
  out.labels = references.labels();
  const std::size_t width = out.labels.size();
  for (const auto& id : ids) {
    auto p = predictions.find(id);
    if (!p) continue;
    auto ref_row = references.row(*references.find(id));
    auto pred_row = predictions.row(*p);
    out.sample_ids.push_back(id);
    for (std::size_t j = 0; j < width; ++j) {
      out.reference.push_back(ref_row[j]);
      out.predicted.push_back(pred_row[column[j]]);
    }
  }
  out.dropped = std::move(only_ref);
  out.dropped.insert(out.dropped.end(), only_pred.begin(), only_pred.end());
  std::sort(out.dropped.begin(), out.dropped.end());
  return out;
}

// ---------------------------------------------------------------------------

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) noexcept {
  tp += other.tp;
  fn += other.fn;
  fp += other.fp;
  tn += other.tn;
  return *this;
}

void check_counts(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fn < 0 || c.fp < 0 || c.tn < 0) {
    throw std::invalid_argument("confusion counts must be non-negative");
  }
}

namespace {

ConfusionBreakdown aggregate(const PairedMatrix& pairs, const std::uint8_t* mask) {
  const std::size_t width = pairs.labels.size();
  if (pairs.predicted.size() != pairs.reference.size() ||
      pairs.predicted.size() != pairs.sample_ids.size() * width) {
    throw AlignmentError("label-set mismatch: paired rows have inconsistent widths");
  }
  std::vector<ConfusionCounts> per(width);
  for (std::size_t cell = 0; cell < pairs.predicted.size(); ++cell) {
    if (mask && !mask[cell]) continue;
    auto& c = per[cell % width];
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
  ConfusionBreakdown out;
  for (std::size_t j = 0; j < width; ++j) {
    out.total += per[j];
    out.per_label.emplace_back(pairs.labels[j], per[j]);
  }
  return out;
}

}  // namespace

ConfusionBreakdown confusion_from_labels(const PairedMatrix& pairs) {
  return aggregate(pairs, nullptr);
}

ConfusionBreakdown confusion_from_labels(const PairedMatrix& pairs,
                                         std::span<const std::uint8_t> mask) {
  if (mask.size() != pairs.cell_count()) {
    throw std::invalid_argument("cell mask size does not match paired matrix");
  }
  return aggregate(pairs, mask.data());
}

}  // namespace crg
