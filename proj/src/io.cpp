#include "crg/io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace crg {

using ojson = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file " + path.string());
  out << contents;
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

ojson parse_document(std::string_view text, const std::string& source) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), source,
                     line_of(text, e.byte == 0 ? 0 : e.byte - 1));
  }
}

// Calls `fn(json, line_number)` for every non-blank line.
template <typename Fn>
void for_each_record(std::string_view text, const std::string& source, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    auto record = ojson::parse(line, nullptr, false);
    if (record.is_discarded()) throw ParseError("malformed record", source, line_no);
    if (!record.is_object()) throw ParseError("record is not an object", source, line_no);
    fn(record, line_no);
    if (end == text.size()) break;
  }
}

const ojson& require(const ojson& obj, const char* key, const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", source, line);
  return *it;
}

std::string require_string(const ojson& obj, const char* key, const std::string& source, std::size_t line) {
  const auto& v = require(obj, key, source, line);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string", source, line);
  return v.get<std::string>();
}

std::int64_t require_count(const ojson& obj, const char* key, const std::string& source, std::size_t line) {
  const auto& v = require(obj, key, source, line);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ParseError(std::string("field '") + key + "' must be a non-negative integer", source, line);
  }
  return v.get<std::int64_t>();
}

std::vector<std::string> string_list(const ojson& v, const char* what, const std::string& source) {
  if (!v.is_array()) throw ParseError(std::string(what) + " must be an array", source);
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ParseError(std::string(what) + " must hold strings", source);
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

LabelSchema parse_schema(std::string_view text, const std::string& source) {
  const auto doc = parse_document(text, source);
  if (!doc.is_object()) throw ParseError("schema must be an object", source);
  LabelSchema schema;
  if (auto it = doc.find("version"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("schema version must be a string", source);
    schema.version = it->get<std::string>();
  }
  const auto& levels = require(doc, "levels", source, 0);
  if (!levels.is_array()) throw ParseError("'levels' must be an array", source);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const int lvl = static_cast<int>(i) + 1;
    const auto& level = levels[i];
    if (!level.is_object() || !level.contains("labels") || !level["labels"].is_array()) {
      throw ParseError("level " + std::to_string(lvl) + " needs a 'labels' array", source);
    }
    std::vector<LabelDef> defs;
    for (const auto& label : level["labels"]) {
      if (!label.is_object()) throw ParseError("level " + std::to_string(lvl) + ": label must be an object", source);
      LabelDef def;
      def.level = lvl;
      def.name = require_string(label, "name", source, 0);
      if (auto p = label.find("parent"); p != label.end() && !p->is_null()) {
        if (!p->is_string()) throw ParseError("label '" + def.name + "': parent must be a string", source);
        def.parent = p->get<std::string>();
      }
      defs.push_back(std::move(def));
    }
    schema.levels.push_back(std::move(defs));
  }
  validate_schema(schema);
  return schema;
}

LabelSchema load_schema(const std::filesystem::path& path) {
  return parse_schema(read_file(path), path.string());
}

std::string emit_schema(const LabelSchema& schema) {
  ojson doc;
  doc["version"] = schema.version;
  doc["levels"] = ojson::array();
  for (const auto& level : schema.levels) {
    ojson labels = ojson::array();
    for (const auto& def : level) {
      ojson l;
      l["name"] = def.name;
      if (def.parent) l["parent"] = *def.parent;
      labels.push_back(std::move(l));
    }
    doc["levels"].push_back({{"labels", std::move(labels)}});
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

LabelMatrix parse_label_matrix(std::string_view text, const std::string& source, const LabelSchema* schema,
                               int default_level) {
  std::optional<LabelMatrix> matrix;
  int level = default_level;
  std::optional<std::vector<std::string>> header_labels;
  bool first = true;

  for_each_record(text, source, [&](const ojson& record, std::size_t line) {
    if (first && record.contains("schema_level") && !record.contains("sample_id")) {
      first = false;
      const auto& lv = record["schema_level"];
      if (!lv.is_number_integer() || lv.get<int>() < 1) {
        throw ParseError("'schema_level' must be a positive integer", source, line);
      }
      level = lv.get<int>();
      if (record.contains("labels")) header_labels = string_list(record["labels"], "header labels", source);
      return;
    }
    first = false;
    const auto id = require_string(record, "sample_id", source, line);
    const auto& labels = require(record, "labels", source, line);
    if (!labels.is_object()) throw ParseError("'labels' must be an object", source, line);

    if (!matrix) {
      std::vector<std::string> names;
      if (header_labels) {
        names = *header_labels;
      } else if (schema) {
        try {
          names = schema->label_names(level);
        } catch (const std::out_of_range&) {
          throw ParseError("schema has no level " + std::to_string(level), source, line);
        }
      } else {
        for (const auto& item : labels.items()) names.push_back(item.key());
      }
      try {
        matrix.emplace(level, std::move(names));
      } catch (const Error& e) {
        throw ParseError(e.what(), source, line);
      }
    }

    LabelAssignment assignment{id, {}};
    for (const auto& item : labels.items()) {
      const auto& v = item.value();
      bool b;
      if (v.is_boolean()) {
        b = v.get<bool>();
      } else if (v.is_number_integer() && (v.get<std::int64_t>() == 0 || v.get<std::int64_t>() == 1)) {
        b = v.get<std::int64_t>() == 1;
      } else {
        throw ParseError("non-binary value for label '" + item.key() + "'", source, line);
      }
      assignment.values.emplace(item.key(), b);
    }
    try {
      matrix->add(assignment);
    } catch (const AlignmentError&) {
      throw ParseError("duplicate sample_id '" + id + "'", source, line);
    } catch (const SchemaViolation& e) {
      throw ParseError(std::string("unknown or missing label: ") + e.what(), source, line);
    }
  });

  if (!matrix) {
    std::vector<std::string> names;
    if (header_labels) {
      names = *header_labels;
    } else if (schema) {
      names = schema->label_names(level);
    }
    matrix.emplace(level, std::move(names));
  }
  if (schema) {
    try {
      check_conforms(*matrix, *schema);
    } catch (const std::exception& e) {
      throw ParseError(e.what(), source);
    }
  }
  return std::move(*matrix);
}

LabelMatrix load_label_matrix(const std::filesystem::path& path, const LabelSchema* schema, int default_level) {
  return parse_label_matrix(read_file(path), path.string(), schema, default_level);
}

std::string emit_label_matrix(const LabelMatrix& matrix) {
  std::string out;
  ojson header;
  header["schema_level"] = matrix.level();
  header["labels"] = matrix.labels();
  out += header.dump() + "\n";
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    ojson record;
    record["sample_id"] = matrix.sample_id(r);
    ojson labels = ojson::object();
    auto row = matrix.row(r);
    for (std::size_t j = 0; j < matrix.label_count(); ++j) labels[matrix.labels()[j]] = int{row[j]};
    record["labels"] = std::move(labels);
    out += record.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ReportRecord> parse_reports(std::string_view text, const std::string& source) {
  std::vector<ReportRecord> out;
  std::set<std::string> seen;
  for_each_record(text, source, [&](const ojson& record, std::size_t line) {
    ReportRecord r{require_string(record, "sample_id", source, line), require_string(record, "text", source, line)};
    if (!seen.insert(r.sample_id).second) throw ParseError("duplicate sample_id '" + r.sample_id + "'", source, line);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<ReportRecord> load_reports(const std::filesystem::path& path) {
  return parse_reports(read_file(path), path.string());
}

std::string emit_reports(const std::vector<ReportRecord>& reports) {
  std::string out;
  for (const auto& r : reports) {
    ojson record;
    record["sample_id"] = r.sample_id;
    record["text"] = r.text;
    out += record.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

ConfusionCounts counts_object(const ojson& obj, const std::string& source) {
  if (!obj.is_object()) throw ParseError("counts entry must be an object", source);
  return {require_count(obj, "tp", source, 0), require_count(obj, "fn", source, 0),
          require_count(obj, "fp", source, 0), require_count(obj, "tn", source, 0)};
}

}  // namespace

std::vector<ConfusionCounts> parse_counts(std::string_view text, const std::string& source) {
  const auto doc = parse_document(text, source);
  if (doc.is_object() && doc.contains("levels")) {
    const auto& levels = doc["levels"];
    if (!levels.is_array() || levels.empty()) throw ParseError("'levels' must be a non-empty array", source);
    std::vector<ConfusionCounts> out;
    for (const auto& l : levels) out.push_back(counts_object(l, source));
    return out;
  }
  return {counts_object(doc, source)};
}

std::vector<ConfusionCounts> load_counts(const std::filesystem::path& path) {
  return parse_counts(read_file(path), path.string());
}

std::string emit_counts(const std::vector<ConfusionCounts>& levels) {
  auto one = [](const ConfusionCounts& c) {
    ojson o;
    o["tp"] = c.tp;
    o["fn"] = c.fn;
    o["fp"] = c.fp;
    o["tn"] = c.tn;
    return o;
  };
  if (levels.size() == 1) return one(levels.front()).dump() + "\n";
  ojson doc;
  doc["levels"] = ojson::array();
  for (const auto& c : levels) doc["levels"].push_back(one(c));
  return doc.dump() + "\n";
}

// ---------------------------------------------------------------------------

RuleSet parse_rules(std::string_view text, const std::string& source) {
  const auto doc = parse_document(text, source);
  if (!doc.is_object()) throw ParseError("rule file must be an object", source);
  int window = 5;
  if (auto it = doc.find("window"); it != doc.end()) {
    if (!it->is_number_integer()) throw ParseError("'window' must be an integer", source);
    window = it->get<int>();
  }
  std::vector<std::string> negations;
  if (auto it = doc.find("negation_cues"); it != doc.end()) negations = string_list(*it, "negation_cues", source);

  RuleSet rules;
  if (auto it = doc.find("uncertainty_cues"); it != doc.end()) {
    rules.uncertainty_cues = string_list(*it, "uncertainty_cues", source);
  }
  if (auto it = doc.find("uncertain_as_positive"); it != doc.end()) {
    if (!it->is_boolean()) throw ParseError("'uncertain_as_positive' must be a boolean", source);
    rules.uncertain_as_positive = it->get<bool>();
  }
  const auto& list = require(doc, "rules", source, 0);
  if (!list.is_array()) throw ParseError("'rules' must be an array", source);
  for (const auto& item : list) {
    if (!item.is_object()) throw ParseError("rule must be an object", source);
    LabelRule rule;
    rule.label = require_string(item, "label", source, 0);
    rule.triggers = string_list(require(item, "triggers", source, 0), "triggers", source);
    rule.negation_cues = negations;
    if (auto it = item.find("negation_cues"); it != item.end()) {
      rule.negation_cues = string_list(*it, "negation_cues", source);
    }
    rule.window = window;
    if (auto it = item.find("window"); it != item.end()) {
      if (!it->is_number_integer()) throw ParseError("rule window must be an integer", source);
      rule.window = it->get<int>();
    }
    rules.rules.push_back(std::move(rule));
  }
  return rules;
}

RuleSet load_rules(const std::filesystem::path& path) {
  return parse_rules(read_file(path), path.string());
}

}  // namespace crg
