#include "crg/commands.hpp"

#include <cstdlib>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "crg/io.hpp"

#ifndef CRG_DATA_DIR
#define CRG_DATA_DIR "data"
#endif

namespace crg {

using ojson = nlohmann::ordered_json;

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("CRG_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return CRG_DATA_DIR;
}

namespace {

LabelSchema resolve_schema(const std::optional<std::filesystem::path>& path) {
  return load_schema(path ? *path : default_data_dir() / "ct_rate_schema.json");
}

LabelMatrix label_reports(const std::vector<ReportRecord>& reports, const LabelSchema& schema, int level,
                          const LabelerChoice& choice) {
  if (choice.llm) {
    auto transport = choice.transport ? choice.transport : std::make_shared<HttpTransport>();
    LlmExtractor extractor(*choice.llm, std::move(transport));
    std::vector<std::pair<std::string, std::string>> items;
    for (const auto& r : reports) items.emplace_back(r.sample_id, r.text);
    return extractor.extract_all(items, schema, level, choice.max_in_flight);
  }
  const auto rules = load_rules(choice.rules ? *choice.rules : default_data_dir() / "ct_rate_rules.json");
  validate_rules(rules, schema);
  auto matrix = LabelMatrix::for_schema(schema, level);
  for (const auto& r : reports) matrix.add(rule_label(r.text, rules, schema, level, r.sample_id));
  return matrix;
}

struct TextPairs {
  std::vector<std::string> ids;
  std::vector<Tokens> candidates;
  std::vector<Tokens> references;
  std::vector<std::string> dropped;
};

TextPairs join_texts(const std::vector<ReportRecord>& candidates, const std::vector<ReportRecord>& references,
                     AlignMode mode) {
  std::map<std::string, const std::string*> cand;
  std::map<std::string, const std::string*> ref;
  for (const auto& r : candidates) cand.emplace(r.sample_id, &r.text);
  for (const auto& r : references) ref.emplace(r.sample_id, &r.text);
  TextPairs out;
  for (const auto& [id, text] : ref) {
    auto it = cand.find(id);
    if (it == cand.end()) {
      out.dropped.push_back(id);
      continue;
    }
    out.ids.push_back(id);
    out.candidates.push_back(tokenize(*it->second));
    out.references.push_back(tokenize(*text));
  }
  for (const auto& [id, text] : cand) {
    if (!ref.contains(id)) out.dropped.push_back(id);
  }
  if (mode == AlignMode::strict && !out.dropped.empty()) {
    std::string msg = "unaligned report samples:";
    for (const auto& id : out.dropped) msg += " " + id;
    throw AlignmentError(msg);
  }
  return out;
}

ojson counts_json(const ConfusionCounts& c) {
  ojson o;
  o["tp"] = c.tp;
  o["fn"] = c.fn;
  o["fp"] = c.fp;
  o["tn"] = c.tn;
  return o;
}

ojson classical_json(const ClassicalMetrics& m) {
  ojson o;
  o["averaging"] = to_string(m.averaging);
  o["precision"] = m.precision;
  o["recall"] = m.recall;
  o["f1"] = m.f1;
  o["accuracy"] = m.accuracy;
  ojson undefined = ojson::array();
  if (m.precision_undefined) undefined.push_back("precision");
  if (m.recall_undefined) undefined.push_back("recall");
  if (m.f1_undefined) undefined.push_back("f1");
  o["undefined"] = std::move(undefined);
  if (m.averaging == Averaging::macro) o["skipped_labels"] = m.skipped_labels;
  return o;
}

std::string fixed(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

EvaluationReport cmd_score(const ScoreOptions& options) {
  EvaluationReport report;
  report.settings = options.settings;
  const auto schema = resolve_schema(options.schema);
  report.schema_version = schema.version;

  std::optional<std::vector<ReportRecord>> cand_text;
  std::optional<std::vector<ReportRecord>> ref_text;
  if (options.candidates) cand_text = load_reports(*options.candidates);
  if (options.references) ref_text = load_reports(*options.references);

  if (options.counts) {
    report.input_kind = "counts";
    const auto levels = load_counts(*options.counts);
    report.crg = crg_hierarchical(levels);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      report.classical.push_back({static_cast<int>(i) + 1, micro_metrics(levels[i]), std::nullopt});
    }
  } else {
    std::vector<LevelInput> inputs;
    if (!options.labels_pred.empty() || !options.labels_ref.empty()) {
      report.input_kind = "labels";
      if (options.labels_pred.size() != options.labels_ref.size()) {
        throw std::invalid_argument("need one prediction label file per reference label file");
      }
      for (std::size_t i = 0; i < options.labels_pred.size(); ++i) {
        const int default_level = static_cast<int>(i) + 1;
        auto pred = load_label_matrix(options.labels_pred[i], &schema, default_level);
        auto ref = load_label_matrix(options.labels_ref[i], &schema, default_level);
        inputs.push_back({std::move(pred), std::move(ref)});
      }
    } else if (cand_text && ref_text) {
      report.input_kind = "text";
      std::vector<int> levels;
      if (options.level) {
        levels.push_back(*options.level);
      } else {
        for (int l = 1; l <= static_cast<int>(schema.depth()); ++l) levels.push_back(l);
      }
      for (int l : levels) {
        inputs.push_back({label_reports(*cand_text, schema, l, options.labeler),
                          label_reports(*ref_text, schema, l, options.labeler)});
      }
    } else {
      throw std::invalid_argument("score needs a counts file, label files, or candidate and reference reports");
    }
    report.n_candidates = inputs.front().predictions.size();
    report.n_references = inputs.front().references.size();

    HierarchicalOptions hopts;
    hopts.mode = options.mode;
    hopts.conditional_levels = options.conditional_levels;
    hopts.schema = &schema;
    report.crg = crg_hierarchical(inputs, hopts);
    for (const auto& id : inputs.front().references.sample_ids()) {
      if (inputs.front().predictions.find(id)) ++report.n_scored;
    }
    for (const auto& level : report.crg.per_level) {
      if (!level.dropped.empty()) {
        report.warnings.push_back("level " + std::to_string(level.level) + ": " +
                                  std::to_string(level.dropped.size()) + " unaligned samples dropped");
      }
      report.classical.push_back({level.level, micro_metrics(level.confusion.total),
                                  macro_metrics(level.confusion.per_label, options.zero_division)});
    }
  }

  if (options.nlg && cand_text && ref_text) {
    auto pairs = join_texts(*cand_text, *ref_text, options.mode);
    if (!pairs.dropped.empty()) {
      report.warnings.push_back("nlg: " + std::to_string(pairs.dropped.size()) + " unaligned reports dropped");
    }
    if (!pairs.ids.empty()) {
      report.nlg = nlg_scores(pairs.candidates, pairs.references, options.nlg_config);
      for (const auto& w : report.nlg->warnings) report.warnings.push_back(w);
    }
    if (report.input_kind == "counts") {
      report.n_candidates = cand_text->size();
      report.n_references = ref_text->size();
    }
  }
  return report;
}

std::string to_structured(const EvaluationReport& report) {
  ojson doc;
  doc["tool"] = {{"name", "crg"}, {"version", report.tool_version}};
  ojson run;
  run["schema_version"] = report.schema_version;
  run["input_kind"] = report.input_kind;
  run["n_candidates"] = report.n_candidates;
  run["n_references"] = report.n_references;
  run["n_scored"] = report.n_scored;
  ojson settings = ojson::object();
  for (const auto& [k, v] : report.settings) settings[k] = v;
  run["settings"] = std::move(settings);
  doc["run"] = std::move(run);

  ojson crg;
  crg["final"] = report.crg.final_score;
  crg["levels"] = ojson::array();
  for (const auto& level : report.crg.per_level) {
    const auto& w = level.crg.weights;
    ojson l;
    l["level"] = level.level;
    l["score"] = level.crg.score;
    l["raw_score"] = level.crg.raw_score;
    l["weights"] = {{"w_tp", w.w_tp}, {"w_fn", w.w_fn}, {"w_fp", w.w_fp},
                    {"t_total", w.t_total}, {"a_positive", w.a_positive}, {"s_max", w.s_max}};
    l["counts"] = counts_json(level.crg.counts);
    l["dropped"] = level.dropped.size();
    crg["levels"].push_back(std::move(l));
  }
  doc["crg"] = std::move(crg);

  doc["classical"] = ojson::array();
  for (const auto& c : report.classical) {
    ojson l;
    l["level"] = c.level;
    l["micro"] = classical_json(c.micro);
    l["macro"] = c.macro ? classical_json(*c.macro) : ojson(nullptr);
    doc["classical"].push_back(std::move(l));
  }

  if (report.nlg) {
    const auto& n = *report.nlg;
    doc["nlg"] = {{"bleu1", n.bleu[0]}, {"bleu2", n.bleu[1]}, {"bleu3", n.bleu[2]}, {"bleu4", n.bleu[3]},
                  {"meteor", n.meteor}, {"rouge_l", n.rouge_l}, {"cider", n.cider}};
  } else {
    doc["nlg"] = nullptr;
  }
  doc["warnings"] = report.warnings;
  return doc.dump(2) + "\n";
}

std::string to_table(const EvaluationReport& report) {
  std::ostringstream out;
  out << "crg " << report.tool_version << "  schema " << report.schema_version << "  input " << report.input_kind
      << "\n";
  if (report.input_kind != "counts") {
    out << "samples: " << report.n_scored << " scored (" << report.n_candidates << " candidates, "
        << report.n_references << " references)\n";
  }
  out << "\nlevel      TP      FN      FP      TN      w_tp     CRG\n";
  for (const auto& level : report.crg.per_level) {
    const auto& c = level.crg.counts;
    char line[160];
    std::snprintf(line, sizeof line, "%5d %7lld %7lld %7lld %7lld %9.4f %7.4f\n", level.level,
                  static_cast<long long>(c.tp), static_cast<long long>(c.fn), static_cast<long long>(c.fp),
                  static_cast<long long>(c.tn), level.crg.weights.w_tp, level.crg.score);
    out << line;
  }
  out << "CRG final: " << fixed(report.crg.final_score) << "\n";

  out << "\nlevel averaging  precision  recall      f1  accuracy\n";
  for (const auto& c : report.classical) {
    for (const auto* m : {&c.micro, c.macro ? &*c.macro : nullptr}) {
      if (m == nullptr) continue;
      char line[160];
      std::snprintf(line, sizeof line, "%5d %-9s %10.4f %7.4f %7.4f %9.4f\n", c.level, to_string(m->averaging),
                    m->precision, m->recall, m->f1, m->accuracy);
      out << line;
    }
  }
  if (report.nlg) {
    const auto& n = *report.nlg;
    out << "\nBLEU-1 " << fixed(n.bleu[0]) << "  BLEU-2 " << fixed(n.bleu[1]) << "  BLEU-3 " << fixed(n.bleu[2])
        << "  BLEU-4 " << fixed(n.bleu[3]) << "\nMETEOR " << fixed(n.meteor) << "  ROUGE-L " << fixed(n.rouge_l)
        << "  CIDEr " << fixed(n.cider) << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------

LabelMatrix cmd_label(const LabelOptions& options) {
  const auto schema = resolve_schema(options.schema);
  return label_reports(load_reports(options.reports), schema, options.level, options.labeler);
}

// ---------------------------------------------------------------------------

std::string cmd_reward(const RewardOptions& options) {
  std::optional<LabelSchema> schema;
  if (options.schema) schema = load_schema(*options.schema);
  const LabelSchema* schema_ptr = schema ? &*schema : nullptr;
  const auto pred = load_label_matrix(options.labels_pred, schema_ptr);
  const auto ref = load_label_matrix(options.labels_ref, schema_ptr);

  RewardConfig config;
  if (options.counts) {
    const auto levels = load_counts(*options.counts);
    config.weights = derive_weights(levels.front());
  } else if (options.weights_from) {
    config = frozen_config(load_label_matrix(*options.weights_from, schema_ptr));
  } else {
    config = frozen_config(ref);
  }
  config.blend_lambda = options.lambda;
  config.fluency = options.fluency;
  validate(config);

  const auto pairs = align_corpora(pred, ref, options.mode);
  std::string out;
  if (options.batch_size > 0) {
    const auto rewards = batch_rewards(pairs, config, options.batch_size);
    for (std::size_t b = 0; b < rewards.size(); ++b) {
      ojson record;
      record["batch"] = b;
      record["first_sample"] = pairs.sample_ids[b * options.batch_size];
      record["n_samples"] = std::min(options.batch_size, pairs.size() - b * options.batch_size);
      record["reward"] = rewards[b];
      out += record.dump() + "\n";
    }
    return out;
  }

  std::optional<std::vector<double>> fluency;
  if (options.fluency != FluencyMetric::none) {
    if (!options.candidates || !options.references) {
      throw std::invalid_argument("a fluency term needs candidate and reference reports");
    }
    std::map<std::string, Tokens> cand;
    std::map<std::string, Tokens> refs;
    for (const auto& r : load_reports(*options.candidates)) cand.emplace(r.sample_id, tokenize(r.text));
    for (const auto& r : load_reports(*options.references)) refs.emplace(r.sample_id, tokenize(r.text));
    fluency.emplace();
    for (const auto& id : pairs.sample_ids) {
      auto c = cand.find(id);
      auto r = refs.find(id);
      if (c == cand.end() || r == refs.end()) throw AlignmentError("no report text for sample '" + id + "'");
      if (options.fluency == FluencyMetric::bleu4) {
        fluency->push_back(bleu(std::span(&c->second, 1), std::span(&r->second, 1), 4));
      } else {
        fluency->push_back(rouge_l_pair(c->second, r->second));
      }
    }
  }
  for (const auto& r : sample_rewards(pairs, config, fluency ? &*fluency : nullptr)) {
    ojson record;
    record["sample_id"] = r.sample_id;
    record["crg_reward"] = r.crg_reward;
    if (r.fluency) record["fluency"] = *r.fluency;
    record["reward"] = r.reward;
    out += record.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

PredictorKind parse_predictor(const std::string& name) {
  if (name == "always_negative") return PredictorKind::always_negative;
  if (name == "always_positive") return PredictorKind::always_positive;
  if (name == "noisy") return PredictorKind::noisy;
  throw std::invalid_argument("unknown predictor '" + name + "'");
}

const char* to_string(PredictorKind kind) noexcept {
  switch (kind) {
    case PredictorKind::always_positive:
      return "always_positive";
    case PredictorKind::noisy:
      return "noisy";
    case PredictorKind::always_negative:
      break;
  }
  return "always_negative";
}

void validate(const SimulationSpec& spec) {
  if (spec.n_samples < 1) throw std::invalid_argument("n_samples must be positive");
  if (spec.n_labels < 1) throw std::invalid_argument("n_labels must be positive");
  if (spec.prevalences.empty()) throw std::invalid_argument("need at least one prevalence");
  for (double p : spec.prevalences) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("prevalence must lie strictly inside (0, 1)");
  }
  if (!(spec.sensitivity >= 0.0 && spec.sensitivity <= 1.0) ||
      !(spec.specificity >= 0.0 && spec.specificity <= 1.0)) {
    throw std::invalid_argument("sensitivity and specificity must lie in [0, 1]");
  }
}

namespace {

constexpr const char* kRngId = "mt19937_64/u53";

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string padded_id(std::int64_t i, std::int64_t n) {
  const auto width = std::to_string(n).size();
  auto s = std::to_string(i);
  return "s" + std::string(width - s.size(), '0') + s;
}

}  // namespace

SimulationResult cmd_simulate(const SimulationSpec& spec) {
  validate(spec);
  SimulationResult result{spec, kRngId, {}};
  std::mt19937_64 rng(spec.seed);

  std::vector<std::string> labels;
  for (std::int64_t j = 0; j < spec.n_labels; ++j) labels.push_back("label_" + padded_id(j, spec.n_labels).substr(1));

  for (double prevalence : spec.prevalences) {
    LabelMatrix refs(1, labels);
    LabelMatrix preds(1, labels);
    std::vector<std::uint8_t> ref_row(labels.size());
    std::vector<std::uint8_t> pred_row(labels.size());
    for (std::int64_t i = 0; i < spec.n_samples; ++i) {
      for (std::size_t j = 0; j < labels.size(); ++j) {
        const bool positive = uniform53(rng) < prevalence;
        bool predicted = false;
        switch (spec.predictor) {
          case PredictorKind::always_negative:
            predicted = false;
            break;
          case PredictorKind::always_positive:
            predicted = true;
            break;
          case PredictorKind::noisy: {
            const double u = uniform53(rng);
            predicted = positive ? u < spec.sensitivity : !(u < spec.specificity);
            break;
          }
        }
        ref_row[j] = positive ? 1 : 0;
        pred_row[j] = predicted ? 1 : 0;
      }
      const auto id = padded_id(i, spec.n_samples);
      refs.add_row(id, ref_row);
      preds.add_row(id, pred_row);
    }
    const auto counts = confusion_from_labels(align_corpora(preds, refs)).total;
    const auto micro = micro_metrics(counts);
    SimulationRow row;
    row.prevalence = prevalence;
    row.counts = counts;
    row.accuracy = micro.accuracy;
    row.precision = micro.precision;
    row.recall = micro.recall;
    row.f1 = micro.f1;
    row.crg = crg_from_counts(counts).score;
    result.rows.push_back(row);
  }
  return result;
}

std::string to_structured(const SimulationResult& result) {
  ojson doc;
  doc["tool"] = {{"name", "crg"}, {"version", std::string(kToolVersion)}};
  const auto& s = result.spec;
  doc["spec"] = {{"n_samples", s.n_samples}, {"n_labels", s.n_labels},     {"prevalences", s.prevalences},
                 {"predictor", to_string(s.predictor)}, {"sensitivity", s.sensitivity},
                 {"specificity", s.specificity},         {"seed", s.seed}};
  doc["rng"] = result.rng;
  doc["rows"] = ojson::array();
  for (const auto& r : result.rows) {
    doc["rows"].push_back({{"prevalence", r.prevalence},
                           {"counts", counts_json(r.counts)},
                           {"accuracy", r.accuracy},
                           {"precision", r.precision},
                           {"recall", r.recall},
                           {"f1", r.f1},
                           {"crg", r.crg}});
  }
  return doc.dump(2) + "\n";
}

std::string to_table(const SimulationResult& result) {
  std::ostringstream out;
  out << "# predictor=" << to_string(result.spec.predictor) << " n_samples=" << result.spec.n_samples
      << " n_labels=" << result.spec.n_labels << " seed=" << result.spec.seed << " rng=" << result.rng << "\n";
  out << "prevalence\tT\tA\taccuracy\tprecision\trecall\tf1\tcrg\n";
  for (const auto& r : result.rows) {
    out << fixed(r.prevalence, 6) << "\t" << r.counts.total() << "\t" << r.counts.positives() << "\t"
        << fixed(r.accuracy, 6) << "\t" << fixed(r.precision, 6) << "\t" << fixed(r.recall, 6) << "\t"
        << fixed(r.f1, 6) << "\t" << fixed(r.crg, 6) << "\n";
  }
  return out.str();
}

}  // namespace crg
