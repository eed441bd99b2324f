// crg: score generated radiology reports with the CRG metric and baselines.
//
// Settings resolve as command-line flag > environment variable > config file.
// The config file (--config, JSON) maps long option names to values, e.g.
// {"schema": "data/ct_rate_schema.json", "format": "structured"}.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crg/commands.hpp"
#include "crg/io.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitDegenerate = 2;

const std::map<std::string, std::string> kEnvOptions = {
    {"schema", "CRG_SCHEMA"},       {"llm-endpoint", "CRG_LLM_ENDPOINT"}, {"llm-model", "CRG_LLM_MODEL"},
    {"cache-dir", "CRG_CACHE_DIR"}, {"format", "CRG_FORMAT"},             {"seed", "CRG_SEED"},
};
constexpr const char* kApiKeyEnv = "CRG_LLM_API_KEY";

struct Common {
  std::string format = "table";
  std::string output;
  std::string schema;
  bool lenient = false;
};

struct LlmFlags {
  std::string rules;
  std::string endpoint;
  std::string model;
  std::string cache_dir;
  std::string prompt_file;
  int retries = 2;
  int timeout_ms = 30000;
  std::size_t max_in_flight = 4;
};

void add_llm_flags(CLI::App* cmd, LlmFlags& f) {
  cmd->add_option("--rules", f.rules, "Rule file for the keyword labeler");
  cmd->add_option("--llm-endpoint", f.endpoint, "Chat-completion endpoint; enables LLM labelling");
  cmd->add_option("--llm-model", f.model, "Model name sent with each request");
  cmd->add_option("--llm-prompt", f.prompt_file, "Prompt template file with {{report}} and {{labels}}");
  cmd->add_option("--llm-retries", f.retries, "Retries per report")->check(CLI::NonNegativeNumber);
  cmd->add_option("--llm-timeout-ms", f.timeout_ms, "Request timeout")->check(CLI::PositiveNumber);
  cmd->add_option("--cache-dir", f.cache_dir, "Response cache directory");
  cmd->add_option("--max-in-flight", f.max_in_flight, "Concurrent LLM requests")->check(CLI::PositiveNumber);
}

crg::LabelerChoice make_labeler(const LlmFlags& f) {
  crg::LabelerChoice choice;
  if (!f.rules.empty()) choice.rules = f.rules;
  choice.max_in_flight = f.max_in_flight;
  if (!f.endpoint.empty()) {
    crg::ExtractorConfig config;
    config.endpoint = f.endpoint;
    config.model_name = f.model;
    config.max_retries = f.retries;
    config.timeout = std::chrono::milliseconds(f.timeout_ms);
    if (!f.cache_dir.empty()) config.cache_path = f.cache_dir;
    if (!f.prompt_file.empty()) config.prompt_template = crg::read_file(f.prompt_file);
    if (const char* key = std::getenv(kApiKeyEnv)) config.api_key = key;
    choice.llm = std::move(config);
  }
  return choice;
}

void add_common(CLI::App* cmd, Common& c, bool with_format = true) {
  cmd->add_option("--schema", c.schema, "Label schema file (default: shipped 18-class schema)");
  if (with_format) {
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"table", "structured"}));
  }
  cmd->add_option("-o,--output", c.output, "Write output to this file instead of stdout");
  cmd->add_flag("--lenient,!--strict", c.lenient,
                "Drop samples missing from either side instead of failing (default: strict)");
}

// Final value of every option on the chosen subcommand, for the report.
crg::Settings resolved_settings(const CLI::App* cmd) {
  crg::Settings out;
  for (const CLI::Option* opt : cmd->get_options()) {
    const auto name = opt->get_name(false, false);
    if (name.empty() || name == "--help" || opt->get_lnames().empty()) continue;
    const auto lname = opt->get_lnames().front();
    if (lname == "output") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->reduced_results()) value += (value.empty() ? "" : ",") + r;
    } else if (opt->get_expected_min() == 0) {
      value = "false";
    } else {
      value = opt->get_default_str();
      if (value == "{}") value.clear();
    }
    out.emplace_back(lname, value);
  }
  out.emplace_back("llm-api-key", std::getenv(kApiKeyEnv) ? "set" : "unset");
  return out;
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
  } else {
    crg::write_file(output, text);
  }
}

// Config-file and environment values become leading arguments of the
// subcommand, so anything on the real command line overrides them.
std::vector<std::string> layered_args(int argc, char** argv, const CLI::App& app) {
  std::vector<std::string> user(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < user.size(); ++i) {
    if (user[i] == "--config" && i + 1 < user.size()) {
      config_path = user[i + 1];
      user.erase(user.begin() + static_cast<long>(i), user.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (user[i].rfind("--config=", 0) == 0) {
      config_path = user[i].substr(9);
      user.erase(user.begin() + static_cast<long>(i));
      break;
    }
  }
  auto sub_pos = std::find_if(user.begin(), user.end(), [](const std::string& a) { return a.rfind('-', 0) != 0; });
  if (sub_pos == user.end()) return user;
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(*sub_pos);
  } catch (const CLI::OptionNotFound&) {
    return user;
  }
  auto has_option = [&](const std::string& name) {
    return sub->get_option_no_throw("--" + name) != nullptr;
  };

  std::vector<std::string> injected;
  if (!config_path.empty()) {
    auto doc = nlohmann::json::parse(crg::read_file(config_path));
    for (const auto& [key, value] : doc.items()) {
      if (!has_option(key)) continue;
      if (value.is_boolean()) {
        if (value.get<bool>()) injected.push_back("--" + key);
        continue;
      }
      injected.push_back("--" + key);
      injected.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  for (const auto& [option, env] : kEnvOptions) {
    const char* v = std::getenv(env.c_str());
    if (v == nullptr || *v == '\0' || !has_option(option)) continue;
    injected.push_back("--" + option);
    injected.push_back(v);
  }
  user.insert(sub_pos + 1, injected.begin(), injected.end());
  return user;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CRG score: distribution-aware clinical accuracy for generated radiology reports", "crg"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(crg::kToolVersion));
  app.add_option("--config", "JSON config file (lowest precedence)");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // score ------------------------------------------------------------------
  Common score_c;
  LlmFlags score_llm;
  std::string candidates, references, counts, nlg = "on", zero_div = "zero";
  std::vector<std::string> labels_pred, labels_ref;
  int level = 0;
  bool conditional = false;
  std::uint64_t seed = 0;
  auto* score = app.add_subcommand("score", "Full evaluation: CRG, classical and NLG metrics");
  add_common(score, score_c);
  add_llm_flags(score, score_llm);
  score->add_option("--candidates", candidates, "Generated reports (JSONL sample_id/text)");
  score->add_option("--references", references, "Reference reports (JSONL sample_id/text)");
  score->add_option("--labels-pred", labels_pred, "Predicted label matrix, one per level")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  score->add_option("--labels-ref", labels_ref, "Reference label matrix, one per level")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  score->add_option("--counts", counts, "Counts file with tp/fn/fp/tn");
  score->add_option("--level", level, "Score this schema level only")->check(CLI::PositiveNumber);
  score->add_option("--nlg", nlg, "NLG metrics when text is available")->check(CLI::IsMember({"on", "off"}));
  score->add_option("--zero-division", zero_div, "Undefined ratios in macro averages")
      ->check(CLI::IsMember({"zero", "skip"}));
  score->add_flag("--conditional-levels", conditional, "Score level-k cells only where the parent is positive");
  score->add_option("--seed", seed, "Recorded with the run");

  // crg --------------------------------------------------------------------
  Common crg_c;
  std::string crg_counts;
  std::vector<std::string> crg_pred, crg_ref;
  bool crg_conditional = false;
  auto* crg_cmd = app.add_subcommand("crg", "CRG from label files or from counts");
  add_common(crg_cmd, crg_c);
  crg_cmd->add_option("--counts", crg_counts, "Counts file with tp/fn/fp/tn");
  crg_cmd->add_option("--labels-pred", crg_pred, "Predicted label matrix, one per level")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  crg_cmd->add_option("--labels-ref", crg_ref, "Reference label matrix, one per level")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  crg_cmd->add_flag("--conditional-levels", crg_conditional, "Score level-k cells only where the parent is positive");

  // label ------------------------------------------------------------------
  Common label_c;
  LlmFlags label_llm;
  std::string reports;
  int label_level = 1;
  auto* label = app.add_subcommand("label", "Label free-text reports into a label matrix");
  add_common(label, label_c, false);
  add_llm_flags(label, label_llm);
  label->add_option("--reports,--candidates", reports, "Reports to label (JSONL sample_id/text)")->required();
  label->add_option("--level", label_level, "Schema level")->check(CLI::PositiveNumber);

  // reward -----------------------------------------------------------------
  Common reward_c;
  std::string r_pred, r_ref, r_counts, r_weights, r_cand, r_refs, fluency = "none";
  double lambda = 1.0;
  std::size_t batch = 0;
  auto* reward = app.add_subcommand("reward", "Per-sample or per-batch rewards under frozen weights");
  add_common(reward, reward_c, false);
  reward->add_option("--labels-pred", r_pred, "Predicted label matrix")->required();
  reward->add_option("--labels-ref", r_ref, "Reference label matrix")->required();
  reward->add_option("--counts", r_counts, "Freeze weights from this counts file");
  reward->add_option("--weights-from", r_weights, "Freeze weights from this reference label matrix");
  reward->add_option("--lambda", lambda, "Weight of the CRG term")->check(CLI::Range(0.0, 1.0));
  reward->add_option("--fluency", fluency, "Fluency term")->check(CLI::IsMember({"none", "bleu4", "rouge_l"}));
  reward->add_option("--candidates", r_cand, "Generated reports, for the fluency term");
  reward->add_option("--references", r_refs, "Reference reports, for the fluency term");
  reward->add_option("--batch-size", batch, "Emit one corpus-level reward per batch");

  // simulate ---------------------------------------------------------------
  Common sim_c;
  crg::SimulationSpec spec;
  std::vector<double> prevalences;
  std::string predictor = "always_negative";
  auto* sim = app.add_subcommand("simulate", "Metric behaviour of synthetic predictors vs prevalence");
  sim->add_option("--format", sim_c.format, "Output format")->check(CLI::IsMember({"table", "structured"}));
  sim->add_option("-o,--output", sim_c.output, "Write output to this file instead of stdout");
  sim->add_option("--n-samples", spec.n_samples, "Samples per configuration")->check(CLI::PositiveNumber);
  sim->add_option("--n-labels", spec.n_labels, "Labels per sample")->check(CLI::PositiveNumber);
  sim->add_option("--prevalence", prevalences, "Prevalence values in (0,1)")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sim->add_option("--predictor", predictor, "Predictor")
      ->check(CLI::IsMember({"always_negative", "always_positive", "noisy"}));
  sim->add_option("--sensitivity", spec.sensitivity, "Noisy predictor sensitivity");
  sim->add_option("--specificity", spec.specificity, "Noisy predictor specificity");
  sim->add_option("--seed", spec.seed, "RNG seed");

  try {
    auto args = layered_args(argc, argv, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (score->parsed() || crg_cmd->parsed()) {
      const bool is_score = score->parsed();
      const Common& c = is_score ? score_c : crg_c;
      crg::ScoreOptions opts;
      if (!c.schema.empty()) opts.schema = c.schema;
      opts.mode = c.lenient ? crg::AlignMode::lenient : crg::AlignMode::strict;
      if (is_score) {
        if (!candidates.empty()) opts.candidates = candidates;
        if (!references.empty()) opts.references = references;
        for (const auto& p : labels_pred) opts.labels_pred.emplace_back(p);
        for (const auto& p : labels_ref) opts.labels_ref.emplace_back(p);
        if (!counts.empty()) opts.counts = counts;
        if (level > 0) opts.level = level;
        opts.nlg = nlg == "on";
        opts.conditional_levels = conditional;
        opts.zero_division = zero_div == "skip" ? crg::ZeroDivision::skip : crg::ZeroDivision::as_zero;
        opts.labeler = make_labeler(score_llm);
        opts.seed = seed;
        opts.settings = resolved_settings(score);
      } else {
        for (const auto& p : crg_pred) opts.labels_pred.emplace_back(p);
        for (const auto& p : crg_ref) opts.labels_ref.emplace_back(p);
        if (!crg_counts.empty()) opts.counts = crg_counts;
        opts.nlg = false;
        opts.conditional_levels = crg_conditional;
        opts.settings = resolved_settings(crg_cmd);
      }
      const auto report = crg::cmd_score(opts);
      emit(c.format == "structured" ? crg::to_structured(report) : crg::to_table(report), c.output);
    } else if (label->parsed()) {
      crg::LabelOptions opts;
      opts.reports = reports;
      if (!label_c.schema.empty()) opts.schema = label_c.schema;
      opts.level = label_level;
      opts.labeler = make_labeler(label_llm);
      emit(crg::emit_label_matrix(crg::cmd_label(opts)), label_c.output);
    } else if (reward->parsed()) {
      crg::RewardOptions opts;
      opts.labels_pred = r_pred;
      opts.labels_ref = r_ref;
      if (!reward_c.schema.empty()) opts.schema = reward_c.schema;
      if (!r_counts.empty()) opts.counts = r_counts;
      if (!r_weights.empty()) opts.weights_from = r_weights;
      opts.lambda = lambda;
      opts.fluency = crg::parse_fluency_metric(fluency);
      if (!r_cand.empty()) opts.candidates = r_cand;
      if (!r_refs.empty()) opts.references = r_refs;
      opts.mode = reward_c.lenient ? crg::AlignMode::lenient : crg::AlignMode::strict;
      opts.batch_size = batch;
      emit(crg::cmd_reward(opts), reward_c.output);
    } else if (sim->parsed()) {
      if (!prevalences.empty()) spec.prevalences = prevalences;
      spec.predictor = crg::parse_predictor(predictor);
      const auto result = crg::cmd_simulate(spec);
      emit(sim_c.format == "structured" ? crg::to_structured(result) : crg::to_table(result), sim_c.output);
    }
  } catch (const crg::DegenerateDistribution& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
