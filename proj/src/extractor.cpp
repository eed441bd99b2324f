#include "crg/extractor.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace crg {

using json = nlohmann::json;

std::string default_prompt_template() {
  return "You are labelling a radiology report. For each finding in the list below, answer 1 if "
         "the report describes it as present and 0 if it is absent or not mentioned.\n"
         "Findings: {{labels}}\n\n"
         "Report:\n{{report}}\n\n"
         "Reply with a single JSON object mapping every finding name to 0 or 1.";
}

void validate(const ExtractorConfig& config) {
  if (config.prompt_template.find(kReportPlaceholder) == std::string::npos ||
      config.prompt_template.find(kLabelsPlaceholder) == std::string::npos) {
    throw std::invalid_argument("prompt template must contain both {{report}} and {{labels}}");
  }
  if (config.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string render_prompt(std::string_view prompt_template, std::string_view report_text,
                          const std::vector<std::string>& labels) {
  std::string out(prompt_template);
  // Labels first, so a report containing "{{labels}}" is left alone.
  replace_all(out, kLabelsPlaceholder, json(labels).dump());
  replace_all(out, kReportPlaceholder, report_text);
  return out;
}

std::string build_request_body(const ExtractorConfig& config, const std::string& prompt) {
  json body = {{"model", config.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", 0}};
  return body.dump();
}

// ---------------------------------------------------------------------------

namespace {

// End of the brace-balanced object starting at `open`, honouring JSON strings.
std::size_t object_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return i;
    }
  }
  return std::string_view::npos;
}

std::optional<json> first_object(std::string_view raw) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    const auto close = object_end(raw, open);
    if (close == std::string_view::npos) continue;
    auto parsed = json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

std::optional<bool> binary_value(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() || v.is_number_unsigned()) {
    const auto n = v.get<std::int64_t>();
    if (n == 0 || n == 1) return n == 1;
    return std::nullopt;
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == 0.0 || d == 1.0) return d == 1.0;
  }
  return std::nullopt;
}

}  // namespace

LabelAssignment parse_structured_response(std::string_view raw, const std::vector<std::string>& labels,
                                          std::string sample_id) {
  auto object = first_object(raw);
  if (!object) throw ParseError("no parsable JSON object in response");
  if (object->size() == 1 && object->contains("labels") && (*object)["labels"].is_object()) {
    object = (*object)["labels"];
  }

  const std::set<std::string> expected(labels.begin(), labels.end());
  LabelAssignment out{std::move(sample_id), {}};
  std::vector<std::string> unknown;
  std::vector<std::string> non_binary;
  for (const auto& [key, value] : object->items()) {
    if (!expected.contains(key)) {
      unknown.push_back(key);
      continue;
    }
    auto b = binary_value(value);
    if (!b) {
      non_binary.push_back(key + "=" + value.dump());
      continue;
    }
    out.values.emplace(key, *b);
  }
  if (!non_binary.empty()) {
    std::string msg = "non-binary value:";
    for (const auto& n : non_binary) msg += " " + n;
    throw ParseError(msg);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown label names:";
    for (const auto& u : unknown) msg += " " + u;
    throw ParseError(msg);
  }
  std::vector<std::string> missing;
  for (const auto& l : labels) {
    if (!out.values.contains(l)) missing.push_back(l);
  }
  if (!missing.empty()) {
    std::string msg = "response is missing labels:";
    for (const auto& m : missing) msg += " " + m;
    throw SchemaViolation(msg);
  }
  return out;
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path directory) : dir_(std::move(directory)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::key(std::string_view model_name, std::string_view prompt) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  const char sep = '\0';
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), model_name.data(), model_name.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), &sep, 1) != 1 ||
      EVP_DigestUpdate(ctx.get(), prompt.data(), prompt.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ResponseCache::put(const std::string& key, const std::string& value) const {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << std::this_thread::get_id() << "." << counter++;
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write cache file " + tmp.string());
    out << value;
  }
  std::filesystem::rename(tmp, dir_ / (key + ".txt"));
}

// ---------------------------------------------------------------------------

LlmExtractor::LlmExtractor(ExtractorConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  validate(config_);
  if (!transport_) throw std::invalid_argument("extractor needs a transport");
  if (config_.cache_path) cache_.emplace(*config_.cache_path);
}

Extraction LlmExtractor::extract(const std::string& sample_id, std::string_view report_text,
                                 const LabelSchema& schema, int level) const {
  const auto labels = schema.label_names(level);
  const auto prompt = render_prompt(config_.prompt_template, report_text, labels);

  std::string cache_key;
  if (cache_) {
    cache_key = ResponseCache::key(config_.model_name, prompt);
    if (auto hit = cache_->get(cache_key)) {
      try {
        return {parse_structured_response(*hit, labels, sample_id), 0, 0, true};
      } catch (const ParseError&) {
        // Unusable entry; fall through and refresh it.
      }
    }
  }

  TransportRequest request;
  request.url = config_.endpoint;
  request.body = build_request_body(config_, prompt);
  request.timeout = config_.timeout;
  request.headers.emplace_back("Content-Type", "application/json");
  if (!config_.api_key.empty()) request.headers.emplace_back("Authorization", "Bearer " + config_.api_key);

  std::string last_raw;
  std::string last_error;
  int attempts = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.retry_delay.count() > 0) std::this_thread::sleep_for(config_.retry_delay);
    ++attempts;
    std::string raw;
    try {
      raw = transport_->post(request);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    try {
      auto assignment = parse_structured_response(raw, labels, sample_id);
      if (cache_) cache_->put(cache_key, raw);
      return {std::move(assignment), attempts, attempts - 1, false};
    } catch (const ParseError& e) {
      last_error = e.what();
      last_raw = std::move(raw);
    }
  }
  throw ExtractionError("extraction for '" + sample_id + "' failed after " + std::to_string(attempts) +
                            " attempts: " + last_error,
                        last_raw, attempts);
}

LabelMatrix LlmExtractor::extract_all(const std::vector<std::pair<std::string, std::string>>& reports,
                                      const LabelSchema& schema, int level,
                                      std::size_t max_in_flight) const {
  std::vector<std::optional<Extraction>> results(reports.size());
  std::vector<std::exception_ptr> errors(reports.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reports.size(); i = next++) {
      try {
        results[i] = extract(reports[i].first, reports[i].second, schema, level);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(max_in_flight, reports.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  auto matrix = LabelMatrix::for_schema(schema, level);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    matrix.add(results[i]->assignment);
  }
  return matrix;
}

}  // namespace crg
