#pragma once

// LLM-backed label extraction. The client renders a prompt from a template,
// posts it through an injectable Transport, and parses the first JSON object
// in the reply into a LabelAssignment.

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crg/schema.hpp"

namespace crg {

inline constexpr std::string_view kReportPlaceholder = "{{report}}";
inline constexpr std::string_view kLabelsPlaceholder = "{{labels}}";

/// Built-in prompt; asks for a single JSON object of label -> 0|1.
std::string default_prompt_template();

struct TransportRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{30000};
};

/// Request/response seam for the extraction client. Implementations must be
/// safe to call from several threads and throw TransportError on failure.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Returns the model's reply text.
  virtual std::string post(const TransportRequest& request) = 0;
};

/// HTTP(S) POST via cpp-httplib. Chat-completion envelopes are unwrapped to
/// `choices[0].message.content`; any other body is returned as-is.
class HttpTransport final : public Transport {
 public:
  std::string post(const TransportRequest& request) override;
};

struct ExtractorConfig {
  std::string endpoint;
  std::string model_name;
  std::string prompt_template = default_prompt_template();
  int max_retries = 2;
  std::chrono::milliseconds timeout{30000};
  std::optional<std::filesystem::path> cache_path;
  std::string api_key;  // sent as a bearer token when non-empty
  std::chrono::milliseconds retry_delay{0};
};

/// Throws std::invalid_argument when a placeholder is missing or
/// max_retries < 0.
void validate(const ExtractorConfig& config);

std::string render_prompt(std::string_view prompt_template, std::string_view report_text,
                          const std::vector<std::string>& labels);

/// Chat-style request body: {"model", "messages": [{"role": "user", ...}], "temperature": 0}.
std::string build_request_body(const ExtractorConfig& config, const std::string& prompt);

/// Extracts the first JSON object embedded in `raw` and validates it against
/// `labels`. Values may be 0/1 or true/false. An object of the form
/// {"labels": {...}} is unwrapped.
///
/// Throws ParseError when no object parses, on non-binary values, and on
/// unknown label names; SchemaViolation when labels are missing.
LabelAssignment parse_structured_response(std::string_view raw, const std::vector<std::string>& labels,
                                          std::string sample_id = {});

/// Content-addressed store of raw responses, one file per request hash.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  /// Hex SHA-256 over model name and rendered prompt.
  static std::string key(std::string_view model_name, std::string_view prompt);

  std::optional<std::string> get(const std::string& key) const;
  /// Atomic with respect to concurrent readers: write to a temporary, rename.
  void put(const std::string& key, const std::string& value) const;

  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct Extraction {
  LabelAssignment assignment;
  int attempts = 0;
  int retries = 0;
  bool cache_hit = false;
};

class LlmExtractor {
 public:
  LlmExtractor(ExtractorConfig config, std::shared_ptr<Transport> transport);

  /// Retries transport failures and malformed replies up to max_retries
  /// times, then throws ExtractionError carrying the last raw reply. Missing
  /// labels raise SchemaViolation immediately.
  Extraction extract(const std::string& sample_id, std::string_view report_text,
                     const LabelSchema& schema, int level) const;

  /// Labels every report with at most `max_in_flight` concurrent requests.
  /// Rows keep input order; the first failure (in input order) is rethrown.
  LabelMatrix extract_all(const std::vector<std::pair<std::string, std::string>>& reports,
                          const LabelSchema& schema, int level, std::size_t max_in_flight = 4) const;

  const ExtractorConfig& config() const noexcept { return config_; }

 private:
  ExtractorConfig config_;
  std::shared_ptr<Transport> transport_;
  std::optional<ResponseCache> cache_;
};

}  // namespace crg
