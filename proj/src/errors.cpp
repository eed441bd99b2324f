#include "crg/errors.hpp"

#include <utility>

namespace crg {

namespace {

std::string join_issues(const std::vector<SchemaIssue>& issues) {
  std::string out = "invalid schema:";
  for (const auto& issue : issues) {
    out += "\n  ";
    if (issue.level > 0) out += "level " + std::to_string(issue.level) + ": ";
    if (!issue.name.empty()) out += "'" + issue.name + "': ";
    out += issue.message;
  }
  return out;
}

std::string located(const std::string& what, const std::string& source, std::size_t line) {
  if (source.empty() && line == 0) return what;
  std::string prefix = source.empty() ? "<input>" : source;
  if (line > 0) prefix += ":" + std::to_string(line);
  return prefix + ": " + what;
}

}  // namespace

SchemaError::SchemaError(std::vector<SchemaIssue> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

ParseError::ParseError(const std::string& what, std::string source, std::size_t line)
    : Error(located(what, source, line)), source_(std::move(source)), line_(line) {}

ExtractionError::ExtractionError(const std::string& what, std::string last_response, int attempts)
    : Error(what), last_response_(std::move(last_response)), attempts_(attempts) {}

}  // namespace crg
