#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace crg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SchemaIssue {
  int level = 0;  // 1-based, 0 for schema-wide issues
  std::string name;
  std::string message;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<SchemaIssue> issues);
  const std::vector<SchemaIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<SchemaIssue> issues_;
};

/// Prediction and reference corpora disagree on sample ids or labels.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// CRG is undefined: the reference set has no positives or no negatives.
class DegenerateDistribution : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or response. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string source = {}, std::size_t line = 0);
  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// A structured response parsed but does not cover the schema level.
class SchemaViolation : public Error {
 public:
  using Error::Error;
};

/// LLM extraction gave up after exhausting its retries.
class ExtractionError : public Error {
 public:
  ExtractionError(const std::string& what, std::string last_response, int attempts);
  const std::string& last_response() const noexcept { return last_response_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::string last_response_;
  int attempts_;
};

/// Raised by transports on network or HTTP-level failure.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace crg
