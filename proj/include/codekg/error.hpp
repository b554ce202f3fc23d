#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace codekg {

// Base for every error the library raises. Each subclass maps onto one of the
// named failure modes of a stage so callers can branch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("empty input: text is blank after trimming") {}
};

class ParseError : public Error {
 public:
  ParseError(std::string what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id)
      : Error("duplicate abstract id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class SampleTooLarge : public Error {
 public:
  SampleTooLarge(std::size_t want, std::size_t have)
      : Error("sample size " + std::to_string(want) + " exceeds population " +
              std::to_string(have)) {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input file does not match the schema its loader expects.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class MissingPlaceholder : public Error {
 public:
  explicit MissingPlaceholder(const std::string& slot)
      : Error("missing placeholder binding: " + slot), slot_(slot) {}
  const std::string& slot() const { return slot_; }

 private:
  std::string slot_;
};

// Anything that went wrong talking to a generation or data endpoint.
class BackendFailure : public Error {
 public:
  using Error::Error;
};

class NetworkError : public BackendFailure {
 public:
  using BackendFailure::BackendFailure;
};

class RateLimited : public BackendFailure {
 public:
  using BackendFailure::BackendFailure;
};

class BackendError : public BackendFailure {
 public:
  BackendError(int status, const std::string& body)
      : BackendFailure("backend returned HTTP " + std::to_string(status) +
                       (body.empty() ? "" : ": " + body.substr(0, 200))),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class EmptyResponse : public BackendFailure {
 public:
  EmptyResponse() : BackendFailure("backend returned an empty response") {}
};

class EmptyResult : public BackendFailure {
 public:
  explicit EmptyResult(const std::string& query)
      : BackendFailure("no results for query: " + query) {}
};

class UnscriptedInput : public BackendFailure {
 public:
  explicit UnscriptedInput(const std::string& hash)
      : BackendFailure("mock backend has no scripted response for input " + hash),
        hash_(hash) {}
  const std::string& hash() const { return hash_; }

 private:
  std::string hash_;
};

class EmbeddingUnavailable : public BackendFailure {
 public:
  using BackendFailure::BackendFailure;
};

class NoParsableOutput : public Error {
 public:
  NoParsableOutput() : Error("no parsable output in model response") {}
};

class OverlappingSpans : public Error {
 public:
  OverlappingSpans(int a_start, int a_end, int b_start, int b_end)
      : Error("overlapping annotation spans [" + std::to_string(a_start) + "," +
              std::to_string(a_end) + "] and [" + std::to_string(b_start) + "," +
              std::to_string(b_end) + "]") {}
};

class DegenerateExpected : public Error {
 public:
  DegenerateExpected() : Error("expected agreement must be < 1") {}
};

class EmptyBatch : public Error {
 public:
  EmptyBatch() : Error("cannot aggregate an empty batch") {}
};

}  // namespace codekg
