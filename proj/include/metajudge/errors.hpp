#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace metajudge {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input that violates a documented precondition (bad config, bad plan, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

// Structural validation failure (config files, schemas, weights).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Model output that could not be parsed into the expected shape.
// Keeps the raw text so failed items can be audited later.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::string raw_text)
      : Error(what), raw_text_(std::move(raw_text)) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  const std::string& raw_text() const { return raw_text_; }

private:
  std::string raw_text_;
};

// A judge tie/refusal or any decision text with no clear preference.
class UnparseableDecision : public ParseError {
public:
  using ParseError::ParseError;
};

// Agent refinement output that does not form a usable rubric.
class RefinementParseError : public ParseError {
public:
  using ParseError::ParseError;
};

// Transport failure that survived the configured retries.
class TransportError : public Error {
public:
  using Error::Error;
};

// Fewer usable agents than the aggregation strategy needs.
class ItemFailed : public Error {
public:
  using Error::Error;
};

class NotFoundError : public Error {
public:
  using Error::Error;
};

// Stored artifact written under a different schema version.
class VersionMismatchError : public Error {
public:
  using Error::Error;
};

}  // namespace metajudge
