#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vdc {

struct SourcePos {
  int line = 0;  // 1-based; 0 means "no position"
  int column = 0;
};

struct SourceSpan {
  SourcePos begin;
  SourcePos end;

  bool valid() const { return begin.line > 0; }
  std::string str() const;
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceSpan span;

  std::string str() const;
};

// Thrown for ill-formed definitions: undeclared names, sort mismatches,
// malformed lattices, missing History chunks, and the like.
class DefinitionError : public std::runtime_error {
 public:
  explicit DefinitionError(const std::string& what, SourceSpan span = {})
      : std::runtime_error(what), span(span) {}
  SourceSpan span;
};

// Thrown when a caller violates an operation's contract (bad indices,
// missing configuration).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a request exceeds what the implementation can decide
// (unbounded quantifier domains, state-space blow-up guards).
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime evaluation fault (division by zero). The operational semantics
// maps this to an abort configuration.
class EvalFault : public std::runtime_error {
 public:
  explicit EvalFault(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency failure (countermodel replay mismatch). Never caught.
class InternalSoundnessError : public std::logic_error {
 public:
  explicit InternalSoundnessError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace vdc
