#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfa {

enum class ErrorCode {
  // graph validation
  CycleDetected,
  MultipleInputs,
  MissingInput,
  UnreachableVertex,
  MissingPredecessor,
  DuplicateId,
  InvalidLayer,
  UnknownVertex,
  // parameter bookkeeping
  UnknownChannels,
  // rf engine
  PathExplosion,
  // refinement
  NothingToRefine,
  NoFeasibleProposal,
  RemovalBreaksGraph,
  CannotMeetTolerance,
  StaleProposal,
  // ingestion
  MalformedFile,
  MissingKernelAttribute,
  UnsupportedOperator,
  TerminalDisplaced,
  SyntaxError,
  UnknownReference,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library. `code()` is stable and tests match on it;
// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Error raised by the DSL parser; carries a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                        message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace rfa
