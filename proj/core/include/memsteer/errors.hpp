#pragma once

#include <stdexcept>
#include <string>

namespace memsteer {

/// Process exit codes. cli::run maps thrown errors onto these.
enum class ExitCode : int {
  ok = 0,
  internal = 1,
  config = 2,
  dependency = 3,
  transport = 4,
  budget = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or missing configuration (template bank gaps, missing score bounds, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's stated contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant failed to hold (engine bug or corrupted state),
/// as opposed to a caller mistake.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Malformed records, unknown type ids, unsupported schema versions.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A required upstream stage file is missing or empty.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// A backend call failed after retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// A scripted fixture has no entry for the requested canonical hash.
class FixtureMissError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// The per-run call or token ceiling was hit.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// A judge backend produced output that could not become a verdict.
class ScoringError : public Error {
 public:
  using Error::Error;
};

/// A user simulator failed to produce a usable rewrite.
class RewriteError : public Error {
 public:
  using Error::Error;
};

/// A mask selector returned items outside the source bundle.
class SelectionError : public Error {
 public:
  using Error::Error;
};

/// Timeline synthesis exhausted its retries at one step.
class SynthesisError : public Error {
 public:
  SynthesisError(int step, std::string reason)
      : Error("timeline synthesis failed at step " + std::to_string(step) + ": " + reason),
        step_(step),
        reason_(std::move(reason)) {}

  int step() const { return step_; }
  const std::string& reason() const { return reason_; }

 private:
  int step_;
  std::string reason_;
};

}  // namespace memsteer
