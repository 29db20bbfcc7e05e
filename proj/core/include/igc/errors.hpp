#pragma once

#include <stdexcept>
#include <string>

namespace igc {

// A client produced a non-finite gradient; it is excluded from the round.
class PoisonedGradientError : public std::runtime_error {
 public:
  explicit PoisonedGradientError(const std::string& what)
      : std::runtime_error(what) {}
};

// Malformed message sequence (empty round, bad subspace tag, missing vector).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A probe diverged (loss grew past 10x its initial value).
class StepSizeError : public std::runtime_error {
 public:
  explicit StepSizeError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset or checkpoint file could not be parsed.
class IngestionError : public std::runtime_error {
 public:
  explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace igc
