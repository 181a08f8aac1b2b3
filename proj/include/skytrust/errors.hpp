#pragma once

#include <stdexcept>
#include <string>

namespace skytrust {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A score or weight fell outside its declared domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// behavior_score was asked to score a UAV nobody observed this round.
class NoObservations : public Error {
public:
  NoObservations() : Error("no interaction records for subject") {}
};

class InvalidCapacity : public Error {
public:
  InvalidCapacity() : Error("energy capacity must be positive") {}
};

class NoCandidates : public Error {
public:
  NoCandidates() : Error("validator lottery has no candidates") {}
};

class EmptyBlockRejected : public Error {
public:
  EmptyBlockRejected() : Error("refusing to append a block with no transactions") {}
};

/// Aggregation weights sum to zero, so no convex combination exists.
class DegenerateWeights : public Error {
public:
  DegenerateWeights() : Error("aggregation weights sum to zero") {}
};

class RoundSkipped : public Error {
public:
  RoundSkipped() : Error("no eligible FL participants this round") {}
};

class InvalidHub : public Error {
public:
  explicit InvalidHub(std::size_t hub)
      : Error("star hub id " + std::to_string(hub) + " is not a UAV in this world") {}
};

/// A metric whose denominator is empty (no predictions, no rogues, no transactions).
class UndefinedMetric : public Error {
public:
  using Error::Error;
};

/// Scenario configuration rejected; `key_path()` names the offending entry.
class ConfigError : public Error {
public:
  ConfigError(std::string key_path, const std::string &why)
      : Error(key_path + ": " + why), key_path_(std::move(key_path)) {}

  const std::string &key_path() const noexcept { return key_path_; }

private:
  std::string key_path_;
};

/// Malformed ledger export (bad JSON, bad hex, missing field).
class LedgerFormatError : public Error {
public:
  using Error::Error;
};

} // namespace skytrust
