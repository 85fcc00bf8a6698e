#pragma once

#include <stdexcept>
#include <string>

namespace neuroscreen {

// Base of every error the pipeline raises deliberately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed documents, invalid flag combinations, missing
// files named on the command line. Maps to exit code 2 at the CLI.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem / encoding failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---- plate_model ----
class UnknownRowError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class ColumnOutOfRangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class InvalidDoseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class DuplicateWellError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class RegimeCountMismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class UnassignedWellError : public Error {
 public:
  using Error::Error;
};
class CatalogSizeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// ---- dataset_ingest ----
class EmptyDirectoryError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class DuplicateKeyError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class TooFewPlatesError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class MissingLayoutError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// ---- classifier / attention_maps ----
class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};
class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};
class NoConvStageError : public Error {
 public:
  using Error::Error;
};

// ---- screening ----
class EmptyWellError : public Error {
 public:
  using Error::Error;
};
class MixedWellsError : public Error {
 public:
  using Error::Error;
};
class WrongWellCountError : public Error {
 public:
  using Error::Error;
};
class MissingRegimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace neuroscreen
