// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_ERRORS_HPP_
#define ZDDA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace zdda {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file contents (bad magic number, truncated payload, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Two inputs that must agree do not (count mismatch, label mismatch, ...).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Tensor/matrix shapes incompatible with the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Not enough data to satisfy the request (empty dataset, class too small).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: unknown identifiers, rejected experiment configs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A caller violated an API contract (e.g. passed a frozen state as trainable).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Words missing from an embedding table.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// A dataset or artifact referenced by a config could not be located.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace zdda

#endif  // ZDDA_ERRORS_HPP_
