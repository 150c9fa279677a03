// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <stdexcept>
#include <string>

namespace fob {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problems; the CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownName : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class EmptyList : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BadParameter : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BadHyperparameter : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Runtime failures; the CLI maps these to exit code 1.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class NonFinite : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class OutOfRange : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class IoError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class VersionMismatch : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class CorruptCheckpoint : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class RunIdMismatch : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class MixedTasks : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class DuplicateCell : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class EmptyGrid : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace fob
