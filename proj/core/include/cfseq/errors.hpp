#pragma once

#include <stdexcept>
#include <string>

namespace cfseq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed column / attribute declaration.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a data-model invariant (bad cell, inconsistent outcome, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyLogError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

/// Activity or category outside the fitted encoder vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

class SynthesisError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Numeric argument outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Components that must share an encoder disagree on shape.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SelectionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfseq
