#pragma once

#include <stdexcept>
#include <string>

namespace gpath {

// Base for every error raised by the library. Messages are meant to be shown
// to a user as-is (they name the offending file, row, tensor, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class TokenizerError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class AlignError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vector after centering; callers drop the position.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpath
