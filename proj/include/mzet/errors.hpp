#pragma once

#include <stdexcept>
#include <string>

namespace mzet {

// Base for every recoverable input/usage failure. The CLI maps these to exit
// code 2; anything else escaping a command is treated as an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StructuralError : public Error { using Error::Error; };
class DuplicateError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class LabelingError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class AlignmentError : public Error { using Error::Error; };
class SpanError : public Error { using Error::Error; };
class LoadError : public Error { using Error::Error; };
class SplitError : public Error { using Error::Error; };
class VersionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class EmptyTokenError : public Error { using Error::Error; };
class EmptyStoreError : public Error { using Error::Error; };

// Training produced a non-finite loss. Not an input error.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mzet
