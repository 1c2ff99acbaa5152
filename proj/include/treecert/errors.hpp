#pragma once

#include <stdexcept>
#include <string>

namespace treecert {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text: model documents, LIBSVM lines, mapping specs, CSV.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid model: dangling or duplicated child ids, cycles,
// nodes unreachable from the root.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Classifier/additive mode misuse.
class ModeError : public Error {
 public:
  using Error::Error;
};

// Bad configuration value or unknown configuration key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid data passed to an operation: empty dataset, non-binary labels,
// missing columns, dimension mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace treecert
