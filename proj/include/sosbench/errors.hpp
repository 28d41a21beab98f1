#pragma once

#include <stdexcept>
#include <string>

namespace sosbench {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input file could not be parsed; message carries file:line context.
struct ParseError : Error {
  using Error::Error;
};

// A parsed record violates a registry invariant.
struct ValidationError : Error {
  using Error::Error;
};

struct EmptyLexiconError : Error {
  using Error::Error;
};

// Template markup is malformed (placeholder counts, scaffold mismatch, ...).
struct MarkupError : Error {
  using Error::Error;
};

struct MissingFormError : Error {
  using Error::Error;
};

struct UnsupportedLanguageError : Error {
  using Error::Error;
};

// Network-level failure after the retry policy is exhausted.
struct TransportError : Error {
  using Error::Error;
};

// The server answered but the payload violates the wire contract.
struct ProtocolError : Error {
  using Error::Error;
};

// No tokens survive the modified-span exclusion.
struct AlignmentError : Error {
  using Error::Error;
};

struct EmptyInputError : Error {
  using Error::Error;
};

struct MissingGoldError : Error {
  using Error::Error;
};

struct MissingDumpError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace sosbench
