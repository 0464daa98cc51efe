#pragma once

#include <stdexcept>
#include <string>

namespace emotionpush {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external input (JSON lines, word2vec streams, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A precondition on arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Serialized payload failed its CRC check or is structurally truncated.
class ChecksumError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// Requested entity (label, message, classifier file) does not exist.
class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace emotionpush
