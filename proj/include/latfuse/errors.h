#ifndef LATFUSE_ERRORS_H_
#define LATFUSE_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latfuse {

// Base for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (ARPA, vocabulary, matrix, TSV, ...).
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A character sequence that no vocabulary segmentation covers.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& character, std::size_t position)
      : Error("character '" + character + "' at position " +
              std::to_string(position) + " cannot be covered by the vocabulary"),
        character_(character),
        position_(position) {}
  const std::string& character() const { return character_; }
  std::size_t position() const { return position_; }  // 1-based

 private:
  std::string character_;
  std::size_t position_;
};

// Token/word absent from the LM with no <unk> fallback, or strict OOV mode.
class OovError : public Error {
 public:
  explicit OovError(const std::string& msg) : Error(msg) {}
};

// Shape mismatch between related inputs (matrix vs. token table, ...).
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Beam search ended with no surviving hypothesis.
class DecodeError : public Error {
 public:
  explicit DecodeError(const std::string& msg) : Error(msg) {}
};

}  // namespace latfuse

#endif  // LATFUSE_ERRORS_H_
