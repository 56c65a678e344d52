#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace speechparse {

// Base class for every error raised by the library. The CLI maps these to
// exit code 2 when they come from user input and 1 otherwise.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (bracketed trees, config files). `offset` is the
// 1-based character position where the problem was detected.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Violation of a file format; carries file name and 1-based line (0 for
// binary formats).
class FormatError : public Error {
 public:
  FormatError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Deterministic 64-bit generator (splitmix64 seeding + xoshiro256**).
// Distribution helpers are hand-rolled so that draws are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  // Standard normal (Box-Muller, no caching so state stays a pure function
  // of the number of calls).
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace speechparse
