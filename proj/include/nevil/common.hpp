#ifndef NEVIL_COMMON_HPP_
#define NEVIL_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nevil {

// Dense class identifier, assigned in order of first appearance within a run.
using ClassId = int;
inline constexpr ClassId kNoClass = -1;

// Posterior entries are kept inside [kEpsilon, 1 - kEpsilon] so log-domain
// fusion never sees log(0).
inline constexpr double kEpsilon = 1e-9;
inline constexpr double kVarianceFloor = 1e-6;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ColdStartError : public Error {
 public:
  ColdStartError() : Error("ensemble and class registry are both empty") {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class OracleFailure : public Error {
 public:
  using Error::Error;
};

// Row-major rows x cols matrix; one row per frame, one column per class.
struct PosteriorMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  PosteriorMatrix() = default;
  PosteriorMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// splitmix64 mix of a run seed with a stream or slot index. Every random
// stream in the library is seeded through this.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> v);

// log(sum(exp(v))) without overflow.
double log_sum_exp(std::span<const double> v);

}  // namespace nevil

#endif  // NEVIL_COMMON_HPP_
