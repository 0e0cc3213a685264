#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qrf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File/row level problems while reading input tables.
struct ParseError : Error {
  using Error::Error;
};

// A row references a cell or cycle that does not exist.
struct ReferentialError : Error {
  using Error::Error;
};

// Cell never crosses the end-of-life threshold; excluded from supervised sets.
struct CensoredCellError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct TruncationError : Error {
  using Error::Error;
};

struct CurveQualityError : Error {
  using Error::Error;
};

struct FeatureError : Error {
  using Error::Error;
};

struct PeakDetectionError : Error {
  using Error::Error;
};

struct FitError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct UndefinedMetricError : Error {
  using Error::Error;
};

// Coordinate descent ran out of iterations; carries the last iterate so the
// caller can inspect how far it got.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, std::vector<double> last)
      : Error(what), last_coefficients(std::move(last)) {}
  std::vector<double> last_coefficients;
};

}  // namespace qrf
