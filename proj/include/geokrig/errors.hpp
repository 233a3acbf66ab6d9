#ifndef GEOKRIG_ERRORS_HPP
#define GEOKRIG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace geokrig {

// Base class for all library errors. Each concrete class maps to a distinct
// CLI exit code (see cli::exit_code_for).
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : Error {
  using Error::Error;
};
struct DuplicateLocation : Error {
  using Error::Error;
};
struct DegenerateSeries : Error {
  using Error::Error;
};
struct BadSplit : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};
struct InsufficientSamples : Error {
  using Error::Error;
};
struct InsufficientNeighbors : Error {
  using Error::Error;
};
struct DegenerateRotation : Error {
  using Error::Error;
};
struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct ZeroVariance : Error {
  using Error::Error;
};
struct OverlappingRegions : Error {
  using Error::Error;
};
struct EmptyChain : Error {
  using Error::Error;
};
struct AllProposalsRejected : Error {
  using Error::Error;
};
struct LocationMismatch : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace geokrig

#endif  // GEOKRIG_ERRORS_HPP
