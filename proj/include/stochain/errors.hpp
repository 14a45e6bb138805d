#pragma once

#include <stdexcept>
#include <string>

namespace stochain {

// Base class for everything this library throws on purpose. Catching
// stochain::Error at an API boundary is enough to separate our failures
// from genuine bugs (std::logic_error and friends).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix validation.
struct NonSquare : Error { using Error::Error; };
struct NegativeEntry : Error { using Error::Error; };
struct RowSumViolation : Error { using Error::Error; };

// Index sets and cuts.
struct TrivialCut : Error { using Error::Error; };
struct EqualIndices : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// Chain models.
struct DegenerateSchedule : Error { using Error::Error; };
struct NonBinaryFailureMatrix : Error { using Error::Error; };
struct NoClosedForm : Error { using Error::Error; };

// Partitions and block structure.
struct InvalidPartition : Error { using Error::Error; };
struct NotBlockDiagonal : Error { using Error::Error; };

// Harness.
struct ParseError : Error { using Error::Error; };
struct AnalysisError : Error { using Error::Error; };

}  // namespace stochain
