#pragma once

#include <stdexcept>
#include <string>

namespace isopsm {

// Base of all library errors. DataError covers invalid or unusable input
// (CLI exit code 3); NumericError covers estimation/optimization failures
// (CLI exit code 4).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct DimensionMismatch : DataError {
  using DataError::DataError;
};
struct NonBinaryTreatment : DataError {
  using DataError::DataError;
};
struct DegenerateArm : DataError {
  using DataError::DataError;
};
struct NonFinite : DataError {
  using DataError::DataError;
};
struct EmptyInput : DataError {
  using DataError::DataError;
};
struct IndexOutOfRange : DataError {
  using DataError::DataError;
};
struct InsufficientControls : DataError {
  using DataError::DataError;
};

struct NonConvergence : NumericError {
  using NumericError::NumericError;
};
struct Separation : NumericError {
  using NumericError::NumericError;
};
struct RankDeficient : NumericError {
  using NumericError::NumericError;
};
struct NoDescent : NumericError {
  using NumericError::NumericError;
};
struct NumericalOverflow : NumericError {
  using NumericError::NumericError;
};
struct NotApplicable : NumericError {
  using NumericError::NumericError;
};
struct AllReplicatesFailed : NumericError {
  using NumericError::NumericError;
};

}  // namespace isopsm
