#ifndef REMLKIT_ERRORS_HPP
#define REMLKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace remlkit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

// Parameter vector outside the domain where H is SPD and l_R is defined.
struct InfeasibleParams : Error {
    using Error::Error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct SingularCoefficientMatrix : Error {
    using Error::Error;
};

struct SingularCurvature : Error {
    using Error::Error;
};

struct InvalidStep : Error {
    using Error::Error;
};

struct StatisticalFloor : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct MissingColumn : DataError {
    using DataError::DataError;
};

struct NonNumericValue : DataError {
    using DataError::DataError;
};

struct RankDeficientX : DataError {
    using DataError::DataError;
};

}  // namespace remlkit

#endif
