#pragma once

#include <stdexcept>
#include <string>

namespace tdlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArg : Error { using Error::Error; };
struct DimMismatch : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct NonFiniteInput : Error { using Error::Error; };

struct SingularMatrix : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct NotSymmetric : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };

struct DegenerateDiagonal : Error { using Error::Error; };
struct NonPositiveSpectrum : Error { using Error::Error; };
struct Diverged : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };

struct DegenerateSample : Error { using Error::Error; };
struct SingularDesign : Error { using Error::Error; };
struct NonFiniteParameters : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };

}  // namespace tdlab
