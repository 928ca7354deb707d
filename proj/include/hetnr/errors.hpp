#pragma once

#include <stdexcept>
#include <string>

namespace hetnr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data model / IO
struct MissingFile : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct DanglingEdge : Error { using Error::Error; };
struct FeatureDimInconsistent : Error { using Error::Error; };
struct TooFewNodes : Error { using Error::Error; };
struct UnreachableSignal : Error { using Error::Error; };

// Hop operators
struct UnknownType : Error { using Error::Error; };
struct HopMismatch : Error { using Error::Error; };

// Model numerics
struct ShapeMismatch : Error { using Error::Error; };
struct NonFiniteInput : Error { using Error::Error; };
struct NonFiniteActivation : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };
struct EmptyMask : Error { using Error::Error; };

// Search / reporting
struct SpaceTooLarge : Error { using Error::Error; };
struct InconsistentSpace : Error { using Error::Error; };

}  // namespace hetnr
