#pragma once

#include <stdexcept>
#include <string>

namespace cbem {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// mesh
struct ParseError : Error { using Error::Error; };
struct NonManifold : Error { using Error::Error; };
struct DegenerateTriangle : Error { using Error::Error; };
struct InvalidParam : Error { using Error::Error; };

// em / assembly
struct CoincidentPoints : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };

// solvers
struct SolverBreakdown : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct InnerSolveFailure : Error { using Error::Error; };

// cbfm
struct RankZero : Error { using Error::Error; };

// postprocess
struct MismatchedSweep : Error { using Error::Error; };
struct DegenerateRange : Error { using Error::Error; };
struct NonConvergentSeries : Error { using Error::Error; };

// cli / config
struct ConfigError : Error { using Error::Error; };

}  // namespace cbem
