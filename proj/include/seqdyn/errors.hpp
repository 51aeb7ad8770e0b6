#pragma once

#include <stdexcept>
#include <string>

namespace seqdyn {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// polyseq
struct BoundsViolation : Error { using Error::Error; };

// conjugation
struct BranchObstruction : Error { using Error::Error; };
struct IndexBeyondHorizon : Error { using Error::Error; };

// potential
struct BranchLoss : Error { using Error::Error; };
struct ContinuationStall : Error { using Error::Error; };

// rays
struct UnlandedRay : Error { using Error::Error; };
struct ClusterDiameterExceeded : Error { using Error::Error; };

// hyperbolicity
struct SamplingFailed : Error { using Error::Error; };

// motion
struct AmbiguousPreimage : Error { using Error::Error; };
struct NoPreimageInDisc : Error { using Error::Error; };
struct PathNotContinuable : Error { using Error::Error; };
struct CoLandingBroken : Error { using Error::Error; };

// render
struct TimeMismatch : Error { using Error::Error; };

// apps
struct ConfigError : Error { using Error::Error; };

} // namespace seqdyn
