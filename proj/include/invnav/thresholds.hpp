#pragma once

#include <cstddef>

// Acceptance thresholds and protocol sizes. The experiments, the CLI summary
// and the acceptance suite all read these; nothing else hardcodes them.
namespace invnav::thresholds {

// Manifold preservation of the invariant filter.
inline constexpr double kManifoldResidual = 1e-9;
inline constexpr std::size_t kManifoldSteps = 10000;
inline constexpr std::size_t kManifoldHeadings = 20;

// Linear Kalman filter with deterministic dynamics.
inline constexpr double kLinearConstraint = 1e-9;
inline constexpr std::size_t kLinearSteps = 1000;

// Closed-form Riccati solution and scalar heading recursion.
inline constexpr double kClosedFormRelative = 1e-12;
inline constexpr std::size_t kClosedFormN = 100000;
inline constexpr double kScalarRecursionGap = 1e-9;
inline constexpr std::size_t kScalarRecursionUpdates = 1000;

// Convergence rates of the invariant filter on a straight line.
inline constexpr double kHeadingSlopeLo = -3.2;
inline constexpr double kHeadingSlopeHi = -2.8;
inline constexpr double kPositionSlopeLo = -2.2;
inline constexpr double kPositionSlopeHi = -1.8;
inline constexpr std::size_t kRateFitLo = 1000;
inline constexpr std::size_t kRateFitHi = 100000;
inline constexpr double kAntipodeDrift = 1e-12;

// Long-run comparison of the two filters.
inline constexpr std::size_t kLongRunSteps = 1000000;
inline constexpr double kLongRunRatio = 10.0;

// Odometric distance along a straight line.
inline constexpr double kOdometerInvariant = 1e-9;
inline constexpr double kOdometerEkf = 1e-3;
inline constexpr std::size_t kOdometerUpdates = 50;

// Left-invariance of the filters under a change of global frame.
inline constexpr double kLeftInvariance = 1e-10;
inline constexpr double kLeftInvarianceWitness = 1e-3;

// Smoothing.
inline constexpr std::size_t kBatchSeeds = 10;
inline constexpr double kPlateauFraction = 0.01;
inline constexpr double kJacobianFd = 1e-6;
inline constexpr double kInformationIndependence = 1e-12;
inline constexpr std::size_t kWindowSeeds = 100;

}  // namespace invnav::thresholds
