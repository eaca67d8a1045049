#pragma once

#include <cstdint>

#include "cwlab/rng.hpp"

namespace cwlab {

// State in the 2D span of the "bad" (unmarked-uniform) and "good"
// (marked-uniform) unit vectors.
struct TwoDState {
    double bad_amp = 1.0;
    double good_amp = 0.0;
};

// Iteration schedule for amplitude amplification with known overlap:
// alpha = arcsin(sqrt(epsilon)); N rotations starting from the uniform
// state, N' starting from the bad state.
struct AmplSchedule {
    double epsilon = 0.0;
    double alpha = 0.0;
    std::int64_t iters_uniform = 0;  // N  = floor((pi/2 - alpha) / (2 alpha))
    std::int64_t iters_bad = 0;      // N' = floor((pi/2) / (2 alpha))
};

// Compute the schedule. epsilon must lie in (0, 1].
AmplSchedule schedule(double epsilon);

// Rotate the 2D state by theta (norm-preserving).
TwoDState rotate(const TwoDState& s, double theta);

// Success probabilities after the scheduled iteration counts:
//   from uniform: sin^2(alpha + 2 N alpha)
//   from bad:     sin^2(2 N' alpha)
// Both are >= 1 - 4 alpha^2 when epsilon <= 1/2 (alpha <= pi/4).
// epsilon > 1/2 throws infeasible_error (guarantee unavailable).
struct SuccessProbabilities {
    double from_uniform = 0.0;
    double from_bad = 0.0;
};
SuccessProbabilities success_probabilities(double epsilon);

// Simulate the repeat-until-success loop: one run from the uniform state,
// then repeated runs from the bad state (a failed measurement collapses the
// state exactly back to bad). Returns the 1-based index of the first
// successful round, or 0 after max_rounds failures.
std::int64_t repeat_until_success(double epsilon, SplitMix64& rng,
                                  std::int64_t max_rounds);

}  // namespace cwlab
