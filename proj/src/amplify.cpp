#include "cwlab/amplify.hpp"

#include <cmath>

#include "cwlab/errors.hpp"

namespace cwlab {

AmplSchedule schedule(double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw domain_error("schedule: epsilon must be in (0, 1]");
    AmplSchedule s;
    s.epsilon = epsilon;
    s.alpha = std::asin(std::sqrt(epsilon));
    const double half_pi = std::asin(1.0);
    // The ratios land exactly on integers for special fractions (e.g. at
    // epsilon = 1/4 the first one is exactly 1); nudge before flooring so a
    // one-ulp rounding below the integer cannot drop a whole iteration.
    s.iters_uniform = static_cast<std::int64_t>(
        std::floor((half_pi - s.alpha) / (2.0 * s.alpha) + 1e-9));
    s.iters_bad = static_cast<std::int64_t>(
        std::floor(half_pi / (2.0 * s.alpha) + 1e-9));
    return s;
}

TwoDState rotate(const TwoDState& s, double theta) {
    const double c = std::cos(theta), n = std::sin(theta);
    return TwoDState{c * s.bad_amp - n * s.good_amp,
                     n * s.bad_amp + c * s.good_amp};
}

SuccessProbabilities success_probabilities(double epsilon) {
    if (!(epsilon > 0.0))
        throw domain_error("success_probabilities: epsilon must be positive");
    if (epsilon > 0.5)
        throw infeasible_error(
            "success_probabilities: guarantee unavailable for epsilon > 1/2");
    const AmplSchedule s = schedule(epsilon);
    const double su = std::sin(s.alpha + 2.0 * static_cast<double>(s.iters_uniform) * s.alpha);
    const double sb = std::sin(2.0 * static_cast<double>(s.iters_bad) * s.alpha);
    return SuccessProbabilities{su * su, sb * sb};
}

std::int64_t repeat_until_success(double epsilon, SplitMix64& rng,
                                  std::int64_t max_rounds) {
    if (max_rounds < 1)
        throw domain_error("repeat_until_success: max_rounds must be >= 1");
    const SuccessProbabilities p = success_probabilities(epsilon);
    if (rng.chance(p.from_uniform)) return 1;
    for (std::int64_t round = 2; round <= max_rounds; ++round)
        if (rng.chance(p.from_bad)) return round;
    return 0;
}

}  // namespace cwlab
