#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>

#include "cwlab/amplify.hpp"
#include "cwlab/errors.hpp"
#include "cwlab/rng.hpp"
#include "doctest.h"

using namespace cwlab;

TEST_CASE("schedule computes the floored iteration counts") {
    // Expected counts are the mathematical floors of (pi/2 - alpha)/(2 alpha)
    // and (pi/2)/(2 alpha). At eps = 1/4 and eps = 1/2 the ratios are exactly
    // 1, so the floors are 1 even though a naive double division rounds the
    // quotient one ulp below the integer.
    struct Row {
        double eps;
        std::int64_t n_uniform;
        std::int64_t n_bad;
    };
    for (const Row& row : {Row{0.001, 24, 24}, Row{0.01, 7, 7}, Row{0.1, 1, 2},
                           Row{0.25, 1, 1}, Row{0.4, 0, 1}, Row{0.5, 0, 1},
                           Row{0.9, 0, 0}, Row{1.0, 0, 0}}) {
        const AmplSchedule s = schedule(row.eps);
        const double alpha = std::asin(std::sqrt(row.eps));
        CHECK(s.alpha == doctest::Approx(alpha).epsilon(1e-15));
        CHECK(s.iters_uniform == row.n_uniform);
        CHECK(s.iters_bad == row.n_bad);
        CHECK(s.iters_uniform >= 0);
        CHECK(s.iters_bad >= s.iters_uniform);
    }
    CHECK_THROWS_AS(schedule(0.0), domain_error);
    CHECK_THROWS_AS(schedule(-0.1), domain_error);
    CHECK_THROWS_AS(schedule(1.0001), domain_error);
}

TEST_CASE("quarter marked fraction amplifies exactly") {
    // alpha = pi/6: one iteration reaches sin^2(3 alpha) = 1 from uniform and
    // sin^2(2 alpha) = 3/4 from the bad state.
    const AmplSchedule s = schedule(0.25);
    CHECK(s.iters_uniform == 1);
    CHECK(s.iters_bad == 1);
    const SuccessProbabilities p = success_probabilities(0.25);
    CHECK(p.from_uniform == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.from_bad == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("both start states beat the 1 - 4 alpha^2 guarantee") {
    for (int i = 0; i < 200; ++i) {
        const double eps = 0.0005 + i * (0.5 - 0.0005) / 199.0;
        const AmplSchedule s = schedule(eps);
        const SuccessProbabilities p = success_probabilities(eps);
        const double bound = 1.0 - 4.0 * s.alpha * s.alpha;
        CHECK(p.from_uniform >= bound - 1e-12);
        CHECK(p.from_bad >= bound - 1e-12);
    }
    CHECK_THROWS_AS(success_probabilities(0.51), infeasible_error);
    CHECK_THROWS_AS(success_probabilities(0.0), domain_error);
}

TEST_CASE("success probabilities match explicit sine expressions") {
    for (double eps : {0.003, 0.02, 0.11, 0.33, 0.5}) {
        const AmplSchedule s = schedule(eps);
        const SuccessProbabilities p = success_probabilities(eps);
        const double su =
            std::sin((2.0 * static_cast<double>(s.iters_uniform) + 1.0) * s.alpha);
        const double sb = std::sin(2.0 * static_cast<double>(s.iters_bad) * s.alpha);
        CHECK(p.from_uniform == doctest::Approx(su * su).epsilon(1e-12));
        CHECK(p.from_bad == doctest::Approx(sb * sb).epsilon(1e-12));
    }
}

TEST_CASE("rotation preserves the norm and composes additively") {
    TwoDState s;  // (1, 0)
    const TwoDState r1 = rotate(s, 0.3);
    CHECK(r1.bad_amp == doctest::Approx(std::cos(0.3)).epsilon(1e-15));
    CHECK(r1.good_amp == doctest::Approx(std::sin(0.3)).epsilon(1e-15));
    TwoDState acc = s;
    for (int i = 0; i < 10; ++i) acc = rotate(acc, 0.17);
    const TwoDState direct = rotate(s, 1.7);
    CHECK(acc.bad_amp == doctest::Approx(direct.bad_amp).epsilon(1e-12));
    CHECK(acc.good_amp == doctest::Approx(direct.good_amp).epsilon(1e-12));
    const double norm = acc.bad_amp * acc.bad_amp + acc.good_amp * acc.good_amp;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("repeat-until-success round counts follow the success law") {
    SplitMix64 rng(99);
    const SuccessProbabilities p = success_probabilities(0.1);
    const int trials = 4000;
    std::int64_t first = 0, total_known = 0;
    int known = 0;
    for (int t = 0; t < trials; ++t) {
        const std::int64_t rounds = repeat_until_success(0.1, rng, 50);
        CHECK(rounds >= 0);
        CHECK(rounds <= 50);
        if (rounds == 1) ++first;
        if (rounds >= 1) {
            ++known;
            total_known += rounds;
        }
    }
    // First-round rate estimates from_uniform; 4000 trials give a ~3 sigma
    // window of about 0.024.
    const double rate = static_cast<double>(first) / trials;
    CHECK(std::abs(rate - p.from_uniform) <
          3.0 * std::sqrt(p.from_uniform * (1.0 - p.from_uniform) / trials));
    // Conditional mean of the geometric tail: 1 + (1 - pu) / pb.
    const double mean_expect =
        1.0 + (1.0 - p.from_uniform) / p.from_bad;
    const double mean = static_cast<double>(total_known) / known;
    CHECK(mean == doctest::Approx(mean_expect).epsilon(0.08));
    CHECK_THROWS_AS(repeat_until_success(0.1, rng, 0), domain_error);
}
