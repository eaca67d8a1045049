#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "cwlab/errors.hpp"
#include "cwlab/planner.hpp"
#include "doctest.h"

using namespace cwlab;

namespace {

bool flag_value(const ExponentReport& rep, const std::string& name) {
    for (const auto& [label, ok] : rep.constraints_satisfied)
        if (label == name) return ok;
    FAIL("constraint not reported: " << name);
    return false;
}

}  // namespace

TEST_CASE("collision exponent regimes") {
    const ExponentReport zero = collision_exponent(0, 120, 100);
    CHECK(zero.exponent == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(zero.regime == "bht");
    const ExponentReport zero_wide = collision_exponent(0, 180, 100);
    CHECK(zero_wide.exponent == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(zero_wide.regime == "ours");

    const ExponentReport ours = collision_exponent(25, 150, 100);
    CHECK(ours.exponent == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(ours.regime == "ours");
    CHECK(flag_value(ours, "k <= 2n - m"));

    const ExponentReport ext = collision_exponent(60, 180, 100);
    CHECK(ext.exponent == doctest::Approx(105.0).epsilon(1e-12));
    CHECK(ext.regime == "ours-extended");
    CHECK(ext.memory_exponent == doctest::Approx(90.0).epsilon(1e-12));
    CHECK_FALSE(flag_value(ext, "k <= 2n - m"));

    const ExponentReport bext = collision_exponent(61, 120, 100);
    CHECK(bext.exponent == doctest::Approx(81.0).epsilon(1e-12));
    CHECK(bext.regime == "bht-extended");
    CHECK(bext.memory_exponent == doctest::Approx(80.0).epsilon(1e-12));

    // The formulas are homogeneous: n-normalized inputs scale the output.
    const ExponentReport norm = collision_exponent(0.6, 1.8, 1.0);
    CHECK(norm.exponent == doctest::Approx(1.05).epsilon(1e-12));
    CHECK(norm.regime == "ours-extended");

    CHECK_THROWS_AS(collision_exponent(1, 150, 0), domain_error);
    CHECK_THROWS_AS(collision_exponent(1, 90, 100), domain_error);
    CHECK_THROWS_AS(collision_exponent(1, 210, 100), domain_error);
    CHECK_THROWS_AS(collision_exponent(-1, 150, 100), domain_error);
}

TEST_CASE("regime switches sit exactly at the stated boundaries") {
    struct Probe {
        double n, m, k0;
        const char* below;
        const char* above;
    };
    for (const Probe& p :
         {Probe{100, 120, 60, "bht", "bht-extended"},
          Probe{100, 160, 40, "ours", "ours-extended"}}) {
        const ExponentReport lo = collision_exponent(p.k0 - 1e-7, p.m, p.n);
        const ExponentReport hi = collision_exponent(p.k0 + 1e-7, p.m, p.n);
        CHECK(lo.regime == p.below);
        CHECK(hi.regime == p.above);
        CHECK(std::abs(lo.exponent - hi.exponent) <= 1e-6);
        std::string seen = lo.regime;
        for (double k = p.k0 - 5.0; k <= p.k0 + 5.0; k += 0.1) {
            const std::string r = collision_exponent(k, p.m, p.n).regime;
            if (k <= p.k0)
                CHECK(r == p.below);
            else
                CHECK(r == p.above);
        }
    }
}

TEST_CASE("combined exponent never loses to plain bht") {
    // Integer-indexed grid: accumulating doubles would blur the exact regime
    // boundaries (e.g. k = 0 at m = 1.5 lies exactly on k = 3n - 2m).
    for (int jm = 0; jm <= 10; ++jm) {
        const double m = (10 + jm) / 10.0;
        for (int ik = 0; ik <= 28; ++ik) {
            const double k = ik * 0.07;
            const ExponentReport both = collision_exponent(k, m, 1.0);
            const ExponentReport bht = bht_exponent(k, m, 1.0);
            CHECK(both.exponent <= bht.exponent + 1e-12);
            const bool equal =
                std::abs(both.exponent - bht.exponent) <= 1e-12;
            const bool bht_regime = both.regime.rfind("bht", 0) == 0;
            CHECK(equal == bht_regime);
        }
    }
}

TEST_CASE("memory-limited tradeoff") {
    const ExponentReport t = tradeoff_exponent(10, 45, 120, 100);
    CHECK(t.exponent == doctest::Approx(47.5).epsilon(1e-12));
    CHECK(t.memory_exponent == doctest::Approx(45.0));
    CHECK(t.regime == "walk+bht");

    // At the memory cap the tradeoff collapses to the unconstrained cost.
    const double cap = 2.0 * 10.0 / 3.0 + 120.0 / 3.0;
    CHECK(tradeoff_exponent(10, cap, 120, 100).exponent ==
          doctest::Approx(cap).epsilon(1e-12));

    CHECK(tradeoff_exponent(10, 45, 120, 70).regime == "walk");
    const ExponentReport bh = tradeoff_exponent(60, 60, 100, 100);
    CHECK(bh.regime == "bht");
    CHECK(bh.exponent == doctest::Approx(80.0).epsilon(1e-12));

    CHECK_THROWS_AS(tradeoff_exponent(10, 9, 120, 100), infeasible_error);
    CHECK_THROWS_AS(tradeoff_exponent(10, cap + 1e-6, 120, 100),
                    infeasible_error);
    CHECK_THROWS_AS(tradeoff_exponent(40, 65, 120, 61), infeasible_error);
}

TEST_CASE("bht exponent with the repetition extension") {
    const ExponentReport single = bht_exponent(50, 100, 100);
    CHECK(single.exponent == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(single.regime == "bht");
    const ExponentReport rep = bht_exponent(40, 140, 100);
    CHECK(rep.exponent == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(rep.regime == "bht-extended");
    CHECK(rep.memory_exponent == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(std::abs(bht_exponent(60 - 1e-7, 120, 100).exponent -
                   bht_exponent(60 + 1e-7, 120, 100).exponent) <= 1e-6);
}

TEST_CASE("r-collision cost and feasibility") {
    for (double k : {0.0, 10.0, 25.0})
        CHECK(r_collision(2, k, 150, 100).exponent ==
              doctest::Approx(2.0 * k / 3.0 + 50.0).epsilon(1e-12));

    const ExponentReport r3 = r_collision(3, 0, 100, 100);
    CHECK(r3.exponent == doctest::Approx(300.0 / 7.0).epsilon(1e-12));
    CHECK(flag_value(r3, "k/(2^r-1) + m(1 - 1/(2^r-1)) <= n"));

    const ExponentReport tight = r_collision(3, 1.0 / 7.0, 1.0, 1.0);
    CHECK(std::abs(tight.exponent - 25.0 / 49.0) <= 1e-9);
    CHECK(flag_value(tight, "k/(2^r-1) + m(1 - 1/(2^r-1)) <= n"));

    const ExponentReport infeas = r_collision(3, 0, 190, 100);
    CHECK_FALSE(flag_value(infeas, "k/(2^r-1) + m(1 - 1/(2^r-1)) <= n"));

    CHECK_THROWS_AS(r_collision(1, 0, 100, 100), domain_error);
    CHECK_THROWS_AS(r_collision(3, -1, 100, 100), domain_error);
}

TEST_CASE("limited-birthday exponents") {
    const LimitedBirthdayReport lb = limited_birthday(128, 32, 32, 0);
    CHECK(std::abs(lb.quantum_exponent - 112.0 / 3.0) <= 1e-9);
    CHECK(std::abs(lb.classical_exponent - 65.0) <= 1e-9);
    CHECK(lb.case_label == "sparse");
    CHECK_FALSE(lb.swapped_roles);

    // Swapping roles (din=20, dout=100) gives the cheaper single structure:
    // max(2k/3 + 28/3, k + min(8, 7)) = 17 versus 128/3 unswapped.
    const LimitedBirthdayReport one = limited_birthday(128, 100, 20, 10);
    CHECK(one.case_label == "single-structure");
    CHECK(one.swapped_roles);
    CHECK(std::abs(one.quantum_exponent - 17.0) <= 1e-9);
    CHECK(std::abs(one.classical_exponent - 19.5) <= 1e-9);

    const LimitedBirthdayReport a = limited_birthday(128, 40, 20, 5);
    const LimitedBirthdayReport b = limited_birthday(128, 20, 40, 5);
    CHECK(a.quantum_exponent ==
          doctest::Approx(b.quantum_exponent).epsilon(1e-12));
    CHECK(a.classical_exponent ==
          doctest::Approx(b.classical_exponent).epsilon(1e-12));

    CHECK_THROWS_AS(limited_birthday(128, 200, 32, 0), domain_error);
    CHECK_THROWS_AS(limited_birthday(0, 0, 0, 0), domain_error);
    CHECK_THROWS_AS(limited_birthday(128, 32, 32, -1), domain_error);
}

TEST_CASE("sieve parameter derivation at the published point") {
    const SieveReport rep = sieve_derived(0.3875, 0.27);
    CHECK(rep.c == doctest::Approx(0.3875));
    CHECK(rep.c1 == doctest::Approx(0.27));
    CHECK(std::abs(rep.zeta - 0.1568) <= 5e-4);
    CHECK(std::abs(rep.rho0 - 0.1214) <= 5e-4);
    CHECK(std::abs(rep.eps_exp - (-0.200)) <= 5e-3);
    CHECK(std::sin(rep.alpha) >= 0.5);
    CHECK(rep.theta_star ==
          doctest::Approx(2.0 * std::asin(1.0 / (2.0 * std::sin(rep.alpha))))
              .epsilon(1e-12));
    CHECK(rep.formula.empty());

    CHECK_THROWS_AS(sieve_derived(0.27, 0.3875), domain_error);
    CHECK_THROWS_AS(sieve_derived(1.0, 0.27), domain_error);
    CHECK_THROWS_AS(sieve_derived(0.3875, 0.0), domain_error);
}

TEST_CASE("sieve totals and the published running times") {
    const double unit = -std::log2(std::sin(3.141592653589793 / 3.0));
    const SieveReport nw = sieve_total(0.3875, 0.27, SieveFormula::New);
    CHECK(nw.formula == "new");
    CHECK(std::abs(nw.total_exp_d - 0.2563) <= 3e-4);
    CHECK(std::abs(nw.total_exp_N - 1.2347) <= 1.5e-3);
    CHECK(nw.total_exp_d ==
          doctest::Approx(nw.total_exp_N * unit).epsilon(1e-12));
    CHECK(std::abs(nw.fas1_exp - 0.3916) <= 5e-4);

    const SieveReport old = sieve_total(0.3875, 0.27, SieveFormula::Old);
    CHECK(old.formula == "old");
    CHECK(nw.total_exp_N <= old.total_exp_N + 1e-12);

    // The new bound only holds on its validity range (the same conditions the
    // optimizer enforces); outside it the old formula can be smaller.
    int admissible = 0;
    for (int ic = 0; ic < 14; ++ic) {
        const double c = 0.20 + ic * 0.05;
        for (int i1 = 1; 0.02 * i1 < c - 1e-9; ++i1) {
            const double c1 = 0.02 * i1;
            const SieveReport a = sieve_total(c, c1, SieveFormula::New);
            const SieveReport b = sieve_total(c, c1, SieveFormula::Old);
            if (a.eps_exp > 0.0 || a.zeta - a.rho0 < 0.0 ||
                a.zeta - a.rho0 > c1 / 4.0)
                continue;
            ++admissible;
            CHECK(a.total_exp_N <= b.total_exp_N + 1e-12);
        }
    }
    CHECK(admissible > 10);
}

TEST_CASE("sieve optimizer reproduces both published optima") {
    const SieveOptimum nw = optimize_sieve(SieveFormula::New);
    CHECK(std::abs(nw.report.total_exp_d - 0.2563) <= 3e-4);
    CHECK(std::abs(nw.c_star - 0.3875) <= 0.01);
    CHECK(std::abs(nw.c1_star - 0.27) <= 0.01);
    // No admissible point beats the published parameter choice.
    CHECK(nw.report.total_exp_d <=
          sieve_total(0.3875, 0.27, SieveFormula::New).total_exp_d + 1e-9);

    const SieveOptimum old = optimize_sieve(SieveFormula::Old);
    CHECK(std::abs(old.report.total_exp_d - 0.2570) <= 5e-4);
    CHECK(nw.report.total_exp_d <= old.report.total_exp_d + 1e-12);
}
