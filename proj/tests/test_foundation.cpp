#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "cwlab/bitstring.hpp"
#include "cwlab/combinat.hpp"
#include "cwlab/errors.hpp"
#include "cwlab/rng.hpp"
#include "doctest.h"

using namespace cwlab;

TEST_CASE("splitmix64 reference outputs from seed 0") {
    SplitMix64 r(0);
    CHECK(r.next() == 0xE220A8397B1DCDAFull);
    CHECK(r.next() == 0x6E789E6AA1B965F4ull);
    CHECK(r.next() == 0x06C45D188009454Full);
}

TEST_CASE("splitmix64 determinism and stream independence") {
    SplitMix64 a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    SplitMix64 base(7);
    SplitMix64 s1 = base.stream(1);
    SplitMix64 s1b = base.stream(1);
    SplitMix64 s2 = base.stream(2);
    CHECK(s1.next() == s1b.next());
    CHECK(s1.next() != s2.next());
}

TEST_CASE("below is in range, rejects zero, and is roughly uniform") {
    SplitMix64 r(1);
    CHECK_THROWS_AS(r.below(0), domain_error);
    for (int i = 0; i < 1000; ++i) CHECK(r.below(1) == 0);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 100'000; ++i) ++counts[static_cast<std::size_t>(r.below(10))];
    for (int c : counts) {
        CHECK(c > 9'500);
        CHECK(c < 10'500);
    }
}

TEST_CASE("unit stays in [0,1) with sane mean") {
    SplitMix64 r(2);
    double sum = 0.0;
    for (int i = 0; i < 10'000; ++i) {
        const double u = r.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 10'000 == doctest::Approx(0.5).epsilon(0.02));
    SplitMix64 c(3);
    CHECK_FALSE(c.chance(0.0));
    CHECK(c.chance(1.0));
}

TEST_CASE("bit-string codec") {
    CHECK(bits_from_value(5, 4) == "0101");
    CHECK(bits_from_value(0, 0) == "");
    CHECK(bits_value("0101") == 5);
    CHECK(bits_value("") == 0);
    for (std::uint64_t v = 0; v < 64; ++v)
        CHECK(bits_value(bits_from_value(v, 6)) == v);
    CHECK(bits_valid("0101"));
    CHECK(bits_valid(""));
    CHECK_FALSE(bits_valid("012"));
    CHECK_THROWS_AS(bits_from_value(4, 2), domain_error);
    CHECK_THROWS_AS(bits_from_value(0, 64), domain_error);
    CHECK(bits_starts_with("0101", "01"));
    CHECK_FALSE(bits_starts_with("0101", "00"));
    CHECK(bits_lcp("0101", "0110") == 2);
    CHECK(bits_lcp("", "0110") == 0);
    SUBCASE("fixed-width lexicographic order equals numeric order") {
        for (std::uint64_t a = 0; a < 32; ++a)
            for (std::uint64_t b = 0; b < 32; ++b)
                CHECK((bits_from_value(a, 5) < bits_from_value(b, 5)) ==
                      (a < b));
    }
}

TEST_CASE("binomial values and overflow guard") {
    CHECK(binomial(0, 0) == 1);
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(52, 5) == 2'598'960);
    CHECK(binomial(4, 5) == 0);
    CHECK(binomial(64, 32) == 1'832'624'140'942'590'534ull);
    CHECK_THROWS_AS(binomial(128, 64), capacity_error);
}

TEST_CASE("domain spec validation and effective elements") {
    DomainSpec spec;
    spec.n_bits = 3;
    spec.excluded = {6, 7};
    spec.validate();
    CHECK(spec.universe_size() == 8);
    CHECK(spec.n_eff() == 6);
    CHECK(spec.is_excluded(6));
    CHECK_FALSE(spec.is_excluded(5));
    CHECK(effective_elements(spec) ==
          std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5});

    DomainSpec bad = spec;
    bad.excluded = {7, 6};
    CHECK_THROWS_AS(bad.validate(), domain_error);
    bad.excluded = {6, 6};
    CHECK_THROWS_AS(bad.validate(), domain_error);
    bad.excluded = {8};
    CHECK_THROWS_AS(bad.validate(), domain_error);
}

TEST_CASE("degree and spectral gap of the Johnson graph") {
    DomainSpec spec;
    spec.n_bits = 3;
    spec.excluded = {6, 7};
    CHECK(degree(spec, 2) == 8);
    CHECK(spectral_gap(spec, 2) == doctest::Approx(0.75).epsilon(1e-12));
    DomainSpec full;
    full.n_bits = 3;
    CHECK(degree(full, 3) == 15);
    CHECK(spectral_gap(full, 3) ==
          doctest::Approx(8.0 / 15.0).epsilon(1e-12));
}

TEST_CASE("johnson transition spectrum closed form") {
    const auto s62 = johnson_transition_spectrum(6, 2);
    REQUIRE(s62.size() == 3);
    CHECK(s62[0].first == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s62[0].second == 1);
    CHECK(s62[1].first == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(s62[1].second == 5);
    CHECK(s62[2].first == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(s62[2].second == 9);

    const auto s83 = johnson_transition_spectrum(8, 3);
    REQUIRE(s83.size() == 4);
    CHECK(s83[1].first == doctest::Approx(7.0 / 15.0).epsilon(1e-12));
    CHECK(s83[2].first == doctest::Approx(1.0 / 15.0).epsilon(1e-12));
    CHECK(s83[3].first == doctest::Approx(-0.2).epsilon(1e-12));
    std::uint64_t mults = 0;
    for (const auto& [lam, mult] : s83) mults += mult;
    CHECK(mults == binomial(8, 3));
}

TEST_CASE("colexicographic rank is a bijection") {
    DomainSpec tiny;
    tiny.n_bits = 2;
    CHECK(vertex_rank(tiny, Vertex{2, 3}) == 5);

    const auto check_bijection = [](const DomainSpec& spec, int R) {
        const std::uint64_t nv = binomial(spec.n_eff(), static_cast<std::uint64_t>(R));
        std::set<std::uint64_t> seen;
        for (std::uint64_t r = 0; r < nv; ++r) {
            const Vertex S = vertex_unrank(spec, R, r);
            validate_vertex(spec, S);
            CHECK(vertex_rank(spec, S) == r);
            seen.insert(r);
        }
        CHECK(seen.size() == nv);
    };
    DomainSpec full;
    full.n_bits = 3;
    check_bijection(full, 2);
    DomainSpec holey;
    holey.n_bits = 3;
    holey.excluded = {2, 5, 6};
    check_bijection(holey, 2);
    check_bijection(holey, 3);
}

TEST_CASE("complement select and rank invert each other") {
    DomainSpec spec;
    spec.n_bits = 3;
    spec.excluded = {6, 7};
    const std::uint64_t nv = binomial(spec.n_eff(), 2);
    for (std::uint64_t r = 0; r < nv; ++r) {
        const Vertex S = vertex_unrank(spec, 2, r);
        std::vector<std::uint32_t> comp;
        for (std::uint32_t x : effective_elements(spec))
            if (!std::binary_search(S.begin(), S.end(), x)) comp.push_back(x);
        for (std::size_t z = 1; z <= comp.size(); ++z) {
            const std::uint32_t y =
                select_from_complement(spec, S, static_cast<std::int64_t>(z));
            CHECK(y == comp[z - 1]);
            CHECK(rank_in_complement(spec, S, y) ==
                  static_cast<std::int64_t>(z));
        }
    }
}

TEST_CASE("coin moves reverse exactly") {
    DomainSpec spec;
    spec.n_bits = 3;
    spec.excluded = {6, 7};
    const int R = 2;
    const std::uint64_t nv = binomial(spec.n_eff(), static_cast<std::uint64_t>(R));
    const std::int64_t zmax =
        static_cast<std::int64_t>(spec.n_eff()) - R;
    for (std::uint64_t r = 0; r < nv; ++r) {
        const Vertex S = vertex_unrank(spec, R, r);
        for (int j = 1; j <= R; ++j) {
            for (std::int64_t z = 1; z <= zmax; ++z) {
                const Coin c{j, z};
                const Vertex S2 = apply_coin(spec, S, c);
                validate_vertex(spec, S2);
                CHECK(S2 != S);
                const Coin back = reverse_coin(spec, S, c);
                CHECK(apply_coin(spec, S2, back) == S);
                const auto [x, y] = coin_to_pair(spec, S, c);
                CHECK(x == S[static_cast<std::size_t>(j - 1)]);
                CHECK(pair_to_coin(spec, S, x, y) == c);
            }
        }
    }
}

TEST_CASE("worked coin example on the full 3-bit domain") {
    DomainSpec spec;
    spec.n_bits = 3;
    const Vertex S{1, 4, 5};
    const Coin c{2, 3};
    const auto [x, y] = coin_to_pair(spec, S, c);
    CHECK(x == 4);
    CHECK(y == 3);
    CHECK(apply_coin(spec, S, c) == Vertex{1, 3, 5});
    CHECK(reverse_coin(spec, S, c) == Coin{2, 3});
}

TEST_CASE("invalid coins and vertices are rejected") {
    DomainSpec spec;
    spec.n_bits = 3;
    spec.excluded = {6, 7};
    const Vertex S{0, 1};
    CHECK_THROWS_AS(apply_coin(spec, S, Coin{0, 1}), domain_error);
    CHECK_THROWS_AS(apply_coin(spec, S, Coin{3, 1}), domain_error);
    CHECK_THROWS_AS(apply_coin(spec, S, Coin{1, 0}), domain_error);
    CHECK_THROWS_AS(apply_coin(spec, S, Coin{1, 5}), domain_error);
    CHECK_THROWS_AS(validate_vertex(spec, Vertex{1, 0}), domain_error);
    CHECK_THROWS_AS(validate_vertex(spec, Vertex{1, 1}), domain_error);
    CHECK_THROWS_AS(validate_vertex(spec, Vertex{1, 6}), domain_error);
}
