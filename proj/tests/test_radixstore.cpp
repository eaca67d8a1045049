#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cwlab/bitstring.hpp"
#include "cwlab/errors.hpp"
#include "cwlab/radixstore.hpp"
#include "cwlab/rng.hpp"
#include "doctest.h"

using namespace cwlab;

namespace {

TreeConfig plain_config(int n, int r_max) {
    TreeConfig tc;
    tc.n = n;
    tc.r_max = r_max;
    return tc;
}

RadixTree build(int n, const std::vector<std::uint64_t>& vals,
                std::uint64_t seed,
                AllocatorKind alloc = AllocatorKind::HeapTree) {
    TreeConfig tc = plain_config(n, std::max<int>(1, static_cast<int>(vals.size())));
    tc.allocator = alloc;
    RadixTree t(tc);
    SplitMix64 rng(seed);
    for (std::uint64_t v : vals) t.insert(bits_from_value(v, n), rng);
    return t;
}

}  // namespace

TEST_CASE("default capacity keeps a one-third free margin") {
    CHECK(default_capacity(1) == 4);
    CHECK(default_capacity(2) == 16);
    CHECK(default_capacity(3) == 16);
    CHECK(default_capacity(12) == 128);
    CHECK_THROWS_AS(default_capacity(0), domain_error);
}

TEST_CASE("figure-set order statistics") {
    const RadixTree t = build(4, {0, 2, 9, 11, 15}, 1);
    t.validate();
    CHECK(t.size() == 5);
    CHECK(t.occupied_cells() == 9);

    CHECK(t.lookup("1011"));
    CHECK_FALSE(t.lookup("0111"));

    CHECK(t.nth_element(0) == "0000");
    CHECK(t.nth_element(2) == "1001");
    CHECK(t.nth_element(4) == "1111");
    CHECK_THROWS_AS(t.nth_element(5), domain_error);
    CHECK_THROWS_AS(t.nth_element(-1), domain_error);

    CHECK(t.leaves_below(bits_from_value(0, 4)) == 0);
    CHECK(t.leaves_below(bits_from_value(9, 4)) == 2);
    CHECK(t.leaves_below(bits_from_value(15, 4)) == 4);

    CHECK(t.find_nth_not_in_tree(0) == "0001");
    CHECK(t.find_nth_not_in_tree(6) == "1000");
    CHECK(t.find_nth_not_in_tree(10) == "1110");
    CHECK_THROWS_AS(t.find_nth_not_in_tree(11), domain_error);

    CHECK(t.count_in_interval_not_tree("0000", "1000") == 6);
    CHECK(t.count_in_interval_not_tree("1001", "1111") == 4);
    CHECK(t.count_in_interval_not_tree("0101", "0101") == 0);
    CHECK_THROWS_AS(t.count_in_interval_not_tree("1000", "0000"),
                    domain_error);
}

TEST_CASE("complement selection across two disjoint trees") {
    const RadixTree t = build(4, {0, 2}, 2);
    const RadixTree tp = build(4, {9, 11}, 3);
    CHECK(RadixTree::find_nth_not_in_two_trees(0, t, tp) == "0001");
    CHECK(RadixTree::find_nth_not_in_two_trees(7, t, tp) == "1010");
    CHECK(RadixTree::find_nth_not_in_two_trees(11, t, tp) == "1111");
    CHECK_THROWS_AS(RadixTree::find_nth_not_in_two_trees(12, t, tp),
                    domain_error);
    const RadixTree overlap = build(4, {2, 5}, 4);
    CHECK_THROWS_AS(RadixTree::find_nth_not_in_two_trees(0, t, overlap),
                    domain_error);
}

TEST_CASE("randomized sweep against std::set") {
    for (AllocatorKind alloc :
         {AllocatorKind::HeapTree, AllocatorKind::RandomSearch}) {
        TreeConfig tc = plain_config(5, 12);
        tc.allocator = alloc;
        RadixTree t(tc);
        std::set<std::uint64_t> model;
        SplitMix64 rng(55 + static_cast<std::uint64_t>(alloc));
        for (int op = 0; op < 3000; ++op) {
            const std::uint64_t roll = rng.below(100);
            if (roll < 45 && model.size() < 12) {
                std::uint64_t v = rng.below(32);
                while (model.count(v)) v = rng.below(32);
                t.insert(bits_from_value(v, 5), rng);
                model.insert(v);
            } else if (roll < 75 && !model.empty()) {
                auto it = model.begin();
                std::advance(it, static_cast<long>(rng.below(model.size())));
                t.erase(bits_from_value(*it, 5));
                model.erase(it);
            } else {
                const std::uint64_t v = rng.below(32);
                CHECK(t.lookup(bits_from_value(v, 5)) == (model.count(v) > 0));
            }
            REQUIRE(t.size() == model.size());
            CHECK(t.occupied_cells() ==
                  (model.empty() ? 0 : 2 * model.size() - 1));
            if (op % 97 == 0) {
                t.validate();
                std::vector<Bits> want;
                for (std::uint64_t v : model)
                    want.push_back(bits_from_value(v, 5));
                CHECK(t.elements() == want);
            }
        }
        t.validate();
    }
}

TEST_CASE("canonical form ignores insertion order and allocator randomness") {
    const std::vector<std::uint64_t> vals = {1, 7, 8, 14};
    std::vector<std::uint64_t> perm = vals;
    std::sort(perm.begin(), perm.end());
    std::string first;
    std::uint64_t seed = 100;
    do {
        const RadixTree t = build(4, perm, seed++);
        if (first.empty())
            first = t.canonical_form();
        else
            CHECK(t.canonical_form() == first);
        const RadixTree r =
            build(4, perm, seed ^ 0xF00D, AllocatorKind::RandomSearch);
        CHECK(r.canonical_form() == first);
    } while (std::next_permutation(perm.begin(), perm.end()));

    CHECK(build(4, {1, 7, 8}, 7).canonical_form() !=
          build(4, {1, 7, 9}, 7).canonical_form());
    CHECK(build(4, {}, 7).canonical_form() ==
          build(4, {}, 8).canonical_form());
}

TEST_CASE("erase is the exact structural inverse of insert") {
    TreeConfig tc = plain_config(4, 6);
    RadixTree t(tc);
    SplitMix64 rng(321);
    std::vector<std::string> snapshots;
    std::vector<InsertTranscript> transcripts;
    const std::vector<std::uint64_t> vals = {5, 0, 13, 6, 9};
    for (std::uint64_t v : vals) {
        snapshots.push_back(t.serialize());
        InsertTranscript tr;
        t.insert(bits_from_value(v, 4), rng, &tr);
        transcripts.push_back(tr);
        if (snapshots.size() == 1)
            CHECK(tr.addresses.empty());  // first element takes the root
        else
            CHECK(tr.addresses.size() == 2);
    }
    // Unwind in reverse order: each erase must restore the previous layout
    // byte for byte, and erase_checked must accept the matching transcript.
    for (std::size_t i = vals.size(); i-- > 0;) {
        t.erase_checked(bits_from_value(vals[i], 4), transcripts[i]);
        CHECK(t.serialize() == snapshots[i]);
        t.validate();
    }
    CHECK(t.size() == 0);
}

TEST_CASE("erase_checked rejects a transcript from a different insert") {
    TreeConfig tc = plain_config(4, 6);
    RadixTree t(tc);
    SplitMix64 rng(17);
    t.insert(bits_from_value(0, 4), rng);
    t.insert(bits_from_value(15, 4), rng);
    InsertTranscript tr8;
    t.insert(bits_from_value(8, 4), rng, &tr8);
    // Erasing 15 frees the cells of its own branch, not the ones insert(8)
    // drew.
    CHECK_THROWS_AS(t.erase_checked(bits_from_value(15, 4), tr8),
                    std::logic_error);
}

TEST_CASE("serialize and parse round-trip the layout") {
    const RadixTree t = build(4, {0, 2, 9, 11, 15}, 9);
    const std::string blob = t.serialize();
    const RadixTree back = RadixTree::parse(blob);
    back.validate();
    CHECK(back.size() == t.size());
    CHECK(back.canonical_form() == t.canonical_form());
    CHECK(back.elements() == t.elements());
    CHECK(back.serialize() == blob);
    CHECK_THROWS(RadixTree::parse("not json"));
}

TEST_CASE("invalid mutations are rejected") {
    RadixTree t = build(3, {1, 4}, 11);
    SplitMix64 rng(12);
    CHECK_THROWS_AS(t.insert(bits_from_value(1, 3), rng), domain_error);
    CHECK_THROWS_AS(t.insert("10", rng), domain_error);
    CHECK_THROWS_AS(t.erase(bits_from_value(2, 3)), domain_error);
    CHECK_THROWS_AS(t.erase("10"), domain_error);
    RadixTree empty(plain_config(3, 2));
    CHECK_THROWS_AS(empty.erase(bits_from_value(0, 3)), domain_error);
}

TEST_CASE("count-weighted sampling is uniform over matches") {
    TreeConfig tc = plain_config(4, 5);
    tc.predicates.push_back(
        [](const Bits& b) { return b.back() == '1'; });  // odd values
    tc.predicates.push_back([](const Bits&) { return false; });
    RadixTree t(tc);
    SplitMix64 rng(77);
    for (std::uint64_t v : {0, 2, 9, 11, 15})
        t.insert(bits_from_value(v, 4), rng);
    t.validate();

    std::map<std::string, int> counts;
    for (int i = 0; i < 3000; ++i) ++counts[t.qlookup_sample(0, rng)];
    REQUIRE(counts.size() == 3);
    for (const char* want : {"1001", "1011", "1111"}) {
        CHECK(counts[want] > 850);
        CHECK(counts[want] < 1150);
    }
    CHECK_THROWS_AS(t.qlookup_sample(1, rng), infeasible_error);
    CHECK_THROWS_AS(t.qlookup_sample(2, rng), domain_error);
}

TEST_CASE("collision CHECK invariant counts solution groups") {
    // Records are image||element with a 2-bit image over a 2-bit element.
    TreeConfig tc;
    tc.n = 4;
    tc.r_max = 4;
    tc.with_check = true;
    tc.image_bits = 2;
    tc.tracked_images = {2};
    RadixTree t(tc);
    SplitMix64 rng(13);
    const auto record = [](std::uint64_t image, std::uint64_t x) {
        return bits_from_value(image, 2) + bits_from_value(x, 2);
    };
    CHECK(t.check_invariant() == 0);
    t.insert(record(0, 0), rng);
    CHECK(t.check_invariant() == 0);  // one untracked preimage
    t.insert(record(0, 1), rng);
    CHECK(t.check_invariant() == 1);  // a colliding pair
    t.insert(record(1, 2), rng);
    CHECK(t.check_invariant() == 1);
    t.insert(record(2, 3), rng);
    CHECK(t.check_invariant() == 2);  // tracked image with one preimage
    t.erase(record(0, 1));
    CHECK(t.check_invariant() == 1);
    t.validate();

    RadixTree unchecked(plain_config(4, 2));
    CHECK_THROWS_AS(unchecked.check_invariant(), domain_error);
}

TEST_CASE("allocators stay within capacity contracts") {
    SUBCASE("random search demands a one-third free fraction") {
        TreeConfig tc = plain_config(4, 4);
        tc.capacity = 8;
        tc.allocator = AllocatorKind::RandomSearch;
        RadixTree t(tc);
        SplitMix64 rng(5);
        t.insert(bits_from_value(0, 4), rng);
        t.insert(bits_from_value(5, 4), rng);
        t.insert(bits_from_value(10, 4), rng);
        CHECK_THROWS_AS(t.insert(bits_from_value(12, 4), rng),
                        capacity_error);
    }
    SUBCASE("heap tree packs to the last pair of cells") {
        TreeConfig tc = plain_config(4, 4);
        tc.capacity = 8;
        RadixTree t(tc);
        SplitMix64 rng(6);
        for (std::uint64_t v : {0, 5, 10, 12})
            t.insert(bits_from_value(v, 4), rng);
        t.validate();
        CHECK(t.free_cells() == 1);
        CHECK_THROWS_AS(t.insert(bits_from_value(3, 4), rng),
                        capacity_error);
    }
    SUBCASE("allocate draws cover every free cell") {
        RadixTree t = build(4, {0, 2, 9}, 21);
        SplitMix64 rng(22);
        std::set<std::size_t> seen;
        for (int i = 0; i < 2000; ++i) seen.insert(t.allocate(rng));
        CHECK(seen.size() == t.free_cells());
        for (std::size_t a : seen) CHECK_FALSE(t.cell(a).occupied);
    }
}

TEST_CASE("classical shift-update example and reversibility") {
    const auto identity = [](std::uint64_t x) { return x; };
    TreeConfig tcS = plain_config(3, 3);
    TreeConfig tcF = plain_config(6, 3);
    TreeConfig tcP = plain_config(3, 1);
    RadixTree S(tcS), F(tcF), P(tcP);
    SplitMix64 rng(31);
    for (std::uint64_t x : {1, 4, 5}) {
        S.insert(bits_from_value(x, 3), rng);
        F.insert(bits_from_value(x, 3) + bits_from_value(x, 3), rng);
    }
    const Coin out = swup_classical(S, F, Coin{2, 3}, P, identity, rng);
    CHECK(out == Coin{2, 3});
    CHECK(S.elements() ==
          std::vector<Bits>{"001", "011", "101"});  // {1, 3, 5}
    S.validate();
    F.validate();

    SUBCASE("double application restores both trees and the coin") {
        SplitMix64 rig(777);
        for (int c = 0; c < 50; ++c) {
            const int n = 3 + static_cast<int>(rig.below(2));
            const int m = 1 + static_cast<int>(rig.below(2));
            const std::uint64_t dom = std::uint64_t{1} << n;
            std::vector<std::uint64_t> ftab(dom);
            for (std::uint64_t& v : ftab) v = rig.below(std::uint64_t{1} << m);
            std::set<std::uint64_t> sset;
            while (sset.size() < 3) sset.insert(rig.below(dom));
            RadixTree S2(plain_config(n, 3));
            RadixTree F2(plain_config(n + m, 3));
            RadixTree P2(plain_config(n, 1));
            for (std::uint64_t v : sset) {
                S2.insert(bits_from_value(v, n), rig);
                F2.insert(bits_from_value(ftab[v], m) + bits_from_value(v, n),
                          rig);
            }
            const auto s_before = S2.elements();
            const auto f_before = F2.elements();
            const Coin coin{1 + static_cast<int>(rig.below(3)),
                            1 + static_cast<std::int64_t>(rig.below(dom - 3))};
            const auto oracle = [&](std::uint64_t x) { return ftab[x]; };
            const Coin mid = swup_classical(S2, F2, coin, P2, oracle, rig);
            const Coin back = swup_classical(S2, F2, mid, P2, oracle, rig);
            CHECK(back == coin);
            CHECK(S2.elements() == s_before);
            CHECK(F2.elements() == f_before);
        }
    }

    SUBCASE("inconsistent inputs are rejected") {
        RadixTree badF(plain_config(3, 3));
        CHECK_THROWS_AS(
            swup_classical(S, badF, Coin{1, 1}, P, identity, rng),
            domain_error);
        CHECK_THROWS_AS(swup_classical(S, F, Coin{0, 1}, P, identity, rng),
                        domain_error);
        CHECK_THROWS_AS(swup_classical(S, F, Coin{4, 1}, P, identity, rng),
                        domain_error);
    }
}
