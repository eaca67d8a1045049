#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cwlab/bitstring.hpp"
#include "cwlab/combinat.hpp"
#include "cwlab/rng.hpp"

namespace cwlab {

// History-independent radix tree over fixed-width bit-strings, stored in a
// flat array of M cells with randomized addresses. Logical shape is the
// canonical (compressed) radix tree of the stored set; the physical layout
// is uniform over valid address assignments because every new node address
// is a uniform draw over free cells.
//
// Root conventions (the root is the only cell with a fixed address, 0):
//   |S| = 0 : root unoccupied.
//   |S| = 1 : root is a leaf cell carrying the element in lab_l
//             (a_l = a_r = none).
//   |S| >= 2: root is internal; its two child labels both carry the global
//             longest common prefix p of S (lab_l = p,0,..., lab_r = p,1,...).
//             Non-root children labels start with 0 (left) / 1 (right), and
//             non-root leaf cells have empty labels.
//
// Every cell carries invariant values, recomputed bottom-up along the
// mutated path:
//   inv[0]                 leaf count of the subtree
//   inv[1..P]              per-leaf predicate counts (configured)
//   inv[P+1] (optional)    solution count for the collision CHECK (grouping
//                          leaves by their first image_bits bits; a group is
//                          a solution when it has >= 2 leaves, or exactly one
//                          leaf whose image is in the tracked set)

constexpr int kNil = -1;  // absent child address

struct Cell {
    bool occupied = false;
    std::vector<std::int64_t> inv;
    int a_l = kNil;
    int a_r = kNil;
    Bits lab_l;
    Bits lab_r;
};

enum class AllocatorKind { HeapTree, RandomSearch };

struct TreeConfig {
    int n = 0;                     // element bit width
    std::size_t capacity = 0;      // M; 0 = derive from r_max
    int r_max = 0;                 // max stored set size, for default capacity
    AllocatorKind allocator = AllocatorKind::HeapTree;
    std::vector<std::function<bool(const Bits&)>> predicates;
    bool with_check = false;       // maintain the solution-count invariant
    int image_bits = 0;            // m (first image_bits bits form the image)
    std::vector<std::uint64_t> tracked_images;  // sorted Im(C) values
};

// Default capacity: 2 * ceil(1.5 * (2 r_max - 1)) rounded up to a power of
// two; keeps the random-search allocator's 1/3 free-fraction contract with
// margin.
std::size_t default_capacity(int r_max);

// Addresses drawn by one insert, in draw order (two per insert except the
// very first element, which occupies the root without an allocation).
struct InsertTranscript {
    std::vector<int> addresses;
};

class RadixTree {
public:
    explicit RadixTree(TreeConfig cfg);

    int n() const { return cfg_.n; }
    std::size_t capacity() const { return cells_.size(); }
    std::size_t size() const { return size_; }
    std::size_t occupied_cells() const;
    std::size_t free_cells() const;
    const Cell& cell(std::size_t addr) const { return cells_.at(addr); }

    bool lookup(const Bits& x) const;
    void insert(const Bits& x, SplitMix64& rng,
                InsertTranscript* transcript = nullptr);
    void erase(const Bits& x);
    // erase that additionally verifies it frees exactly the addresses the
    // matching insert drew (exact uncomputation witness).
    void erase_checked(const Bits& x, const InsertTranscript& transcript);

    // Uniform draw over free cells (no state change).
    std::size_t allocate(SplitMix64& rng) const;

    // Uniform element among those satisfying predicate pred_id, by
    // count-weighted descent.
    Bits qlookup_sample(std::size_t pred_id, SplitMix64& rng) const;

    // j-th smallest element, 0-based.
    Bits nth_element(std::int64_t j) const;

    // Number of stored elements with value < phi(x).
    std::int64_t leaves_below(const Bits& x) const;

    // i-th smallest value (0-based) of {0,1}^n \ S.
    Bits find_nth_not_in_tree(std::int64_t i) const;

    // |[u, v) \ S| for n-bit u <= v.
    std::int64_t count_in_interval_not_tree(const Bits& u, const Bits& v) const;

    // i-th smallest value outside both trees (leaf sets must be disjoint).
    static Bits find_nth_not_in_two_trees(std::int64_t i, const RadixTree& T,
                                          const RadixTree& Tprime);

    // Root solution count for the CHECK invariant (0 for empty tree).
    std::int64_t check_invariant() const;

    // Address-free recursive encoding; equal iff the stored sets are equal.
    std::string canonical_form() const;

    // Deterministic JSON of all occupied cells in address order; structural
    // fields only (predicates and check configuration are not serialized).
    std::string serialize() const;
    static RadixTree parse(const std::string& json_text);

    // Full structural + invariant audit; throws on any inconsistency.
    void validate() const;

    // Sorted element list (ascending); test and setup helper.
    std::vector<Bits> elements() const;

private:
    struct PathStep {
        int addr;
        bool right;
        std::int64_t depth;  // bits consumed up to (not including) the edge
        Bits prefix;         // path string consumed up to this cell
    };

    std::size_t alloc_cell(SplitMix64& rng, InsertTranscript* transcript);
    void release_cell(std::size_t addr);
    void seg_set(std::size_t addr, bool free);
    void recompute_from_children(int addr, const Bits& prefix);
    std::vector<std::int64_t> leaf_inv(const Bits& element) const;
    std::int64_t edge_solutions(const Bits& prefix, const Bits& label,
                                int child) const;
    void validate_subtree(int addr, const Bits& prefix, bool is_root,
                          std::size_t& occupied, std::size_t& leaves) const;
    Bits nth_not_in_subtree(int addr, const Bits& prefix,
                            std::int64_t i) const;

    TreeConfig cfg_;
    std::vector<Cell> cells_;
    std::size_t size_ = 0;
    std::size_t free_count_ = 0;
    // Segment tree over a power-of-two padding of the address space; leaf i
    // holds 1 when cell i is free. Supports exact uniform k-th-free descent.
    std::size_t seg_base_ = 1;
    std::vector<std::uint32_t> seg_;
};

// Classical SWUP over the tree pair: converts the coin to the element pair
// (x, y) with y drawn from {0,1}^n \ S \ Preim(C) (preim_tree), replaces x
// by y in both trees, and returns the reversed coin. The oracle callback is
// charged one evaluation per image (two per call).
Coin swup_classical(RadixTree& tree_S, RadixTree& tree_F, const Coin& coin,
                    const RadixTree& preim_tree,
                    const std::function<std::uint64_t(std::uint64_t)>& oracle,
                    SplitMix64& rng);

}  // namespace cwlab
