#include "cwlab/radixstore.hpp"

#include <algorithm>
#include <set>

#include "cwlab/errors.hpp"
#include "json.hpp"

namespace cwlab {

namespace {

std::size_t ceil_pow2(std::size_t v) {
    std::size_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

bool is_leaf_cell(const Cell& c) { return c.a_l == kNil; }

}  // namespace

std::size_t default_capacity(int r_max) {
    if (r_max < 1) throw domain_error("default_capacity: r_max must be >= 1");
    // 2 * ceil(1.5 * (2 r_max - 1)); the argument is odd, so this is 6r - 2.
    const std::size_t v = 6 * static_cast<std::size_t>(r_max) - 2;
    return ceil_pow2(v);
}

RadixTree::RadixTree(TreeConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.n < 1 || cfg_.n > 127)
        throw domain_error("RadixTree: element width out of range");
    if (cfg_.capacity == 0) cfg_.capacity = default_capacity(cfg_.r_max);
    if (cfg_.with_check) {
        if (cfg_.image_bits < 1 || cfg_.image_bits >= cfg_.n)
            throw domain_error("RadixTree: image_bits out of range");
        if (!std::is_sorted(cfg_.tracked_images.begin(),
                            cfg_.tracked_images.end()))
            throw domain_error("RadixTree: tracked_images must be sorted");
    }
    cells_.assign(cfg_.capacity, Cell{});
    free_count_ = cfg_.capacity;
    seg_base_ = ceil_pow2(cfg_.capacity);
    seg_.assign(2 * seg_base_, 0);
    for (std::size_t i = 0; i < cfg_.capacity; ++i) seg_[seg_base_ + i] = 1;
    for (std::size_t i = seg_base_ - 1; i >= 1; --i)
        seg_[i] = seg_[2 * i] + seg_[2 * i + 1];
}

std::size_t RadixTree::occupied_cells() const {
    return cells_.size() - free_count_;
}

std::size_t RadixTree::free_cells() const { return free_count_; }

void RadixTree::seg_set(std::size_t addr, bool free) {
    std::size_t node = seg_base_ + addr;
    seg_[node] = free ? 1 : 0;
    for (node /= 2; node >= 1; node /= 2)
        seg_[node] = seg_[2 * node] + seg_[2 * node + 1];
}

std::size_t RadixTree::allocate(SplitMix64& rng) const {
    if (free_count_ == 0) throw capacity_error("allocate: no free cell");
    if (cfg_.allocator == AllocatorKind::RandomSearch) {
        // Rejection over the full address space; the 1/3 free-fraction
        // contract keeps the expected number of probes <= 3.
        if (free_count_ * 3 < cells_.size())
            throw capacity_error(
                "allocate: random-search allocator requires >= 1/3 free cells");
        for (int probe = 0; probe < 10000000; ++probe) {
            const std::size_t a =
                static_cast<std::size_t>(rng.below(cells_.size()));
            if (!cells_[a].occupied) return a;
        }
        throw std::logic_error("allocate: rejection loop failed");
    }
    // Heap-tree: pick the k-th free cell for uniform k.
    std::uint64_t k = rng.below(free_count_);
    std::size_t node = 1;
    while (node < seg_base_) {
        const std::size_t left = 2 * node;
        if (k < seg_[left]) {
            node = left;
        } else {
            k -= seg_[left];
            node = left + 1;
        }
    }
    return node - seg_base_;
}

std::size_t RadixTree::alloc_cell(SplitMix64& rng,
                                  InsertTranscript* transcript) {
    const std::size_t addr = allocate(rng);
    cells_[addr].occupied = true;
    seg_set(addr, false);
    --free_count_;
    if (transcript) transcript->addresses.push_back(static_cast<int>(addr));
    return addr;
}

void RadixTree::release_cell(std::size_t addr) {
    cells_[addr] = Cell{};
    seg_set(addr, true);
    ++free_count_;
}

std::vector<std::int64_t> RadixTree::leaf_inv(const Bits& element) const {
    std::vector<std::int64_t> inv;
    inv.reserve(1 + cfg_.predicates.size() + (cfg_.with_check ? 1 : 0));
    inv.push_back(1);
    for (const auto& p : cfg_.predicates) inv.push_back(p(element) ? 1 : 0);
    if (cfg_.with_check) inv.push_back(0);  // leaves sit below the image cut
    return inv;
}

std::int64_t RadixTree::edge_solutions(const Bits& prefix, const Bits& label,
                                       int child) const {
    const std::size_t sol_idx = 1 + cfg_.predicates.size();
    const std::int64_t depth2 =
        static_cast<std::int64_t>(prefix.size() + label.size());
    if (depth2 < cfg_.image_bits) return cells_[static_cast<std::size_t>(child)].inv[sol_idx];
    // The edge crosses the image cut: the whole child subtree is one image
    // group. Two or more leaves make a collision tuple; a single leaf is a
    // solution only when its image is tracked.
    const std::int64_t leaves = cells_[static_cast<std::size_t>(child)].inv[0];
    if (leaves >= 2) return 1;
    Bits image = prefix + label;
    image.resize(static_cast<std::size_t>(cfg_.image_bits));
    return std::binary_search(cfg_.tracked_images.begin(),
                              cfg_.tracked_images.end(), bits_value(image))
               ? 1
               : 0;
}

void RadixTree::recompute_from_children(int addr, const Bits& prefix) {
    Cell& c = cells_[static_cast<std::size_t>(addr)];
    const Cell& l = cells_[static_cast<std::size_t>(c.a_l)];
    const Cell& r = cells_[static_cast<std::size_t>(c.a_r)];
    c.inv.assign(1 + cfg_.predicates.size() + (cfg_.with_check ? 1 : 0), 0);
    c.inv[0] = l.inv[0] + r.inv[0];
    for (std::size_t i = 1; i <= cfg_.predicates.size(); ++i)
        c.inv[i] = l.inv[i] + r.inv[i];
    if (cfg_.with_check) {
        const std::size_t sol_idx = 1 + cfg_.predicates.size();
        // Only the root's edges may share a prefix; if that shared prefix
        // reaches the image cut, every leaf below carries the same image.
        const std::int64_t branch_depth = static_cast<std::int64_t>(
            prefix.size() + static_cast<std::size_t>(bits_lcp(c.lab_l, c.lab_r)));
        if (static_cast<std::int64_t>(prefix.size()) >= cfg_.image_bits) {
            c.inv[sol_idx] = 0;  // inside one image group; counted above
        } else if (branch_depth >= cfg_.image_bits) {
            c.inv[sol_idx] = 1;  // single image group with at least two leaves
        } else {
            c.inv[sol_idx] = edge_solutions(prefix, c.lab_l, c.a_l) +
                             edge_solutions(prefix, c.lab_r, c.a_r);
        }
    }
}

bool RadixTree::lookup(const Bits& x) const {
    if (static_cast<int>(x.size()) != cfg_.n || !bits_valid(x))
        throw domain_error("lookup: malformed element");
    if (!cells_[0].occupied) return false;
    if (is_leaf_cell(cells_[0])) return cells_[0].lab_l == x;
    std::size_t v = 0;
    std::size_t pos = 0;
    while (!is_leaf_cell(cells_[v])) {
        const Cell& c = cells_[v];
        const std::string_view rest = std::string_view(x).substr(pos);
        if (bits_starts_with(rest, c.lab_l)) {
            pos += c.lab_l.size();
            v = static_cast<std::size_t>(c.a_l);
        } else if (bits_starts_with(rest, c.lab_r)) {
            pos += c.lab_r.size();
            v = static_cast<std::size_t>(c.a_r);
        } else {
            return false;
        }
    }
    return pos == x.size();
}

void RadixTree::insert(const Bits& x, SplitMix64& rng,
                       InsertTranscript* transcript) {
    if (static_cast<int>(x.size()) != cfg_.n || !bits_valid(x))
        throw domain_error("insert: malformed element");
    if (!cells_[0].occupied) {
        Cell& root = cells_[0];
        root.occupied = true;
        root.inv = leaf_inv(x);
        root.a_l = root.a_r = kNil;
        root.lab_l = x;
        root.lab_r.clear();
        seg_set(0, false);
        --free_count_;
        size_ = 1;
        return;
    }
    if (free_count_ < 2) throw capacity_error("insert: fewer than 2 free cells");

    if (is_leaf_cell(cells_[0])) {
        const Bits y = cells_[0].lab_l;
        if (y == x) throw domain_error("insert: element already present");
        // Existing element's leaf first, then the new element's leaf.
        const std::size_t a_y = alloc_cell(rng, transcript);
        const std::size_t a_x = alloc_cell(rng, transcript);
        cells_[a_y] = Cell{true, leaf_inv(y), kNil, kNil, {}, {}};
        cells_[a_x] = Cell{true, leaf_inv(x), kNil, kNil, {}, {}};
        const int i = bits_lcp(x, y);
        Cell& root = cells_[0];
        if (x[static_cast<std::size_t>(i)] == '1') {
            root.a_l = static_cast<int>(a_y);
            root.lab_l = y;
            root.a_r = static_cast<int>(a_x);
            root.lab_r = x;
        } else {
            root.a_l = static_cast<int>(a_x);
            root.lab_l = x;
            root.a_r = static_cast<int>(a_y);
            root.lab_r = y;
        }
        recompute_from_children(0, Bits{});
        size_ = 2;
        return;
    }

    std::vector<PathStep> path;
    int v = 0;
    Bits prefix;
    for (;;) {
        Cell& c = cells_[static_cast<std::size_t>(v)];
        const std::string_view rest = std::string_view(x).substr(prefix.size());
        const int i_l = bits_lcp(rest, c.lab_l);
        const int i_r = bits_lcp(rest, c.lab_r);

        if (v == 0) {
            const int p_len = bits_lcp(c.lab_l, c.lab_r);
            if (i_l < p_len && i_r < p_len) {
                // x diverges inside the global prefix: the root becomes a new
                // top branch, its old content moves to a fresh cell with the
                // shared prefix stripped. Moved node first, then the x leaf.
                const std::size_t j2 = alloc_cell(rng, transcript);
                const std::size_t j3 = alloc_cell(rng, transcript);
                const Bits p = c.lab_l.substr(0, static_cast<std::size_t>(p_len));
                cells_[j2] = Cell{true,
                                  c.inv,
                                  c.a_l,
                                  c.a_r,
                                  c.lab_l.substr(static_cast<std::size_t>(p_len)),
                                  c.lab_r.substr(static_cast<std::size_t>(p_len))};
                cells_[j3] = Cell{true, leaf_inv(x), kNil, kNil, {}, {}};
                Cell& root = cells_[0];
                if (x[static_cast<std::size_t>(i_l)] == '1') {
                    root.a_l = static_cast<int>(j2);
                    root.lab_l = p;
                    root.a_r = static_cast<int>(j3);
                    root.lab_r = x;
                } else {
                    root.a_l = static_cast<int>(j3);
                    root.lab_l = x;
                    root.a_r = static_cast<int>(j2);
                    root.lab_r = p;
                }
                recompute_from_children(static_cast<int>(j2), p);
                recompute_from_children(0, Bits{});
                ++size_;
                return;
            }
        }

        const bool go_right = i_r > i_l;
        const Bits& lab = go_right ? c.lab_r : c.lab_l;
        const int child = go_right ? c.a_r : c.a_l;
        const int i = go_right ? i_r : i_l;

        if (i == static_cast<int>(lab.size())) {
            // Full edge match. A full match into a leaf cell means the whole
            // fixed-width element matched.
            if (is_leaf_cell(cells_[static_cast<std::size_t>(child)]))
                throw domain_error("insert: element already present");
            path.push_back(PathStep{v, go_right, 0, prefix});
            prefix += lab;
            v = child;
            continue;
        }

        // Split this edge at offset i: new internal node first, then x leaf.
        const std::size_t j2 = alloc_cell(rng, transcript);
        const std::size_t j3 = alloc_cell(rng, transcript);
        const Bits z = lab.substr(0, static_cast<std::size_t>(i));
        const Bits t = lab.substr(static_cast<std::size_t>(i));
        const Bits x_rest = x.substr(prefix.size() + static_cast<std::size_t>(i));
        cells_[j3] = Cell{true, leaf_inv(x), kNil, kNil, {}, {}};
        Cell& mid = cells_[j2];
        mid.occupied = true;
        if (x_rest[0] == '1') {
            mid.a_l = child;
            mid.lab_l = t;
            mid.a_r = static_cast<int>(j3);
            mid.lab_r = x_rest;
        } else {
            mid.a_l = static_cast<int>(j3);
            mid.lab_l = x_rest;
            mid.a_r = child;
            mid.lab_r = t;
        }
        Cell& parent = cells_[static_cast<std::size_t>(v)];
        if (go_right) {
            parent.a_r = static_cast<int>(j2);
            parent.lab_r = z;
        } else {
            parent.a_l = static_cast<int>(j2);
            parent.lab_l = z;
        }
        recompute_from_children(static_cast<int>(j2), prefix + z);
        recompute_from_children(v, prefix);
        for (auto it = path.rbegin(); it != path.rend(); ++it)
            recompute_from_children(it->addr, it->prefix);
        ++size_;
        return;
    }
}

void RadixTree::erase(const Bits& x) {
    if (static_cast<int>(x.size()) != cfg_.n || !bits_valid(x))
        throw domain_error("erase: malformed element");
    if (!cells_[0].occupied) throw domain_error("erase: element not present");

    if (is_leaf_cell(cells_[0])) {
        if (cells_[0].lab_l != x)
            throw domain_error("erase: element not present");
        release_cell(0);
        size_ = 0;
        return;
    }

    // Descend to the leaf, remembering the parent chain.
    std::vector<PathStep> path;  // strictly above the leaf's parent
    int v = 0;
    Bits prefix;
    int leaf_addr = kNil;
    bool leaf_right = false;
    for (;;) {
        const Cell& c = cells_[static_cast<std::size_t>(v)];
        const std::string_view rest = std::string_view(x).substr(prefix.size());
        bool right;
        if (bits_starts_with(rest, c.lab_l)) {
            right = false;
        } else if (bits_starts_with(rest, c.lab_r)) {
            right = true;
        } else {
            throw domain_error("erase: element not present");
        }
        const Bits& lab = right ? c.lab_r : c.lab_l;
        const int child = right ? c.a_r : c.a_l;
        if (is_leaf_cell(cells_[static_cast<std::size_t>(child)])) {
            if (prefix.size() + lab.size() != x.size())
                throw domain_error("erase: element not present");
            leaf_addr = child;
            leaf_right = right;
            break;
        }
        path.push_back(PathStep{v, right, 0, prefix});
        prefix += lab;
        v = child;
    }

    const Cell& parent = cells_[static_cast<std::size_t>(v)];
    const int sib = leaf_right ? parent.a_l : parent.a_r;
    const Bits sib_label = leaf_right ? parent.lab_l : parent.lab_r;

    if (v == 0) {
        if (is_leaf_cell(cells_[static_cast<std::size_t>(sib)])) {
            // |S| = 2 -> root becomes the leaf carrying the sibling element.
            release_cell(static_cast<std::size_t>(leaf_addr));
            release_cell(static_cast<std::size_t>(sib));
            Cell& root = cells_[0];
            root.a_l = root.a_r = kNil;
            root.lab_l = sib_label;  // root child labels are full elements
            root.lab_r.clear();
            root.inv = leaf_inv(sib_label);
            size_ = 1;
            return;
        }
        // Root absorbs the sibling branch; its labels gain the edge prefix.
        const Cell sib_cell = cells_[static_cast<std::size_t>(sib)];
        release_cell(static_cast<std::size_t>(leaf_addr));
        release_cell(static_cast<std::size_t>(sib));
        Cell& root = cells_[0];
        root.a_l = sib_cell.a_l;
        root.a_r = sib_cell.a_r;
        root.lab_l = sib_label + sib_cell.lab_l;
        root.lab_r = sib_label + sib_cell.lab_r;
        recompute_from_children(0, Bits{});
        --size_;
        return;
    }

    // Generic case: free the leaf and its parent; the grandparent's edge
    // label extends over the removed node.
    PathStep up = path.back();
    path.pop_back();
    Cell& grand = cells_[static_cast<std::size_t>(up.addr)];
    const Bits z = up.right ? grand.lab_r : grand.lab_l;
    if (up.right) {
        grand.a_r = sib;
        grand.lab_r = z + sib_label;
    } else {
        grand.a_l = sib;
        grand.lab_l = z + sib_label;
    }
    release_cell(static_cast<std::size_t>(leaf_addr));
    release_cell(static_cast<std::size_t>(v));
    recompute_from_children(up.addr, up.prefix);
    for (auto it = path.rbegin(); it != path.rend(); ++it)
        recompute_from_children(it->addr, it->prefix);
    --size_;
}

void RadixTree::erase_checked(const Bits& x, const InsertTranscript& transcript) {
    // Compare the free map before and after: erase must free exactly the
    // addresses the matching insert drew (the root toggles outside allocator
    // accounting).
    std::vector<std::uint8_t> before(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i)
        before[i] = cells_[i].occupied ? 1 : 0;
    erase(x);
    std::vector<int> freed;
    for (std::size_t i = 1; i < cells_.size(); ++i)
        if (before[i] && !cells_[i].occupied) freed.push_back(static_cast<int>(i));
    std::vector<int> expected = transcript.addresses;
    std::sort(expected.begin(), expected.end());
    if (freed != expected)
        throw std::logic_error(
            "erase_checked: freed addresses differ from the insert transcript");
}

Bits RadixTree::qlookup_sample(std::size_t pred_id, SplitMix64& rng) const {
    if (pred_id >= cfg_.predicates.size())
        throw domain_error("qlookup_sample: unknown predicate");
    const std::size_t idx = 1 + pred_id;
    if (!cells_[0].occupied || cells_[0].inv[idx] == 0)
        throw infeasible_error("qlookup_sample: no element satisfies the predicate");
    if (is_leaf_cell(cells_[0])) return cells_[0].lab_l;
    std::size_t v = 0;
    Bits prefix;
    while (!is_leaf_cell(cells_[v])) {
        const Cell& c = cells_[v];
        const std::int64_t tl = cells_[static_cast<std::size_t>(c.a_l)].inv[idx];
        const std::int64_t tr = cells_[static_cast<std::size_t>(c.a_r)].inv[idx];
        if (rng.below(static_cast<std::uint64_t>(tl + tr)) <
            static_cast<std::uint64_t>(tl)) {
            prefix += c.lab_l;
            v = static_cast<std::size_t>(c.a_l);
        } else {
            prefix += c.lab_r;
            v = static_cast<std::size_t>(c.a_r);
        }
    }
    return prefix;
}

Bits RadixTree::nth_element(std::int64_t j) const {
    if (j < 0 || j >= static_cast<std::int64_t>(size_))
        throw domain_error("nth_element: index out of range");
    if (is_leaf_cell(cells_[0])) return cells_[0].lab_l;
    std::size_t v = 0;
    Bits prefix;
    while (!is_leaf_cell(cells_[v])) {
        const Cell& c = cells_[v];
        const std::int64_t left = cells_[static_cast<std::size_t>(c.a_l)].inv[0];
        if (j < left) {
            prefix += c.lab_l;
            v = static_cast<std::size_t>(c.a_l);
        } else {
            j -= left;
            prefix += c.lab_r;
            v = static_cast<std::size_t>(c.a_r);
        }
    }
    return prefix;
}

std::int64_t RadixTree::leaves_below(const Bits& x) const {
    if (static_cast<int>(x.size()) != cfg_.n || !bits_valid(x))
        throw domain_error("leaves_below: malformed element");
    if (!cells_[0].occupied) return 0;
    if (is_leaf_cell(cells_[0])) return cells_[0].lab_l < x ? 1 : 0;
    // Walk down the unique branch whose block contains x; blocks strictly
    // left of x contribute all their leaves.
    std::int64_t below = 0;
    std::size_t v = 0;
    Bits prefix;
    for (;;) {
        const Cell& c = cells_[v];
        if (is_leaf_cell(c)) {
            below += prefix < x ? 1 : 0;
            return below;
        }
        const auto classify = [&](const Bits& lab,
                                  int child) -> int {  // -1 left of x's path,
                                                       // 0 on it, +1 right
            const Bits q = prefix + lab;
            const int cmp = std::string_view(x).substr(0, q.size()).compare(q);
            if (cmp > 0) return -1;
            if (cmp < 0) return 1;
            (void)child;
            return 0;
        };
        const int cl = classify(c.lab_l, c.a_l);
        if (cl == -1) below += cells_[static_cast<std::size_t>(c.a_l)].inv[0];
        const int cr = classify(c.lab_r, c.a_r);
        if (cr == -1) below += cells_[static_cast<std::size_t>(c.a_r)].inv[0];
        if (cl == 0) {
            prefix += c.lab_l;
            v = static_cast<std::size_t>(c.a_l);
        } else if (cr == 0) {
            prefix += c.lab_r;
            v = static_cast<std::size_t>(c.a_r);
        } else {
            return below;
        }
    }
}

Bits RadixTree::nth_not_in_subtree(int addr, const Bits& prefix,
                                   std::int64_t i) const {
    const Cell& c = cells_[static_cast<std::size_t>(addr)];
    const int n = cfg_.n;
    const auto lo = [&](const Bits& s) -> std::uint64_t {
        return bits_value(s) << (n - static_cast<int>(s.size()));
    };
    const auto span = [&](const Bits& s) -> std::uint64_t {
        return std::uint64_t{1} << (n - static_cast<int>(s.size()));
    };
    const Bits pl = prefix + c.lab_l;
    const Bits pr = prefix + c.lab_r;
    // Ascending regions: gap before the left block, missing inside it, gap
    // between the blocks, missing inside the right block, trailing gap.
    const std::uint64_t g1 = lo(pl) - lo(prefix);
    if (i < static_cast<std::int64_t>(g1))
        return bits_from_value(lo(prefix) + static_cast<std::uint64_t>(i), n);
    i -= static_cast<std::int64_t>(g1);
    const std::int64_t m_l = static_cast<std::int64_t>(span(pl)) -
                             cells_[static_cast<std::size_t>(c.a_l)].inv[0];
    if (i < m_l) return nth_not_in_subtree(c.a_l, pl, i);
    i -= m_l;
    const std::uint64_t g2 = lo(pr) - (lo(pl) + span(pl));
    if (i < static_cast<std::int64_t>(g2))
        return bits_from_value(lo(pl) + span(pl) + static_cast<std::uint64_t>(i), n);
    i -= static_cast<std::int64_t>(g2);
    const std::int64_t m_r = static_cast<std::int64_t>(span(pr)) -
                             cells_[static_cast<std::size_t>(c.a_r)].inv[0];
    if (i < m_r) return nth_not_in_subtree(c.a_r, pr, i);
    i -= m_r;
    return bits_from_value(lo(pr) + span(pr) + static_cast<std::uint64_t>(i), n);
}

Bits RadixTree::find_nth_not_in_tree(std::int64_t i) const {
    const std::int64_t comp =
        static_cast<std::int64_t>(std::uint64_t{1} << cfg_.n) -
        static_cast<std::int64_t>(size_);
    if (i < 0 || i >= comp)
        throw domain_error("find_nth_not_in_tree: index out of range");
    if (!cells_[0].occupied)
        return bits_from_value(static_cast<std::uint64_t>(i), cfg_.n);
    if (is_leaf_cell(cells_[0])) {
        const std::uint64_t x = bits_value(cells_[0].lab_l);
        const std::uint64_t v = static_cast<std::uint64_t>(i) +
                                (static_cast<std::uint64_t>(i) >= x ? 1 : 0);
        return bits_from_value(v, cfg_.n);
    }
    return nth_not_in_subtree(0, Bits{}, i);
}

std::int64_t RadixTree::count_in_interval_not_tree(const Bits& u,
                                                   const Bits& v) const {
    if (static_cast<int>(u.size()) != cfg_.n ||
        static_cast<int>(v.size()) != cfg_.n)
        throw domain_error("count_in_interval_not_tree: malformed bounds");
    const std::uint64_t pu = bits_value(u), pv = bits_value(v);
    if (pu > pv) throw domain_error("count_in_interval_not_tree: u > v");
    return static_cast<std::int64_t>(pv - pu) -
           (leaves_below(v) - leaves_below(u));
}

Bits RadixTree::find_nth_not_in_two_trees(std::int64_t i, const RadixTree& T,
                                          const RadixTree& Tprime) {
    if (T.cfg_.n != Tprime.cfg_.n)
        throw domain_error("find_nth_not_in_two_trees: width mismatch");
    for (const Bits& e : T.elements())
        if (Tprime.lookup(e))
            throw domain_error("find_nth_not_in_two_trees: trees not disjoint");
    const int n = T.cfg_.n;
    const std::int64_t total = static_cast<std::int64_t>(std::uint64_t{1} << n);
    const std::int64_t comp = total - static_cast<std::int64_t>(T.size()) -
                              static_cast<std::int64_t>(Tprime.size());
    if (i < 0 || i >= comp)
        throw domain_error("find_nth_not_in_two_trees: index out of range");
    // Select via rank: count of complement values < v is
    // v - |T ∩ [0,v)| - |T' ∩ [0,v)|; binary-search the jump to i+1.
    const auto missing_below = [&](std::int64_t v) -> std::int64_t {
        if (v >= total)
            return total - static_cast<std::int64_t>(T.size()) -
                   static_cast<std::int64_t>(Tprime.size());
        const Bits b = bits_from_value(static_cast<std::uint64_t>(v), n);
        return v - T.leaves_below(b) - Tprime.leaves_below(b);
    };
    std::int64_t lo = 0, hi = total - 1;
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (missing_below(mid + 1) >= i + 1)
            hi = mid;
        else
            lo = mid + 1;
    }
    return bits_from_value(static_cast<std::uint64_t>(lo), n);
}

std::int64_t RadixTree::check_invariant() const {
    if (!cfg_.with_check)
        throw domain_error("check_invariant: tree not configured with CHECK");
    if (!cells_[0].occupied) return 0;
    if (is_leaf_cell(cells_[0])) {
        Bits image = cells_[0].lab_l;
        image.resize(static_cast<std::size_t>(cfg_.image_bits));
        return std::binary_search(cfg_.tracked_images.begin(),
                                  cfg_.tracked_images.end(), bits_value(image))
                   ? 1
                   : 0;
    }
    return cells_[0].inv[1 + cfg_.predicates.size()];
}

namespace {
void canon_rec(const RadixTree& t, const Cell& c, std::string& out) {
    if (c.a_l == kNil) {
        out += '.';
        return;
    }
    out += '(';
    out += c.lab_l;
    canon_rec(t, t.cell(static_cast<std::size_t>(c.a_l)), out);
    out += '|';
    out += c.lab_r;
    canon_rec(t, t.cell(static_cast<std::size_t>(c.a_r)), out);
    out += ')';
}
}  // namespace

std::string RadixTree::canonical_form() const {
    if (!cells_[0].occupied) return "()";
    if (is_leaf_cell(cells_[0])) return "(" + cells_[0].lab_l + ")";
    std::string out;
    canon_rec(*this, cells_[0], out);
    return out;
}

std::vector<Bits> RadixTree::elements() const {
    std::vector<Bits> out;
    out.reserve(size_);
    if (!cells_[0].occupied) return out;
    if (is_leaf_cell(cells_[0])) {
        out.push_back(cells_[0].lab_l);
        return out;
    }
    // Iterative in-order walk; left labels sort before right at every level.
    std::vector<std::pair<int, Bits>> stack{{0, Bits{}}};
    while (!stack.empty()) {
        auto [addr, prefix] = stack.back();
        stack.pop_back();
        const Cell& c = cells_[static_cast<std::size_t>(addr)];
        if (is_leaf_cell(c)) {
            out.push_back(prefix);
            continue;
        }
        stack.emplace_back(c.a_r, prefix + c.lab_r);
        stack.emplace_back(c.a_l, prefix + c.lab_l);
    }
    return out;
}

std::string RadixTree::serialize() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n"] = cfg_.n;
    j["capacity"] = cfg_.capacity;
    j["allocator"] = cfg_.allocator == AllocatorKind::HeapTree
                         ? "heap-tree"
                         : "random-search";
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t a = 0; a < cells_.size(); ++a) {
        const Cell& c = cells_[a];
        if (!c.occupied) continue;
        nlohmann::json rec;
        rec["addr"] = a;
        rec["inv"] = c.inv;
        rec["a_l"] = c.a_l;
        rec["a_r"] = c.a_r;
        rec["lab_l"] = c.lab_l;
        rec["lab_r"] = c.lab_r;
        cells.push_back(rec);
    }
    j["cells"] = cells;
    return j.dump();
}

RadixTree RadixTree::parse(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    TreeConfig cfg;
    cfg.n = j.at("n").get<int>();
    cfg.capacity = j.at("capacity").get<std::size_t>();
    cfg.allocator = j.at("allocator").get<std::string>() == "heap-tree"
                        ? AllocatorKind::HeapTree
                        : AllocatorKind::RandomSearch;
    RadixTree t(cfg);
    std::size_t leaves = 0;
    for (const auto& rec : j.at("cells")) {
        const std::size_t addr = rec.at("addr").get<std::size_t>();
        Cell& c = t.cells_.at(addr);
        c.occupied = true;
        c.inv = rec.at("inv").get<std::vector<std::int64_t>>();
        c.a_l = rec.at("a_l").get<int>();
        c.a_r = rec.at("a_r").get<int>();
        c.lab_l = rec.at("lab_l").get<std::string>();
        c.lab_r = rec.at("lab_r").get<std::string>();
        t.seg_set(addr, false);
        --t.free_count_;
        if (c.a_l == kNil) ++leaves;
    }
    t.size_ = leaves;
    return t;
}

void RadixTree::validate_subtree(int addr, const Bits& prefix, bool is_root,
                                 std::size_t& occupied,
                                 std::size_t& leaves) const {
    const Cell& c = cells_[static_cast<std::size_t>(addr)];
    if (!c.occupied) throw std::logic_error("validate: unoccupied cell reached");
    ++occupied;
    if (is_leaf_cell(c)) {
        if (c.a_r != kNil) throw std::logic_error("validate: half-leaf cell");
        if (is_root) {
            if (static_cast<int>(c.lab_l.size()) != cfg_.n || !c.lab_r.empty())
                throw std::logic_error("validate: bad root leaf labels");
        } else {
            if (!c.lab_l.empty() || !c.lab_r.empty())
                throw std::logic_error("validate: non-root leaf labels not empty");
            if (static_cast<int>(prefix.size()) != cfg_.n)
                throw std::logic_error("validate: leaf path length != n");
        }
        const Bits element = is_root ? c.lab_l : prefix;
        if (c.inv != leaf_inv(element))
            throw std::logic_error("validate: leaf invariants inconsistent");
        ++leaves;
        return;
    }
    if (c.a_l == kNil || c.a_r == kNil || c.a_l == 0 || c.a_r == 0)
        throw std::logic_error("validate: bad child addresses");
    if (c.lab_l.empty() || c.lab_r.empty())
        throw std::logic_error("validate: empty internal edge label");
    if (is_root) {
        const int p = bits_lcp(c.lab_l, c.lab_r);
        if (static_cast<int>(c.lab_l.size()) <= p ||
            static_cast<int>(c.lab_r.size()) <= p ||
            c.lab_l[static_cast<std::size_t>(p)] != '0' ||
            c.lab_r[static_cast<std::size_t>(p)] != '1')
            throw std::logic_error("validate: root labels disordered");
    } else {
        if (c.lab_l[0] != '0' || c.lab_r[0] != '1')
            throw std::logic_error("validate: child labels must start 0/1");
    }
    validate_subtree(c.a_l, prefix + c.lab_l, false, occupied, leaves);
    validate_subtree(c.a_r, prefix + c.lab_r, false, occupied, leaves);
    // Recompute this node's invariants from its children.
    Cell expect = c;
    const_cast<RadixTree*>(this)->recompute_from_children(addr, prefix);
    const Cell& now = cells_[static_cast<std::size_t>(addr)];
    if (now.inv != expect.inv)
        throw std::logic_error("validate: internal invariants inconsistent");
}

void RadixTree::validate() const {
    std::size_t occupied_found = 0;
    for (std::size_t a = 0; a < cells_.size(); ++a) {
        if (cells_[a].occupied != (seg_[seg_base_ + a] == 0))
            throw std::logic_error("validate: segment tree out of sync");
        if (cells_[a].occupied) ++occupied_found;
    }
    if (occupied_found != cells_.size() - free_count_)
        throw std::logic_error("validate: free_count out of sync");
    if (!cells_[0].occupied) {
        if (size_ != 0 || occupied_found != 0)
            throw std::logic_error("validate: empty tree with occupied cells");
        return;
    }
    std::size_t occupied = 0, leaves = 0;
    validate_subtree(0, Bits{}, true, occupied, leaves);
    if (leaves != size_) throw std::logic_error("validate: size out of sync");
    if (occupied != occupied_found)
        throw std::logic_error("validate: orphan occupied cells");
    if (occupied != 2 * size_ - 1)
        throw std::logic_error("validate: cell count != 2|S|-1");
}

Coin swup_classical(RadixTree& tree_S, RadixTree& tree_F, const Coin& coin,
                    const RadixTree& preim_tree,
                    const std::function<std::uint64_t(std::uint64_t)>& oracle,
                    SplitMix64& rng) {
    const int n = tree_S.n();
    const int m = tree_F.n() - n;
    if (m < 1) throw domain_error("swup_classical: tree widths inconsistent");
    if (tree_F.size() != tree_S.size())
        throw domain_error("swup_classical: tree sizes inconsistent");
    const std::int64_t R = static_cast<std::int64_t>(tree_S.size());
    if (coin.j < 1 || coin.j > R)
        throw domain_error("swup_classical: coin j out of range");

    const Bits x = tree_S.nth_element(coin.j - 1);
    const Bits y =
        RadixTree::find_nth_not_in_two_trees(coin.z - 1, tree_S, preim_tree);
    const std::uint64_t fx = oracle(bits_value(x));
    const std::uint64_t fy = oracle(bits_value(y));
    const Bits fxx = bits_from_value(fx, m) + x;
    if (!tree_F.lookup(fxx))
        throw domain_error("swup_classical: tree inconsistency (image record missing)");
    tree_S.erase(x);
    tree_S.insert(y, rng);
    tree_F.erase(fxx);
    tree_F.insert(bits_from_value(fy, m) + y, rng);

    const int j_rev = static_cast<int>(tree_S.leaves_below(y)) + 1;
    const std::int64_t z_rev = static_cast<std::int64_t>(bits_value(x)) -
                               tree_S.leaves_below(x) -
                               preim_tree.leaves_below(x) + 1;
    return Coin{j_rev, z_rev};
}

}  // namespace cwlab
