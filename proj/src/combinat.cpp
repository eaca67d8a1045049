#include "cwlab/combinat.hpp"

#include <algorithm>

namespace cwlab {

bool DomainSpec::is_excluded(std::uint32_t x) const {
    return std::binary_search(excluded.begin(), excluded.end(), x);
}

void DomainSpec::validate() const {
    if (n_bits < 1 || n_bits > 30)
        throw domain_error("DomainSpec: n_bits out of range");
    if (!std::is_sorted(excluded.begin(), excluded.end()))
        throw domain_error("DomainSpec: excluded list not sorted");
    if (std::adjacent_find(excluded.begin(), excluded.end()) != excluded.end())
        throw domain_error("DomainSpec: excluded list has duplicates");
    if (!excluded.empty() && excluded.back() >= universe_size())
        throw domain_error("DomainSpec: excluded element outside universe");
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // result * (n-k+i) / i is integral; multiply in 128 bits to catch
        // overflow of the running value
        unsigned __int128 wide =
            static_cast<unsigned __int128>(result) * (n - k + i);
        wide /= i;
        if (wide > ~std::uint64_t{0})
            throw capacity_error("binomial: result exceeds 64 bits");
        result = static_cast<std::uint64_t>(wide);
    }
    return result;
}

std::uint64_t degree(const DomainSpec& spec, int R) {
    const std::uint64_t N = spec.n_eff();
    if (R < 1 || static_cast<std::uint64_t>(R) >= N)
        throw domain_error("degree: R out of range");
    return static_cast<std::uint64_t>(R) * (N - static_cast<std::uint64_t>(R));
}

double spectral_gap(const DomainSpec& spec, int R) {
    return static_cast<double>(spec.n_eff()) /
           static_cast<double>(degree(spec, R));
}

std::vector<std::pair<double, std::uint64_t>> johnson_transition_spectrum(
    std::uint64_t N, int R) {
    if (R < 1 || static_cast<std::uint64_t>(R) >= N)
        throw domain_error("johnson_transition_spectrum: R out of range");
    std::vector<std::pair<double, std::uint64_t>> out;
    const double denom =
        static_cast<double>(R) * static_cast<double>(N - static_cast<std::uint64_t>(R));
    for (int j = 0; j <= R; ++j) {
        const double lam =
            (static_cast<double>(R - j) *
                 static_cast<double>(N - static_cast<std::uint64_t>(R) -
                                     static_cast<std::uint64_t>(j)) -
             j) /
            denom;
        const std::uint64_t mult =
            binomial(N, static_cast<std::uint64_t>(j)) -
            (j == 0 ? 0 : binomial(N, static_cast<std::uint64_t>(j - 1)));
        out.emplace_back(lam, mult);
    }
    return out;
}

void validate_vertex(const DomainSpec& spec, const Vertex& S) {
    if (!std::is_sorted(S.begin(), S.end()) ||
        std::adjacent_find(S.begin(), S.end()) != S.end())
        throw domain_error("vertex: elements must be strictly increasing");
    for (std::uint32_t x : S) {
        if (x >= spec.universe_size() || spec.is_excluded(x))
            throw domain_error("vertex: element outside effective domain");
    }
}

std::uint32_t select_from_complement(const DomainSpec& spec, const Vertex& S,
                                     std::int64_t z) {
    const std::int64_t comp =
        static_cast<std::int64_t>(spec.n_eff()) -
        static_cast<std::int64_t>(S.size());
    if (z < 1 || z > comp)
        throw domain_error("select_from_complement: index out of range");
    // Merge the two sorted skip lists (excluded, S) and walk the classic
    // "advance past skips" scan: answer is the (z-1)-th value not skipped.
    std::vector<std::uint32_t> skips;
    skips.reserve(spec.excluded.size() + S.size());
    std::merge(spec.excluded.begin(), spec.excluded.end(), S.begin(), S.end(),
               std::back_inserter(skips));
    std::uint64_t x = static_cast<std::uint64_t>(z - 1);
    for (std::uint32_t s : skips) {
        if (s <= x) ++x;
        else break;
    }
    return static_cast<std::uint32_t>(x);
}

std::int64_t rank_in_complement(const DomainSpec& spec, const Vertex& S,
                                std::uint32_t y) {
    if (y >= spec.universe_size() || spec.is_excluded(y) ||
        std::binary_search(S.begin(), S.end(), y))
        throw domain_error("rank_in_complement: y not in the complement");
    const auto below_excl = std::lower_bound(spec.excluded.begin(),
                                             spec.excluded.end(), y) -
                            spec.excluded.begin();
    const auto below_S = std::lower_bound(S.begin(), S.end(), y) - S.begin();
    return static_cast<std::int64_t>(y) - below_excl - below_S + 1;
}

Vertex apply_coin(const DomainSpec& spec, const Vertex& S, const Coin& c) {
    if (c.j < 1 || static_cast<std::size_t>(c.j) > S.size())
        throw domain_error("apply_coin: j out of range");
    const std::uint32_t removed = S[static_cast<std::size_t>(c.j - 1)];
    const std::uint32_t added = select_from_complement(spec, S, c.z);
    Vertex out;
    out.reserve(S.size());
    for (std::uint32_t x : S)
        if (x != removed) out.push_back(x);
    out.insert(std::upper_bound(out.begin(), out.end(), added), added);
    return out;
}

Coin reverse_coin(const DomainSpec& spec, const Vertex& S, const Coin& c) {
    const std::uint32_t removed = S[static_cast<std::size_t>(c.j - 1)];
    const Vertex y = apply_coin(spec, S, c);
    // In y, the reverse coin removes `added` and re-adds `removed`.
    const std::uint32_t added = select_from_complement(spec, S, c.z);
    const auto pos =
        std::lower_bound(y.begin(), y.end(), added) - y.begin();
    return Coin{static_cast<int>(pos) + 1,
                rank_in_complement(spec, y, removed)};
}

std::pair<std::uint32_t, std::uint32_t> coin_to_pair(const DomainSpec& spec,
                                                     const Vertex& S,
                                                     const Coin& c) {
    if (c.j < 1 || static_cast<std::size_t>(c.j) > S.size())
        throw domain_error("coin_to_pair: j out of range");
    return {S[static_cast<std::size_t>(c.j - 1)],
            select_from_complement(spec, S, c.z)};
}

Coin pair_to_coin(const DomainSpec& spec, const Vertex& S, std::uint32_t x,
                  std::uint32_t y) {
    const auto it = std::lower_bound(S.begin(), S.end(), x);
    if (it == S.end() || *it != x)
        throw domain_error("pair_to_coin: x not in S");
    return Coin{static_cast<int>(it - S.begin()) + 1,
                rank_in_complement(spec, S, y)};
}

std::vector<std::uint32_t> effective_elements(const DomainSpec& spec) {
    std::vector<std::uint32_t> out;
    out.reserve(spec.n_eff());
    for (std::uint64_t x = 0; x < spec.universe_size(); ++x)
        if (!spec.is_excluded(static_cast<std::uint32_t>(x)))
            out.push_back(static_cast<std::uint32_t>(x));
    return out;
}

std::uint64_t vertex_rank(const DomainSpec& spec, const Vertex& S) {
    validate_vertex(spec, S);
    // Colex rank = sum of binomial(position_in_effective_domain, i+1).
    std::uint64_t rank = 0;
    for (std::size_t i = 0; i < S.size(); ++i) {
        const std::uint32_t x = S[i];
        const auto below_excl = std::lower_bound(spec.excluded.begin(),
                                                 spec.excluded.end(), x) -
                                spec.excluded.begin();
        const std::uint64_t pos =
            static_cast<std::uint64_t>(x) - static_cast<std::uint64_t>(below_excl);
        rank += binomial(pos, static_cast<std::uint64_t>(i) + 1);
    }
    return rank;
}

Vertex vertex_unrank(const DomainSpec& spec, int R, std::uint64_t rank) {
    if (R < 1 || static_cast<std::uint64_t>(R) > spec.n_eff())
        throw domain_error("vertex_unrank: R out of range");
    if (rank >= binomial(spec.n_eff(), static_cast<std::uint64_t>(R)))
        throw domain_error("vertex_unrank: rank out of range");
    const auto eff = effective_elements(spec);
    Vertex out(static_cast<std::size_t>(R));
    // Greedy colex decoding: for i = R..1 take the largest position pos with
    // binomial(pos, i) <= remaining rank.
    std::uint64_t pos = spec.n_eff() - 1;
    for (int i = R; i >= 1; --i) {
        while (binomial(pos, static_cast<std::uint64_t>(i)) > rank) --pos;
        rank -= binomial(pos, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i - 1)] = eff[static_cast<std::size_t>(pos)];
        if (pos > 0) --pos;  // next coordinate is strictly smaller
    }
    return out;
}

}  // namespace cwlab
