#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cwlab/errors.hpp"

namespace cwlab {

// The walk's vertex universe: R-subsets of {0,1}^n_bits minus an excluded
// set (elements already consumed by the collision table). Elements are
// numeric values of fixed-width bit-strings; numeric order equals
// lexicographic order at fixed width.
struct DomainSpec {
    int n_bits = 0;
    std::vector<std::uint32_t> excluded;  // sorted ascending, no duplicates

    std::uint64_t universe_size() const { return std::uint64_t{1} << n_bits; }
    std::uint64_t n_eff() const { return universe_size() - excluded.size(); }
    bool is_excluded(std::uint32_t x) const;
    void validate() const;
};

// A vertex: sorted R-subset of the effective domain.
using Vertex = std::vector<std::uint32_t>;

// Johnson-coin (j, z), both 1-based: replace the j-th smallest element of S
// with the z-th smallest element of the complement of S (within the
// effective domain).
struct Coin {
    int j = 1;
    std::int64_t z = 1;
    bool operator==(const Coin&) const = default;
};

// Binomial coefficient; throws capacity_error on uint64 overflow.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

// Degree d = R(N_eff - R) and spectral gap delta = N_eff / (R(N_eff - R))
// of J(N_eff, R).
std::uint64_t degree(const DomainSpec& spec, int R);
double spectral_gap(const DomainSpec& spec, int R);

// Eigenvalues of the normalized adjacency (transition) matrix of J(N, R):
// lambda_j = ((R-j)(N-R-j) - j) / (R(N-R)) with multiplicity
// binomial(N,j) - binomial(N,j-1), for j = 0..R.
std::vector<std::pair<double, std::uint64_t>> johnson_transition_spectrum(
    std::uint64_t N, int R);

// z-th smallest element (1-based) of effectiveDomain \ S.
std::uint32_t select_from_complement(const DomainSpec& spec, const Vertex& S,
                                     std::int64_t z);

// Rank (1-based) of y within effectiveDomain \ S; y must lie there.
std::int64_t rank_in_complement(const DomainSpec& spec, const Vertex& S,
                                std::uint32_t y);

// Move along the coin: S minus its j-th element, plus the z-th complement
// element. Throws domain_error when the coin is invalid for S.
Vertex apply_coin(const DomainSpec& spec, const Vertex& S, const Coin& c);

// The coin c' such that apply_coin(apply_coin(S,c), c') = S.
Coin reverse_coin(const DomainSpec& spec, const Vertex& S, const Coin& c);

// Coin <-> element-pair codec: (j, z) <-> (x = j-th of S, y = z-th of
// complement).
std::pair<std::uint32_t, std::uint32_t> coin_to_pair(const DomainSpec& spec,
                                                     const Vertex& S,
                                                     const Coin& c);
Coin pair_to_coin(const DomainSpec& spec, const Vertex& S, std::uint32_t x,
                  std::uint32_t y);

// Colexicographic rank of S among R-subsets of the effective domain, and its
// inverse. Bijective with [0, binomial(N_eff, R)).
std::uint64_t vertex_rank(const DomainSpec& spec, const Vertex& S);
Vertex vertex_unrank(const DomainSpec& spec, int R, std::uint64_t rank);

// Sorted list of effective-domain elements (test and setup helper).
std::vector<std::uint32_t> effective_elements(const DomainSpec& spec);

void validate_vertex(const DomainSpec& spec, const Vertex& S);

}  // namespace cwlab
