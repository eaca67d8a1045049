#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cwlab/combinat.hpp"
#include "cwlab/rng.hpp"

namespace cwlab {

// Dense simulation of the vertex-coin walk on the Johnson graph over the
// effective domain. Basis states are (vertex_rank, coin_rank) pairs with
// coin_rank = (j-1)*(N_eff-R) + (z-1); the data register is implicit (images
// are a deterministic function of the vertex), so the shift is a pure basis
// permutation and the oracle cost it stands for is tracked in query_counter.
struct WalkConfig {
    DomainSpec spec;
    int R = 1;
    // Marking predicate over vertices (element values, sorted ascending).
    // An empty function marks nothing.
    std::function<bool(const Vertex&)> marked;
    mutable std::uint64_t query_counter = 0;
    std::uint64_t max_amplitudes = 20'000'000;

    std::uint64_t num_vertices() const;
    std::uint64_t degree() const;     // d = R * (N_eff - R)
    std::uint64_t dimension() const;  // num_vertices * degree
    void validate() const;
    bool is_marked_vertex(const Vertex& v) const {
        return marked && marked(v);
    }
};

struct EdgeAmplitudes {
    std::vector<std::complex<double>> amp;
    double norm() const;
};

struct WalkStats {
    std::uint64_t iterations = 0;
    std::uint64_t oracle_queries = 0;
    bool started_from_uniform = false;
};

struct SpectrumReport {
    std::vector<double> eigenphases;  // sorted, radians in (-pi, pi]
    double fixed_vector_overlap = 0.0;
    double min_nonzero_phase = 0.0;
    std::size_t dim_busy = 0;
    // min_nonzero_phase / (2*acos(1-delta)): how the observed gap compares
    // with the algebraic prediction for the Johnson transition spectrum.
    double phase_gap_ratio = 0.0;
};

struct MnrsResult {
    bool success = false;
    EdgeAmplitudes state;
    WalkStats stats;
};

// Enumerates vertices in rank order (colex over effective positions) and
// calls fn(rank, vertex). The vertex passed is reused storage.
void for_each_vertex(const DomainSpec& spec, int R,
                     const std::function<void(std::uint64_t, const Vertex&)>& fn);

EdgeAmplitudes uniform_edge_state(const WalkConfig& cfg);
// Uniform over unmarked (resp. marked) vertices, uniform coins.
EdgeAmplitudes unmarked_uniform_state(const WalkConfig& cfg);
EdgeAmplitudes marked_uniform_state(const WalkConfig& cfg);

// SWUP': (S, c) -> (apply_coin(S,c), reverse_coin(S,c)). Adds 2 to
// query_counter per application (one image uncomputed, one computed).
EdgeAmplitudes swup(const EdgeAmplitudes& state, const WalkConfig& cfg);

// Ref'_A: within each vertex block of d amplitudes, a -> 2*mean - a.
EdgeAmplitudes ref_coin(const EdgeAmplitudes& state, const WalkConfig& cfg);

// W' = Ref'_B o Ref'_A with Ref'_B = SWUP' o Ref'_A o SWUP'.
EdgeAmplitudes walk_op(const EdgeAmplitudes& state, const WalkConfig& cfg);

// Eigenphases of W' restricted to span(A u B), the busy subspace spanned by
// per-vertex uniform-coin states and their SWUP' images.
SpectrumReport spectrum(const WalkConfig& cfg);

// Exact reflection about the global uniform state (valid: the graph is
// regular, so the uniform edge state encodes |psi_U>).
EdgeAmplitudes reflect_uniform_exact(const EdgeAmplitudes& state,
                                     const WalkConfig& cfg);

// Phase-estimation emulation of the reflection with t_bits ancilla bits:
// eigencomponents of W' at phase theta are scaled by 2|c0(theta)|^2 - 1
// (the ancilla-0 branch), components outside the busy subspace have phase 0
// and pass through. Returns the renormalized ancilla-0 branch and the
// fidelity |<exact_reflection x 0 | full output>|.
std::pair<EdgeAmplitudes, double> reflect_uniform_phase_est(
    const EdgeAmplitudes& state, const WalkConfig& cfg, int t_bits);

EdgeAmplitudes phase_flip_marked(const EdgeAmplitudes& state,
                                 const WalkConfig& cfg);

double marked_mass(const EdgeAmplitudes& state, const WalkConfig& cfg);

// Measures the checking flag: true with probability = marked mass; the
// returned state is collapsed and renormalized on the measured component.
std::pair<bool, EdgeAmplitudes> measure_marked(const EdgeAmplitudes& state,
                                               const WalkConfig& cfg,
                                               SplitMix64& rng);

// Runs the scheduled amplification: N iterations when the start state is the
// full uniform state, N' when it is the unmarked-uniform state (detected by
// marked mass), then one check measurement. Each iteration charges 4 oracle
// queries (two SWUP' applications of the update the reflection stands for).
MnrsResult mnrs_run(const WalkConfig& cfg, const EdgeAmplitudes& start,
                    SplitMix64& rng);

// Overlap |<W'^N psi_U | corrupted-walk^N psi_U>| for N = 1..steps where the
// corrupted SWUP' maps a seeded mu-fraction of basis pairs to reserved
// orthogonal flag components. Flag amplitudes never re-enter the ideal
// subspace, so they are tracked as discarded mass.
std::vector<double> fidelity_decay(const WalkConfig& cfg, double mu, int steps,
                                   SplitMix64& rng);

}  // namespace cwlab
