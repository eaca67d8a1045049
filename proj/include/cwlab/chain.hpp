#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cwlab/combinat.hpp"
#include "cwlab/rng.hpp"
#include "cwlab/walksim.hpp"

namespace cwlab {

// A tabulated random function f : {0,1}^n -> {0,1}^m. operator() counts a
// query; value() is the uncounted accessor for checking work that the
// stored invariants pay for (no oracle call at walk time).
struct FunctionOracle {
    int n = 0;
    int m = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> table;
    mutable std::uint64_t queries = 0;

    std::uint64_t operator()(std::uint64_t x) const {
        ++queries;
        return table[x];
    }
    std::uint64_t value(std::uint64_t x) const { return table[x]; }
};

FunctionOracle random_function(int n, int m, std::uint64_t seed);

// The collision table C: entries image -> strictly sorted preimage tuple.
struct CollisionTable {
    struct Entry {
        std::uint64_t image = 0;
        std::vector<std::uint64_t> preimages;  // sorted ascending, distinct
    };
    std::vector<Entry> entries;  // sorted by image, distinct images

    std::size_t image_count() const { return entries.size(); }
    std::size_t preimage_count() const;
    const Entry* find(std::uint64_t image) const;
    bool has_image(std::uint64_t image) const { return find(image) != nullptr; }
    // Creates the entry or extends an existing one ("insert at the index of
    // its image"); elements must be new.
    void add(std::uint64_t image, std::vector<std::uint64_t> elements);
    // All tracked preimages, sorted (the excluded set of the walk domain).
    std::vector<std::uint32_t> preimage_values() const;
};

// Walk domain for vertex sets disjoint from Preim(C).
DomainSpec domain_for(const FunctionOracle& f, const CollisionTable& C);

// Marked iff S holds an internal collision or a preimage of Im(C).
bool is_marked(const Vertex& S, const FunctionOracle& f,
               const CollisionTable& C);

// |M_R^C| / |V_R^C| by full enumeration (capacity-capped).
double epsilon_exact(const FunctionOracle& f, const CollisionTable& C, int R);

// (max(R*imC, R(R-1)) / 2^m, min(1, their sum / 2^m)).
std::pair<double, double> epsilon_bounds(int R, std::uint64_t im_count, int m);

// One solution: a maximal same-image tuple of width >= 2, or a width-1
// preimage of a tracked image.
struct Solution {
    std::uint64_t image = 0;
    std::vector<std::uint64_t> elements;  // sorted
    bool operator==(const Solution&) const = default;
};

// All solutions inside S, ordered by image.
std::vector<Solution> solutions_in_vertex(const Vertex& S,
                                          const FunctionOracle& f,
                                          const CollisionTable& C);

// Image-class decomposition of the clean domain {0,1}^n \ Preim(C): one
// class per image with surviving preimages; tracked = image in Im(C).
// Every vertex statistic used by the driver is a function of class sizes
// only, which keeps epsilon and the extraction posteriors exact far beyond
// enumeration range (all counts must stay below 2^53).
struct ImageClass {
    std::uint64_t image = 0;
    std::uint64_t size = 0;
    bool tracked = false;
};
struct ImageClasses {
    std::vector<ImageClass> classes;
    std::uint64_t universe = 0;
};
ImageClasses build_classes(const FunctionOracle& f, const CollisionTable& C);

// N_sigma: number of R-subsets of the clean domain containing exactly sigma
// solutions, for sigma = 0..R. Exact integers carried in doubles.
std::vector<double> vertex_counts_by_solutions(const ImageClasses& cls, int R);

// epsilon from the class decomposition; equals epsilon_exact wherever both
// are computable.
double epsilon_classes(const FunctionOracle& f, const CollisionTable& C,
                       int R);

struct ExtractionEvent {
    int width = 0;
    std::uint64_t image = 0;
};

struct ExtractResult {
    CollisionTable table;
    int R_prime = 0;
    // Residual state over V_{R'}^{C'} with uniform coins (the extraction
    // measures the solution register, so coin phases are re-prepared).
    EdgeAmplitudes state;
    std::vector<ExtractionEvent> events;
};

// The measured extraction loop on a dense state supported on vertices of
// V_R^C: CHECK-measure; while true, sample a solution with probability
// proportional to sum_{S holding it} |amp(S)|^2 / #solutions(S), collapse,
// remove its elements (reindexing every supported vertex to size R - r), and
// record it in the table; stop when CHECK reads false.
ExtractResult extract(const EdgeAmplitudes& state, const FunctionOracle& f,
                      const CollisionTable& C, int R, SplitMix64& rng);

struct ChainReport {
    std::uint64_t walks_executed = 0;
    std::uint64_t total_walk_iterations = 0;
    std::uint64_t oracle_queries = 0;
    std::vector<ExtractionEvent> extraction_events;
    int final_R = 0;
    // Marked fraction at each executed walk, in execution order; lets the
    // iteration accounting be recomputed from the amplification schedules.
    std::vector<double> walk_epsilons;
};

// End-to-end chained driver: setup over V_{2^ell}, one up-front CHECK
// measurement, then from-bad-schedule walks and extractions until
// |Im(C)| >= 2^k. Walk success/collapse probabilities and extraction
// posteriors are exact (class decomposition), so the run is a faithful
// sample of the algorithm's measurement record at any supported scale.
std::pair<CollisionTable, ChainReport> run_chained(const FunctionOracle& f,
                                                   int k, int ell,
                                                   std::uint64_t seed);

bool verify_table(const CollisionTable& C, const FunctionOracle& f);

}  // namespace cwlab
