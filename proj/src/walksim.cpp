#include "cwlab/walksim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "cwlab/amplify.hpp"
#include "cwlab/errors.hpp"

namespace cwlab {

namespace {

using Cx = std::complex<double>;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

constexpr double kZeroPhaseTol = 1e-7;

std::uint64_t coin_rank(const WalkConfig& cfg, const Coin& c) {
    const std::uint64_t comp =
        cfg.spec.n_eff() - static_cast<std::uint64_t>(cfg.R);
    return static_cast<std::uint64_t>(c.j - 1) * comp +
           static_cast<std::uint64_t>(c.z - 1);
}

// Basis permutation realized by SWUP'.
std::vector<std::uint64_t> swup_permutation(const WalkConfig& cfg) {
    const std::uint64_t d = cfg.degree();
    const std::uint64_t comp = cfg.spec.n_eff() - static_cast<std::uint64_t>(cfg.R);
    std::vector<std::uint64_t> perm(cfg.dimension());
    for_each_vertex(cfg.spec, cfg.R, [&](std::uint64_t rank, const Vertex& S) {
        for (int j = 1; j <= cfg.R; ++j) {
            for (std::int64_t z = 1; z <= static_cast<std::int64_t>(comp); ++z) {
                const Coin c{j, z};
                const Vertex y = apply_coin(cfg.spec, S, c);
                const Coin c2 = reverse_coin(cfg.spec, S, c);
                perm[rank * d + coin_rank(cfg, c)] =
                    vertex_rank(cfg.spec, y) * d + coin_rank(cfg, c2);
            }
        }
    });
    return perm;
}

void apply_perm(const std::vector<std::uint64_t>& perm, VectorXcd& v) {
    VectorXcd out = VectorXcd::Zero(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])] = v[i];
    v.swap(out);
}

void apply_ref_coin(std::uint64_t d, VectorXcd& v) {
    const Eigen::Index dd = static_cast<Eigen::Index>(d);
    for (Eigen::Index base = 0; base < v.size(); base += dd) {
        Cx mean = 0.0;
        for (Eigen::Index c = 0; c < dd; ++c) mean += v[base + c];
        mean /= static_cast<double>(d);
        for (Eigen::Index c = 0; c < dd; ++c) v[base + c] = 2.0 * mean - v[base + c];
    }
}

// One application of W' = Ref'_B o Ref'_A as raw vector ops; charges 4
// oracle queries (two SWUP' applications).
void apply_walk(const WalkConfig& cfg, const std::vector<std::uint64_t>& perm,
                VectorXcd& v) {
    apply_ref_coin(cfg.degree(), v);
    apply_perm(perm, v);
    apply_ref_coin(cfg.degree(), v);
    apply_perm(perm, v);
    cfg.query_counter += 4;
}

VectorXcd to_eigen(const EdgeAmplitudes& s) {
    VectorXcd v(static_cast<Eigen::Index>(s.amp.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = s.amp[static_cast<std::size_t>(i)];
    return v;
}

EdgeAmplitudes from_eigen(const VectorXcd& v) {
    EdgeAmplitudes s;
    s.amp.assign(v.data(), v.data() + v.size());
    return s;
}

std::vector<char> marked_flags(const WalkConfig& cfg, std::uint64_t* count) {
    std::vector<char> flags(cfg.num_vertices(), 0);
    std::uint64_t c = 0;
    for_each_vertex(cfg.spec, cfg.R, [&](std::uint64_t rank, const Vertex& S) {
        if (cfg.is_marked_vertex(S)) {
            flags[rank] = 1;
            ++c;
        }
    });
    if (count) *count = c;
    return flags;
}

EdgeAmplitudes flagged_uniform_state(const WalkConfig& cfg, bool want_marked) {
    cfg.validate();
    if (cfg.dimension() > cfg.max_amplitudes)
        throw capacity_error("edge state exceeds the amplitude cap");
    std::uint64_t marked_count = 0;
    const std::vector<char> flags = marked_flags(cfg, &marked_count);
    const std::uint64_t keep =
        want_marked ? marked_count : cfg.num_vertices() - marked_count;
    if (keep == 0)
        throw domain_error("uniform state over an empty vertex class");
    const std::uint64_t d = cfg.degree();
    EdgeAmplitudes s;
    s.amp.assign(cfg.dimension(), Cx{0.0, 0.0});
    const double a = 1.0 / std::sqrt(static_cast<double>(keep * d));
    for (std::uint64_t v = 0; v < flags.size(); ++v) {
        if ((flags[v] != 0) != want_marked) continue;
        for (std::uint64_t c = 0; c < d; ++c) s.amp[v * d + c] = a;
    }
    return s;
}

struct BusyEigen {
    MatrixXcd basis;            // dim x r, orthonormal columns spanning A u B
    MatrixXcd vectors;          // r x r unitary (Schur basis)
    std::vector<double> phases; // r eigenphases
};

BusyEigen busy_eigen(const WalkConfig& cfg) {
    cfg.validate();
    if (cfg.dimension() > 50000)
        throw capacity_error("busy-subspace eigendecomposition cap exceeded");
    const std::uint64_t nv = cfg.num_vertices();
    const std::uint64_t d = cfg.degree();
    const Eigen::Index dim = static_cast<Eigen::Index>(cfg.dimension());
    const std::vector<std::uint64_t> perm = swup_permutation(cfg);

    // Columns: per-vertex uniform-coin states (family A), then their SWUP'
    // images (family B).
    MatrixXcd fam = MatrixXcd::Zero(dim, static_cast<Eigen::Index>(2 * nv));
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::uint64_t v = 0; v < nv; ++v)
        for (std::uint64_t c = 0; c < d; ++c) {
            const std::uint64_t i = v * d + c;
            fam(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) = a;
            fam(static_cast<Eigen::Index>(perm[i]),
                static_cast<Eigen::Index>(nv + v)) = a;
        }

    Eigen::ColPivHouseholderQR<MatrixXcd> qr;
    qr.setThreshold(1e-9);
    qr.compute(fam);
    const Eigen::Index r = qr.rank();
    MatrixXcd Q = qr.householderQ() * MatrixXcd::Identity(dim, r);

    MatrixXcd WQ(dim, r);
    for (Eigen::Index c = 0; c < r; ++c) {
        VectorXcd col = Q.col(c);
        apply_walk(cfg, perm, col);
        WQ.col(c) = col;
    }
    const MatrixXcd H = Q.adjoint() * WQ;

    Eigen::ComplexSchur<MatrixXcd> schur(H, true);
    const MatrixXcd& T = schur.matrixT();
    double off = 0.0;
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = i + 1; j < r; ++j)
            off = std::max(off, std::abs(T(i, j)));
    if (off > 1e-7)
        throw std::logic_error("busy_eigen: restriction of W' is not normal");

    BusyEigen out;
    out.basis = std::move(Q);
    out.vectors = schur.matrixU();
    out.phases.resize(static_cast<std::size_t>(r));
    for (Eigen::Index i = 0; i < r; ++i)
        out.phases[static_cast<std::size_t>(i)] = std::arg(T(i, i));
    return out;
}

// Probability of reading ancilla 0...0 when phase-estimating eigenphase
// theta with t bits: sin^2(2^{t-1} theta) / (4^t sin^2(theta/2)).
double ancilla_zero_prob(double theta, int t_bits) {
    if (std::abs(theta) < 1e-12) return 1.0;
    const double half = std::sin(std::pow(2.0, t_bits - 1) * theta);
    const double base = std::sin(theta / 2.0);
    const double scale = std::pow(4.0, t_bits);
    return half * half / (scale * base * base);
}

}  // namespace

std::uint64_t WalkConfig::num_vertices() const {
    return binomial(spec.n_eff(), static_cast<std::uint64_t>(R));
}

std::uint64_t WalkConfig::degree() const {
    return static_cast<std::uint64_t>(R) *
           (spec.n_eff() - static_cast<std::uint64_t>(R));
}

std::uint64_t WalkConfig::dimension() const { return num_vertices() * degree(); }

void WalkConfig::validate() const {
    spec.validate();
    if (R < 1 || static_cast<std::uint64_t>(R) >= spec.n_eff())
        throw domain_error("WalkConfig: R out of range");
}

double EdgeAmplitudes::norm() const {
    double s = 0.0;
    for (const Cx& a : amp) s += std::norm(a);
    return std::sqrt(s);
}

void for_each_vertex(
    const DomainSpec& spec, int R,
    const std::function<void(std::uint64_t, const Vertex&)>& fn) {
    const std::vector<std::uint32_t> eff = effective_elements(spec);
    const std::size_t E = eff.size();
    const std::size_t r = static_cast<std::size_t>(R);
    if (r > E) throw domain_error("for_each_vertex: R exceeds domain");
    std::vector<std::size_t> idx(r);
    std::iota(idx.begin(), idx.end(), 0);
    Vertex v(r);
    std::uint64_t rank = 0;
    for (;;) {
        for (std::size_t i = 0; i < r; ++i) v[i] = eff[idx[i]];
        fn(rank, v);
        ++rank;
        // Colexicographic successor.
        std::size_t i = 0;
        while (i < r) {
            const std::size_t cap = (i + 1 < r) ? idx[i + 1] : E;
            if (idx[i] + 1 < cap) break;
            ++i;
        }
        if (i == r) return;
        ++idx[i];
        for (std::size_t k = 0; k < i; ++k) idx[k] = k;
    }
}

EdgeAmplitudes uniform_edge_state(const WalkConfig& cfg) {
    cfg.validate();
    if (cfg.dimension() > cfg.max_amplitudes)
        throw capacity_error("edge state exceeds the amplitude cap");
    EdgeAmplitudes s;
    const double a = 1.0 / std::sqrt(static_cast<double>(cfg.dimension()));
    s.amp.assign(cfg.dimension(), Cx{a, 0.0});
    return s;
}

EdgeAmplitudes unmarked_uniform_state(const WalkConfig& cfg) {
    return flagged_uniform_state(cfg, false);
}

EdgeAmplitudes marked_uniform_state(const WalkConfig& cfg) {
    return flagged_uniform_state(cfg, true);
}

EdgeAmplitudes swup(const EdgeAmplitudes& state, const WalkConfig& cfg) {
    const std::vector<std::uint64_t> perm = swup_permutation(cfg);
    EdgeAmplitudes out;
    out.amp.assign(state.amp.size(), Cx{0.0, 0.0});
    for (std::size_t i = 0; i < state.amp.size(); ++i)
        out.amp[perm[i]] = state.amp[i];
    cfg.query_counter += 2;
    return out;
}

EdgeAmplitudes ref_coin(const EdgeAmplitudes& state, const WalkConfig& cfg) {
    VectorXcd v = to_eigen(state);
    apply_ref_coin(cfg.degree(), v);
    return from_eigen(v);
}

EdgeAmplitudes walk_op(const EdgeAmplitudes& state, const WalkConfig& cfg) {
    const std::vector<std::uint64_t> perm = swup_permutation(cfg);
    VectorXcd v = to_eigen(state);
    apply_walk(cfg, perm, v);
    return from_eigen(v);
}

SpectrumReport spectrum(const WalkConfig& cfg) {
    const BusyEigen be = busy_eigen(cfg);
    SpectrumReport rep;
    rep.dim_busy = be.phases.size();
    rep.eigenphases = be.phases;
    std::sort(rep.eigenphases.begin(), rep.eigenphases.end());

    std::size_t zero_idx = 0;
    double best = 1e9;
    double min_nonzero = 1e9;
    for (std::size_t i = 0; i < be.phases.size(); ++i) {
        const double a = std::abs(be.phases[i]);
        if (a < best) {
            best = a;
            zero_idx = i;
        }
        if (a >= kZeroPhaseTol) min_nonzero = std::min(min_nonzero, a);
    }
    rep.min_nonzero_phase = min_nonzero;

    const VectorXcd u = to_eigen(uniform_edge_state(cfg));
    const VectorXcd fixed =
        be.basis * be.vectors.col(static_cast<Eigen::Index>(zero_idx));
    rep.fixed_vector_overlap = std::abs(u.dot(fixed));

    const double delta = spectral_gap(cfg.spec, cfg.R);
    rep.phase_gap_ratio = min_nonzero / (2.0 * std::acos(1.0 - delta));
    return rep;
}

EdgeAmplitudes reflect_uniform_exact(const EdgeAmplitudes& state,
                                     const WalkConfig& cfg) {
    const double dim = static_cast<double>(cfg.dimension());
    Cx sum = 0.0;
    for (const Cx& a : state.amp) sum += a;
    EdgeAmplitudes out;
    out.amp.resize(state.amp.size());
    const Cx shift = 2.0 * sum / dim;
    for (std::size_t i = 0; i < state.amp.size(); ++i)
        out.amp[i] = shift - state.amp[i];
    return out;
}

std::pair<EdgeAmplitudes, double> reflect_uniform_phase_est(
    const EdgeAmplitudes& state, const WalkConfig& cfg, int t_bits) {
    if (t_bits < 1) throw domain_error("reflect_uniform_phase_est: t_bits < 1");
    const BusyEigen be = busy_eigen(cfg);
    const VectorXcd psi = to_eigen(state);
    const MatrixXcd eigbasis = be.basis * be.vectors;  // dim x r, orthonormal
    const VectorXcd coords = eigbasis.adjoint() * psi;
    const VectorXcd perp = psi - eigbasis * coords;

    VectorXcd out_coords(coords.size());
    for (Eigen::Index j = 0; j < coords.size(); ++j) {
        const double theta = be.phases[static_cast<std::size_t>(j)];
        const double r = std::abs(theta) < kZeroPhaseTol
                             ? 1.0
                             : 2.0 * ancilla_zero_prob(theta, t_bits) - 1.0;
        out_coords[j] = coords[j] * r;
    }
    // Ancilla-0 branch: phase-0 components (including everything outside the
    // busy subspace, where W' acts as identity) pass through unflipped.
    const VectorXcd branch0 = eigbasis * out_coords + perp;
    const VectorXcd exact = to_eigen(reflect_uniform_exact(state, cfg));
    const double fidelity = std::abs(exact.dot(branch0));
    VectorXcd out = branch0;
    const double nrm = out.norm();
    if (nrm > 1e-15) out /= nrm;
    return {from_eigen(out), fidelity};
}

EdgeAmplitudes phase_flip_marked(const EdgeAmplitudes& state,
                                 const WalkConfig& cfg) {
    const std::vector<char> flags = marked_flags(cfg, nullptr);
    const std::uint64_t d = cfg.degree();
    EdgeAmplitudes out = state;
    for (std::uint64_t v = 0; v < flags.size(); ++v) {
        if (!flags[v]) continue;
        for (std::uint64_t c = 0; c < d; ++c) out.amp[v * d + c] = -out.amp[v * d + c];
    }
    return out;
}

double marked_mass(const EdgeAmplitudes& state, const WalkConfig& cfg) {
    const std::vector<char> flags = marked_flags(cfg, nullptr);
    const std::uint64_t d = cfg.degree();
    double mass = 0.0;
    for (std::uint64_t v = 0; v < flags.size(); ++v) {
        if (!flags[v]) continue;
        for (std::uint64_t c = 0; c < d; ++c) mass += std::norm(state.amp[v * d + c]);
    }
    return mass;
}

std::pair<bool, EdgeAmplitudes> measure_marked(const EdgeAmplitudes& state,
                                               const WalkConfig& cfg,
                                               SplitMix64& rng) {
    const std::vector<char> flags = marked_flags(cfg, nullptr);
    const std::uint64_t d = cfg.degree();
    double p_marked = 0.0, p_total = 0.0;
    for (std::uint64_t v = 0; v < flags.size(); ++v)
        for (std::uint64_t c = 0; c < d; ++c) {
            const double w = std::norm(state.amp[v * d + c]);
            p_total += w;
            if (flags[v]) p_marked += w;
        }
    if (p_total < 1e-18)
        throw domain_error("measure_marked: degenerate measurement (zero mass)");
    const bool flag = rng.unit() < p_marked / p_total;
    const double keep_mass = flag ? p_marked : p_total - p_marked;
    if (keep_mass < 1e-18)
        throw domain_error("measure_marked: collapsed onto zero-mass branch");
    EdgeAmplitudes out;
    out.amp.assign(state.amp.size(), Cx{0.0, 0.0});
    const double scale = 1.0 / std::sqrt(keep_mass);
    for (std::uint64_t v = 0; v < flags.size(); ++v) {
        if ((flags[v] != 0) != flag) continue;
        for (std::uint64_t c = 0; c < d; ++c)
            out.amp[v * d + c] = state.amp[v * d + c] * scale;
    }
    return {flag, out};
}

MnrsResult mnrs_run(const WalkConfig& cfg, const EdgeAmplitudes& start,
                    SplitMix64& rng) {
    cfg.validate();
    std::uint64_t marked_count = 0;
    const std::vector<char> flags = marked_flags(cfg, &marked_count);
    const std::uint64_t nv = cfg.num_vertices();
    if (marked_count == 0) throw infeasible_error("mnrs_run: no marked vertices");
    if (2 * marked_count >= nv)
        throw infeasible_error("mnrs_run: epsilon >= 0.5, guarantee unavailable");
    const double eps =
        static_cast<double>(marked_count) / static_cast<double>(nv);
    const AmplSchedule sched = schedule(eps);

    const std::uint64_t d = cfg.degree();
    double mass = 0.0;
    for (std::uint64_t v = 0; v < flags.size(); ++v) {
        if (!flags[v]) continue;
        for (std::uint64_t c = 0; c < d; ++c) mass += std::norm(start.amp[v * d + c]);
    }
    MnrsResult res;
    std::uint64_t iters = 0;
    if (std::abs(mass - eps) <= 1e-9) {
        iters = static_cast<std::uint64_t>(sched.iters_uniform);
        res.stats.started_from_uniform = true;
    } else if (mass <= 1e-9) {
        iters = static_cast<std::uint64_t>(sched.iters_bad);
    } else {
        throw domain_error(
            "mnrs_run: start state is neither uniform nor unmarked-uniform");
    }

    VectorXcd v = to_eigen(start);
    const double dim = static_cast<double>(cfg.dimension());
    for (std::uint64_t k = 0; k < iters; ++k) {
        // Phase flip on marked vertex blocks.
        for (std::uint64_t vert = 0; vert < flags.size(); ++vert) {
            if (!flags[vert]) continue;
            for (std::uint64_t c = 0; c < d; ++c)
                v[static_cast<Eigen::Index>(vert * d + c)] =
                    -v[static_cast<Eigen::Index>(vert * d + c)];
        }
        // Exact reflection about the uniform state.
        const Cx shift = 2.0 * v.sum() / dim;
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = shift - v[i];
        cfg.query_counter += 4;
    }
    res.stats.iterations = iters;
    res.stats.oracle_queries = 4 * iters;

    auto [flag, collapsed] = measure_marked(from_eigen(v), cfg, rng);
    res.success = flag;
    res.state = std::move(collapsed);
    return res;
}

std::vector<double> fidelity_decay(const WalkConfig& cfg, double mu, int steps,
                                   SplitMix64& rng) {
    if (mu < 0.0 || mu >= 1.0) throw domain_error("fidelity_decay: mu out of [0,1)");
    if (steps < 1) throw domain_error("fidelity_decay: steps < 1");
    const std::vector<std::uint64_t> perm = swup_permutation(cfg);
    const std::uint64_t dim = cfg.dimension();
    std::vector<char> corrupted(dim, 0);
    for (std::uint64_t i = 0; i < dim; ++i) corrupted[i] = rng.chance(mu) ? 1 : 0;

    const auto noisy_swup = [&](VectorXcd& v) {
        VectorXcd out = VectorXcd::Zero(v.size());
        for (std::uint64_t i = 0; i < dim; ++i) {
            if (corrupted[i]) continue;  // amplitude leaves to its flag slot
            out[static_cast<Eigen::Index>(perm[i])] =
                v[static_cast<Eigen::Index>(i)];
        }
        v.swap(out);
    };

    VectorXcd ideal = to_eigen(uniform_edge_state(cfg));
    VectorXcd noisy = ideal;
    std::vector<double> overlaps;
    overlaps.reserve(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
        apply_walk(cfg, perm, ideal);
        apply_ref_coin(cfg.degree(), noisy);
        noisy_swup(noisy);
        apply_ref_coin(cfg.degree(), noisy);
        noisy_swup(noisy);
        overlaps.push_back(std::abs(ideal.dot(noisy)));
    }
    return overlaps;
}

}  // namespace cwlab
