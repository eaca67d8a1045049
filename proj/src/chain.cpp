#include "cwlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "cwlab/amplify.hpp"
#include "cwlab/errors.hpp"

namespace cwlab {

namespace {

constexpr double kExactCountCap = 9007199254740992.0;  // 2^53

double binom_double(std::uint64_t n, std::uint64_t k) {
    return static_cast<double>(binomial(n, k));
}

// Largest subset-count the class DP can produce; everything must stay an
// exact integer in double.
void guard_exact_counts(std::uint64_t universe, int R) {
    if (R < 0 || static_cast<std::uint64_t>(R) > universe)
        throw domain_error("class DP: R out of range for the clean domain");
    const std::uint64_t peak_r =
        std::min<std::uint64_t>(static_cast<std::uint64_t>(R), universe / 2);
    if (binom_double(universe, peak_r) > kExactCountCap)
        throw capacity_error("class DP: counts exceed the exact-integer range");
}

// Joint counts dp[r][sigma]: subsets drawing r elements from the classes
// (optionally skipping one class) that contain exactly sigma solutions. A
// clean class contributes a solution when it supplies >= 2 elements, a
// tracked class when it supplies >= 1.
std::vector<std::vector<double>> class_dp(const std::vector<ImageClass>& classes,
                                          int R, int skip = -1) {
    std::vector<std::vector<double>> dp(
        static_cast<std::size_t>(R) + 1,
        std::vector<double>(static_cast<std::size_t>(R) + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t qi = 0; qi < classes.size(); ++qi) {
        if (static_cast<int>(qi) == skip) continue;
        const ImageClass& cl = classes[qi];
        const int kmax = static_cast<int>(
            std::min<std::uint64_t>(cl.size, static_cast<std::uint64_t>(R)));
        if (kmax == 0) continue;
        std::vector<std::vector<double>> nd = dp;  // k = 0 term
        for (int k = 1; k <= kmax; ++k) {
            const double ways = binom_double(cl.size, static_cast<std::uint64_t>(k));
            const int ds = cl.tracked ? 1 : (k >= 2 ? 1 : 0);
            for (int r = 0; r + k <= R; ++r)
                for (int s = 0; s + ds <= R; ++s) {
                    if (dp[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] == 0.0)
                        continue;
                    nd[static_cast<std::size_t>(r + k)][static_cast<std::size_t>(s + ds)] +=
                        dp[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] * ways;
                }
        }
        dp = std::move(nd);
    }
    return dp;
}

// Level weight after e measured extractions: w^2(sigma) = prod_{i=1..e}
// 1/(sigma+i). Uniform-over-marked corresponds to e = 0.
double level_weight_sq(int sigma, int e) {
    double w = 1.0;
    for (int i = 1; i <= e; ++i) w /= static_cast<double>(sigma + i);
    return w;
}

bool in_preimages(const CollisionTable& C, std::uint64_t image, std::uint64_t x) {
    const CollisionTable::Entry* ent = C.find(image);
    if (!ent) return false;
    return std::binary_search(ent->preimages.begin(), ent->preimages.end(), x);
}

struct SolutionLess {
    bool operator()(const Solution& a, const Solution& b) const {
        if (a.image != b.image) return a.image < b.image;
        return a.elements < b.elements;
    }
};

std::vector<std::uint64_t> class_elements(const FunctionOracle& f,
                                          const CollisionTable& C,
                                          std::uint64_t image) {
    std::vector<std::uint64_t> out;
    const std::uint64_t domain = std::uint64_t{1} << f.n;
    for (std::uint64_t x = 0; x < domain; ++x) {
        if (f.value(x) != image) continue;
        if (in_preimages(C, image, x)) continue;
        out.push_back(x);
    }
    return out;
}

std::vector<std::uint64_t> sample_subset(std::vector<std::uint64_t> pool, int t,
                                         SplitMix64& rng) {
    if (t < 0 || static_cast<std::size_t>(t) > pool.size())
        throw std::logic_error("sample_subset: width exceeds class size");
    for (int i = 0; i < t; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) +
                              static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(t));
    std::sort(pool.begin(), pool.end());
    return pool;
}

struct SymbolicExtract {
    CollisionTable table;
    int R = 0;
    std::vector<ExtractionEvent> events;
};

// The measured extraction loop at the class level. Entered when CHECK has
// just read true on a uniform-over-marked state; the state through the loop
// is a function of (pool, R, extraction level) only, which the level weights
// capture exactly.
SymbolicExtract extract_symbolic(const FunctionOracle& f, CollisionTable table,
                                 int R, SplitMix64& rng) {
    ImageClasses cls = build_classes(f, table);
    guard_exact_counts(cls.universe, R);
    std::vector<ImageClass> pool = cls.classes;
    SymbolicExtract out;
    out.events = {};
    int e = 0;
    for (;;) {
        // Sample (class, width) with mass C(size,t) * sum_{sigma'}
        // N^(q)_{R-t,sigma'} * w^2(sigma'+1) / (sigma'+1).
        std::vector<std::pair<std::pair<std::size_t, int>, double>> masses;
        double total = 0.0;
        for (std::size_t qi = 0; qi < pool.size(); ++qi) {
            const ImageClass& cl = pool[qi];
            const int tmin = cl.tracked ? 1 : 2;
            const int tmax = static_cast<int>(
                std::min<std::uint64_t>(cl.size, static_cast<std::uint64_t>(R)));
            if (tmin > tmax) continue;
            const auto dpq = class_dp(pool, R, static_cast<int>(qi));
            for (int t = tmin; t <= tmax; ++t) {
                const double base = binom_double(cl.size, static_cast<std::uint64_t>(t));
                double s = 0.0;
                for (int sp = 0; sp <= R - t; ++sp) {
                    const double cnt =
                        dpq[static_cast<std::size_t>(R - t)][static_cast<std::size_t>(sp)];
                    if (cnt == 0.0) continue;
                    s += cnt * level_weight_sq(sp + 1, e) / static_cast<double>(sp + 1);
                }
                if (s <= 0.0) continue;
                masses.push_back({{qi, t}, base * s});
                total += base * s;
            }
        }
        if (total <= 0.0)
            throw std::logic_error("extract_symbolic: no solution mass on a marked state");
        double draw = rng.unit() * total;
        std::size_t pick = masses.size() - 1;
        for (std::size_t i = 0; i < masses.size(); ++i) {
            if (draw < masses[i].second) {
                pick = i;
                break;
            }
            draw -= masses[i].second;
        }
        const std::size_t qi = masses[pick].first.first;
        const int width = masses[pick].first.second;
        const ImageClass chosen_class = pool[qi];

        const std::vector<std::uint64_t> members =
            class_elements(f, table, chosen_class.image);
        if (members.size() != chosen_class.size)
            throw std::logic_error("extract_symbolic: class size drifted");
        const std::vector<std::uint64_t> picked = sample_subset(members, width, rng);
        table.add(chosen_class.image, picked);
        out.events.push_back(ExtractionEvent{width, chosen_class.image});
        // The collapse fixes S-cap-class = picked, so the class leaves the
        // support pool entirely (its remainder is newly tracked but cannot
        // occur in the collapsed superposition).
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(qi));
        R -= width;
        ++e;

        // CHECK measurement on the level-weighted state.
        const auto dp = class_dp(pool, R);
        double denom = 0.0, numer = 0.0;
        for (int s = 0; s <= R; ++s) {
            const double cnt = dp[static_cast<std::size_t>(R)][static_cast<std::size_t>(s)];
            if (cnt == 0.0) continue;
            const double w = cnt * level_weight_sq(s, e);
            denom += w;
            if (s >= 1) numer += w;
        }
        if (denom <= 0.0)
            throw std::logic_error("extract_symbolic: empty support after collapse");
        if (!(rng.unit() < numer / denom)) break;
    }
    out.table = std::move(table);
    out.R = R;
    return out;
}

}  // namespace

FunctionOracle random_function(int n, int m, std::uint64_t seed) {
    if (n < 1 || n > 22) throw domain_error("random_function: n out of [1,22]");
    if (m < n || m > 2 * n) throw domain_error("random_function: m out of [n,2n]");
    FunctionOracle f;
    f.n = n;
    f.m = m;
    f.seed = seed;
    f.table.resize(std::uint64_t{1} << n);
    SplitMix64 rng(seed);
    const std::uint64_t range = std::uint64_t{1} << m;
    for (std::uint64_t x = 0; x < f.table.size(); ++x) f.table[x] = rng.below(range);
    return f;
}

std::size_t CollisionTable::preimage_count() const {
    std::size_t c = 0;
    for (const Entry& e : entries) c += e.preimages.size();
    return c;
}

const CollisionTable::Entry* CollisionTable::find(std::uint64_t image) const {
    auto it = std::lower_bound(
        entries.begin(), entries.end(), image,
        [](const Entry& e, std::uint64_t v) { return e.image < v; });
    if (it == entries.end() || it->image != image) return nullptr;
    return &*it;
}

void CollisionTable::add(std::uint64_t image, std::vector<std::uint64_t> elements) {
    if (elements.empty()) throw domain_error("CollisionTable::add: empty tuple");
    std::sort(elements.begin(), elements.end());
    auto it = std::lower_bound(
        entries.begin(), entries.end(), image,
        [](const Entry& e, std::uint64_t v) { return e.image < v; });
    if (it == entries.end() || it->image != image) {
        entries.insert(it, Entry{image, std::move(elements)});
        return;
    }
    std::vector<std::uint64_t> merged;
    merged.reserve(it->preimages.size() + elements.size());
    std::merge(it->preimages.begin(), it->preimages.end(), elements.begin(),
               elements.end(), std::back_inserter(merged));
    for (std::size_t i = 1; i < merged.size(); ++i)
        if (merged[i] == merged[i - 1])
            throw domain_error("CollisionTable::add: duplicate preimage");
    it->preimages = std::move(merged);
}

std::vector<std::uint32_t> CollisionTable::preimage_values() const {
    std::vector<std::uint32_t> out;
    for (const Entry& e : entries)
        for (std::uint64_t x : e.preimages) out.push_back(static_cast<std::uint32_t>(x));
    std::sort(out.begin(), out.end());
    return out;
}

DomainSpec domain_for(const FunctionOracle& f, const CollisionTable& C) {
    DomainSpec spec;
    spec.n_bits = f.n;
    spec.excluded = C.preimage_values();
    return spec;
}

bool is_marked(const Vertex& S, const FunctionOracle& f,
               const CollisionTable& C) {
    std::vector<std::uint64_t> images;
    images.reserve(S.size());
    for (std::uint32_t x : S) {
        const std::uint64_t u = f.value(x);
        if (in_preimages(C, u, x))
            throw domain_error("is_marked: S intersects Preim(C)");
        images.push_back(u);
    }
    std::sort(images.begin(), images.end());
    for (std::size_t i = 1; i < images.size(); ++i)
        if (images[i] == images[i - 1]) return true;
    for (std::uint64_t u : images)
        if (C.has_image(u)) return true;
    return false;
}

double epsilon_exact(const FunctionOracle& f, const CollisionTable& C, int R) {
    const DomainSpec spec = domain_for(f, C);
    if (R < 1 || static_cast<std::uint64_t>(R) > spec.n_eff())
        throw domain_error("epsilon_exact: R out of range");
    const std::uint64_t nv = binomial(spec.n_eff(), static_cast<std::uint64_t>(R));
    if (nv > 10'000'000)
        throw capacity_error("epsilon_exact: enumeration too large");
    std::uint64_t cnt = 0;
    for_each_vertex(spec, R, [&](std::uint64_t, const Vertex& S) {
        if (is_marked(S, f, C)) ++cnt;
    });
    return static_cast<double>(cnt) / static_cast<double>(nv);
}

std::pair<double, double> epsilon_bounds(int R, std::uint64_t im_count, int m) {
    if (R < 0 || m < 1) throw domain_error("epsilon_bounds: bad arguments");
    const double denom = std::pow(2.0, m);
    const double preim = static_cast<double>(R) * static_cast<double>(im_count) / denom;
    const double pairs =
        static_cast<double>(R) * static_cast<double>(R - 1) / denom;
    return {std::max(preim, pairs), std::min(1.0, preim + pairs)};
}

std::vector<Solution> solutions_in_vertex(const Vertex& S,
                                          const FunctionOracle& f,
                                          const CollisionTable& C) {
    std::map<std::uint64_t, std::vector<std::uint64_t>> groups;
    for (std::uint32_t x : S) groups[f.value(x)].push_back(x);
    std::vector<Solution> out;
    for (auto& [image, xs] : groups) {
        std::sort(xs.begin(), xs.end());
        if (xs.size() >= 2 || C.has_image(image))
            out.push_back(Solution{image, xs});
    }
    return out;
}

ImageClasses build_classes(const FunctionOracle& f, const CollisionTable& C) {
    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    const std::uint64_t domain = std::uint64_t{1} << f.n;
    for (std::uint64_t x = 0; x < domain; ++x) {
        const std::uint64_t u = f.value(x);
        if (in_preimages(C, u, x)) continue;
        ++counts[u];
    }
    ImageClasses out;
    out.universe = 0;
    out.classes.reserve(counts.size());
    for (const auto& [image, size] : counts) {
        out.classes.push_back(ImageClass{image, size, C.has_image(image)});
        out.universe += size;
    }
    std::sort(out.classes.begin(), out.classes.end(),
              [](const ImageClass& a, const ImageClass& b) {
                  return a.image < b.image;
              });
    return out;
}

std::vector<double> vertex_counts_by_solutions(const ImageClasses& cls, int R) {
    guard_exact_counts(cls.universe, R);
    const auto dp = class_dp(cls.classes, R);
    std::vector<double> out(dp[static_cast<std::size_t>(R)].begin(),
                            dp[static_cast<std::size_t>(R)].end());
    double total = 0.0;
    for (double v : out) total += v;
    if (total != binom_double(cls.universe, static_cast<std::uint64_t>(R)))
        throw std::logic_error("vertex_counts_by_solutions: counts do not total C(U,R)");
    return out;
}

double epsilon_classes(const FunctionOracle& f, const CollisionTable& C, int R) {
    const ImageClasses cls = build_classes(f, C);
    const std::vector<double> counts = vertex_counts_by_solutions(cls, R);
    const double total = binom_double(cls.universe, static_cast<std::uint64_t>(R));
    return 1.0 - counts[0] / total;
}

ExtractResult extract(const EdgeAmplitudes& state, const FunctionOracle& f,
                      const CollisionTable& C, int R, SplitMix64& rng) {
    if (R < 0) throw domain_error("extract: negative R");
    CollisionTable cur = C;
    int Rc = R;
    std::vector<ExtractionEvent> events;

    // Vertex marginals |amp(S)|^2 (the extraction measures the solution
    // register, so coin phases do not survive; outputs carry uniform coins).
    std::vector<double> p;
    if (Rc == 0) {
        p = {1.0};
    } else {
        const DomainSpec dom = domain_for(f, C);
        if (static_cast<std::uint64_t>(Rc) >= dom.n_eff())
            throw domain_error("extract: R out of range");
        const std::uint64_t d =
            static_cast<std::uint64_t>(Rc) * (dom.n_eff() - static_cast<std::uint64_t>(Rc));
        const std::uint64_t nv = binomial(dom.n_eff(), static_cast<std::uint64_t>(Rc));
        if (state.amp.size() != nv * d)
            throw domain_error("extract: state dimension mismatch");
        double total = 0.0;
        p.assign(nv, 0.0);
        for (std::uint64_t v = 0; v < nv; ++v) {
            double pv = 0.0;
            for (std::uint64_t c = 0; c < d; ++c) pv += std::norm(state.amp[v * d + c]);
            p[v] = pv;
            total += pv;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw domain_error("extract: state not normalized");
    }

    for (;;) {
        const DomainSpec dom = domain_for(f, cur);
        double pm = 0.0;
        std::vector<char> flags;
        if (Rc > 0) {
            flags.assign(p.size(), 0);
            for_each_vertex(dom, Rc, [&](std::uint64_t rank, const Vertex& S) {
                if (p[rank] == 0.0) return;
                if (is_marked(S, f, cur)) {
                    flags[rank] = 1;
                    pm += p[rank];
                }
            });
        }
        if (!(rng.unit() < pm)) {
            // CHECK reads false: return the renormalized unmarked branch.
            ExtractResult res;
            res.table = std::move(cur);
            res.R_prime = Rc;
            res.events = std::move(events);
            if (Rc > 0) {
                const std::uint64_t d = static_cast<std::uint64_t>(Rc) *
                                        (dom.n_eff() - static_cast<std::uint64_t>(Rc));
                const double rest = 1.0 - pm;
                if (rest <= 0.0)
                    throw domain_error("extract: no unmarked mass at exit");
                res.state.amp.assign(p.size() * d, {0.0, 0.0});
                for (std::uint64_t v = 0; v < p.size(); ++v) {
                    if (flags[v] || p[v] == 0.0) continue;
                    const double a =
                        std::sqrt(p[v] / rest / static_cast<double>(d));
                    for (std::uint64_t c = 0; c < d; ++c) res.state.amp[v * d + c] = a;
                }
            }
            return res;
        }

        // Collapse onto the marked branch.
        for (std::uint64_t v = 0; v < p.size(); ++v)
            p[v] = flags[v] ? p[v] / pm : 0.0;

        // Sampled measured lookup: weight of solution tau is
        // sum_{S holding tau} p(S) / #solutions(S).
        std::map<Solution, double, SolutionLess> weight;
        for_each_vertex(dom, Rc, [&](std::uint64_t rank, const Vertex& S) {
            if (p[rank] == 0.0) return;
            const std::vector<Solution> sols = solutions_in_vertex(S, f, cur);
            const double share = p[rank] / static_cast<double>(sols.size());
            for (const Solution& s : sols) weight[s] += share;
        });
        double total = 0.0;
        for (const auto& [s, w] : weight) total += w;
        double draw = rng.unit() * total;
        const Solution* tau = nullptr;
        for (const auto& [s, w] : weight) {
            if (draw < w) {
                tau = &s;
                break;
            }
            draw -= w;
        }
        if (!tau) tau = &weight.rbegin()->first;

        // Posterior over vertices holding tau, reindexed to size R - r over
        // the domain that excludes tau's elements.
        const int width = static_cast<int>(tau->elements.size());
        CollisionTable next = cur;
        next.add(tau->image, tau->elements);
        const DomainSpec dom2 = domain_for(f, next);
        const int R2 = Rc - width;
        std::vector<double> p2(
            R2 > 0 ? binomial(dom2.n_eff(), static_cast<std::uint64_t>(R2)) : 1, 0.0);
        double mass = 0.0;
        for_each_vertex(dom, Rc, [&](std::uint64_t rank, const Vertex& S) {
            if (p[rank] == 0.0) return;
            const std::vector<Solution> sols = solutions_in_vertex(S, f, cur);
            if (std::find(sols.begin(), sols.end(), *tau) == sols.end()) return;
            const double w = p[rank] / static_cast<double>(sols.size());
            Vertex rest;
            rest.reserve(S.size() - tau->elements.size());
            for (std::uint32_t x : S)
                if (!std::binary_search(tau->elements.begin(), tau->elements.end(),
                                        static_cast<std::uint64_t>(x)))
                    rest.push_back(x);
            const std::uint64_t rank2 = R2 > 0 ? vertex_rank(dom2, rest) : 0;
            p2[rank2] += w;
            mass += w;
        });
        if (mass <= 0.0) throw std::logic_error("extract: measured solution has no support");
        for (double& v : p2) v /= mass;

        events.push_back(ExtractionEvent{width, tau->image});
        cur = std::move(next);
        Rc = R2;
        p = std::move(p2);
    }
}

std::pair<CollisionTable, ChainReport> run_chained(const FunctionOracle& f,
                                                   int k, int ell,
                                                   std::uint64_t seed) {
    if (k < 0) throw domain_error("run_chained: k must be >= 0");
    if (ell < 0 || ell > 22) throw domain_error("run_chained: ell out of range");
    CollisionTable table;
    ChainReport report;
    if (k == 0) {
        report.final_R = 1 << ell;
        return {table, report};
    }
    if (ell < 1) throw domain_error("run_chained: ell must be >= 1");
    if (k > ell) throw infeasible_error("run_chained: k > ell");
    if (2 * ell > f.m)
        throw infeasible_error("run_chained: ell > m/2");
    if (ell < k + 2)
        throw infeasible_error("run_chained: 2^ell < 4 * 2^k (width slack)");

    SplitMix64 rng(seed);
    int R = 1 << ell;
    report.oracle_queries = static_cast<std::uint64_t>(R);  // setup of psi_U

    // Up-front CHECK on the initial superposition over V_{2^ell}.
    bool marked_branch = rng.unit() < epsilon_classes(f, table, R);

    const std::uint64_t target = std::uint64_t{1} << k;
    for (;;) {
        if (marked_branch) {
            SymbolicExtract ex = extract_symbolic(f, table, R, rng);
            table = std::move(ex.table);
            R = ex.R;
            for (const ExtractionEvent& ev : ex.events)
                report.extraction_events.push_back(ev);
            marked_branch = false;  // extraction exits on CHECK false: psi_B
        }
        if (table.image_count() >= target) break;
        if (R < (1 << (ell - 1)))
            throw infeasible_error("run_chained: R dropped below 2^(ell-1)");
        const double eps = epsilon_classes(f, table, R);
        if (eps <= 0.0)
            throw infeasible_error("run_chained: no marked vertices to find");
        if (eps >= 0.5)
            throw infeasible_error("run_chained: epsilon >= 0.5, guarantee unavailable");
        const AmplSchedule sched = schedule(eps);
        const SuccessProbabilities sp = success_probabilities(eps);
        ++report.walks_executed;
        report.walk_epsilons.push_back(eps);
        report.total_walk_iterations += static_cast<std::uint64_t>(sched.iters_bad);
        report.oracle_queries += 4 * static_cast<std::uint64_t>(sched.iters_bad);
        marked_branch = rng.chance(sp.from_bad);
    }
    report.final_R = R;
    return {table, report};
}

bool verify_table(const CollisionTable& C, const FunctionOracle& f) {
    std::vector<std::uint64_t> all;
    std::uint64_t prev_image = 0;
    bool first = true;
    for (const CollisionTable::Entry& e : C.entries) {
        if (!first && e.image <= prev_image) return false;
        first = false;
        prev_image = e.image;
        if (e.preimages.empty()) return false;
        for (std::size_t i = 0; i < e.preimages.size(); ++i) {
            if (i > 0 && e.preimages[i] <= e.preimages[i - 1]) return false;
            if (e.preimages[i] >= (std::uint64_t{1} << f.n)) return false;
            if (f.value(e.preimages[i]) != e.image) return false;
            all.push_back(e.preimages[i]);
        }
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 1; i < all.size(); ++i)
        if (all[i] == all[i - 1]) return false;
    return true;
}

}  // namespace cwlab
