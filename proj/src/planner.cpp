#include "cwlab/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cwlab/errors.hpp"

namespace cwlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Structural domain of the exponent formulas. The pair-counting feasibility
// k <= 2n - m is reported per call site, not enforced: the formulas stay
// continuous beyond it and the regime map is evaluated on the whole quadrant.
void check_collision_domain(double k, double m, double n) {
    if (!(n > 0.0)) throw domain_error("planner: n must be positive");
    if (!(n <= m)) throw domain_error("planner: requires n <= m");
    if (!(m <= 2.0 * n)) throw domain_error("planner: requires m <= 2n");
    if (!(k >= 0.0)) throw domain_error("planner: requires k >= 0");
}

}  // namespace

ExponentReport collision_exponent(double k, double m, double n) {
    check_collision_domain(k, m, n);
    ExponentReport rep;
    const bool bht_range = k <= 3.0 * n - 2.0 * m;
    const bool walk_range = k <= m / 4.0;
    const bool image_bound_tighter = m - n <= m / 4.0;  // m <= 4n/3
    rep.constraints_satisfied = {
        {"k <= 2n - m", k <= 2.0 * n - m},
        {"k <= 3n - 2m", bht_range},
        {"k <= m/4", walk_range},
        {"m - n <= m/4", image_bound_tighter},
    };
    if (bht_range) {
        rep.exponent = 2.0 * k / 3.0 + m / 3.0;
        rep.regime = "bht";
        rep.memory_exponent = rep.exponent;
    } else if (walk_range) {
        rep.exponent = 2.0 * k / 3.0 + m / 3.0;
        rep.regime = "ours";
        rep.memory_exponent = rep.exponent;
    } else if (image_bound_tighter) {
        rep.exponent = k + (m - n);
        rep.regime = "bht-extended";
        rep.memory_exponent = 2.0 * n - m;
    } else {
        rep.exponent = k + m / 4.0;
        rep.regime = "ours-extended";
        rep.memory_exponent = m / 2.0;
    }
    return rep;
}

ExponentReport tradeoff_exponent(double k, double ell, double m, double n) {
    check_collision_domain(k, m, n);
    if (ell < k) throw infeasible_error("tradeoff: requires ell >= k");
    const double ell_cap = 2.0 * k / 3.0 + m / 3.0;
    if (ell > ell_cap)
        throw infeasible_error("tradeoff: requires ell <= 2k/3 + m/3");
    const bool walk_valid = ell <= m / 2.0;
    const bool bht_valid = ell <= 2.0 * n - m;
    if (!walk_valid && !bht_valid)
        throw infeasible_error(
            "tradeoff: requires ell <= max(m/2, 2n - m)");
    ExponentReport rep;
    rep.exponent = k + m / 2.0 - ell / 2.0;
    rep.memory_exponent = ell;
    rep.regime = walk_valid ? (bht_valid ? "walk+bht" : "walk") : "bht";
    rep.constraints_satisfied = {
        {"ell >= k", true},
        {"ell <= 2k/3 + m/3", true},
        {"walk update: ell <= m/2", walk_valid},
        {"bht update: ell <= 2n - m", bht_valid},
    };
    return rep;
}

ExponentReport bht_exponent(double k, double m, double n) {
    check_collision_domain(k, m, n);
    ExponentReport rep;
    const bool single = k <= 3.0 * n - 2.0 * m;
    rep.constraints_satisfied = {
        {"k <= 2n - m", k <= 2.0 * n - m},
        {"k <= 3n - 2m", single},
    };
    if (single) {
        rep.exponent = 2.0 * k / 3.0 + m / 3.0;
        rep.regime = "bht";
        rep.memory_exponent = rep.exponent;
    } else {
        rep.exponent = k + (m - n);
        rep.regime = "bht-extended";
        rep.memory_exponent = 2.0 * n - m;
    }
    return rep;
}

ExponentReport r_collision(int r, double k, double m, double n) {
    if (r < 2) throw domain_error("r_collision: requires r >= 2");
    if (!(n > 0.0) || !(n <= m) || !(m <= 2.0 * n))
        throw domain_error("r_collision: requires 0 < n <= m <= 2n");
    if (!(k >= 0.0)) throw domain_error("r_collision: requires k >= 0");
    const double pow_rm1 = std::ldexp(1.0, r - 1);  // 2^(r-1)
    const double denom = 2.0 * pow_rm1 - 1.0;       // 2^r - 1
    ExponentReport rep;
    rep.exponent = k * pow_rm1 / denom + m * (pow_rm1 - 1.0) / denom;
    rep.regime = "r-collision";
    const double preimage_need = k / denom + m * (1.0 - 1.0 / denom);
    rep.memory_exponent = preimage_need;
    rep.constraints_satisfied = {
        {"k/(2^r-1) + m(1 - 1/(2^r-1)) <= n", preimage_need <= n},
    };
    return rep;
}

LimitedBirthdayReport limited_birthday(double n, double din, double dout,
                                       double k) {
    if (!(n > 0.0)) throw domain_error("limited_birthday: n must be positive");
    if (din < 0.0 || din > n || dout < 0.0 || dout > n)
        throw domain_error("limited_birthday: requires 0 <= din, dout <= n");
    if (k < 0.0) throw domain_error("limited_birthday: requires k >= 0");

    struct Candidate {
        double value;
        const char* label;
    };
    // Evaluate every case whose threshold condition holds with closure, so
    // boundary ties resolve toward the cheaper formula.
    auto directional = [&](double di, double doo) {
        const double t = 2.0 * di - n + doo;
        const double mm = n - doo;
        std::vector<Candidate> cands;
        if (k <= t) {
            cands.push_back(
                {std::max(2.0 * k / 3.0 + mm / 3.0,
                          k + std::min(mm - di, mm / 4.0)),
                 "single-structure"});
        }
        if (t <= 0.0) {
            cands.push_back({k + mm / 2.0 - di / 3.0, "sparse"});
        }
        if (t >= 0.0 && t <= k) {
            cands.push_back(
                {std::max(k + (2.0 / 3.0) * (n - di - doo),
                          k + std::min(mm - di, mm / 4.0)),
                 "several-structures"});
        }
        Candidate best{std::numeric_limits<double>::infinity(), ""};
        for (const auto& c : cands)
            if (c.value < best.value) best = c;
        return best;
    };

    const Candidate fwd = directional(din, dout);
    const Candidate swp = directional(dout, din);
    LimitedBirthdayReport rep;
    if (swp.value < fwd.value) {
        rep.quantum_exponent = swp.value;
        rep.case_label = swp.label;
        rep.swapped_roles = true;
    } else {
        rep.quantum_exponent = fwd.value;
        rep.case_label = fwd.label;
        rep.swapped_roles = false;
    }
    rep.classical_exponent =
        std::max((k + n + 1.0 - std::max(din, dout)) / 2.0,
                 k + n + 1.0 - din - dout);
    return rep;
}

namespace {

// Dimension-exponent unit: a ball of angle pi/3 has measure ~ sin(pi/3)^d.
const double kSieveU = -std::log2(std::sin(kPi / 3.0));

double angle_exp(double phi) { return -std::log2(std::sin(phi)) / kSieveU; }

}  // namespace

SieveReport sieve_derived(double c, double c1) {
    if (!(0.0 < c1) || !(c1 < c) || !(c < 1.0))
        throw domain_error("sieve: requires 0 < c1 < c < 1");
    SieveReport rep;
    rep.c = c;
    rep.c1 = c1;
    const double sin_alpha = std::exp2(-kSieveU * (1.0 - c));
    if (!(sin_alpha > 0.5))
        throw domain_error("sieve: residual angle leaves theta* undefined");
    rep.alpha = std::asin(sin_alpha);
    rep.theta_star = 2.0 * std::asin(1.0 / (2.0 * sin_alpha));
    rep.zeta = 2.0 * c - angle_exp(rep.theta_star);
    rep.beta = std::asin(std::exp2(-kSieveU * c1));
    const double q = 1.0 - 2.0 * std::cos(rep.beta) * std::cos(rep.beta) /
                               (1.0 + std::cos(rep.theta_star));
    if (!(q > 0.0))
        throw domain_error("sieve: filter acceptance probability vanishes");
    rep.rho0 = -c1 - std::log2(q) / (2.0 * kSieveU);
    rep.eps_exp = 2.0 * c1 - rep.rho0 - angle_exp(rep.theta_star);
    rep.delta_exp = -c1;
    rep.s_exp = c1;
    return rep;
}

SieveReport sieve_total(double c, double c1, SieveFormula formula) {
    SieveReport rep = sieve_derived(c, c1);
    // Inner Grover term: (U/sqrt(delta) + C)/sqrt(eps) with U = C = N^0.
    const double x = -rep.eps_exp / 2.0 + c1 / 2.0;
    if (formula == SieveFormula::New) {
        rep.fas1_exp = rep.rho0 + std::max(c1, (rep.zeta - rep.rho0) + x);
        rep.formula = "new";
    } else {
        rep.fas1_exp = rep.zeta + std::max(c1, x);
        rep.formula = "old";
    }
    rep.nbrep_exp = std::max(0.0, c - rep.zeta);
    rep.total_exp_N =
        rep.nbrep_exp + std::max(1.0, 1.0 - c + rep.fas1_exp);
    rep.total_exp_d = rep.total_exp_N * kSieveU;
    return rep;
}

namespace {

// Objective wrapper: +inf outside the parameter domain or validity range.
double sieve_objective(double c, double c1, SieveFormula formula) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (!(0.0 < c1 && c1 < c && c < 1.0)) return inf;
    SieveReport rep;
    try {
        rep = sieve_total(c, c1, formula);
    } catch (const domain_error&) {
        return inf;
    }
    if (rep.eps_exp > 0.0) return inf;
    if (rep.zeta - rep.rho0 < 0.0) return inf;
    if (formula == SieveFormula::New &&
        rep.zeta - rep.rho0 > c1 / 4.0)
        return inf;
    return rep.total_exp_d;
}

}  // namespace

SieveOptimum optimize_sieve(SieveFormula formula) {
    constexpr double kImprove = 1e-9;
    double best_c = 0.0, best_c1 = 0.0;
    double best = std::numeric_limits<double>::infinity();

    const double coarse = 0.005;
    for (int ic = 1; ic * coarse < 1.0; ++ic) {
        const double c = ic * coarse;
        for (int i1 = 1; i1 < ic; ++i1) {
            const double c1 = i1 * coarse;
            const double v = sieve_objective(c, c1, formula);
            if (v < best - kImprove) {
                best = v;
                best_c = c;
                best_c1 = c1;
            }
        }
    }
    if (!std::isfinite(best))
        throw infeasible_error("optimize_sieve: no admissible grid point");

    double step = coarse;
    while (step > 1e-4) {
        step /= 2.0;
        bool moved = true;
        while (moved) {
            moved = false;
            for (int dc = -1; dc <= 1; ++dc) {
                for (int d1 = -1; d1 <= 1; ++d1) {
                    if (dc == 0 && d1 == 0) continue;
                    const double c = best_c + dc * step;
                    const double c1 = best_c1 + d1 * step;
                    const double v = sieve_objective(c, c1, formula);
                    if (v < best - kImprove) {
                        best = v;
                        best_c = c;
                        best_c1 = c1;
                        moved = true;
                    }
                }
            }
        }
    }

    SieveOptimum opt;
    opt.c_star = best_c;
    opt.c1_star = best_c1;
    opt.report = sieve_total(best_c, best_c1, formula);
    return opt;
}

}  // namespace cwlab
