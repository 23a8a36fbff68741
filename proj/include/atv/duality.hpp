#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "atv/domain.hpp"
#include "atv/measures.hpp"
#include "atv/operators.hpp"
#include "atv/random.hpp"
#include "atv/tv.hpp"

namespace atv {

/// Transition kernels for the sup side (class 0) and the inf side (class 1).
struct KernelPair {
    TransitionKernel m0;
    TransitionKernel m1;
};

/// How an argmax/argmin is picked when several ball members attain it.
enum class TieBreak {
    prefer_center,  // the centre when it attains the extremum, else the lowest index
    lowest_index,
    highest_index,
};

namespace detail {

template <typename Better>
std::size_t ball_extremizer(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d, std::size_t i,
                            TieBreak tie, Better better) {
    std::optional<std::size_t> best;
    for (std::size_t j : d.balls[i]) {
        if (!essential_member(m, i, j)) continue;
        if (!best || better(u[j], u[*best])) {
            best = j;
        } else if (u[j] == u[*best] && tie == TieBreak::highest_index) {
            best = j;
        }
    }
    if (tie == TieBreak::prefer_center && u[i] == u[*best]) return i;
    return *best;
}

}  // namespace detail

/// Row x of m0 is a Dirac at an argmax of u over the essential ball of x, row x
/// of m1 a Dirac at an argmin. Rows without class mass are self-Diracs.
inline KernelPair maximizing_kernels(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d,
                                     TieBreak tie = TieBreak::prefer_center) {
    check_field(u, d);
    std::vector<std::size_t> up(d.size());
    std::vector<std::size_t> down(d.size());
    parallel_for(d.size(), [&](std::size_t i) {
        up[i] = m.rho0[i] != 0.0 ? detail::ball_extremizer(u, m, d, i, tie, std::greater<>{}) : i;
        down[i] = m.rho1[i] != 0.0 ? detail::ball_extremizer(u, m, d, i, tie, std::less<>{}) : i;
    });
    return {dirac_kernel(d, up), dirac_kernel(d, down)};
}

/// div^rho[m] = div^{rho0}[m0] - div^{rho1}[m1].
inline SignedDensity combined_divergence(const KernelPair& pair, const ClassMeasures& m, const DiscreteDomain& d) {
    SignedDensity out = kernel_divergence(pair.m0, m.rho0, d);
    const SignedDensity d1 = kernel_divergence(pair.m1, m.rho1, d);
    for (std::size_t y = 0; y < out.size(); ++y) out[y] -= d1[y];
    return out;
}

/// Dual objective -<u, div^rho[m]> of an admissible kernel pair.
inline double dual_eval(const KernelPair& pair, const ScalarField& u, const ClassMeasures& m,
                        const DiscreteDomain& d) {
    check_field(u, d);
    return negative_divergence_pairing(u, combined_divergence(pair, m, d), d);
}

/// Same value through the gradient side: sum grad[u] [Psi; rho] w w.
inline double dual_eval_gradient_form(const KernelPair& pair, const ScalarField& u, const ClassMeasures& m,
                                      const DiscreteDomain& d) {
    return gradient_pairing(u, pair.m0, m.rho0, d) - gradient_pairing(u, pair.m1, m.rho1, d);
}

/// TV(u) minus the dual value of `pair` (the maximising pair when absent).
inline double duality_gap(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d,
                          const std::optional<KernelPair>& pair = std::nullopt) {
    const double tv = eval_tv(u, m, d);
    const double dual = dual_eval(pair ? *pair : maximizing_kernels(u, m, d), u, m, d);
    return tv - dual;
}

/// p = -div^rho[m] for the maximising pair; satisfies <p, u> = TV(u).
inline SignedDensity subgradient(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d,
                                 TieBreak tie = TieBreak::prefer_center) {
    SignedDensity p = combined_divergence(maximizing_kernels(u, m, d, tie), m, d);
    for (auto& v : p) v = -v;
    return p;
}

/// Density of [(Gamma)# rho0 - rho0]/eps + [rho1 - (gamma)# rho1]/eps, where
/// Gamma/gamma map each mass point to its unique ball argmax/argmin. Throws
/// when an extremizer is not unique at a point that carries mass.
inline SignedDensity pushforward_subgradient(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d) {
    check_field(u, d);
    const std::size_t n = d.size();
    std::vector<double> push0(n, 0.0);
    std::vector<double> push1(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        for (int label = 0; label < 2; ++label) {
            const double mass = m.rho(label)[x] * d.quad_weights[x];
            if (mass == 0.0) continue;
            const double target = label == 0 ? ball_max(u, m, d, x) : ball_min(u, m, d, x);
            std::optional<std::size_t> hit;
            for (std::size_t j : d.balls[x]) {
                if (!essential_member(m, x, j) || u[j] != target) continue;
                if (hit) throw PreconditionError("extremizer of ball " + std::to_string(x) + " is not unique");
                hit = j;
            }
            (label == 0 ? push0 : push1)[*hit] += mass;
        }
    }
    SignedDensity p(n);
    for (std::size_t y = 0; y < n; ++y) {
        const double w = d.quad_weights[y];
        p[y] = (push0[y] / w - m.rho0[y]) / d.epsilon + (m.rho1[y] - push1[y] / w) / d.epsilon;
    }
    return p;
}

/// Kernel whose rows are uniform draws from the probability simplex on each ball.
inline TransitionKernel random_admissible_kernel(const DiscreteDomain& d, Rng& rng) {
    TransitionKernel k{std::vector<double>(d.balls.num_pairs(), 0.0)};
    for (std::size_t i = 0; i < d.size(); ++i) {
        double total = 0.0;
        for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) {
            k.values[t] = rng.exponential();
            total += k.values[t];
        }
        for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) {
            k.values[t] /= total * d.quad_weights[d.balls.members[t]];
        }
    }
    return k;
}

inline KernelPair random_admissible_pair(const DiscreteDomain& d, Rng& rng) {
    KernelPair p;
    p.m0 = random_admissible_kernel(d, rng);
    p.m1 = random_admissible_kernel(d, rng);
    return p;
}

struct SubgradientCheck {
    double worst_violation = std::numeric_limits<double>::infinity();
    std::size_t worst_trial = 0;
    std::size_t trials = 0;
};

/// Minimum over random v of TV(v) - TV(u) - <p, v - u>. Directions mix global
/// draws, small and large local perturbations, affine rescalings of u, and
/// single-coordinate moves. A true subgradient never goes below rounding level.
inline SubgradientCheck check_subgradient(const SignedDensity& p, const ScalarField& u, const ClassMeasures& m,
                                          const DiscreteDomain& d, std::size_t n_trials, std::uint64_t seed = 1) {
    check_field(u, d);
    check_field(p, d, "subgradient");
    Rng rng(seed);
    const double tv_u = eval_tv(u, m, d);
    const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
    const double lo = *lo_it - 1.0;
    const double hi = *hi_it + 1.0;
    SubgradientCheck out;
    out.trials = n_trials;
    ScalarField v(u.size());
    for (std::size_t t = 0; t < n_trials; ++t) {
        switch (t % 4) {
            case 0:
                for (auto& x : v) x = rng.uniform(lo, hi);
                break;
            case 1: {
                const double delta = std::pow(10.0, -3.0 * rng.uniform());
                for (std::size_t i = 0; i < v.size(); ++i) v[i] = u[i] + delta * rng.uniform(-1.0, 1.0);
                break;
            }
            case 2: {
                const double scale = rng.uniform(0.0, 3.0);
                const double shift = rng.uniform(-1.0, 1.0);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * u[i] + shift;
                break;
            }
            default: {
                v = u;
                v[rng.below(v.size())] += rng.uniform(-1.0, 1.0);
                break;
            }
        }
        double inner = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) inner += p[i] * (v[i] - u[i]) * d.quad_weights[i];
        const double viol = eval_tv(v, m, d) - tv_u - inner;
        if (viol < out.worst_violation) {
            out.worst_violation = viol;
            out.worst_trial = t;
        }
    }
    return out;
}

}  // namespace atv
