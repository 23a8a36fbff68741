#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "atv/domain.hpp"
#include "atv/errors.hpp"
#include "atv/measures.hpp"
#include "atv/parallel.hpp"

namespace atv {

/// One real value per point.
using ScalarField = std::vector<double>;

/// Signed measure stored as a density against the quadrature weights.
using SignedDensity = std::vector<double>;

/// Values f(i, j) on the ball pairs of a domain, aligned with BallIndex slots.
struct PairField {
    std::vector<double> values;
};

/// Ball-supported transition kernel in quadrature-density form: row i is the
/// probability measure m_i({j}) = values[slot(i,j)] * w[j]. A Dirac at j is
/// stored as 1 / w[j].
struct TransitionKernel {
    std::vector<double> values;
};

inline void check_field(const ScalarField& u, const DiscreteDomain& d, const char* what = "field") {
    if (u.size() != d.size()) throw PreconditionError(std::string(what) + " length does not match the domain");
}

inline PairField nonlocal_gradient(const ScalarField& u, const DiscreteDomain& d) {
    check_field(u, d);
    PairField g{std::vector<double>(d.balls.num_pairs())};
    const double inv_eps = 1.0 / d.epsilon;
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t s = d.balls.begin(i); s < d.balls.end(i); ++s) {
            g.values[s] = (u[d.balls.members[s]] - u[i]) * inv_eps;
        }
    }
    return g;
}

/// div(y) = sum_{x in B(y)} [f(y,x) - f(x,y)] / eps * w(x).
inline SignedDensity nonlocal_divergence_l1(const PairField& f, const DiscreteDomain& d) {
    if (f.values.size() != d.balls.num_pairs()) throw PreconditionError("pair field does not match the ball index");
    SignedDensity div(d.size(), 0.0);
    const double inv_eps = 1.0 / d.epsilon;
    parallel_for(d.size(), [&](std::size_t y) {
        double acc = 0.0;
        for (std::size_t s = d.balls.begin(y); s < d.balls.end(y); ++s) {
            acc += (f.values[s] - f.values[d.balls.mirror[s]]) * d.quad_weights[d.balls.members[s]];
        }
        div[y] = acc * inv_eps;
    });
    return div;
}

/// Total mass of row i, sum_j Psi(i,j) w(j).
inline double row_mass(const TransitionKernel& k, const DiscreteDomain& d, std::size_t i) {
    double s = 0.0;
    for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) s += k.values[t] * d.quad_weights[d.balls.members[t]];
    return s;
}

/// Largest deviation from the kernel constraints (row mass 1, entries >= 0).
inline double kernel_violation(const TransitionKernel& k, const DiscreteDomain& d) {
    if (k.values.size() != d.balls.num_pairs()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        worst = std::max(worst, std::abs(row_mass(k, d, i) - 1.0));
        for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) {
            if (!std::isfinite(k.values[t])) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, -k.values[t]);
        }
    }
    return worst;
}

inline constexpr double kKernelTol = 1e-12;

inline bool is_valid_kernel(const TransitionKernel& k, const DiscreteDomain& d, double tol = kKernelTol) {
    return kernel_violation(k, d) <= tol;
}

/// Kernel whose row i is a Dirac at targets[i] (which must lie in ball i).
inline TransitionKernel dirac_kernel(const DiscreteDomain& d, const std::vector<std::size_t>& targets) {
    if (targets.size() != d.size()) throw PreconditionError("one Dirac target per point required");
    TransitionKernel k{std::vector<double>(d.balls.num_pairs(), 0.0)};
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto s = d.balls.slot(i, targets[i]);
        if (!s) throw PreconditionError("Dirac target of row " + std::to_string(i) + " lies outside its ball");
        k.values[*s] = 1.0 / d.quad_weights[targets[i]];
    }
    return k;
}

inline TransitionKernel self_dirac_kernel(const DiscreteDomain& d) {
    std::vector<std::size_t> self(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) self[i] = i;
    return dirac_kernel(d, self);
}

/// Uniform probability over the ball members of each row.
inline TransitionKernel uniform_kernel(const DiscreteDomain& d) {
    TransitionKernel k{std::vector<double>(d.balls.num_pairs(), 0.0)};
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double count = static_cast<double>(d.balls.end(i) - d.balls.begin(i));
        for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) {
            k.values[t] = 1.0 / (count * d.quad_weights[d.balls.members[t]]);
        }
    }
    return k;
}

/// Weighted divergence of a random walk, in the measure form
///   d(y) w(y) = [ m_y(Omega) rho(y) w(y) - sum_x m_x({y}) rho(x) w(x) ] / eps.
/// Computed by scattering the outflow of each row, independently of
/// nonlocal_divergence_l1.
inline SignedDensity kernel_divergence(const TransitionKernel& k, const std::vector<double>& rho,
                                       const DiscreteDomain& d) {
    if (k.values.size() != d.balls.num_pairs()) throw PreconditionError("kernel does not match the ball index");
    check_field(rho, d, "density");
    const std::size_t n = d.size();
    std::vector<double> stay(n, 0.0);
    std::vector<double> inflow(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        const double mass_x = rho[x] * d.quad_weights[x];
        if (mass_x == 0.0) continue;
        stay[x] = row_mass(k, d, x) * mass_x;
        for (std::size_t t = d.balls.begin(x); t < d.balls.end(x); ++t) {
            const std::size_t y = d.balls.members[t];
            inflow[y] += k.values[t] * d.quad_weights[y] * mass_x;
        }
    }
    SignedDensity div(n);
    for (std::size_t y = 0; y < n; ++y) div[y] = (stay[y] - inflow[y]) / (d.epsilon * d.quad_weights[y]);
    return div;
}

/// Antisymmetric pairing [Psi; rho](i,j) = Psi0(i,j) rho0(i) - Psi1(i,j) rho1(i).
inline PairField pairing(const TransitionKernel& k0, const TransitionKernel& k1, const ClassMeasures& m,
                         const DiscreteDomain& d) {
    if (k0.values.size() != d.balls.num_pairs() || k1.values.size() != d.balls.num_pairs()) {
        throw PreconditionError("kernel does not match the ball index");
    }
    PairField f{std::vector<double>(d.balls.num_pairs())};
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) {
            f.values[t] = k0.values[t] * m.rho0[i] - k1.values[t] * m.rho1[i];
        }
    }
    return f;
}

/// sum_i sum_j grad[u](i,j) Psi(i,j) w(j) rho(i) w(i): the left side of the
/// integration-by-parts identity for one class.
inline double gradient_pairing(const ScalarField& u, const TransitionKernel& k, const std::vector<double>& rho,
                               const DiscreteDomain& d) {
    const PairField g = nonlocal_gradient(u, d);
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double row = 0.0;
        for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) {
            row += g.values[t] * k.values[t] * d.quad_weights[d.balls.members[t]];
        }
        total += row * rho[i] * d.quad_weights[i];
    }
    return total;
}

/// -sum_y u(y) div(y) w(y).
inline double negative_divergence_pairing(const ScalarField& u, const SignedDensity& div, const DiscreteDomain& d) {
    double s = 0.0;
    for (std::size_t y = 0; y < d.size(); ++y) s += u[y] * div[y] * d.quad_weights[y];
    return -s;
}

inline double total_signed_mass(const SignedDensity& g, const DiscreteDomain& d) {
    double s = 0.0;
    for (std::size_t y = 0; y < d.size(); ++y) s += g[y] * d.quad_weights[y];
    return s;
}

/// Random-walk view of a kernel: m_x(A) for a point set A given as flags.
inline double walk_measure(const TransitionKernel& k, const DiscreteDomain& d, std::size_t x,
                           const std::vector<bool>& set) {
    double s = 0.0;
    for (std::size_t t = d.balls.begin(x); t < d.balls.end(x); ++t) {
        const std::size_t j = d.balls.members[t];
        if (set[j]) s += k.values[t] * d.quad_weights[j];
    }
    return s;
}

/// Weighted divergence evaluated as a set function,
///   div(A) = [ int_A m_x(Omega) d rho(x) - int m_x(A) d rho(x) ] / eps.
inline double divergence_of_set(const TransitionKernel& k, const std::vector<double>& rho, const DiscreteDomain& d,
                                const std::vector<bool>& set) {
    const std::vector<bool> everything(d.size(), true);
    double inside = 0.0;
    double moved = 0.0;
    for (std::size_t x = 0; x < d.size(); ++x) {
        const double mass_x = rho[x] * d.quad_weights[x];
        if (set[x]) inside += walk_measure(k, d, x, everything) * mass_x;
        moved += walk_measure(k, d, x, set) * mass_x;
    }
    return (inside - moved) / d.epsilon;
}

}  // namespace atv
