#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "atv/domain.hpp"
#include "atv/errors.hpp"
#include "atv/measures.hpp"
#include "atv/operators.hpp"

namespace atv {

/// Point j counts for the nu-essential sup/inf over ball i when nu(j) > 0.
/// The centre always counts, which keeps every TV term non-negative even when
/// nu vanishes on a data point (validate() reports that case).
inline bool essential_member(const ClassMeasures& m, std::size_t center, std::size_t j) {
    return j == center || m.nu[j] > 0.0;
}

inline double ball_max(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d, std::size_t i) {
    double v = u[i];
    for (std::size_t j : d.balls[i]) {
        if (essential_member(m, i, j)) v = std::max(v, u[j]);
    }
    return v;
}

inline double ball_min(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d, std::size_t i) {
    double v = u[i];
    for (std::size_t j : d.balls[i]) {
        if (essential_member(m, i, j)) v = std::min(v, u[j]);
    }
    return v;
}

/// Pointwise TV integrand (before summation); exposed for region-restricted sums.
inline std::vector<double> tv_density(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d) {
    check_field(u, d);
    std::vector<double> out(d.size());
    parallel_for(d.size(), [&](std::size_t i) {
        const double up = m.rho0[i] != 0.0 ? (ball_max(u, m, d, i) - u[i]) * m.rho0[i] : 0.0;
        const double down = m.rho1[i] != 0.0 ? (u[i] - ball_min(u, m, d, i)) * m.rho1[i] : 0.0;
        out[i] = (up + down) / d.epsilon;
    });
    return out;
}

/// Adversarial total variation
///   sum_x [max_B(x) u - u(x)]/eps rho0(x) w(x) + [u(x) - min_B(x) u]/eps rho1(x) w(x).
inline double eval_tv(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d) {
    const auto dens = tv_density(u, m, d);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += dens[i] * d.quad_weights[i];
    return s;
}

inline constexpr double kBoxTol = 1e-12;

inline void check_box(const ScalarField& u) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] >= -kBoxTol && u[i] <= 1.0 + kBoxTol)) {
            throw PreconditionError("u[" + std::to_string(i) + "] = " + std::to_string(u[i]) + " lies outside [0, 1]");
        }
    }
}

/// Expected absolute loss E|u(x) - y|, using |u - 0| = u and |u - 1| = 1 - u on the box.
inline double data_term(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d) {
    check_field(u, d);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += (m.rho0[i] * u[i] + m.rho1[i] * (1.0 - u[i])) * d.quad_weights[i];
    return s;
}

/// Regularised risk data_term(u) + lambda * TV(u) for 0 <= u <= 1.
inline double eval_objective(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d, double lambda) {
    check_field(u, d);
    check_box(u);
    return data_term(u, m, d) + lambda * eval_tv(u, m, d);
}

using PointSet = std::vector<bool>;

inline ScalarField indicator(const PointSet& a) {
    ScalarField u(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) u[i] = a[i] ? 1.0 : 0.0;
    return u;
}

/// Exact adversarial 0-1 risk of the set classifier 1_A: class-0 mass that an
/// attacker can push into A plus class-1 mass that can be pushed out of A.
inline double adversarial_risk_set(const PointSet& a, const ClassMeasures& m, const DiscreteDomain& d) {
    if (a.size() != d.size()) throw PreconditionError("set mask length does not match the domain");
    double risk = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        bool hits = false;
        bool leaves = false;
        for (std::size_t j : d.balls[i]) {
            if (!essential_member(m, i, j)) continue;
            hits = hits || a[j];
            leaves = leaves || !a[j];
        }
        if (hits) risk += m.rho0[i] * d.quad_weights[i];
        if (leaves) risk += m.rho1[i] * d.quad_weights[i];
    }
    return risk;
}

enum class CoareaMode { automatic, exact_gaps, midpoint };

struct CoareaResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_error = 0.0;
    bool exact = false;
};

inline constexpr std::size_t kExactGapLimit = 4096;

/// Compares TV(u) with the integral over t of TV(1_{u > t}). Values outside
/// [0, 1] are rescaled affinely first. Exact level-gap summation is used for
/// fields with few distinct values, the midpoint rule otherwise.
inline CoareaResult coarea_check(ScalarField u, const ClassMeasures& m, const DiscreteDomain& d,
                                 std::size_t n_thresholds, CoareaMode mode = CoareaMode::automatic) {
    check_field(u, d);
    const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (lo < 0.0 || hi > 1.0) {
        const double span = hi - lo;
        for (auto& v : u) v = span > 0.0 ? (v - lo) / span : 0.0;
    }
    CoareaResult r;
    r.lhs = eval_tv(u, m, d);
    auto level_tv = [&](double t) {
        PointSet above(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) above[i] = u[i] > t;
        return eval_tv(indicator(above), m, d);
    };
    const std::set<double> levels(u.begin(), u.end());
    r.exact = mode == CoareaMode::exact_gaps || (mode == CoareaMode::automatic && levels.size() <= kExactGapLimit);
    if (r.exact) {
        // 1_{u>t} is constant for t in [v_k, v_{k+1}); outside [min u, max u] it is constant.
        std::vector<double> v(levels.begin(), levels.end());
        for (std::size_t k = 0; k + 1 < v.size(); ++k) r.rhs += (v[k + 1] - v[k]) * level_tv(v[k]);
    } else {
        if (n_thresholds == 0) throw PreconditionError("midpoint coarea needs at least one threshold");
        const double dt = 1.0 / static_cast<double>(n_thresholds);
        for (std::size_t k = 0; k < n_thresholds; ++k) r.rhs += dt * level_tv((static_cast<double>(k) + 0.5) * dt);
    }
    r.abs_error = std::abs(r.lhs - r.rhs);
    return r;
}

}  // namespace atv
