#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "atv/domain.hpp"
#include "atv/duality.hpp"
#include "atv/errors.hpp"
#include "atv/measures.hpp"
#include "atv/operators.hpp"
#include "atv/random.hpp"
#include "atv/tv.hpp"

namespace atv {

/// Step-size rule. diagonal: per-point primal and per-row dual steps from the
/// absolute row and column sums of the coupling (valid without a norm bound).
/// scalar: tau = sigma = 0.95 / L with L from power iteration.
enum class Preconditioning { diagonal, scalar };

inline std::string_view to_string(Preconditioning p) { return p == Preconditioning::diagonal ? "diagonal" : "scalar"; }

inline Preconditioning parse_preconditioning(std::string_view s) {
    if (s == "diagonal") return Preconditioning::diagonal;
    if (s == "scalar") return Preconditioning::scalar;
    throw PreconditionError("unknown preconditioning '" + std::string(s) + "' (expected diagonal or scalar)");
}

struct SolverConfig {
    Preconditioning preconditioning = Preconditioning::diagonal;
    double tau = 0.0;    // scalar mode: primal step; 0 selects 0.95 / L
    double sigma = 0.0;  // scalar mode: dual step; 0 selects 0.95 / L
    std::size_t max_iters = 50000;
    double gap_tol = 1e-6;
    std::size_t check_every = 50;
    std::optional<double> lambda;  // TV weight, defaults to epsilon
    std::uint64_t seed = 0;
    std::size_t power_iters = 50;
};

struct SolveReport {
    ScalarField u_star;
    double primal_obj = 0.0;
    double dual_certificate = 0.0;
    std::vector<double> gap_history;
    std::vector<std::size_t> check_iters;
    std::size_t iterations = 0;
    bool converged = false;
    double lambda = 0.0;
    std::string preconditioning;
    double tau = 0.0;      // largest primal step
    double sigma = 0.0;    // largest dual step
    double op_norm = 0.0;  // norm of the coupling, step-scaled in diagonal mode
    double dirac_fraction = 0.0;  // share of massive dual rows that ended near a vertex
};

/// prox of tau * <(rho0 - rho1) w, u> plus the box indicator of [0, 1].
inline ScalarField prox_data(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d, double tau) {
    check_field(u, d);
    ScalarField out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = std::clamp(u[i] - tau * (m.rho0[i] - m.rho1[i]) * d.quad_weights[i], 0.0, 1.0);
    }
    return out;
}

/// Same with a primal step per point.
inline ScalarField prox_data(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d,
                             const std::vector<double>& tau) {
    check_field(u, d);
    check_field(tau, d, "step vector");
    ScalarField out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = std::clamp(u[i] - tau[i] * (m.rho0[i] - m.rho1[i]) * d.quad_weights[i], 0.0, 1.0);
    }
    return out;
}

/// Projection, in the inner product sum_j w_j a_j b_j, onto
/// {psi >= 0, sum_j w_j psi_j = 1}. The solution is psi_j = max(z_j - theta, 0);
/// theta is found by scanning the entries in decreasing order.
inline void project_simplex_row(std::span<double> row, std::span<const double> weights) {
    const std::size_t k = row.size();
    if (k == 0) throw PreconditionError("cannot project an empty row");
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return row[a] > row[b] || (row[a] == row[b] && a < b);
    });
    double wsum = 0.0;
    double wz = 0.0;
    double theta = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t j = order[r];
        wsum += weights[j];
        wz += weights[j] * row[j];
        const double candidate = (wz - 1.0) / wsum;
        if (r == 0 || row[j] > candidate) theta = candidate;
        else break;
    }
    for (std::size_t j = 0; j < k; ++j) row[j] = std::max(row[j] - theta, 0.0);
}

inline std::vector<double> project_simplex_row(std::vector<double> row, const std::vector<double>& weights) {
    if (row.size() != weights.size()) throw PreconditionError("row and weights differ in length");
    project_simplex_row(std::span<double>(row), std::span<const double>(weights));
    return row;
}

/// Bilinear coupling lambda * sum grad[u] [Psi; rho] w w of the saddle problem
///   min_{0<=u<=1} max_{Psi} data(u) + coupling(u, Psi).
/// Primal space carries the Euclidean product, dual rows the w-weighted one.
class Coupling {
  public:
    Coupling(const ClassMeasures& m, const DiscreteDomain& d, double lambda) : m_(m), d_(d), lambda_(lambda) {}

    /// K u: w-Riesz representer of Psi -> coupling(u, Psi), one value per slot and class.
    void forward(const ScalarField& u, std::vector<double>& k0, std::vector<double>& k1) const {
        const PairField g = nonlocal_gradient(u, d_);
        k0.resize(g.values.size());
        k1.resize(g.values.size());
        for (std::size_t i = 0; i < d_.size(); ++i) {
            const double a0 = lambda_ * m_.rho0[i] * d_.quad_weights[i];
            const double a1 = lambda_ * m_.rho1[i] * d_.quad_weights[i];
            for (std::size_t s = d_.balls.begin(i); s < d_.balls.end(i); ++s) {
                k0[s] = a0 * g.values[s];
                k1[s] = -a1 * g.values[s];
            }
        }
    }

    /// K^T Psi = gradient in u of coupling(u, Psi) = -lambda div[Psi; rho] w.
    ScalarField adjoint(const TransitionKernel& psi0, const TransitionKernel& psi1) const {
        SignedDensity div = nonlocal_divergence_l1(pairing(psi0, psi1, m_, d_), d_);
        for (std::size_t y = 0; y < div.size(); ++y) div[y] *= -lambda_ * d_.quad_weights[y];
        return div;
    }

    /// Largest singular value of S^{1/2} K T^{1/2} by power iteration, where T and
    /// S are the diagonal primal and per-row dual steps (empty = identity).
    double norm_estimate(std::size_t iters, std::uint64_t seed, const std::vector<double>& tau = {},
                         const std::vector<double>& sigma0 = {}, const std::vector<double>& sigma1 = {}) const {
        Rng rng(seed);
        ScalarField u(d_.size());
        for (auto& v : u) v = rng.uniform(-1.0, 1.0);
        std::vector<double> k0, k1;
        double estimate = 0.0;
        for (std::size_t it = 0; it < std::max<std::size_t>(iters, 1); ++it) {
            const double nu = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
            if (nu == 0.0) return 0.0;
            for (auto& v : u) v /= nu;
            ScalarField x = u;
            if (!tau.empty()) {
                for (std::size_t i = 0; i < x.size(); ++i) x[i] *= std::sqrt(tau[i]);
            }
            forward(x, k0, k1);
            if (!sigma0.empty()) {
                for (std::size_t i = 0; i < d_.size(); ++i) {
                    for (std::size_t s = d_.balls.begin(i); s < d_.balls.end(i); ++s) {
                        k0[s] *= sigma0[i];
                        k1[s] *= sigma1[i];
                    }
                }
            }
            u = adjoint(TransitionKernel{k0}, TransitionKernel{k1});
            if (!tau.empty()) {
                for (std::size_t i = 0; i < u.size(); ++i) u[i] *= std::sqrt(tau[i]);
            }
            estimate = std::sqrt(std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0)));
        }
        return estimate;
    }

  private:
    const ClassMeasures& m_;
    const DiscreteDomain& d_;
    double lambda_;
};

/// min over the box of data(u) + coupling(u, Psi): a lower bound on the optimal
/// value for every admissible pair Psi.
inline double dual_lower_bound(const KernelPair& psi, const ClassMeasures& m, const DiscreteDomain& d,
                               double lambda) {
    const ScalarField kt = Coupling(m, d, lambda).adjoint(psi.m0, psi.m1);
    double bound = class_mass(m, d, 1);
    for (std::size_t y = 0; y < d.size(); ++y) {
        bound += std::min(0.0, (m.rho0[y] - m.rho1[y]) * d.quad_weights[y] + kt[y]);
    }
    return bound;
}

struct ThresholdResult {
    double threshold = 0.0;
    double objective = 0.0;
    PointSet set;
};

/// Best super-level set {u > t} of u for the regularised objective.
inline ThresholdResult best_threshold(const ScalarField& u, const ClassMeasures& m, const DiscreteDomain& d,
                                      double lambda) {
    std::vector<double> levels(u.begin(), u.end());
    levels.push_back(-1.0);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    ThresholdResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (double t : levels) {
        PointSet s(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) s[i] = u[i] > t;
        const double obj = eval_objective(indicator(s), m, d, lambda);
        if (obj < best.objective) {
            best = {std::clamp(t, 0.0, 1.0), obj, std::move(s)};
        }
    }
    return best;
}

/// Per-point primal steps and per-row dual steps (one per class and point).
struct StepSizes {
    std::vector<double> tau;
    std::vector<double> sigma0;
    std::vector<double> sigma1;
};

/// Diagonal preconditioning with alpha = 1 in coordinates Psi(i,j) sqrt(w_j),
/// where the dual inner product is Euclidean. A slot (i,j), j != i, couples u_i
/// and u_j with weight c(i) sqrt(w_j), c = lambda rho w / eps. The dual step is
/// the reciprocal of the largest row sum in its ball, so it stays constant along
/// a row and the weighted simplex projection remains the correct prox.
inline StepSizes diagonal_steps(const ClassMeasures& m, const DiscreteDomain& d, double lambda) {
    const std::size_t n = d.size();
    StepSizes st{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0), std::vector<double>(n, 1.0)};
    for (std::size_t i = 0; i < n; ++i) {
        const double c0 = lambda * m.rho0[i] * d.quad_weights[i] / d.epsilon;
        const double c1 = lambda * m.rho1[i] * d.quad_weights[i] / d.epsilon;
        double widest = 0.0;
        for (std::size_t s = d.balls.begin(i); s < d.balls.end(i); ++s) {
            const std::size_t j = d.balls.members[s];
            if (j == i) continue;
            const double root = std::sqrt(d.quad_weights[j]);
            widest = std::max(widest, root);
            st.tau[i] += (c0 + c1) * root;
            st.tau[j] += (c0 + c1) * root;
        }
        if (widest > 0.0 && c0 > 0.0) st.sigma0[i] = 1.0 / (2.0 * c0 * widest);
        if (widest > 0.0 && c1 > 0.0) st.sigma1[i] = 1.0 / (2.0 * c1 * widest);
    }
    // Points untouched by the coupling only see the linear data term.
    for (auto& t : st.tau) t = t > 0.0 ? 1.0 / t : 1.0;
    return st;
}

namespace detail {

inline void project_rows(TransitionKernel& k, const DiscreteDomain& d) {
    parallel_for(d.size(), [&](std::size_t i) {
        const std::size_t b = d.balls.begin(i);
        const std::size_t len = d.balls.end(i) - b;
        std::vector<double> w(len);
        for (std::size_t t = 0; t < len; ++t) w[t] = d.quad_weights[d.balls.members[b + t]];
        project_simplex_row(std::span<double>(k.values.data() + b, len), w);
    }, 64);
}

inline double vertex_share(const KernelPair& psi, const ClassMeasures& m, const DiscreteDomain& d) {
    std::size_t rows = 0;
    std::size_t vertices = 0;
    for (int label = 0; label < 2; ++label) {
        const auto& k = label == 0 ? psi.m0 : psi.m1;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (m.rho(label)[i] == 0.0) continue;
            ++rows;
            double top = 0.0;
            for (std::size_t t = d.balls.begin(i); t < d.balls.end(i); ++t) {
                top = std::max(top, k.values[t] * d.quad_weights[d.balls.members[t]]);
            }
            if (top >= 1.0 - 1e-6) ++vertices;
        }
    }
    return rows ? static_cast<double>(vertices) / static_cast<double>(rows) : 1.0;
}

}  // namespace detail

/// Primal-dual iteration for min_{0<=u<=1} E|u - y| + lambda TV(u):
///   Psi+ = P(Psi + sigma K u),  Psibar = 2 Psi+ - Psi,  u+ = prox_data(u - tau K^T Psibar).
/// Every check_every iterations the gap is certified against the best of three
/// lower bounds: the current dual iterate, the maximising kernels at u, and the
/// best bound seen so far. The primal side is the better of u and its best
/// super-level set, which is feasible by the layer-cake argument.
inline SolveReport solve_pd(const ClassMeasures& m, const DiscreteDomain& d, const SolverConfig& cfg) {
    if (m.size() != d.size()) throw PreconditionError("measures do not match the domain");
    if (cfg.check_every == 0) throw PreconditionError("check_every must be positive");
    if (!(cfg.gap_tol >= 0.0)) throw PreconditionError("gap_tol must be non-negative");
    SolveReport rep;
    rep.lambda = cfg.lambda.value_or(d.epsilon);
    if (!(rep.lambda >= 0.0)) throw PreconditionError("lambda must be non-negative");
    const Coupling op(m, d, rep.lambda);
    rep.preconditioning = std::string(to_string(cfg.preconditioning));
    StepSizes steps;
    if (cfg.preconditioning == Preconditioning::diagonal) {
        if (cfg.tau > 0.0 || cfg.sigma > 0.0) throw PreconditionError("explicit tau/sigma need scalar preconditioning");
        steps = diagonal_steps(m, d, rep.lambda);
        rep.op_norm = op.norm_estimate(cfg.power_iters, cfg.seed, steps.tau, steps.sigma0, steps.sigma1);
        rep.tau = *std::max_element(steps.tau.begin(), steps.tau.end());
        rep.sigma = std::max(*std::max_element(steps.sigma0.begin(), steps.sigma0.end()),
                             *std::max_element(steps.sigma1.begin(), steps.sigma1.end()));
    } else {
        rep.op_norm = op.norm_estimate(cfg.power_iters, cfg.seed);
        const double fallback = rep.op_norm > 0.0 ? 0.95 / rep.op_norm : 1.0;
        rep.tau = cfg.tau > 0.0 ? cfg.tau : fallback;
        rep.sigma = cfg.sigma > 0.0 ? cfg.sigma : fallback;
        if (rep.tau * rep.sigma * rep.op_norm * rep.op_norm >= 1.0) {
            throw PreconditionError("step sizes violate tau * sigma * L^2 < 1 (L = " + std::to_string(rep.op_norm) +
                                    ")");
        }
        steps = {std::vector<double>(d.size(), rep.tau), std::vector<double>(d.size(), rep.sigma),
                 std::vector<double>(d.size(), rep.sigma)};
    }

    ScalarField u(d.size(), 0.5);
    KernelPair psi{uniform_kernel(d), uniform_kernel(d)};
    KernelPair psi_prev = psi;
    std::vector<double> k0, k1;
    double best_lower = -std::numeric_limits<double>::infinity();
    double best_primal = std::numeric_limits<double>::infinity();
    ScalarField best_u = u;

    auto certify = [&](std::size_t iter) {
        const double primal = eval_objective(u, m, d, rep.lambda);
        if (primal < best_primal) {
            best_primal = primal;
            best_u = u;
        }
        const ThresholdResult cut = best_threshold(u, m, d, rep.lambda);
        if (cut.objective < best_primal) {
            best_primal = cut.objective;
            best_u = indicator(cut.set);
        }
        best_lower = std::max({best_lower, dual_lower_bound(psi, m, d, rep.lambda),
                               dual_lower_bound(maximizing_kernels(u, m, d), m, d, rep.lambda)});
        rep.gap_history.push_back(std::max(0.0, best_primal - best_lower));
        rep.check_iters.push_back(iter);
        return rep.gap_history.back() <= cfg.gap_tol;
    };

    bool done = certify(0);
    std::size_t it = 0;
    while (!done && it < cfg.max_iters) {
        ++it;
        psi_prev = psi;
        op.forward(u, k0, k1);
        for (std::size_t i = 0; i < d.size(); ++i) {
            for (std::size_t s = d.balls.begin(i); s < d.balls.end(i); ++s) {
                psi.m0.values[s] += steps.sigma0[i] * k0[s];
                psi.m1.values[s] += steps.sigma1[i] * k1[s];
            }
        }
        detail::project_rows(psi.m0, d);
        detail::project_rows(psi.m1, d);
        TransitionKernel bar0{psi.m0.values};
        TransitionKernel bar1{psi.m1.values};
        for (std::size_t s = 0; s < k0.size(); ++s) {
            bar0.values[s] = 2.0 * psi.m0.values[s] - psi_prev.m0.values[s];
            bar1.values[s] = 2.0 * psi.m1.values[s] - psi_prev.m1.values[s];
        }
        const ScalarField kt = op.adjoint(bar0, bar1);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= steps.tau[i] * kt[i];
        u = prox_data(u, m, d, steps.tau);
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!std::isfinite(u[i])) {
                throw NumericalError("non-finite primal iterate at iteration " + std::to_string(it) + ", point " +
                                     std::to_string(i));
            }
        }
        if (it % cfg.check_every == 0 || it == cfg.max_iters) done = certify(it);
    }
    rep.iterations = it;
    rep.converged = done;
    rep.u_star = best_u;
    rep.primal_obj = best_primal;
    rep.dual_certificate = best_lower;
    rep.dirac_fraction = detail::vertex_share(psi, m, d);
    return rep;
}

}  // namespace atv
