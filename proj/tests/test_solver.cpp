#include <gtest/gtest.h>

#include <cmath>

#include "atv/solver.hpp"
#include "oracles.hpp"

using namespace atv;

namespace {

// Class 0 on (0, 0.4), class 1 on (0.6, 1), each with mass 1/2.
ClassMeasures two_clusters(const DiscreteDomain& d) {
    std::vector<double> r0(d.size(), 0.0), r1(d.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.point(i)[0];
        if (x < 0.4) r0[i] = 1.0;
        if (x > 0.6) r1[i] = 1.0;
    }
    auto m0 = make_measures(d, r0, std::vector<double>(d.size(), 0.0));
    auto m1 = make_measures(d, std::vector<double>(d.size(), 0.0), r1);
    const double s0 = 0.5 / class_mass(m0, d, 0);
    const double s1 = 0.5 / class_mass(m1, d, 1);
    for (auto& v : r0) v *= s0;
    for (auto& v : r1) v *= s1;
    return make_measures(d, r0, r1);
}

double best_feasible_lower(const SolveReport& r) { return r.primal_obj - r.gap_history.back(); }

}  // namespace

TEST(ProxData, Examples) {
    const auto d = build_point_cloud({{0.0}, {1.0}}, Metric::euclidean, 1.0, {1.0, 1.0});
    const auto m = make_measures(d, {1.0, 0.3}, {0.0, 0.3});
    const auto out = prox_data({0.5, 0.5}, m, d, 0.2);
    EXPECT_DOUBLE_EQ(out[0], 0.3);
    EXPECT_DOUBLE_EQ(out[1], 0.5);  // equal densities: pure clipping
    EXPECT_EQ(prox_data({0.1, 1.7}, m, d, 0.2)[0], 0.0);
    EXPECT_EQ(prox_data({0.1, 1.7}, m, d, 0.2)[1], 1.0);
}

TEST(SimplexProjection, Examples) {
    EXPECT_EQ(project_simplex_row({2.0, 0.0}, {1.0, 1.0}), (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(project_simplex_row({1.0, 1.0}, {1.0, 1.0}), (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(project_simplex_row({0.3}, {2.0}), (std::vector<double>{0.5}));
}

TEST(SimplexProjection, MatchesBisectionAndIsIdempotent) {
    Rng rng(50);
    for (int t = 0; t < 500; ++t) {
        const std::size_t k = 1 + rng.below(12);
        std::vector<double> z(k), w(k);
        for (std::size_t j = 0; j < k; ++j) {
            z[j] = rng.uniform(-3, 3) * (t % 3 == 0 ? 100.0 : 1.0);
            w[j] = rng.uniform(0.01, 2.0);
        }
        const auto p = project_simplex_row(z, w);
        const auto q = oracle::simplex_projection(z, w);
        double mass = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            ASSERT_GE(p[j], 0.0);
            ASSERT_NEAR(p[j], q[j], 1e-9 * (1.0 + std::abs(q[j])));
            mass += p[j] * w[j];
        }
        ASSERT_NEAR(mass, 1.0, 1e-12);
        const auto pp = project_simplex_row(p, w);
        for (std::size_t j = 0; j < k; ++j) ASSERT_NEAR(pp[j], p[j], 1e-12 * (1.0 + std::abs(p[j])));
    }
}

TEST(Coupling, AdjointIdentity) {
    Rng rng(51);
    for (int t = 0; t < 30; ++t) {
        const auto d = t % 2 ? oracle::unit_interval(0.05, 0.12) : build_grid({{0, 1}, {0, 1}}, 0.1, Metric::euclidean, 0.2);
        const auto m = oracle::random_measures(d, rng);
        const double lambda = rng.uniform(0.1, 2.0);
        const Coupling op(m, d, lambda);
        const auto u = oracle::random_field(d.size(), rng);
        const auto psi = random_admissible_pair(d, rng);
        std::vector<double> k0, k1;
        op.forward(u, k0, k1);
        double lhs = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            for (std::size_t s = d.balls.begin(i); s < d.balls.end(i); ++s) {
                const double wj = d.quad_weights[d.balls.members[s]];
                lhs += (k0[s] * psi.m0.values[s] + k1[s] * psi.m1.values[s]) * wj;
            }
        }
        const auto kt = op.adjoint(psi.m0, psi.m1);
        double rhs = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) rhs += u[i] * kt[i];
        ASSERT_NEAR(lhs, rhs, 1e-11 * (1.0 + std::abs(lhs)));
        // The coupling is lambda times the dual value of the pair.
        ASSERT_NEAR(rhs, lambda * dual_eval(psi, u, m, d), 1e-11 * (1.0 + std::abs(rhs)));
    }
}

TEST(DualLowerBound, NeverExceedsPrimal) {
    Rng rng(52);
    const auto d = oracle::unit_interval(0.1, 0.2);
    for (int t = 0; t < 50; ++t) {
        const auto m = oracle::random_measures(d, rng);
        const auto opt = oracle::indicator_minimum(m, d, d.epsilon);
        const auto psi = random_admissible_pair(d, rng);
        ASSERT_LE(dual_lower_bound(psi, m, d, d.epsilon), opt.objective + 1e-12);
    }
}

TEST(Solver, OnlyClassZeroGivesZero) {
    const auto d = oracle::unit_interval(0.05, 0.1);
    auto m = make_measures(d, std::vector<double>(d.size(), 1.0), std::vector<double>(d.size(), 0.0));
    const auto r = solve_pd(m, d, {});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.primal_obj, 0.0, 1e-6);
    for (double v : r.u_star) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Solver, FullOverlapGivesOneHalf) {
    const auto d = oracle::unit_interval(0.05, 0.1);
    auto m = make_measures(d, std::vector<double>(d.size(), 0.5), std::vector<double>(d.size(), 0.5));
    const auto r = solve_pd(m, d, {});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.primal_obj, 0.5, 1e-6);
}

TEST(Solver, TwoClustersSixteenPoints) {
    const auto d = oracle::unit_interval(1.0 / 16, 1.0 / 16);
    const auto m = two_clusters(d);
    const auto bf = oracle::indicator_minimum(m, d, d.epsilon);
    const auto r = solve_pd(m, d, {});
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.gap_history.back(), 1e-6);
    EXPECT_NEAR(r.primal_obj, bf.objective, 1e-6);
    const auto th = best_threshold(r.u_star, m, d, r.lambda);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (m.rho0[i] > 0) {
            EXPECT_FALSE(th.set[i]);
        }
        if (m.rho1[i] > 0) {
            EXPECT_TRUE(th.set[i]);
        }
    }
}

TEST(Solver, TwoClustersTwentyPoints) {
    const auto d = oracle::unit_interval(0.05, 0.05);
    const auto m = two_clusters(d);
    const auto r = solve_pd(m, d, {});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.primal_obj, oracle::indicator_minimum(m, d, d.epsilon).objective, 1e-6);
}

TEST(Solver, RandomInstancesMatchBruteForce) {
    Rng rng(53);
    for (int t = 0; t < 12; ++t) {
        const auto d = t % 2 ? oracle::unit_interval(0.1, 0.2) : build_grid({{0, 1}, {0, 0.75}}, 0.25, Metric::euclidean, 0.3);
        const auto m = oracle::random_measures(d, rng, 0.3);
        SolverConfig cfg;
        cfg.lambda = rng.uniform(0.5, 2.0) * d.epsilon;
        const auto r = solve_pd(m, d, cfg);
        const auto bf = oracle::indicator_minimum(m, d, *cfg.lambda);
        ASSERT_TRUE(r.converged) << t << " gap " << r.gap_history.back();
        ASSERT_NEAR(r.primal_obj, bf.objective, 1e-6) << t;
        ASSERT_LE(best_feasible_lower(r), bf.objective + 1e-12) << t;
        // Layer-cake: some super-level set is at least as good as u*.
        ASSERT_LE(best_threshold(r.u_star, m, d, *cfg.lambda).objective, r.primal_obj + cfg.gap_tol) << t;
    }
}

TEST(Solver, DiagonalStepsBoundThePreconditionedNorm) {
    Rng rng(57);
    for (int t = 0; t < 10; ++t) {
        const auto d = t % 2 ? oracle::unit_interval(0.05, 0.12)
                             : build_point_cloud([&] {
                                   std::vector<std::vector<double>> p(80);
                                   for (auto& x : p) x = {rng.uniform(), rng.uniform()};
                                   return p;
                               }(),
                                                 Metric::euclidean, 0.2, [&] {
                                                     std::vector<double> w(80);
                                                     for (auto& v : w) v = rng.uniform(0.2, 2.0) / 80.0;
                                                     return w;
                                                 }());
        const auto m = oracle::random_measures(d, rng);
        const Coupling op(m, d, d.epsilon);
        const auto st = diagonal_steps(m, d, d.epsilon);
        EXPECT_LE(op.norm_estimate(200, 1, st.tau, st.sigma0, st.sigma1), 1.0 + 1e-9);
    }
}

TEST(Solver, ScalarStepsAlsoConverge) {
    const auto d = oracle::unit_interval(1.0 / 16, 1.0 / 16);
    SolverConfig cfg;
    cfg.preconditioning = Preconditioning::scalar;
    const auto r = solve_pd(two_clusters(d), d, cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.primal_obj, 0.0, 1e-6);
    EXPECT_NEAR(r.tau * r.sigma * r.op_norm * r.op_norm, 0.95 * 0.95, 1e-12);
}

TEST(Solver, IteratesStayFeasible) {
    Rng rng(54);
    const auto d = build_grid({{0, 1}, {0, 1}}, 0.1, Metric::euclidean, 0.2);
    const auto m = oracle::random_measures(d, rng);
    SolverConfig cfg;
    cfg.max_iters = 300;
    cfg.gap_tol = 0.0;
    const auto r = solve_pd(m, d, cfg);
    EXPECT_LE(r.iterations, 300u);
    EXPECT_EQ(r.converged, r.gap_history.back() <= 0.0);
    EXPECT_EQ(r.gap_history.size(), r.check_iters.size());
    EXPECT_EQ(r.check_iters.back(), r.iterations);
    for (double v : r.u_star) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    for (std::size_t k = 1; k < r.gap_history.size(); ++k) EXPECT_LE(r.gap_history[k], r.gap_history[k - 1]);
}

TEST(Solver, DeterministicAcrossRuns) {
    Rng rng(55);
    const auto d = build_grid({{0, 1}, {0, 1}}, 0.1, Metric::euclidean, 0.2);
    const auto m = oracle::random_measures(d, rng);
    SolverConfig cfg;
    cfg.max_iters = 500;
    cfg.seed = 9;
    const auto a = solve_pd(m, d, cfg);
    const auto b = solve_pd(m, d, cfg);
    EXPECT_EQ(a.u_star, b.u_star);
    EXPECT_EQ(a.gap_history, b.gap_history);
    EXPECT_EQ(a.op_norm, b.op_norm);
}

TEST(Solver, RejectsOversizedSteps) {
    const auto d = oracle::unit_interval(0.1, 0.2);
    Rng rng(56);
    const auto m = oracle::random_measures(d, rng);
    SolverConfig cfg;
    cfg.tau = 1e3;
    EXPECT_THROW(solve_pd(m, d, cfg), PreconditionError);  // explicit steps need the scalar rule
    cfg.preconditioning = Preconditioning::scalar;
    cfg.sigma = 1e3;
    EXPECT_THROW(solve_pd(m, d, cfg), PreconditionError);
    cfg = {};
    cfg.check_every = 0;
    EXPECT_THROW(solve_pd(m, d, cfg), PreconditionError);
}
