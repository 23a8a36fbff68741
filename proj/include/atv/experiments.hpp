#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "atv/domain.hpp"
#include "atv/errors.hpp"
#include "atv/expr.hpp"
#include "atv/measures.hpp"
#include "atv/operators.hpp"
#include "atv/tv.hpp"

namespace atv {

/// Second moment of the unit ball, int_{B_1(0)} z_1^2 dz = 2 pi^{N/2} / (N (N+2) Gamma(N/2)).
inline double cn_constant(int dim) {
    if (dim < 1) throw PreconditionError("dimension must be at least 1");
    const double n = static_cast<double>(dim);
    return (1.0 / (n + 2.0)) * (2.0 * std::pow(std::numbers::pi, n / 2.0)) / (std::tgamma(n / 2.0) * n);
}

struct SweepRow {
    double epsilon = 0.0;
    double h = 0.0;
    double observed = 0.0;
    double reference = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
};

inline SweepRow make_row(double epsilon, double h, double observed, double reference) {
    const double abs_err = std::abs(observed - reference);
    return {epsilon, h, observed, reference, abs_err, reference != 0.0 ? abs_err / std::abs(reference) : abs_err};
}

struct SweepResult {
    std::vector<SweepRow> rows;
    std::map<std::string, std::string> metadata;
};

/// Scaling of the nonlocal operator before comparing with div(rho grad u).
enum class Normalization {
    moment,    // discrete ball moment sum_x (x_1 - y_1)^2 w(x) / eps^{N+2} at each point
    analytic,  // continuum constant C_N
};

inline std::string_view to_string(Normalization n) { return n == Normalization::moment ? "moment" : "analytic"; }

inline Normalization parse_normalization(std::string_view s) {
    if (s == "moment") return Normalization::moment;
    if (s == "analytic") return Normalization::analytic;
    throw PreconditionError("unknown normalization '" + std::string(s) + "' (expected moment or analytic)");
}

/// div_eps[rho grad_eps u] / (C eps^N) at every point of a domain; only the
/// interior values approximate div(rho grad u).
inline std::vector<double> nonlocal_weighted_laplacian(const ScalarField& u, const std::vector<double>& rho,
                                                       const DiscreteDomain& d, Normalization norm) {
    PairField f = nonlocal_gradient(u, d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t s = d.balls.begin(i); s < d.balls.end(i); ++s) f.values[s] *= rho[i];
    }
    std::vector<double> out = nonlocal_divergence_l1(f, d);
    const double eps_n = std::pow(d.epsilon, static_cast<double>(d.dim));
    const double analytic = cn_constant(static_cast<int>(d.dim));
    for (std::size_t y = 0; y < d.size(); ++y) {
        double c = analytic;
        if (norm == Normalization::moment) {
            double mom = 0.0;
            for (std::size_t x : d.balls[y]) {
                const double z = d.point(x)[0] - d.point(y)[0];
                mom += z * z * d.quad_weights[x];
            }
            c = mom / std::pow(d.epsilon, static_cast<double>(d.dim) + 2.0);
        }
        out[y] /= c * eps_n;
    }
    return out;
}

struct ConsistencyConfig {
    std::size_t dim = 1;
    std::vector<Interval> bounds;  // defaults to the unit cube
    std::string u = "x^2";
    std::string rho = "1";
    std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
    double h_ratio = 0.1;  // h = h_ratio * eps
    Normalization normalization = Normalization::moment;
};

/// Sup-norm error of the rescaled nonlocal operator against div(rho grad u) on
/// the inner parallel set, one row per epsilon. observed/reference are taken
/// at the point of largest error.
inline SweepResult consistency_study(const ConsistencyConfig& cfg) {
    if (cfg.dim < 1 || cfg.dim > 3) throw PreconditionError("consistency sweeps support dimensions 1 to 3");
    const Expression u = Expression::parse(cfg.u);
    const Expression rho = Expression::parse(cfg.rho);
    if (u.arity() > cfg.dim || rho.arity() > cfg.dim) throw PreconditionError("expression uses too many coordinates");
    std::vector<Interval> box = cfg.bounds.empty() ? std::vector<Interval>(cfg.dim, Interval{0.0, 1.0}) : cfg.bounds;
    if (box.size() != cfg.dim) throw PreconditionError("bounds do not match the dimension");

    std::vector<Expression> du, drho, ddu;
    for (std::size_t k = 0; k < cfg.dim; ++k) {
        du.push_back(u.derivative(k));
        drho.push_back(rho.derivative(k));
        ddu.push_back(du.back().derivative(k));
    }

    SweepResult out;
    out.metadata = {{"study", "consistency"},
                    {"u", cfg.u},
                    {"rho", cfg.rho},
                    {"dim", std::to_string(cfg.dim)},
                    {"normalization", std::string(to_string(cfg.normalization))}};
    for (double eps : cfg.epsilons) {
        const double h = cfg.h_ratio * eps;
        const DiscreteDomain d = build_grid(box, h, Metric::euclidean, eps);
        const InteriorMask mask = interior_mask(d);
        ScalarField uv(d.size()), rv(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            uv[i] = u(d.point(i));
            rv[i] = rho(d.point(i));
            if (!(rv[i] > 0.0)) throw PreconditionError("rho must be positive on the domain");
        }
        const auto approx = nonlocal_weighted_laplacian(uv, rv, d, cfg.normalization);
        bool any = false;
        SweepRow worst;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!mask[i]) continue;
            const auto x = d.point(i);
            double ref = 0.0;
            for (std::size_t k = 0; k < cfg.dim; ++k) ref += rv[i] * ddu[k](x) + drho[k](x) * du[k](x);
            const SweepRow row = make_row(eps, h, approx[i], ref);
            if (!any || row.abs_err > worst.abs_err) worst = row;
            any = true;
        }
        if (!any) throw PreconditionError("eps too large for domain: the inner parallel set is empty");
        out.rows.push_back(worst);
    }
    return out;
}

enum class Region { full, interior };

inline std::string_view to_string(Region r) { return r == Region::full ? "full" : "interior"; }

inline Region parse_region(std::string_view s) {
    if (s == "full") return Region::full;
    if (s == "interior") return Region::interior;
    throw PreconditionError("unknown region '" + std::string(s) + "' (expected full or interior)");
}

struct GammaConfig {
    Interval bounds{0.0, 1.0};
    std::string u = "x^2";
    std::string rho0 = "1";
    std::string rho1 = "1";
    std::vector<double> epsilons{0.2, 0.1, 0.05};
    double h_ratio = 0.1;
    Region region = Region::interior;
};

namespace detail {

/// Composite 5-point Gauss-Legendre rule.
template <typename F>
double gauss_legendre(F&& f, double a, double b, std::size_t panels = 2000) {
    static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                                0.9061798459386640};
    static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                  0.2369268850561891, 0.2369268850561891};
    const double step = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * step;
        double s = 0.0;
        for (std::size_t q = 0; q < node.size(); ++q) s += weight[q] * f(mid + 0.5 * step * node[q]);
        total += 0.5 * step * s;
    }
    return total;
}

}  // namespace detail

/// TV_eps of a strictly monotone 1D field against the local limit
/// int (rho0 + rho1) |u'| dx, both with densities normalised to unit total mass
/// on the grid. Region::interior restricts both sides to (lo + eps, hi - eps).
inline SweepResult gamma_limit_study(const GammaConfig& cfg) {
    const Expression u = Expression::parse(cfg.u);
    const Expression r0 = Expression::parse(cfg.rho0);
    const Expression r1 = Expression::parse(cfg.rho1);
    if (u.arity() > 1 || r0.arity() > 1 || r1.arity() > 1) throw PreconditionError("gamma sweeps are one-dimensional");
    const Expression du = u.derivative(0);
    const double lo = cfg.bounds.lo;
    const double hi = cfg.bounds.hi;

    // Constant fields are trivially monotone and have zero TV.
    const bool flat = u.is_constant();
    if (!flat) {
        int sign = 0;
        const std::size_t probes = 4096;
        for (std::size_t k = 0; k <= probes; ++k) {
            const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(probes);
            const double g = du(x);
            const int s = g > 0.0 ? 1 : (g < 0.0 ? -1 : 0);
            if (s != 0 && sign != 0 && s != sign) throw PreconditionError("u must be monotone on the interval");
            if (s != 0) sign = s;
        }
        if (sign == 0) throw PreconditionError("u must be strictly monotone on the interval");
    }

    SweepResult out;
    out.metadata = {{"study", "gamma"},      {"u", cfg.u},
                    {"rho0", cfg.rho0},      {"rho1", cfg.rho1},
                    {"region", std::string(to_string(cfg.region))}};
    for (double eps : cfg.epsilons) {
        const double h = cfg.h_ratio * eps;
        const DiscreteDomain d = build_grid({cfg.bounds}, h, Metric::euclidean, eps);
        ScalarField uv(d.size());
        std::vector<double> p0(d.size()), p1(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double x = d.point(i)[0];
            uv[i] = u(x);
            p0[i] = r0(x);
            p1[i] = r1(x);
        }
        if (!flat) {
            for (std::size_t i = 1; i < uv.size(); ++i) {
                if ((uv[i] - uv[i - 1]) * (uv.back() - uv.front()) <= 0.0) {
                    throw PreconditionError("u is not strictly monotone on the grid");
                }
            }
        }
        ClassMeasures m = make_measures(d, p0, p1);
        const double mass = total_mass(m, d);
        normalize_mass(m, d);
        const double scale = 1.0 / mass;

        const auto dens = tv_density(uv, m, d);
        double observed = 0.0;
        double a = lo;
        double b = hi;
        if (cfg.region == Region::interior) {
            const InteriorMask mask = interior_mask(d);
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (mask[i]) observed += dens[i] * d.quad_weights[i];
            }
            a = lo + eps;
            b = hi - eps;
            if (!(b > a)) throw PreconditionError("eps too large for domain: the inner parallel set is empty");
        } else {
            for (std::size_t i = 0; i < d.size(); ++i) observed += dens[i] * d.quad_weights[i];
        }
        const double reference =
            detail::gauss_legendre([&](double x) { return scale * (r0(x) + r1(x)) * std::abs(du(x)); }, a, b);
        out.rows.push_back(make_row(eps, h, observed, reference));
    }
    return out;
}

}  // namespace atv
