#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "atv/domain.hpp"
#include "atv/errors.hpp"

namespace atv {

/// Class-conditional densities of the data distribution against the quadrature
/// weights: the class-i mass of point x is rho_i[x] * w[x]. nu holds the
/// reference weights that decide which points count in essential sup/inf.
struct ClassMeasures {
    std::vector<double> rho0;
    std::vector<double> rho1;
    std::vector<double> nu;

    std::size_t size() const { return rho0.size(); }
    const std::vector<double>& rho(int label) const { return label == 0 ? rho0 : rho1; }
};

inline double class_mass(const ClassMeasures& m, const DiscreteDomain& d, int label) {
    const auto& r = m.rho(label);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * d.quad_weights[i];
    return s;
}

inline double total_mass(const ClassMeasures& m, const DiscreteDomain& d) {
    return class_mass(m, d, 0) + class_mass(m, d, 1);
}

/// Wraps given densities; nu defaults to the quadrature weights.
inline ClassMeasures make_measures(const DiscreteDomain& d, std::vector<double> rho0, std::vector<double> rho1,
                                   std::vector<double> nu = {}) {
    if (rho0.size() != d.size() || rho1.size() != d.size()) {
        throw PreconditionError("density length does not match the domain");
    }
    if (nu.empty()) nu = d.quad_weights;
    if (nu.size() != d.size()) throw PreconditionError("nu length does not match the domain");
    return {std::move(rho0), std::move(rho1), std::move(nu)};
}

/// Rescales both densities by a common factor so the total mass is one.
inline void normalize_mass(ClassMeasures& m, const DiscreteDomain& d) {
    const double total = total_mass(m, d);
    if (!(total > 0.0)) throw PreconditionError("measures carry no mass");
    for (auto& v : m.rho0) v /= total;
    for (auto& v : m.rho1) v /= total;
}

namespace detail {

inline std::size_t nearest_point(const DiscreteDomain& d, std::span<const double> x) {
    if (d.is_grid()) {
        std::size_t p = 0;
        for (std::size_t k = 0; k < d.dim; ++k) {
            auto c = static_cast<long>(std::floor((x[k] - d.bounds[k].lo) / *d.spacing));
            c = std::clamp<long>(c, 0, static_cast<long>(d.cells[k]) - 1);
            p = p * d.cells[k] + static_cast<std::size_t>(c);
        }
        return p;
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double di = distance(d.metric, x, d.point(i));
        if (di < best_d) {
            best_d = di;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

/// Empirical class measures from labelled samples. Bandwidth 0 bins each sample
/// to its nearest point; a positive bandwidth spreads it with a Gaussian that is
/// renormalised per sample, so class proportions are preserved exactly.
inline ClassMeasures from_samples(const std::vector<std::vector<double>>& points0,
                                  const std::vector<std::vector<double>>& points1, const DiscreteDomain& d,
                                  double bandwidth = 0.0) {
    const std::size_t total = points0.size() + points1.size();
    if (total == 0) throw PreconditionError("no samples");
    if (!(bandwidth >= 0.0)) throw PreconditionError("bandwidth must be non-negative");
    ClassMeasures m = make_measures(d, std::vector<double>(d.size(), 0.0), std::vector<double>(d.size(), 0.0));
    const double share = 1.0 / static_cast<double>(total);
    std::vector<double> kernel(d.size());

    auto deposit = [&](const std::vector<double>& s, std::vector<double>& rho, int label, std::size_t idx) {
        if (s.size() != d.dim) {
            throw PreconditionError("class-" + std::to_string(label) + " sample " + std::to_string(idx) +
                                    " has the wrong number of coordinates");
        }
        for (std::size_t k = 0; k < d.dim; ++k) {
            if (!(s[k] >= d.bounds[k].lo && s[k] <= d.bounds[k].hi)) {
                throw PreconditionError("class-" + std::to_string(label) + " sample " + std::to_string(idx) +
                                        " lies outside the domain bounding box");
            }
        }
        if (bandwidth > 0.0) {
            double z = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double r = distance(Metric::euclidean, s, d.point(i));
                kernel[i] = std::exp(-0.5 * (r / bandwidth) * (r / bandwidth));
                z += kernel[i] * d.quad_weights[i];
            }
            if (z > 0.0) {
                for (std::size_t i = 0; i < d.size(); ++i) rho[i] += share * kernel[i] / z;
                return;
            }
        }
        const std::size_t p = detail::nearest_point(d, s);
        rho[p] += share / d.quad_weights[p];
    };
    for (std::size_t i = 0; i < points0.size(); ++i) deposit(points0[i], m.rho0, 0, i);
    for (std::size_t i = 0; i < points1.size(); ++i) deposit(points1[i], m.rho1, 1, i);
    return m;
}

struct Violation {
    std::string kind;                  // shape | nonfinite | negative | mass | support
    std::optional<std::size_t> index;  // offending point, when there is one
    std::string message;
};

inline constexpr double kMassTol = 1e-9;

/// Lists every broken structural assumption: non-negative densities, unit total
/// mass, and nu > 0 on the eps-neighbourhood of the data support.
inline std::vector<Violation> validate(const ClassMeasures& m, const DiscreteDomain& d) {
    std::vector<Violation> out;
    const std::size_t n = d.size();
    if (m.rho0.size() != n || m.rho1.size() != n || m.nu.size() != n) {
        out.push_back({"shape", std::nullopt, "density or nu length differs from the domain size"});
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 2; ++c) {
            const double v = m.rho(c)[i];
            if (!std::isfinite(v)) {
                out.push_back({"nonfinite", i, "rho" + std::to_string(c) + " is not finite"});
            } else if (v < 0.0) {
                std::ostringstream msg;
                msg << "rho" << c << " = " << v << " < 0";
                out.push_back({"negative", i, msg.str()});
            }
        }
    }
    const double mass = total_mass(m, d);
    if (!(std::abs(mass - 1.0) <= kMassTol)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "total mass " << mass << " differs from 1";
        out.push_back({"mass", std::nullopt, msg.str()});
    }
    std::vector<bool> flagged(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(m.rho0[i] > 0.0 || m.rho1[i] > 0.0)) continue;
        for (std::size_t j : d.balls[i]) {
            if (!(m.nu[j] > 0.0) && !flagged[j]) {
                flagged[j] = true;
                out.push_back({"support", j, "nu vanishes within eps of the data support (source point " +
                                                 std::to_string(i) + ")"});
            }
        }
    }
    return out;
}

}  // namespace atv
