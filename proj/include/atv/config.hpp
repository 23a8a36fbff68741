#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "atv/domain.hpp"
#include "atv/errors.hpp"
#include "atv/experiments.hpp"
#include "atv/expr.hpp"
#include "atv/measures.hpp"
#include "atv/report.hpp"
#include "atv/solver.hpp"

namespace atv::config {

// Single JSON document with optional sections {domain, measures, solver, sweep}.
// Relative file paths resolve against the directory of the config file.

namespace detail {

inline void only_keys(const Json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw PreconditionError(std::string("config section '") + section + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) throw PreconditionError(std::string("unknown key '") + key + "' in section '" + section + "'");
    }
}

inline std::string resolve(const std::string& path, const std::filesystem::path& base) {
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (base / p).string();
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

inline DiscreteDomain domain_from_json(const Json& j, const std::filesystem::path& base = ".") {
    detail::only_keys(j, "domain", {"bounds", "h", "metric", "epsilon", "points", "weights"});
    const Metric metric = parse_metric(detail::get_or<std::string>(j, "metric", "euclidean"));
    if (!j.contains("epsilon")) throw PreconditionError("domain.epsilon is required");
    const double eps = j.at("epsilon").get<double>();
    if (j.contains("points")) {
        auto pts = read_points_csv(detail::resolve(j.at("points").get<std::string>(), base));
        return build_point_cloud(pts, metric, eps, detail::get_or<std::vector<double>>(j, "weights", {}));
    }
    if (!j.contains("bounds") || !j.contains("h")) throw PreconditionError("domain needs bounds and h (or points)");
    std::vector<Interval> box;
    for (const auto& b : j.at("bounds")) {
        if (!b.is_array() || b.size() != 2) throw PreconditionError("each domain bound must be [lo, hi]");
        box.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    return build_grid(box, j.at("h").get<double>(), metric, eps);
}

/// Measures come from a sample CSV (data_override, else measures.data) or from
/// density expressions rho0/rho1 normalised to unit mass.
inline ClassMeasures measures_from_json(const Json& j, const DiscreteDomain& d, const std::filesystem::path& base = ".",
                                        const std::optional<std::string>& data_override = std::nullopt) {
    const Json section = j.is_null() ? Json::object() : j;
    detail::only_keys(section, "measures", {"bandwidth", "data", "rho0", "rho1"});
    const double bw = detail::get_or<double>(section, "bandwidth", 0.0);
    std::optional<std::string> data = data_override;
    if (!data && section.contains("data")) data = detail::resolve(section.at("data").get<std::string>(), base);
    if (data) {
        const Samples s = read_samples_csv(*data);
        return from_samples(s.class0, s.class1, d, bw);
    }
    if (!section.contains("rho0") && !section.contains("rho1")) {
        throw PreconditionError("measures need a data file or rho0/rho1 expressions");
    }
    const Expression r0 = Expression::parse(detail::get_or<std::string>(section, "rho0", "0"));
    const Expression r1 = Expression::parse(detail::get_or<std::string>(section, "rho1", "0"));
    std::vector<double> p0(d.size()), p1(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        p0[i] = r0(d.point(i));
        p1[i] = r1(d.point(i));
    }
    ClassMeasures m = make_measures(d, std::move(p0), std::move(p1));
    normalize_mass(m, d);
    return m;
}

inline SolverConfig solver_from_json(const Json& j) {
    SolverConfig c;
    if (j.is_null()) return c;
    detail::only_keys(j, "solver",
                      {"preconditioning", "tau", "sigma", "max_iters", "gap_tol", "check_every", "lambda", "seed",
                       "power_iters"});
    // Explicit step sizes imply the scalar rule unless a rule is named.
    if (j.contains("preconditioning")) {
        c.preconditioning = parse_preconditioning(j.at("preconditioning").get<std::string>());
    } else if (j.contains("tau") || j.contains("sigma")) {
        c.preconditioning = Preconditioning::scalar;
    }
    c.tau = detail::get_or<double>(j, "tau", c.tau);
    c.sigma = detail::get_or<double>(j, "sigma", c.sigma);
    c.max_iters = detail::get_or<std::size_t>(j, "max_iters", c.max_iters);
    c.gap_tol = detail::get_or<double>(j, "gap_tol", c.gap_tol);
    c.check_every = detail::get_or<std::size_t>(j, "check_every", c.check_every);
    if (j.contains("lambda") && !j.at("lambda").is_null()) c.lambda = j.at("lambda").get<double>();
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
    c.power_iters = detail::get_or<std::size_t>(j, "power_iters", c.power_iters);
    return c;
}

namespace detail {
inline std::vector<Interval> bounds_from(const Json& j) {
    std::vector<Interval> box;
    for (const auto& b : j) box.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    return box;
}
}  // namespace detail

inline ConsistencyConfig consistency_from_json(const Json& j) {
    ConsistencyConfig c;
    if (j.is_null()) return c;
    detail::only_keys(j, "sweep", {"dim", "bounds", "u", "rho", "epsilons", "h_ratio", "normalization"});
    c.dim = detail::get_or<std::size_t>(j, "dim", c.dim);
    if (j.contains("bounds")) c.bounds = detail::bounds_from(j.at("bounds"));
    c.u = detail::get_or<std::string>(j, "u", c.u);
    c.rho = detail::get_or<std::string>(j, "rho", c.rho);
    c.epsilons = detail::get_or<std::vector<double>>(j, "epsilons", c.epsilons);
    c.h_ratio = detail::get_or<double>(j, "h_ratio", c.h_ratio);
    if (j.contains("normalization")) c.normalization = parse_normalization(j.at("normalization").get<std::string>());
    return c;
}

inline GammaConfig gamma_from_json(const Json& j) {
    GammaConfig c;
    if (j.is_null()) return c;
    detail::only_keys(j, "sweep", {"bounds", "u", "rho0", "rho1", "epsilons", "h_ratio", "region"});
    if (j.contains("bounds")) {
        const auto box = detail::bounds_from(j.at("bounds"));
        if (box.size() != 1) throw PreconditionError("gamma sweeps are one-dimensional");
        c.bounds = box.front();
    }
    c.u = detail::get_or<std::string>(j, "u", c.u);
    c.rho0 = detail::get_or<std::string>(j, "rho0", c.rho0);
    c.rho1 = detail::get_or<std::string>(j, "rho1", c.rho1);
    c.epsilons = detail::get_or<std::vector<double>>(j, "epsilons", c.epsilons);
    c.h_ratio = detail::get_or<double>(j, "h_ratio", c.h_ratio);
    if (j.contains("region")) c.region = parse_region(j.at("region").get<std::string>());
    return c;
}

}  // namespace atv::config
