// Command-line front end: atv {validate,eval,dual,subgrad,solve,consistency,gamma}.
// stdout carries exactly one JSON document; diagnostics go to stderr.
// Exit codes: 0 success, 1 invalid input or violated invariants, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "atv/atv.hpp"

namespace {

using atv::Json;

struct Common {
    std::string config;
    std::optional<std::string> data;
    std::optional<double> lambda;
    unsigned threads = 0;
};

struct Loaded {
    Json cfg;
    std::filesystem::path base;
    atv::DiscreteDomain domain;
};

Loaded load(const Common& c) {
    Loaded l;
    l.cfg = atv::read_json(c.config);
    l.base = std::filesystem::path(c.config).parent_path();
    if (!l.cfg.contains("domain")) throw atv::PreconditionError("config has no domain section");
    l.domain = atv::config::domain_from_json(l.cfg.at("domain"), l.base);
    return l;
}

Json section(const Json& cfg, const char* name) { return cfg.contains(name) ? cfg.at(name) : Json(); }

/// Measures plus validation; returns nullopt (after reporting) when invalid.
std::optional<atv::ClassMeasures> load_measures(const Loaded& l, const Common& c) {
    auto m = atv::config::measures_from_json(section(l.cfg, "measures"), l.domain, l.base, c.data);
    const auto v = atv::validate(m, l.domain);
    if (!v.empty()) {
        for (const auto& x : v) {
            std::cerr << "violation [" << x.kind << "]";
            if (x.index) std::cerr << " at point " << *x.index;
            std::cerr << ": " << x.message << "\n";
        }
        std::cerr << v.size() << " violations\n";
        return std::nullopt;
    }
    return m;
}

double lambda_for(const Loaded& l, const Common& c) {
    if (c.lambda) return *c.lambda;
    return atv::config::solver_from_json(section(l.cfg, "solver")).lambda.value_or(l.domain.epsilon);
}

void emit(const Json& j) { std::cout << atv::canonical(j); }

int cmd_validate(const Common& c) {
    const Loaded l = load(c);
    const auto m = atv::config::measures_from_json(section(l.cfg, "measures"), l.domain, l.base, c.data);
    const auto v = atv::validate(m, l.domain);
    Json details = Json::array();
    for (const auto& x : v) {
        details.push_back({{"kind", x.kind}, {"index", x.index ? Json(*x.index) : Json()}, {"message", x.message}});
        std::cerr << "violation [" << x.kind << "]: " << x.message << "\n";
    }
    std::cerr << v.size() << " violations\n";
    emit({{"violations", v.size()}, {"details", details}, {"points", l.domain.size()}});
    return v.empty() ? 0 : 1;
}

int cmd_eval(const Common& c, const std::string& field) {
    const Loaded l = load(c);
    const auto m = load_measures(l, c);
    if (!m) return 1;
    const auto u = atv::read_field_csv(field, l.domain.size());
    const double lambda = lambda_for(l, c);
    const double tv = atv::eval_tv(u, *m, l.domain);
    const double data = atv::data_term(u, *m, l.domain);
    emit({{"tv", tv}, {"data_term", data}, {"lambda", lambda}, {"objective", atv::eval_objective(u, *m, l.domain, lambda)}});
    return 0;
}

int cmd_dual(const Common& c, const std::string& field) {
    const Loaded l = load(c);
    const auto m = load_measures(l, c);
    if (!m) return 1;
    const auto u = atv::read_field_csv(field, l.domain.size());
    const double tv = atv::eval_tv(u, *m, l.domain);
    const double dual = atv::dual_eval(atv::maximizing_kernels(u, *m, l.domain), u, *m, l.domain);
    emit({{"tv", tv}, {"dual", dual}, {"gap", tv - dual}});
    return 0;
}

int cmd_subgrad(const Common& c, const std::string& field, const std::string& out, std::size_t trials,
                std::uint64_t seed) {
    const Loaded l = load(c);
    const auto m = load_measures(l, c);
    if (!m) return 1;
    const auto u = atv::read_field_csv(field, l.domain.size());
    const auto p = atv::subgradient(u, *m, l.domain);
    if (!out.empty()) atv::write_csv(atv::field_table(p), out);
    const double tv = atv::eval_tv(u, *m, l.domain);
    double pairing = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) pairing += p[i] * u[i] * l.domain.quad_weights[i];
    const auto check = atv::check_subgradient(p, u, *m, l.domain, trials, seed);
    emit({{"tv", tv},
          {"pairing", pairing},
          {"fy_residual", pairing - tv},
          {"total_mass", atv::total_signed_mass(p, l.domain)},
          {"worst_violation", check.worst_violation},
          {"trials", trials}});
    return 0;
}

int cmd_solve(const Common& c, const std::string& out, const std::string& field_out, std::optional<std::uint64_t> seed) {
    const Loaded l = load(c);
    const auto m = load_measures(l, c);
    if (!m) return 1;
    auto cfg = atv::config::solver_from_json(section(l.cfg, "solver"));
    if (c.lambda) cfg.lambda = c.lambda;
    if (seed) cfg.seed = *seed;
    const auto rep = atv::solve_pd(*m, l.domain, cfg);
    if (!out.empty()) atv::write_report(rep, out);
    if (!field_out.empty()) atv::write_csv(atv::field_table(rep.u_star), field_out);
    const auto thr = atv::best_threshold(rep.u_star, *m, l.domain, rep.lambda);
    if (!rep.converged) std::cerr << "warning: gap " << rep.gap_history.back() << " above tolerance\n";
    emit({{"converged", rep.converged},
          {"iterations", rep.iterations},
          {"primal_obj", rep.primal_obj},
          {"dual_certificate", rep.dual_certificate},
          {"gap", rep.gap_history.back()},
          {"threshold", thr.threshold},
          {"threshold_objective", thr.objective}});
    return 0;
}

int cmd_sweep(const Common& c, const std::string& out, bool gamma) {
    const Json cfg = atv::read_json(c.config);
    const Json sweep = section(cfg, "sweep");
    const auto result = gamma ? atv::gamma_limit_study(atv::config::gamma_from_json(sweep))
                              : atv::consistency_study(atv::config::consistency_from_json(sweep));
    if (!out.empty()) atv::write_csv(atv::sweep_table(result), out);
    emit(atv::to_json(result));
    return 0;
}

unsigned default_threads() {
    if (const char* env = std::getenv("ATV_THREADS")) {
        try {
            return static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            std::cerr << "ignoring ATV_THREADS='" << env << "'\n";
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial total variation toolkit"};
    app.footer(
        "Precedence: command-line flags override config keys, which override built-in defaults.\n"
        "Threads: --threads, else ATV_THREADS, else all cores; --threads 1 is the serial path.");
    app.require_subcommand(1);

    Common common;
    std::string field, out, field_out;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> solve_seed;

    auto add_common = [&](CLI::App* sub, bool with_data) {
        sub->add_option("--config", common.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--threads", common.threads, "worker cap (1 = serial)");
        if (with_data) {
            sub->add_option("--data", common.data, "labelled samples CSV (x1,...,xN,label)")->check(CLI::ExistingFile);
            sub->add_option("--lambda", common.lambda, "TV weight (default: epsilon)");
        }
    };

    auto* validate = app.add_subcommand("validate", "check domain and measures invariants");
    add_common(validate, true);
    auto* eval = app.add_subcommand("eval", "evaluate TV, data term and objective of a field");
    add_common(eval, true);
    eval->add_option("--field", field, "field CSV (index,value)")->required()->check(CLI::ExistingFile);
    auto* dual = app.add_subcommand("dual", "primal and attained dual value of TV");
    add_common(dual, true);
    dual->add_option("--field", field, "field CSV (index,value)")->required()->check(CLI::ExistingFile);
    auto* subgrad = app.add_subcommand("subgrad", "subgradient of TV with Fenchel-Young certificate");
    add_common(subgrad, true);
    subgrad->add_option("--field", field, "field CSV (index,value)")->required()->check(CLI::ExistingFile);
    subgrad->add_option("--out", out, "subgradient CSV (index,value)");
    subgrad->add_option("--trials", trials, "random directions for the subgradient inequality");
    subgrad->add_option("--seed", seed, "seed for the random directions");
    auto* solve = app.add_subcommand("solve", "primal-dual solve of the regularised training problem");
    add_common(solve, true);
    solve->add_option("--out", out, "report JSON");
    solve->add_option("--field-out", field_out, "minimiser CSV (index,value)");
    solve->add_option("--seed", solve_seed, "seed (overrides solver.seed)");
    auto* consistency = app.add_subcommand("consistency", "nonlocal-to-local operator sweep");
    add_common(consistency, false);
    consistency->add_option("--out", out, "sweep CSV");
    auto* gamma = app.add_subcommand("gamma", "TV_eps against its local limit");
    add_common(gamma, false);
    gamma->add_option("--out", out, "sweep CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    atv::set_max_threads(common.threads ? common.threads : default_threads());
    try {
        if (*validate) return cmd_validate(common);
        if (*eval) return cmd_eval(common, field);
        if (*dual) return cmd_dual(common, field);
        if (*subgrad) return cmd_subgrad(common, field, out, trials, seed);
        if (*solve) return cmd_solve(common, out, field_out, solve_seed);
        if (*consistency) return cmd_sweep(common, out, false);
        if (*gamma) return cmd_sweep(common, out, true);
    } catch (const atv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad config: " << e.what() << "\n";
        return 1;
    }
    std::cerr << app.help();
    return 2;
}
