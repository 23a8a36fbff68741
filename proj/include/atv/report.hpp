#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "atv/domain.hpp"
#include "atv/errors.hpp"
#include "atv/experiments.hpp"
#include "atv/solver.hpp"

namespace atv {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw IoError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

/// Numeric table with a header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

inline bool looks_numeric(const std::string& s) {
    try {
        parse_double(s);
        return true;
    } catch (const IoError&) {
        return false;
    }
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path + "'");
    return f;
}

}  // namespace detail

inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t k = 0; k < t.header.size(); ++k) {
        if (k) out += ',';
        out += detail::csv_escape(t.header[k]);
    }
    out += '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw PreconditionError("table is not rectangular");
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            out += format_double(row[k]);
        }
        out += '\n';
    }
    return out;
}

inline void write_text(const std::string& text, const std::string& path) {
    auto f = detail::open_out(path);
    f << text;
    if (!f) throw IoError("failed writing '" + path + "'");
}

inline void write_csv(const Table& t, const std::string& path) { write_text(to_csv(t), path); }

/// Reads a numeric CSV. A first row that does not parse as numbers is the header.
inline Table read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read '" + path + "'");
    Table t;
    std::string line;
    bool first = true;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (first) {
            first = false;
            if (!detail::looks_numeric(cells.front())) {
                t.header = std::move(cells);
                continue;
            }
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                row.push_back(parse_double(c));
            } catch (const IoError& e) {
                throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        if (!t.rows.empty() && row.size() != t.rows.front().size()) {
            throw IoError(path + ":" + std::to_string(lineno) + ": ragged row");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// "index,value" rows, used for scalar fields and signed densities.
inline Table field_table(const std::vector<double>& values, const std::string& name = "value") {
    Table t{{"index", name}, {}};
    for (std::size_t i = 0; i < values.size(); ++i) t.rows.push_back({static_cast<double>(i), values[i]});
    return t;
}

inline std::vector<double> read_field_csv(const std::string& path, std::size_t expected) {
    const Table t = read_csv(path);
    std::vector<double> out(expected, 0.0);
    std::vector<bool> seen(expected, false);
    for (const auto& row : t.rows) {
        if (row.size() == 1 && t.rows.size() == expected) {
            // Bare value column in point order.
            const std::size_t i = static_cast<std::size_t>(&row - t.rows.data());
            out[i] = row[0];
            seen[i] = true;
            continue;
        }
        if (row.size() < 2) throw IoError(path + ": expected index,value rows");
        const double idx = row[0];
        if (!(idx >= 0.0) || idx != std::floor(idx) || idx >= static_cast<double>(expected)) {
            throw IoError(path + ": index " + format_double(idx) + " out of range");
        }
        out[static_cast<std::size_t>(idx)] = row[1];
        seen[static_cast<std::size_t>(idx)] = true;
    }
    for (std::size_t i = 0; i < expected; ++i) {
        if (!seen[i]) throw IoError(path + ": no value for point " + std::to_string(i));
    }
    return out;
}

inline Table measures_table(const ClassMeasures& m) {
    Table t{{"index", "rho0", "rho1"}, {}};
    for (std::size_t i = 0; i < m.size(); ++i) t.rows.push_back({static_cast<double>(i), m.rho0[i], m.rho1[i]});
    return t;
}

/// Sparse "i,j,value" triples over the ball pairs of a domain.
inline Table pairs_table(const std::vector<double>& slot_values, const DiscreteDomain& d) {
    Table t{{"i", "j", "value"}, {}};
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t s = d.balls.begin(i); s < d.balls.end(i); ++s) {
            t.rows.push_back({static_cast<double>(i), static_cast<double>(d.balls.members[s]), slot_values[s]});
        }
    }
    return t;
}

inline std::vector<double> slot_values_from_table(const Table& t, const DiscreteDomain& d) {
    std::vector<double> v(d.balls.num_pairs(), 0.0);
    for (const auto& row : t.rows) {
        if (row.size() != 3) throw IoError("expected i,j,value rows");
        const auto i = static_cast<std::size_t>(row[0]);
        const auto j = static_cast<std::size_t>(row[1]);
        const auto s = i < d.size() ? d.balls.slot(i, j) : std::nullopt;
        if (!s) throw IoError("pair (" + std::to_string(i) + "," + std::to_string(j) + ") is not a ball pair");
        v[*s] = row[2];
    }
    return v;
}

/// Labelled samples "x1,...,xN,label" split by class.
struct Samples {
    std::vector<std::vector<double>> class0;
    std::vector<std::vector<double>> class1;
};

inline Samples read_samples_csv(const std::string& path) {
    const Table t = read_csv(path);
    Samples s;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (row.size() < 2) throw IoError(path + ": sample rows need coordinates and a label");
        const double label = row.back();
        std::vector<double> x(row.begin(), row.end() - 1);
        if (label == 0.0) s.class0.push_back(std::move(x));
        else if (label == 1.0) s.class1.push_back(std::move(x));
        else throw IoError(path + ": label of sample " + std::to_string(r) + " is not 0 or 1");
    }
    return s;
}

inline std::vector<std::vector<double>> read_points_csv(const std::string& path) {
    const Table t = read_csv(path);
    return t.rows;
}

inline Table sweep_table(const SweepResult& s) {
    Table t{{"epsilon", "h", "observed", "reference", "abs_err", "rel_err"}, {}};
    for (const auto& r : s.rows) t.rows.push_back({r.epsilon, r.h, r.observed, r.reference, r.abs_err, r.rel_err});
    return t;
}

using Json = nlohmann::json;

inline Json to_json(const SolveReport& r) {
    return Json{{"u_star", r.u_star},
                {"primal_obj", r.primal_obj},
                {"dual_certificate", r.dual_certificate},
                {"gap_history", r.gap_history},
                {"check_iters", r.check_iters},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"lambda", r.lambda},
                {"preconditioning", r.preconditioning},
                {"tau", r.tau},
                {"sigma", r.sigma},
                {"op_norm", r.op_norm},
                {"dirac_fraction", r.dirac_fraction}};
}

inline SolveReport solve_report_from_json(const Json& j) {
    SolveReport r;
    r.u_star = j.at("u_star").get<std::vector<double>>();
    r.primal_obj = j.at("primal_obj").get<double>();
    r.dual_certificate = j.at("dual_certificate").get<double>();
    r.gap_history = j.at("gap_history").get<std::vector<double>>();
    r.check_iters = j.at("check_iters").get<std::vector<std::size_t>>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    r.lambda = j.at("lambda").get<double>();
    r.preconditioning = j.at("preconditioning").get<std::string>();
    r.tau = j.at("tau").get<double>();
    r.sigma = j.at("sigma").get<double>();
    r.op_norm = j.at("op_norm").get<double>();
    r.dirac_fraction = j.at("dirac_fraction").get<double>();
    return r;
}

inline Json to_json(const SweepResult& s) {
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"epsilon", r.epsilon},
                        {"h", r.h},
                        {"observed", r.observed},
                        {"reference", r.reference},
                        {"abs_err", r.abs_err},
                        {"rel_err", r.rel_err}});
    }
    return Json{{"rows", rows}, {"metadata", s.metadata}};
}

inline SweepResult sweep_from_json(const Json& j) {
    SweepResult s;
    for (const auto& r : j.at("rows")) {
        s.rows.push_back({r.at("epsilon").get<double>(), r.at("h").get<double>(), r.at("observed").get<double>(),
                          r.at("reference").get<double>(), r.at("abs_err").get<double>(),
                          r.at("rel_err").get<double>()});
    }
    s.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return s;
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
inline std::string canonical(const Json& j) { return j.dump(2) + "\n"; }

inline void write_report(const SolveReport& r, const std::string& path) { write_text(canonical(to_json(r)), path); }
inline void write_report(const SweepResult& s, const std::string& path) { write_text(canonical(to_json(s)), path); }

inline Json read_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read '" + path + "'");
    try {
        return Json::parse(f);
    } catch (const Json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace atv
