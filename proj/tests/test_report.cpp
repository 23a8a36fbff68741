#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "atv/config.hpp"
#include "atv/report.hpp"
#include "oracles.hpp"

using namespace atv;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("atv_report_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    static std::string slurp(const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
    fs::path dir_;
};

SolveReport small_solve(std::size_t max_iters) {
    Rng rng(70);
    const auto d = oracle::unit_interval(0.1, 0.2);
    const auto m = oracle::random_measures(d, rng);
    SolverConfig cfg;
    cfg.max_iters = max_iters;
    cfg.check_every = 1;
    cfg.gap_tol = 0.0;
    return solve_pd(m, d, cfg);
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1 + 0.2), "0.30000000000000004");
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(-0.0), "-0");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    Rng rng(71);
    for (int t = 0; t < 1000; ++t) {
        const double x = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-30, 30));
        ASSERT_EQ(parse_double(format_double(x)), x);
    }
    EXPECT_THROW(parse_double("1.5x"), IoError);
    EXPECT_THROW(parse_double(""), IoError);
}

TEST_F(TempDir, HeaderOnlyTable) {
    write_csv(Table{{"epsilon", "h"}, {}}, path("t.csv"));
    EXPECT_EQ(slurp(path("t.csv")), "epsilon,h\n");
    const Table back = read_csv(path("t.csv"));
    EXPECT_EQ(back.header, (std::vector<std::string>{"epsilon", "h"}));
    EXPECT_TRUE(back.rows.empty());
}

TEST_F(TempDir, FloatRow) {
    write_csv(Table{{"v"}, {{0.1 + 0.2}}}, path("t.csv"));
    EXPECT_EQ(slurp(path("t.csv")), "v\n0.30000000000000004\n");
}

TEST_F(TempDir, SignedDensityRoundTripsBitExactly) {
    const auto d = build_grid({{0, 1}, {0, 1}}, 0.1, Metric::euclidean, 0.2);
    Rng rng(72);
    const auto m = oracle::random_measures(d, rng);
    const auto p = subgradient(oracle::random_field(d.size(), rng), m, d);
    write_csv(field_table(p), path("p.csv"));
    EXPECT_EQ(read_field_csv(path("p.csv"), d.size()), p);
    EXPECT_THROW(read_field_csv(path("p.csv"), d.size() + 1), IoError);
}

TEST_F(TempDir, PairsTableRoundTrip) {
    const auto d = oracle::unit_interval(0.1, 0.25);
    Rng rng(73);
    const auto k = random_admissible_kernel(d, rng);
    write_csv(pairs_table(k.values, d), path("k.csv"));
    EXPECT_EQ(slot_values_from_table(read_csv(path("k.csv")), d), k.values);
}

TEST_F(TempDir, RejectsMalformedCsv) {
    write_text("index,value\n0,1\n1\n", path("bad.csv"));
    EXPECT_THROW(read_csv(path("bad.csv")), IoError);
    write_text("index,value\n0,abc\n", path("bad2.csv"));
    EXPECT_THROW(read_csv(path("bad2.csv")), IoError);
    EXPECT_THROW(read_csv(path("missing.csv")), IoError);
    EXPECT_THROW(write_csv(Table{{"a"}, {}}, path("no/such/dir/x.csv")), IoError);
    EXPECT_THROW(to_csv(Table{{"a", "b"}, {{1.0}}}), PreconditionError);
}

TEST_F(TempDir, SolveReportIsCanonicalAndRoundTrips) {
    const auto r = small_solve(7);
    write_report(r, path("a.json"));
    write_report(r, path("b.json"));
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
    const auto back = solve_report_from_json(read_json(path("a.json")));
    EXPECT_EQ(back.u_star, r.u_star);
    EXPECT_EQ(back.gap_history, r.gap_history);
    EXPECT_EQ(back.primal_obj, r.primal_obj);
    EXPECT_EQ(back.preconditioning, r.preconditioning);
    EXPECT_EQ(canonical(to_json(back)), slurp(path("a.json")));
}

TEST_F(TempDir, GapHistoryCountsChecks) {
    const auto r = small_solve(7);
    // One check before the first step plus one per iteration, unless certified earlier.
    EXPECT_EQ(r.gap_history.size(), r.iterations + 1);
    EXPECT_EQ(r.check_iters.size(), r.gap_history.size());
}

TEST_F(TempDir, UnconvergedReportKeepsPartialData) {
    Rng rng(74);
    const auto d = build_grid({{0, 1}, {0, 1}}, 0.05, Metric::euclidean, 0.1);
    const auto m = oracle::random_measures(d, rng);
    SolverConfig cfg;
    cfg.max_iters = 3;
    cfg.check_every = 1;
    cfg.gap_tol = 0.0;
    const auto r = solve_pd(m, d, cfg);
    ASSERT_FALSE(r.converged);
    const Json j = to_json(r);
    EXPECT_FALSE(j.at("converged").get<bool>());
    EXPECT_EQ(j.at("gap_history").size(), 4u);
    EXPECT_EQ(j.at("u_star").size(), d.size());
}

TEST_F(TempDir, SweepRoundTripAndCsv) {
    ConsistencyConfig cfg;
    cfg.epsilons = {0.2, 0.1};
    const auto s = consistency_study(cfg);
    write_report(s, path("s.json"));
    const auto back = sweep_from_json(read_json(path("s.json")));
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(back.rows[1].observed, s.rows[1].observed);
    EXPECT_EQ(back.metadata, s.metadata);
    write_csv(sweep_table(s), path("s.csv"));
    const Table t = read_csv(path("s.csv"));
    EXPECT_EQ(t.header, (std::vector<std::string>{"epsilon", "h", "observed", "reference", "abs_err", "rel_err"}));
    EXPECT_EQ(t.rows[0][2], s.rows[0].observed);
}

TEST(Canonical, SortedKeysAndTrailingNewline) {
    const Json j = Json::parse(R"({"b": 1, "a": [0.1, 2], "c": {"z": true, "y": null}})");
    EXPECT_EQ(canonical(j), "{\n  \"a\": [\n    0.1,\n    2\n  ],\n  \"b\": 1,\n  \"c\": {\n    \"y\": null,\n    \"z\": true\n  }\n}\n");
}

TEST_F(TempDir, ConfigSections) {
    write_text("x,label\n0.1,0\n0.2,0\n0.8,1\n", path("s.csv"));
    write_text(R"({"domain": {"bounds": [[0, 1]], "h": 0.1, "epsilon": 0.25},
                  "measures": {"data": "s.csv"},
                  "solver": {"max_iters": 10, "lambda": 0.5}})",
               path("c.json"));
    const Json cfg = read_json(path("c.json"));
    const auto d = config::domain_from_json(cfg.at("domain"), dir_);
    EXPECT_EQ(d.size(), 10u);
    EXPECT_EQ(d.metric, Metric::euclidean);
    const auto m = config::measures_from_json(cfg.at("measures"), d, dir_);
    EXPECT_NEAR(class_mass(m, d, 0), 2.0 / 3.0, 1e-15);
    EXPECT_TRUE(validate(m, d).empty());
    const auto s = config::solver_from_json(cfg.at("solver"));
    EXPECT_EQ(s.max_iters, 10u);
    EXPECT_EQ(*s.lambda, 0.5);
    EXPECT_EQ(s.preconditioning, Preconditioning::diagonal);
    EXPECT_EQ(config::solver_from_json(Json::parse(R"({"tau": 1})")).preconditioning, Preconditioning::scalar);
    EXPECT_THROW(config::solver_from_json(Json::parse(R"({"taus": 1})")), PreconditionError);
    EXPECT_THROW(config::domain_from_json(Json::parse(R"({"bounds": [[0, 1]], "h": 0.1})")), PreconditionError);
    EXPECT_THROW(config::measures_from_json(Json::object(), d), PreconditionError);
}

TEST(Config, ExpressionMeasuresAreNormalised) {
    const auto d = oracle::unit_interval(0.1, 0.2);
    const auto m = config::measures_from_json(Json::parse(R"({"rho0": "1 + x", "rho1": "2"})"), d);
    EXPECT_NEAR(total_mass(m, d), 1.0, 1e-15);
    EXPECT_NEAR(m.rho1[0] / m.rho0[0], 2.0 / 1.05, 1e-12);
}
