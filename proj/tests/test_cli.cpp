#include "pqlap/cli.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pqlap;

namespace {

const std::string kConfigs = PQLAP_CONFIG_DIR;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  // per-test names keep parallel ctest runs from sharing a file
  const std::string test = ::testing::UnitTest::GetInstance()->current_test_info()->name();
  const auto path = std::filesystem::temp_directory_path() / ("pqlap_" + test + "_" + name);
  std::ofstream(path) << content;
  return path.string();
}

const char* kSmall = R"(
mesh: {cells: 40}
fields: {p: 3, q: 2, eta: 0.5, xi: 1, r: 5}
lambda: 0.1
lambda_grid: [0.25, 0.05, 0.15, 0.4]
)";

}  // namespace

TEST(Config, DefaultsAreTheBenchmark) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.n_cells, 200);
  const ExponentField ef = c.exponent_field();
  EXPECT_DOUBLE_EQ(ef.p(0.3), 3.0);
  EXPECT_DOUBLE_EQ(ef.q(0.3), 2.0);
  EXPECT_DOUBLE_EQ(ef.eta(0.3), 0.5);
  EXPECT_DOUBLE_EQ(ef.r(0.3), 5.0);
}

TEST(Config, FieldForms) {
  const RunConfig c = parse_config(R"(
fields:
  p: {constant: 4}
  q: {affine: {c0: 1.5, c1: 1}}
  eta: {sinusoid: {base: 0.5, amp: 0.1, freq: 2}}
)");
  const ExponentField ef = c.exponent_field();
  EXPECT_DOUBLE_EQ(ef.p(0.7), 4.0);
  EXPECT_DOUBLE_EQ(ef.q(0.5), 2.0);
  EXPECT_NEAR(ef.eta(0.125), 0.6, 1e-15);
}

TEST(Config, GridRange) {
  const RunConfig c = parse_config("lambda_grid: {start: 0.02, stop: 0.3, step: 0.02}");
  ASSERT_EQ(c.lambda_grid.size(), 15u);
  EXPECT_EQ(c.lambda_grid[5], 0.12);
  EXPECT_EQ(c.lambda_grid.back(), 0.3);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("mesh: {cells: 0}"), ConfigError);
  EXPECT_THROW(parse_config("mesh: {cells: 2.5}"), ConfigError);
  EXPECT_THROW(parse_config("fields: {p: {cubic: 1}}"), ConfigError);
  EXPECT_THROW(parse_config("fields: {p: abc}"), ConfigError);
  EXPECT_THROW(parse_config("unknown_key: 1"), ConfigError);
  EXPECT_THROW(parse_config("solver: {tol: -1}"), ConfigError);
  EXPECT_THROW(parse_config("bracket: [0.5, 0.1]"), ConfigError);
  EXPECT_THROW(parse_config("lambda_grid: [0.1, 0]"), ConfigError);
  EXPECT_THROW(parse_config("a: ["), ConfigError);
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(INFINITY), "inf");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Json, RoundTrip) {
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, 7);
  const GridFunction u = GridFunction::sample(m, [](double z) { return std::exp(z) / 3.0; });
  const LoadedSolution s = parse_solution_json(solution_json(u, 0.1, SolutionKind::second));
  EXPECT_EQ(s.nodes, m->nodes());
  EXPECT_EQ(s.values, u.values());
  ASSERT_TRUE(s.lambda.has_value());
  EXPECT_EQ(*s.lambda, 0.1);
  EXPECT_EQ(s.kind, SolutionKind::second);
  const LoadedSolution t = parse_solution_json(solution_json(u, std::nullopt, SolutionKind::singular));
  EXPECT_FALSE(t.lambda.has_value());
  EXPECT_EQ(t.kind, SolutionKind::singular);
}

TEST(Cli, ValidateBenchmark) {
  const CliRun r = run({"validate", "--config", kConfigs + "/benchmark.yaml"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("H_0: pass"), std::string::npos);
}

TEST(Cli, ValidateNamesTheFailedClause) {
  const CliRun r = run({"validate", "--config", kConfigs + "/invalid_q_above_p.yaml"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("H_0: fail"), std::string::npos);
  EXPECT_NE(r.out.find("q_+<p_-"), std::string::npos);
}

TEST(Cli, SolversRefuseInvalidData) {
  EXPECT_EQ(run({"singular", "--config", kConfigs + "/invalid_q_above_p.yaml"}).code, 2);
}

TEST(Cli, UsageErrors) {
  const std::string cfg = kConfigs + "/benchmark.yaml";
  EXPECT_EQ(run({"validate", "--config", cfg, "--bogus"}).code, 64);
  EXPECT_EQ(run({"validate"}).code, 64);
  EXPECT_EQ(run({}).code, 64);
  const CliRun r = run({"frobnicate", "--config", cfg});
  EXPECT_EQ(r.code, 64);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"solve", "--config", temp_file("nolambda.yaml", "mesh: {cells: 10}")}).code, 64);
}

TEST(Cli, BadConfig) {
  EXPECT_EQ(run({"validate", "--config", temp_file("bad.yaml", "fields: [")}).code, 65);
  EXPECT_EQ(run({"validate", "--config", "/nonexistent/pqlap.yaml"}).code, 65);
  EXPECT_EQ(run({"validate", "--config", kConfigs + "/benchmark.yaml", "--tol", "-1"}).code, 65);
}

TEST(Cli, SolveWritesMinimalSolution) {
  const CliRun r = run({"solve", "--config", temp_file("small.yaml", kSmall)});
  ASSERT_EQ(r.code, 0) << r.err;
  const LoadedSolution s = parse_solution_json(r.out);
  EXPECT_EQ(s.kind, SolutionKind::minimal);
  EXPECT_EQ(s.values.size(), 41);
  EXPECT_NEAR(s.values.maxCoeff(), 1.0475974554854045, 1e-4);
}

TEST(Cli, SolveAboveCriticalFails) {
  EXPECT_EQ(run({"solve", "--config", temp_file("small.yaml", kSmall), "--lambda", "0.4"}).code, 3);
}

TEST(Cli, BranchCsvSortedAndDeterministic) {
  const std::vector<std::string> args{"branch", "--config", temp_file("small.yaml", kSmall), "--no-left-continuity"};
  const CliRun a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  std::istringstream lines(a.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "lambda,outcome,sup_value,min_value,energy,residual");
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].rfind("0.05,admissible,", 0), 0u);
  EXPECT_EQ(rows[1].rfind("0.15,admissible,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("0.25,admissible,", 0), 0u);
  EXPECT_EQ(rows[3].rfind("0.4,inadmissible,nan,nan,nan,", 0), 0u);
  EXPECT_EQ(run(args).out, a.out);
}

TEST(Cli, GridFlagOverridesConfig) {
  const CliRun r =
      run({"branch", "--config", temp_file("small.yaml", kSmall), "--grid", "0.2,0.1", "--no-left-continuity"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  EXPECT_NE(r.out.find("\n0.1,admissible"), std::string::npos);
}

TEST(Cli, LambdaStarFromExplicitBracket) {
  const CliRun r = run({"lambda-star", "--config", temp_file("small.yaml", kSmall), "--lo", "0.25", "--hi", "0.5",
                        "--tol-lambda", "1e-3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("lambda_star: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(r.out.substr(pos + 13)), 0.290389882104858, 0.01 * 0.290389882104858);
}
