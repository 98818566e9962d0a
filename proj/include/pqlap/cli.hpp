#pragma once

// Run configuration, result export and the command-line front end.

#include "pqlap/continuation.hpp"
#include "pqlap/exponent_field.hpp"
#include "pqlap/mesh.hpp"
#include "pqlap/reaction.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqlap {

/// Unreadable or ill-formed configuration (exit code 65).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReactionChoice { power, power_log, zero };

struct SolverSettings {
  double tol = 1e-10;
  double fixed_point_tol = 1e-10;
  int max_iter = 100000;
  double cap_factor = 1e6;
  int eps_levels = 21;
  double eps_ratio = 0.5;
  double tol_lambda = 1e-4;
};

struct RunConfig {
  double a = 0.0;
  double b = 1.0;
  Index n_cells = 200;
  FieldSpec p = ConstantField{3.0};
  FieldSpec q = ConstantField{2.0};
  FieldSpec eta = ConstantField{0.5};
  FieldSpec xi = ConstantField{1.0};
  FieldSpec r = ConstantField{5.0};
  ReactionChoice reaction = ReactionChoice::power;
  std::optional<FieldSpec> reaction_exponent;  // defaults to r (power) or p (power_log)
  SolverSettings solver;
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  std::optional<LambdaBracket> bracket;
  bool chain = true;
  bool second_solutions = false;
  bool left_continuity = true;

  ExponentField exponent_field() const;
  Reaction make_reaction() const;
  MeshPtr make_mesh() const;
};

/// YAML text; every key is optional and falls back to the defaults above.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Shortest decimal string that reads back to the same double.
std::string format_number(double x);

enum class SolutionKind { minimal, second, singular };

const char* to_string(SolutionKind kind);

/// {"nodes":[...],"values":[...],"lambda":v|null,"kind":"..."}
std::string solution_json(const GridFunction& u, std::optional<double> lambda, SolutionKind kind);

struct LoadedSolution {
  Vector nodes;
  Vector values;
  std::optional<double> lambda;
  SolutionKind kind = SolutionKind::minimal;
};

LoadedSolution parse_solution_json(const std::string& text);

/// Header lambda,outcome,sup_value,min_value,energy,residual; one row per point.
std::string branch_csv(const Branch& branch);

/// Exit codes: 0 ok, 2 validation failure, 3 non-convergence, 64 usage, 65 bad config.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace pqlap
