#include "pqlap/cli.hpp"

#include "pqlap/singular_solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace pqlap {

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kNoConvergence = 3;
constexpr int kUsage = 64;
constexpr int kBadConfig = 65;
constexpr int kIoError = 74;

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double number(const YAML::Node& node, const std::string& where) {
  try {
    const double v = node.as<double>();
    if (!std::isfinite(v)) throw ConfigError(where + ": value must be finite");
    return v;
  } catch (const YAML::Exception&) {
    throw ConfigError(where + ": expected a number");
  }
}

FieldSpec parse_field(const YAML::Node& node, const std::string& where) {
  if (node.IsScalar()) return ConstantField{number(node, where)};
  if (!node.IsMap() || node.size() != 1) throw ConfigError(where + ": expected a number or a one-key mapping");
  const std::string kind = node.begin()->first.as<std::string>();
  const YAML::Node body = node.begin()->second;
  const std::string at = where + "." + kind;
  if (kind == "constant") return ConstantField{number(body, at)};
  if (kind == "affine") {
    check_keys(body, at, {"c0", "c1"});
    return AffineField{number(body["c0"], at + ".c0"), number(body["c1"], at + ".c1")};
  }
  if (kind == "sinusoid") {
    check_keys(body, at, {"base", "amp", "freq"});
    return SinusoidField{number(body["base"], at + ".base"), number(body["amp"], at + ".amp"),
                         number(body["freq"], at + ".freq")};
  }
  throw ConfigError(where + ": unknown field kind '" + kind + "'");
}

std::vector<double> parse_grid(const YAML::Node& node) {
  std::vector<double> grid;
  if (node.IsSequence()) {
    for (std::size_t i = 0; i < node.size(); ++i) grid.push_back(number(node[i], "lambda_grid"));
    return grid;
  }
  check_keys(node, "lambda_grid", {"start", "stop", "step"});
  const double start = number(node["start"], "lambda_grid.start");
  const double stop = number(node["stop"], "lambda_grid.stop");
  const double step = number(node["step"], "lambda_grid.step");
  if (!(step > 0.0) || stop < start) throw ConfigError("lambda_grid: need step > 0 and stop >= start");
  const long n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  if (n > 100000) throw ConfigError("lambda_grid: too many points");
  // 12 significant digits strip the accumulated rounding, so 0.02 + 5 * 0.02 prints as 0.12
  char buf[32];
  for (long k = 0; k <= n; ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(k) * step);
    grid.push_back(std::strtod(buf, nullptr));
  }
  return grid;
}

void check_config(const RunConfig& c) {
  if (!(c.a < c.b)) throw ConfigError("mesh: need a < b");
  if (c.n_cells < 1) throw ConfigError("mesh: cells must be >= 1");
  const SolverSettings& s = c.solver;
  if (!(s.tol > 0.0) || !(s.fixed_point_tol > 0.0) || !(s.tol_lambda > 0.0))
    throw ConfigError("solver: tolerances must be positive");
  if (s.max_iter < 1 || s.eps_levels < 1) throw ConfigError("solver: max_iter and eps_levels must be >= 1");
  if (!(s.cap_factor > 1.0)) throw ConfigError("solver: cap_factor must exceed 1");
  if (!(s.eps_ratio > 0.0 && s.eps_ratio < 1.0)) throw ConfigError("solver: eps_ratio must lie in (0, 1)");
  if (c.lambda && !(*c.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  for (const double l : c.lambda_grid)
    if (!(l > 0.0)) throw ConfigError("lambda_grid: values must be positive");
  if (c.bracket && !(c.bracket->lo > 0.0 && c.bracket->hi > c.bracket->lo))
    throw ConfigError("bracket: need 0 < lo < hi");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SolutionKind kind_from_string(const std::string& s) {
  if (s == "minimal") return SolutionKind::minimal;
  if (s == "second") return SolutionKind::second;
  if (s == "singular") return SolutionKind::singular;
  throw std::invalid_argument("unknown solution kind '" + s + "'");
}

bool write_output(const std::string& path, const std::string& content, std::ostream& out, std::ostream& err) {
  if (path.empty() || path == "-") {
    out << content;
    return true;
  }
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

RegularizationSchedule schedule_of(const SolverSettings& s) {
  RegularizationSchedule sched = RegularizationSchedule::geometric(s.eps_levels, s.eps_ratio);
  sched.inner_tol = s.tol;
  sched.fixed_point_tol = s.fixed_point_tol;
  return sched;
}

std::string bounds_line(const char* name, const Bounds& b) {
  return std::string(name) + ": [" + format_number(b.min) + ", " + format_number(b.max) + "]\n";
}

}  // namespace

ExponentField RunConfig::exponent_field() const {
  ExponentField ef;
  ef.p = make_field(p);
  ef.q = make_field(q);
  ef.eta = make_field(eta);
  ef.xi = make_field(xi);
  ef.r = make_field(r);
  return ef;
}

Reaction RunConfig::make_reaction() const {
  switch (reaction) {
    case ReactionChoice::power: return Reaction::power(make_field(reaction_exponent.value_or(r)));
    case ReactionChoice::power_log: return Reaction::power_log(make_field(reaction_exponent.value_or(p)));
    case ReactionChoice::zero: return Reaction::zero();
  }
  return Reaction::zero();
}

MeshPtr RunConfig::make_mesh() const { return build_uniform_mesh(a, b, n_cells); }

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& ex) {
    throw ConfigError(std::string("config is not valid YAML: ") + ex.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  try {
    check_keys(root, "config",
               {"mesh", "fields", "reaction", "solver", "lambda", "lambda_grid", "bracket", "branch"});
    if (const YAML::Node m = root["mesh"]) {
      check_keys(m, "mesh", {"a", "b", "cells"});
      if (m["a"]) c.a = number(m["a"], "mesh.a");
      if (m["b"]) c.b = number(m["b"], "mesh.b");
      if (m["cells"]) {
        const double cells = number(m["cells"], "mesh.cells");
        if (cells != std::floor(cells) || cells > 1e7) throw ConfigError("mesh.cells: expected a positive integer");
        c.n_cells = static_cast<Index>(cells);
      }
    }
    if (const YAML::Node f = root["fields"]) {
      check_keys(f, "fields", {"p", "q", "eta", "xi", "r"});
      if (f["p"]) c.p = parse_field(f["p"], "fields.p");
      if (f["q"]) c.q = parse_field(f["q"], "fields.q");
      if (f["eta"]) c.eta = parse_field(f["eta"], "fields.eta");
      if (f["xi"]) c.xi = parse_field(f["xi"], "fields.xi");
      if (f["r"]) c.r = parse_field(f["r"], "fields.r");
    }
    if (const YAML::Node r = root["reaction"]) {
      check_keys(r, "reaction", {"kind", "exponent"});
      if (r["kind"]) {
        const std::string kind = r["kind"].as<std::string>();
        if (kind == "power") c.reaction = ReactionChoice::power;
        else if (kind == "power_log") c.reaction = ReactionChoice::power_log;
        else if (kind == "zero") c.reaction = ReactionChoice::zero;
        else throw ConfigError("reaction.kind: expected power, power_log or zero");
      }
      if (r["exponent"]) c.reaction_exponent = parse_field(r["exponent"], "reaction.exponent");
    }
    if (const YAML::Node s = root["solver"]) {
      check_keys(s, "solver",
                 {"tol", "fixed_point_tol", "max_iter", "cap_factor", "eps_levels", "eps_ratio", "tol_lambda"});
      SolverSettings& v = c.solver;
      if (s["tol"]) v.tol = number(s["tol"], "solver.tol");
      if (s["fixed_point_tol"]) v.fixed_point_tol = number(s["fixed_point_tol"], "solver.fixed_point_tol");
      if (s["max_iter"]) v.max_iter = static_cast<int>(number(s["max_iter"], "solver.max_iter"));
      if (s["cap_factor"]) v.cap_factor = number(s["cap_factor"], "solver.cap_factor");
      if (s["eps_levels"]) v.eps_levels = static_cast<int>(number(s["eps_levels"], "solver.eps_levels"));
      if (s["eps_ratio"]) v.eps_ratio = number(s["eps_ratio"], "solver.eps_ratio");
      if (s["tol_lambda"]) v.tol_lambda = number(s["tol_lambda"], "solver.tol_lambda");
    }
    if (root["lambda"]) c.lambda = number(root["lambda"], "lambda");
    if (root["lambda_grid"]) c.lambda_grid = parse_grid(root["lambda_grid"]);
    if (const YAML::Node b = root["bracket"]) {
      if (!b.IsSequence() || b.size() != 2) throw ConfigError("bracket: expected [lo, hi]");
      c.bracket = LambdaBracket{number(b[0], "bracket[0]"), number(b[1], "bracket[1]")};
    }
    if (const YAML::Node br = root["branch"]) {
      check_keys(br, "branch", {"chain", "second_solutions", "left_continuity"});
      if (br["chain"]) c.chain = br["chain"].as<bool>();
      if (br["second_solutions"]) c.second_solutions = br["second_solutions"].as<bool>();
      if (br["left_continuity"]) c.left_continuity = br["left_continuity"].as<bool>();
    }
  } catch (const YAML::Exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
  check_config(c);
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

const char* to_string(SolutionKind kind) {
  switch (kind) {
    case SolutionKind::minimal: return "minimal";
    case SolutionKind::second: return "second";
    case SolutionKind::singular: return "singular";
  }
  return "unknown";
}

std::string solution_json(const GridFunction& u, std::optional<double> lambda, SolutionKind kind) {
  const Vector& x = u.mesh().nodes();
  nlohmann::ordered_json j;
  j["nodes"] = std::vector<double>(x.data(), x.data() + x.size());
  j["values"] = std::vector<double>(u.values().data(), u.values().data() + u.size());
  j["lambda"] = lambda ? nlohmann::ordered_json(*lambda) : nlohmann::ordered_json(nullptr);
  j["kind"] = to_string(kind);
  return j.dump() + "\n";
}

LoadedSolution parse_solution_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const auto nodes = j.at("nodes").get<std::vector<double>>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (nodes.size() != values.size()) throw std::invalid_argument("solution json: nodes and values differ in length");
  LoadedSolution s;
  s.nodes = Eigen::Map<const Vector>(nodes.data(), static_cast<Index>(nodes.size()));
  s.values = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  if (!j.at("lambda").is_null()) s.lambda = j.at("lambda").get<double>();
  s.kind = kind_from_string(j.at("kind").get<std::string>());
  return s;
}

std::string branch_csv(const Branch& branch) {
  std::string csv = "lambda,outcome,sup_value,min_value,energy,residual\n";
  for (const BranchPoint& pt : branch.points) {
    csv += format_number(pt.lambda) + "," + (pt.admissible ? "admissible" : "inadmissible") + "," +
           format_number(pt.sup_value) + "," + format_number(pt.min_value) + "," + format_number(pt.energy) + "," +
           format_number(pt.residual) + "\n";
  }
  return csv;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Positive solutions of a singular anisotropic (p,q) Neumann problem in 1D"};
  app.name("pqlap");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path;
  std::optional<double> tol, fp_tol, tol_lambda, cap_factor;
  std::optional<int> max_iter;
  app.add_option("-c,--config", config_path, "YAML run configuration")->required();
  app.add_option("-o,--out", out_path, "output file (default: stdout)");
  app.add_option("--tol", tol, "residual tolerance");
  app.add_option("--fixed-point-tol", fp_tol, "fixed-point tolerance of the regularized solves");
  app.add_option("--tol-lambda", tol_lambda, "bisection width for lambda*");
  app.add_option("--cap-factor", cap_factor, "divergence cap as a multiple of |u_bar|");
  app.add_option("--max-iter", max_iter, "monotone iteration limit");

  CLI::App* validate = app.add_subcommand("validate", "check the exponent hypotheses");
  CLI::App* singular = app.add_subcommand("singular", "solve the purely singular problem; writes u_bar as JSON");

  CLI::App* solve = app.add_subcommand("solve", "minimal (and optionally second) solution at one lambda");
  std::optional<double> lambda;
  bool second = false;
  std::string second_out;
  solve->add_option("--lambda", lambda, "parameter value");
  solve->add_flag("--second", second, "also run the mountain pass");
  solve->add_option("--second-out", second_out, "output file for the second solution");

  CLI::App* branch = app.add_subcommand("branch", "sweep lambda; writes CSV");
  std::vector<double> grid;
  unsigned jobs = 1;
  bool no_chain = false, second_solutions = false, no_left = false;
  branch->add_option("--grid", grid, "comma-separated lambda values")->delimiter(',');
  branch->add_option("--jobs", jobs, "worker threads (requires --no-chain)");
  branch->add_flag("--no-chain", no_chain, "solve points independently");
  branch->add_flag("--second-solutions", second_solutions, "attach mountain-pass solutions");
  branch->add_flag("--no-left-continuity", no_left, "skip the left-continuity probe");

  CLI::App* lstar = app.add_subcommand("lambda-star", "bisect for the critical lambda");
  std::optional<double> lo, hi;
  lstar->add_option("--lo", lo, "admissible lower end");
  lstar->add_option("--hi", hi, "inadmissible upper end");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n" << app.help();
    return kUsage;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (tol) cfg.solver.tol = *tol;
    if (fp_tol) cfg.solver.fixed_point_tol = *fp_tol;
    if (tol_lambda) cfg.solver.tol_lambda = *tol_lambda;
    if (cap_factor) cfg.solver.cap_factor = *cap_factor;
    if (max_iter) cfg.solver.max_iter = *max_iter;
    check_config(cfg);
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << "\n";
    return kBadConfig;
  }

  const MeshPtr mesh = cfg.make_mesh();
  const ExponentField ef = cfg.exponent_field();
  ValidationReport report;
  try {
    report = validate_h0_h1i(ef, *mesh);
  } catch (const std::domain_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kValidation;
  }

  if (validate->parsed()) {
    out << "H_0: " << (report.h0_pass ? "pass" : "fail") << "\n";
    out << "H_1(i): " << (report.pass ? "pass" : "fail") << "\n";
    out << "violations:";
    if (report.violations.empty()) out << " none";
    for (const auto& v : report.violations) out << " " << v;
    out << "\n";
    out << bounds_line("p", report.p) << bounds_line("q", report.q)
        << bounds_line("eta", report.eta) << bounds_line("xi", report.xi)
        << bounds_line("r", report.r);
    return report.pass ? kOk : kValidation;
  }
  if (!report.pass) {
    err << "error: hypotheses fail:";
    for (const auto& v : report.violations) err << " " << v;
    err << "\n";
    return kValidation;
  }

  try {
    const SingularSolution sing = solve_pure_singular(ef, mesh, schedule_of(cfg.solver));
    if (!sing.converged) {
      err << "error: singular solve did not converge: " << sing.message << "\n";
      return kNoConvergence;
    }
    if (singular->parsed()) {
      err << "residual: " << format_number(sing.final_residual) << "\n"
          << "eps_monotonicity_violation: " << format_number(sing.monotonicity_violation) << "\n";
      return write_output(out_path, solution_json(sing.u_bar, std::nullopt, SolutionKind::singular), out, err)
                 ? kOk
                 : kIoError;
    }

    const Reaction reaction = cfg.make_reaction();
    LambdaProblem tmpl = make_lambda_problem(ef, reaction, cfg.lambda.value_or(0.0), sing.u_bar, cfg.solver.tol,
                                             cfg.solver.cap_factor);
    tmpl.max_iter = cfg.solver.max_iter;

    if (solve->parsed()) {
      if (!lambda) lambda = cfg.lambda;
      if (!lambda) {
        err << "error: solve needs --lambda or a 'lambda' entry in the config\n";
        return kUsage;
      }
      if (second && second_out.empty()) {
        err << "error: --second needs --second-out\n";
        return kUsage;
      }
      LambdaProblem prob = problem_at(tmpl, *lambda);
      const IterationReport rep = minimal_solution_iterate(prob);
      const SolutionCheck chk = verify_solution(prob, rep.u);
      err << "outcome: " << to_string(rep.outcome) << "\n"
          << "iterations: " << rep.iterations << "\n"
          << "shift: " << format_number(prob.shift_xi_hat) << "\n"
          << "residual: " << format_number(chk.residual_inf) << "\n"
          << "lower_bound_ok: " << (chk.lower_bound_ok ? "true" : "false") << "\n"
          << "positive_ok: " << (chk.positive_ok ? "true" : "false") << "\n";
      if (!admissible(prob, rep)) {
        err << "error: no minimal solution at lambda=" << format_number(*lambda) << " (" << rep.message << ")\n";
        return kNoConvergence;
      }
      if (!write_output(out_path, solution_json(rep.u, *lambda, SolutionKind::minimal), out, err)) return kIoError;
      if (second) {
        const MountainPassReport mp = mountain_pass(prob, rep.u);
        if (!mp.converged) {
          err << "error: mountain pass did not converge: " << mp.message << "\n";
          return kNoConvergence;
        }
        const SolutionCheck chk2 = verify_solution(prob, mp.u_hat);
        err << "second_residual: " << format_number(chk2.residual_inf) << "\n"
            << "second_level: " << format_number(mp.m_level) << "\n";
        if (!write_output(second_out, solution_json(mp.u_hat, *lambda, SolutionKind::second), out, err))
          return kIoError;
      }
      return kOk;
    }

    if (branch->parsed()) {
      if (grid.empty()) grid = cfg.lambda_grid;
      if (grid.empty()) {
        err << "error: branch needs --grid or a 'lambda_grid' entry in the config\n";
        return kUsage;
      }
      BranchOptions opts;
      opts.chain = cfg.chain && !no_chain;
      opts.jobs = jobs;
      if (jobs > 1 && opts.chain) err << "note: --jobs is ignored while warm-start chaining is on\n";
      opts.second_solutions = cfg.second_solutions || second_solutions;
      opts.left_continuity = cfg.left_continuity && !no_left;
      opts.tol_lambda = cfg.solver.tol_lambda;
      const Branch br = build_branch(tmpl, grid, opts);
      const BranchDiagnostics& d = br.diagnostics;
      err << "lambda_star: " << (br.lambda_star_estimate ? format_number(*br.lambda_star_estimate) : "none") << "\n"
          << "prefix_ok: " << (d.prefix_ok ? "true" : "false") << "\n"
          << "monotonicity_violation: " << format_number(d.monotonicity_violation) << "\n";
      if (d.left.computed)
        err << "left_continuity_gap: " << format_number(d.left.gap) << " at lambda=" << format_number(d.left.lambda_hat)
            << "\n";
      return write_output(out_path, branch_csv(br), out, err) ? kOk : kIoError;
    }

    if (lstar->parsed()) {
      LambdaBracket b;
      if (lo && hi) {
        b = {*lo, *hi};
      } else if (cfg.bracket) {
        b = *cfg.bracket;
      } else {
        const SolveReport up = solve_upper_hat(ef, sing.u_bar, cfg.solver.tol);
        if (!up.converged()) {
          err << "error: upper function solve failed: " << up.message << "\n";
          return kNoConvergence;
        }
        const double l0 = lambda0_estimate(up.u, reaction);
        if (!std::isfinite(l0)) {
          err << "error: the reaction vanishes; lambda* is infinite\n";
          return kNoConvergence;
        }
        b = find_lambda_bracket(tmpl, l0, 2.0 * l0);
      }
      const LambdaStarResult res = bisect_lambda_star(tmpl, b.lo, b.hi, cfg.solver.tol_lambda);
      out << "lambda_star: " << format_number(res.estimate) << "\n"
          << "bracket: " << format_number(res.bracket.lo) << " " << format_number(res.bracket.hi) << "\n"
          << "evaluations: " << res.evaluations << "\n";
      return kOk;
    }
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kNoConvergence;
  }
  return kUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace pqlap
