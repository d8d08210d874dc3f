// gscreen: screening / nonlinear-pricing toolkit.
//
// Subcommands: check, certify, solve, segment, respond, oracle.
// Exit codes: 0 success or definitive verdict, 1 hypothesis failure,
// 2 input error, 3 inconclusive, 4 no convergence.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gscreen/certify.hpp"
#include "gscreen/errors.hpp"
#include "gscreen/geometry.hpp"
#include "gscreen/io.hpp"
#include "gscreen/model.hpp"
#include "gscreen/model_file.hpp"
#include "gscreen/oracle.hpp"
#include "gscreen/parallel.hpp"
#include "gscreen/solver.hpp"

namespace {

using namespace gscreen;

constexpr int kExitOk = 0;
constexpr int kExitHypothesisFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitNoConvergence = 4;

struct ModelArgs {
  std::string file;
  std::string builtin;
};

void add_model_options(CLI::App* cmd, ModelArgs& args) {
  auto* file = cmd->add_option("--model", args.file, "model file (JSON syntax)");
  auto* builtin = cmd->add_option("--builtin", args.builtin,
                                  "builtin model name: quasilinear, price_sensitive, "
                                  "inhomogeneous, zero_sum_profit");
  file->excludes(builtin);
}

ModelSpec resolve_model(const ModelArgs& args) {
  if (!args.file.empty()) return load_model_file(args.file);
  if (!args.builtin.empty()) return builtin_model(args.builtin);
  throw InputError("one of --model or --builtin is required");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

std::vector<int> parse_grid_counts(const ModelSpec& spec, int agents) {
  return std::vector<int>(static_cast<std::size_t>(spec.m), agents);
}

std::vector<Eigen::VectorXd> parse_grid_spec(const ModelSpec& spec, const std::string& text) {
  // Per-axis explicit coordinates: axes separated by ';', values by ','.
  std::vector<Eigen::VectorXd> axes;
  std::istringstream ss(text);
  std::string axis;
  while (std::getline(ss, axis, ';')) {
    std::vector<double> vals;
    std::istringstream as(axis);
    std::string v;
    while (std::getline(as, v, ',')) vals.push_back(std::stod(v));
    Eigen::VectorXd ax(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) ax[static_cast<Eigen::Index>(i)] = vals[i];
    axes.push_back(ax);
  }
  if (static_cast<int>(axes.size()) != spec.m)
    throw InputError("--grid needs one ';'-separated axis per agent dimension");
  return axes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "gscreen: certifies concavity/convexity of a monopolist's profit objective under general "
      "price-nonlinear preferences and solves the discretized screening program"};
  app.require_subcommand(1);

  int threads = 1;
  if (const char* env = std::getenv("GSCREEN_THREADS")) threads = std::max(1, std::atoi(env));
  app.add_option("--threads", threads, "worker cap for sampled loops (env GSCREEN_THREADS)");

  // ---- check
  auto* check = app.add_subcommand("check", "verify the standing hypotheses by sampling");
  ModelArgs check_model;
  add_model_options(check, check_model);
  int check_samples = 512;
  std::uint64_t check_seed = 0;
  std::string check_out;
  check->add_option("--samples", check_samples, "sample count per hypothesis");
  check->add_option("--seed", check_seed, "sample sequence offset");
  check->add_option("--out", check_out, "also write the report to this file");

  // ---- certify
  auto* certify_cmd = app.add_subcommand("certify", "classify curvature of the profit objective");
  ModelArgs certify_model;
  add_model_options(certify_cmd, certify_model);
  int certify_samples = 4096;
  double certify_tol = 1e-8;
  std::uint64_t certify_seed = 0;
  std::string certify_methods = "lemma49,examples";
  std::string certify_out;
  certify_cmd->add_option("--samples", certify_samples, "criterion sample count");
  certify_cmd->add_option("--tol", certify_tol, "eigenvalue tolerance (absolute, scaled when |A| > 1)");
  certify_cmd->add_option("--seed", certify_seed, "sample sequence offset");
  certify_cmd->add_option("--methods", certify_methods,
                          "comma list of lemma49, examples, fourth_order, local_b");
  certify_cmd->add_option("--out", certify_out, "also write the report to this file");

  // ---- solve
  auto* solve_cmd = app.add_subcommand("solve", "solve the discretized principal's program");
  ModelArgs solve_model;
  add_model_options(solve_cmd, solve_model);
  int solve_agents = 11;
  std::string solve_grid;
  int solve_multistart = 8;
  std::uint64_t solve_seed = 0;
  std::string solve_out;
  solve_cmd->add_option("--agents", solve_agents, "agents per axis (uniform grid over cl(X))");
  solve_cmd->add_option("--grid", solve_grid,
                        "explicit agent grid: per-axis coordinates, ',' within an axis, ';' between axes");
  solve_cmd->add_option("--multistart", solve_multistart, "number of ascent starts");
  solve_cmd->add_option("--seed", solve_seed, "random seed (recorded in the solution)");
  solve_cmd->add_option("--out", solve_out, "write the per-agent solution CSV here");

  // ---- segment
  auto* segment_cmd = app.add_subcommand("segment", "solve a G-segment and emit its samples");
  ModelArgs segment_model;
  add_model_options(segment_cmd, segment_model);
  std::vector<double> seg_x0, seg_from, seg_to;
  int seg_steps = 64;
  std::string seg_out;
  segment_cmd->add_option("--x0", seg_x0, "agent point (m values)")->required();
  segment_cmd->add_option("--from", seg_from, "start contract: y1..yn z")->required();
  segment_cmd->add_option("--to", seg_to, "end contract: y1..yn z")->required();
  segment_cmd->add_option("--steps", seg_steps, "uniform t-steps");
  segment_cmd->add_option("--out", seg_out, "write the CSV here (default stdout)");

  // ---- respond
  auto* respond_cmd = app.add_subcommand("respond", "best responses of an agent grid to a menu CSV");
  ModelArgs respond_model;
  add_model_options(respond_cmd, respond_model);
  std::string respond_menu;
  int respond_agents = 11;
  std::string respond_grid;
  std::string respond_out;
  respond_cmd->add_option("--menu", respond_menu, "menu CSV (columns y1..yn, price)")->required();
  respond_cmd->add_option("--agents", respond_agents, "agents per axis");
  respond_cmd->add_option("--grid", respond_grid, "explicit agent grid (see solve --grid)");
  respond_cmd->add_option("--out", respond_out, "write the CSV here (default stdout)");

  // ---- oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive menu enumeration at tiny scale");
  ModelArgs oracle_model;
  add_model_options(oracle_cmd, oracle_model);
  int oracle_agents = 6;
  int oracle_products = 6;
  int oracle_prices = 8;
  std::string oracle_out;
  oracle_cmd->add_option("--agents", oracle_agents, "agents per axis");
  oracle_cmd->add_option("--products", oracle_products, "product grid size (outside option included)");
  oracle_cmd->add_option("--prices", oracle_prices, "price levels");
  oracle_cmd->add_option("--out", oracle_out, "write the best-response CSV here");

  CLI11_PARSE(app, argc, argv);
  set_worker_count(threads);

  try {
    if (*check) {
      ModelSpec spec = resolve_model(check_model);
      HypothesisReport report = check_hypotheses(spec, check_samples, check_seed);
      std::string text = hypothesis_report_json(report);
      std::cout << text << "\n";
      write_text(check_out, text);
      return report.all_pass() ? kExitOk : kExitHypothesisFailure;
    }

    if (*certify_cmd) {
      ModelSpec spec = resolve_model(certify_model);
      std::vector<CertifyMethod> methods;
      std::istringstream ms(certify_methods);
      std::string name;
      while (std::getline(ms, name, ',')) {
        if (name == "lemma49")
          methods.push_back(CertifyMethod::MatrixCriterion);
        else if (name == "examples")
          methods.push_back(CertifyMethod::ClosedForm);
        else if (name == "fourth_order")
          methods.push_back(CertifyMethod::FourthOrder);
        else if (name == "local_b")
          methods.push_back(CertifyMethod::LocalEnvelope);
        else
          throw InputError("unknown certification method '" + name + "'");
      }
      CertifyOptions options;
      options.samples = certify_samples;
      options.tol = certify_tol;
      options.seed = certify_seed;
      CombinedReport report = certify(spec, methods, options);
      std::string text = certification_report_json(report);
      std::cout << text << "\n";
      write_text(certify_out, text);
      return report.verdict == Verdict::Inconclusive ? kExitInconclusive : kExitOk;
    }

    if (*solve_cmd) {
      ModelSpec spec = resolve_model(solve_model);
      DiscreteInstance instance;
      instance.spec = spec;
      instance.agents = solve_grid.empty()
                            ? make_agent_grid(spec, parse_grid_counts(spec, solve_agents))
                            : make_agent_grid(spec, parse_grid_spec(spec, solve_grid));
      instance.options.multistart = solve_multistart;
      instance.options.seed = solve_seed;
      Solution sol = solve_principal(instance);
      std::cout << solution_summary_json(sol) << "\n";
      if (!solve_out.empty()) {
        std::ofstream out(solve_out);
        if (!out) throw InputError("cannot write '" + solve_out + "'");
        write_solution_csv(out, spec, instance.agents, sol.allocation(instance));
      } else {
        write_solution_csv(std::cout, spec, instance.agents, sol.allocation(instance));
      }
      return sol.converged ? kExitOk : kExitNoConvergence;
    }

    if (*segment_cmd) {
      ModelSpec spec = resolve_model(segment_model);
      if (static_cast<int>(seg_x0.size()) != spec.m) throw InputError("--x0 needs m values");
      if (static_cast<int>(seg_from.size()) != spec.n + 1 ||
          static_cast<int>(seg_to.size()) != spec.n + 1)
        throw InputError("--from/--to need n+1 values (y1..yn z)");
      Eigen::VectorXd x0(spec.m), yf(spec.n), yt(spec.n);
      for (int i = 0; i < spec.m; ++i) x0[i] = seg_x0[static_cast<std::size_t>(i)];
      for (int i = 0; i < spec.n; ++i) yf[i] = seg_from[static_cast<std::size_t>(i)];
      for (int i = 0; i < spec.n; ++i) yt[i] = seg_to[static_cast<std::size_t>(i)];
      GSegment seg = solve_g_segment(spec, x0, yf, seg_from.back(), yt, seg_to.back(), seg_steps);
      if (!seg_out.empty()) {
        std::ofstream out(seg_out);
        if (!out) throw InputError("cannot write '" + seg_out + "'");
        write_segment_csv(out, spec, seg);
      } else {
        write_segment_csv(std::cout, spec, seg);
      }
      return kExitOk;
    }

    if (*respond_cmd) {
      ModelSpec spec = resolve_model(respond_model);
      std::ifstream menu_in(respond_menu);
      if (!menu_in) throw InputError("cannot open menu CSV '" + respond_menu + "'");
      Menu menu = read_menu_csv(menu_in, spec);
      AgentGrid agents = respond_grid.empty()
                             ? make_agent_grid(spec, parse_grid_counts(spec, respond_agents))
                             : make_agent_grid(spec, parse_grid_spec(spec, respond_grid));
      IndirectUtility alloc = utility_from_menu(spec, menu, agents);
      if (!respond_out.empty()) {
        std::ofstream out(respond_out);
        if (!out) throw InputError("cannot write '" + respond_out + "'");
        write_respond_csv(out, spec, alloc);
      } else {
        write_respond_csv(std::cout, spec, alloc);
      }
      return kExitOk;
    }

    if (*oracle_cmd) {
      ModelSpec spec = resolve_model(oracle_model);
      AgentGrid agents = make_agent_grid(spec, parse_grid_counts(spec, oracle_agents));
      Eigen::MatrixXd products = uniform_product_grid(spec, oracle_products);
      OracleResult result = enumerate_menus(spec, agents, products, oracle_prices);
      std::cout << "{\n  \"best_profit\": " << format_double(result.best_profit)
                << ",\n  \"menus_evaluated\": " << result.menus_evaluated
                << ",\n  \"runtime_seconds\": " << format_double(result.runtime_seconds) << "\n}\n";
      IndirectUtility alloc = utility_from_menu(spec, result.best_menu, agents);
      if (!oracle_out.empty()) {
        std::ofstream out(oracle_out);
        if (!out) throw InputError("cannot write '" + oracle_out + "'");
        write_solution_csv(out, spec, agents, alloc);
      } else {
        write_solution_csv(std::cout, spec, agents, alloc);
      }
      return kExitOk;
    }
  } catch (const SyntaxError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const UnknownVariableError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ArityError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const FamilyMismatchError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const NoConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
