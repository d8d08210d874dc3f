#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gscreen/errors.hpp"
#include "gscreen/oracle.hpp"
#include "gscreen/solver.hpp"
#include "test_support.hpp"

using namespace gscreen;
using testsupport::box1;
using testsupport::vec1;

namespace {

DiscreteInstance make_instance(const ModelSpec& spec, std::vector<Eigen::VectorXd> axes,
                               std::uint64_t seed = 0) {
  DiscreteInstance inst;
  inst.spec = spec;
  inst.agents = make_agent_grid(spec, axes);
  inst.options.seed = seed;
  return inst;
}

}  // namespace

TEST_CASE("single-agent quasilinear closed form") {
  // max z - y^2/2 s.t. y - z >= 0 at x = 1: y = z = 1, profit 1/2.
  ModelSpec q = builtin_model("quasilinear");
  DiscreteInstance inst = make_instance(q, {vec1(1.0)});
  Solution sol = solve_principal(inst);
  CHECK(sol.profit == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(sol.y(0, 0) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(sol.ic_residual >= -1e-6);
  CHECK(sol.ir_residual >= -1e-6);
}

TEST_CASE("zero-sum profit is pinned at the participation bound") {
  ModelSpec zs = builtin_model("zero_sum_profit");
  DiscreteInstance inst = make_instance(zs, {(Eigen::VectorXd(5) << 0.1, 0.3, 0.5, 0.7, 0.9).finished()});
  Solution sol = solve_principal(inst);
  double bound = 0;  // -sum mu_i u_outside(x_i) with u_outside = 0
  CHECK(sol.profit == doctest::Approx(bound).epsilon(1e-4));
  CHECK(sol.profit <= bound + 1e-6);
}

TEST_CASE("degenerate single-product box reduces to one common price") {
  // Y = {1}: incentive compatibility forces a common price; the optimum is
  // the best common price, found here by a fine 1-D scan.
  ModelSpec spec;
  spec.m = spec.n = 1;
  spec.X = box1(0, 1);
  spec.Y = box1(1, 1);
  spec.z_lo = 0;
  spec.z_hi = 1;
  auto vars = model_variables(1, 1);
  spec.G = parse("x1*y1 - z", vars);
  spec.pi = parse("z - y1^2/2", vars);
  spec.y_outside = vec1(1.0);
  spec.z_outside = 1.0;
  validate(spec);

  DiscreteInstance inst =
      make_instance(spec, {(Eigen::VectorXd(2) << 0.25, 0.75).finished()});
  Solution sol = solve_principal(inst);
  CHECK(std::abs(sol.z[0] - sol.z[1]) < 1e-6);

  double best_scan = -1e300;
  for (int k = 0; k <= 100000; ++k) {
    double z = k / 100000.0;
    // Below the cap both agents participate (u_outside = x - 1 <= x - z).
    double profit = z - 0.5;
    if (profit > best_scan) best_scan = profit;
  }
  CHECK(sol.profit == doctest::Approx(best_scan).epsilon(1e-4));
}

TEST_CASE("returned solutions are feasible and the trace is monotone") {
  for (const auto& name : builtin_model_names()) {
    ModelSpec spec = builtin_model(name);
    DiscreteInstance inst;
    inst.spec = spec;
    inst.agents = make_agent_grid(spec, std::vector<int>{7});
    inst.options.seed = 5;
    inst.options.multistart = 4;
    inst.options.random_menu_starts = 64;
    Solution sol = solve_principal(inst);
    CHECK(sol.ic_residual >= -1e-6);
    CHECK(sol.ir_residual >= -1e-6);
    VerifyResult v = verify_solution(inst, sol);
    CHECK(v.feasible);
    CHECK(v.profit == doctest::Approx(sol.profit).epsilon(1e-12));
    for (std::size_t k = 1; k < sol.profit_trace.size(); ++k)
      CHECK(sol.profit_trace[k] >= sol.profit_trace[k - 1] - 1e-12);
  }
}

TEST_CASE("hand-corrupted solution is flagged infeasible") {
  ModelSpec q = builtin_model("quasilinear");
  DiscreteInstance inst = make_instance(q, {(Eigen::VectorXd(3) << 0.2, 0.5, 0.9).finished()});
  Solution sol = solve_principal(inst);
  REQUIRE(verify_solution(inst, sol).feasible);
  Solution bad = sol;
  bad.z[0] = std::min(q.z_hi, bad.z[0] + 0.5);  // overprice the low type
  bad.u[0] = q.utility(inst.agents.agent(0), bad.y.row(0).transpose(), bad.z[0]);
  VerifyResult v = verify_solution(inst, bad);
  CHECK(!v.feasible);
}

TEST_CASE("quasilinear allocation is monotone in the type") {
  ModelSpec q = builtin_model("quasilinear");
  DiscreteInstance inst;
  inst.spec = q;
  inst.agents = make_agent_grid(q, std::vector<int>{11});
  inst.options.seed = 2;
  Solution sol = solve_principal(inst);
  for (int i = 1; i < inst.agents.size(); ++i)
    CHECK(sol.y(i, 0) >= sol.y(i - 1, 0) - 1e-6);
}

TEST_CASE("pooling start is always feasible") {
  ModelSpec q = builtin_model("quasilinear");
  DiscreteInstance inst = make_instance(q, {(Eigen::VectorXd(4) << 0.2, 0.4, 0.6, 0.8).finished()});
  // Degenerate solver budget: zero outer iterations still returns the
  // repaired pooling menu.
  inst.options.outer_iterations = 0;
  inst.options.random_menu_starts = 0;
  inst.options.multistart = 1;
  Solution sol = solve_principal(inst);
  CHECK(sol.ic_residual >= -1e-12);
  CHECK(sol.ir_residual >= -1e-12);
  CHECK(sol.profit >= -1e-12);  // pi at the outside option is 0 here
}

TEST_CASE("determinism: same seed, same run") {
  ModelSpec ps = builtin_model("price_sensitive");
  DiscreteInstance inst;
  inst.spec = ps;
  inst.agents = make_agent_grid(ps, std::vector<int>{5});
  inst.options.seed = 77;
  inst.options.multistart = 3;
  inst.options.random_menu_starts = 32;
  Solution a = solve_principal(inst);
  Solution b = solve_principal(inst);
  CHECK(a.profit == b.profit);
  CHECK((a.z - b.z).lpNorm<Eigen::Infinity>() == 0.0);
  UniquenessProbe probe = uniqueness_probe(inst, std::vector<std::uint64_t>{77, 77});
  CHECK(probe.max_distance == 0.0);
}

TEST_CASE("uniqueness probe on the uniformly concave model") {
  ModelSpec ps = builtin_model("price_sensitive");
  DiscreteInstance inst;
  inst.spec = ps;
  inst.agents = make_agent_grid(ps, std::vector<int>{7});
  inst.options.seed = 1;
  inst.options.multistart = 4;
  inst.options.random_menu_starts = 64;
  UniquenessProbe probe = uniqueness_probe(inst, 4);
  CHECK(probe.max_distance < 1e-3);
}

TEST_CASE("oracle: outside option only") {
  ModelSpec q = builtin_model("quasilinear");
  AgentGrid agents = make_agent_grid(q, std::vector<int>{4});
  Eigen::MatrixXd products(1, 1);
  products << 0.0;  // just the outside option
  OracleResult res = enumerate_menus(q, agents, products, 5);
  CHECK(res.menus_evaluated == 1);
  double expect = 0;
  for (int i = 0; i < agents.size(); ++i)
    expect += agents.weights[i] * q.profit(agents.agent(i), q.y_outside, q.z_outside);
  CHECK(res.best_profit == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("oracle: two agents, two products, three price levels by hand") {
  // Products {0, 1}, price levels {0, 1, 2} on Z = (0, 2); agents 0.3, 0.9.
  //   v(1) = 0: both buy, pi = -1/2 each: profit -1/2.
  //   v(1) = 1: both prefer the outside option: profit 0.
  //   v(1) = 2: same: profit 0.
  // Ties resolve to the earliest assignment: v(1) = 1.
  ModelSpec q = builtin_model("quasilinear");
  AgentGrid agents = make_agent_grid(
      q, std::vector<Eigen::VectorXd>{(Eigen::VectorXd(2) << 0.3, 0.9).finished()});
  Eigen::MatrixXd products(2, 1);
  products << 0.0, 1.0;
  OracleResult res = enumerate_menus(q, agents, products, 3);
  CHECK(res.menus_evaluated == 3);
  CHECK(res.best_profit == doctest::Approx(0.0));
  CHECK(res.best_menu.prices[1] == doctest::Approx(1.0));
}

TEST_CASE("oracle: single price level is a flat menu") {
  ModelSpec q = builtin_model("quasilinear");
  AgentGrid agents = make_agent_grid(q, std::vector<int>{3});
  Eigen::MatrixXd products = uniform_product_grid(q, 3);
  OracleResult res = enumerate_menus(q, agents, products, 1);
  CHECK(res.menus_evaluated == 1);
  Menu flat = make_menu(q, products, Eigen::VectorXd::Constant(products.rows(), q.z_lo));
  IndirectUtility alloc = utility_from_menu(q, flat, agents);
  CHECK(res.best_profit == doctest::Approx(profit_functional(q, alloc)).epsilon(1e-12));
}

TEST_CASE("oracle guard rejects oversized enumerations") {
  ModelSpec q = builtin_model("quasilinear");
  AgentGrid agents = make_agent_grid(q, std::vector<int>{2});
  Eigen::MatrixXd products = uniform_product_grid(q, 9);
  CHECK_THROWS_AS(enumerate_menus(q, agents, products, 10), TooLargeError);
}

TEST_CASE("oracle best menu induces an incentive-compatible allocation") {
  ModelSpec ps = builtin_model("price_sensitive");
  AgentGrid agents = make_agent_grid(ps, std::vector<int>{4});
  Eigen::MatrixXd products = uniform_product_grid(ps, 3);
  OracleResult res = enumerate_menus(ps, agents, products, 4);
  IndirectUtility alloc = utility_from_menu(ps, res.best_menu, agents);
  CHECK(check_incentive_compatible(ps, alloc).ok);
  CHECK(res.best_profit == doctest::Approx(profit_functional(ps, alloc)).epsilon(1e-12));
}

TEST_CASE("solver dominates the oracle on a shared instance") {
  ModelSpec q = builtin_model("quasilinear");
  DiscreteInstance inst;
  inst.spec = q;
  inst.agents = make_agent_grid(q, std::vector<int>{4});
  inst.options.seed = 3;
  inst.options.multistart = 4;
  inst.options.random_menu_starts = 128;
  Eigen::MatrixXd products = uniform_product_grid(q, 4);
  OracleResult oracle = enumerate_menus(q, inst.agents, products, 6);
  Solution sol = solve_principal(inst);
  CHECK(sol.profit >= oracle.best_profit - 1e-3);
}
