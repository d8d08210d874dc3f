#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "gscreen/expr.hpp"
#include "gscreen/sampling.hpp"

using namespace gscreen;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

// Independent oracle: central differences on values (gradient) and on exact
// gradients (Hessian).
Eigen::VectorXd fd_gradient(const Expr& e, const Eigen::VectorXd& p) {
  double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, p.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd up = p, dn = p;
    up[i] += h;
    dn[i] -= h;
    g[i] = (eval_value(e, up) - eval_value(e, dn)) / (2 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Expr& e, const Eigen::VectorXd& p) {
  double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, p.lpNorm<Eigen::Infinity>());
  Eigen::MatrixXd H(p.size(), p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd up = p, dn = p;
    up[i] += h;
    dn[i] -= h;
    H.col(i) = (eval_grad(e, up).second - eval_grad(e, dn).second) / (2 * h);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace

TEST_CASE("parse basics and structure") {
  Expr e = parse("x1*y1 - z", {"x1", "y1", "z"});
  CHECK(e.variables.size() == 3);
  CHECK(e.references(0));
  CHECK(e.references(1));
  CHECK(e.references(2));

  Expr e2 = parse("x1*y1 - z^2", {"x1", "y1", "z"});
  Expr round = parse(print(e2), {"x1", "y1", "z"});
  CHECK(same_tree(e2, round));
}

TEST_CASE("parse error positions") {
  CHECK_THROWS_AS(parse("", {"z"}), SyntaxError);
  try {
    parse("x1*(y1 -", {"x1", "y1", "z"});
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& err) {
    CHECK(err.offset == 8);
  }
  try {
    parse("x1 + w2", {"x1", "y1", "z"});
    FAIL("expected UnknownVariableError");
  } catch (const UnknownVariableError& err) {
    CHECK(err.offset == 5);
  }
  CHECK_THROWS_AS(parse("exp(x1, y1)", {"x1", "y1"}), ArityError);
  CHECK_THROWS_AS(parse("z(1)", {"z"}), SyntaxError);
}

TEST_CASE("bilinear jet is exact") {
  Expr e = parse("x1*y1 - z", {"x1", "y1", "z"});
  Jet2 jet = eval_jet2(e, vec({2, 3, 1}));
  CHECK(jet.value == 5.0);
  CHECK(jet.gradient[0] == 3.0);
  CHECK(jet.gradient[1] == 2.0);
  CHECK(jet.gradient[2] == -1.0);
  Eigen::MatrixXd H = jet.hessian;
  CHECK(H(0, 1) == 1.0);
  CHECK(H(1, 0) == 1.0);
  H(0, 1) = H(1, 0) = 0;
  CHECK(H.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("monomial jet") {
  Expr e = parse("z^2", {"z"});
  Jet2 jet = eval_jet2(e, vec({1.5}));
  CHECK(jet.value == 2.25);
  CHECK(jet.gradient[0] == 3.0);
  CHECK(jet.hessian(0, 0) == 2.0);
}

TEST_CASE("exp jet against finite differences") {
  // Oracle-checked values: H_zz = x1^2 exp(x1 z) = 1 at (1, 0).
  Expr e = parse("exp(x1*z)", {"x1", "z"});
  Eigen::VectorXd p = vec({1, 0});
  Jet2 jet = eval_jet2(e, p);
  CHECK(jet.value == 1.0);
  CHECK(jet.gradient[0] == 0.0);
  CHECK(jet.gradient[1] == 1.0);
  CHECK(jet.hessian(0, 0) == doctest::Approx(0).epsilon(1e-12));
  CHECK(jet.hessian(0, 1) == doctest::Approx(1).epsilon(1e-12));
  CHECK(jet.hessian(1, 1) == doctest::Approx(1).epsilon(1e-12));
  Eigen::VectorXd g_fd = fd_gradient(e, p);
  Eigen::MatrixXd h_fd = fd_hessian(e, p);
  CHECK((jet.gradient - g_fd).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK((jet.hessian - h_fd).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("AD matches finite differences on an expression corpus") {
  struct Case {
    const char* src;
    std::vector<std::string> vars;
    Eigen::VectorXd lo, hi;
  };
  std::vector<Case> corpus = {
      {"x1*y1 - z", {"x1", "y1", "z"}, vec({0.1, 0.1, 0.1}), vec({1, 1, 1})},
      {"x1*y1 - z^2", {"x1", "y1", "z"}, vec({0.1, 0.1, 0.2}), vec({1, 1, 1.5})},
      {"x1*y1 - (1 + 0.5*x1)*z", {"x1", "y1", "z"}, vec({0.5, 0.1, 0.1}), vec({1.5, 1, 1})},
      {"exp(x1*z) + sin(y1)*cos(z)", {"x1", "y1", "z"}, vec({0.1, 0.1, 0.1}), vec({1, 1, 1})},
      {"log(x1 + z) * sqrt(y1 + 1)", {"x1", "y1", "z"}, vec({0.2, 0.2, 0.2}), vec({1, 1, 1})},
      {"abs(x1 - 0.5) + z^3/3 - y1^2/2", {"x1", "y1", "z"}, vec({0.6, 0.1, 0.1}), vec({1, 1, 1})},
      {"(x1 + y1)^2.5 / (1 + z)", {"x1", "y1", "z"}, vec({0.2, 0.2, 0.1}), vec({1, 1, 1})},
      {"2^-3 + x1^-1", {"x1"}, vec({0.5}), vec({2})},
  };
  for (const auto& c : corpus) {
    Expr e = parse(c.src, c.vars);
    Rng rng(42);
    for (int s = 0; s < 200; ++s) {
      Eigen::VectorXd p = rng.uniform_in(c.lo, c.hi);
      Jet2 jet = eval_jet2(e, p);
      Eigen::VectorXd g_fd = fd_gradient(e, p);
      Eigen::MatrixXd h_fd = fd_hessian(e, p);
      double gs = std::max(1.0, jet.gradient.lpNorm<Eigen::Infinity>());
      double hs = std::max(1.0, jet.hessian.lpNorm<Eigen::Infinity>());
      CHECK((jet.gradient - g_fd).lpNorm<Eigen::Infinity>() / gs < 1e-6);
      CHECK((jet.hessian - h_fd).lpNorm<Eigen::Infinity>() / hs < 1e-6);
      // Hessian symmetric bit-for-bit.
      CHECK((jet.hessian - jet.hessian.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    }
    // Printing normalizes idempotently.
    Expr once = parse(print(e), c.vars);
    Expr twice = parse(print(once), c.vars);
    CHECK(same_tree(once, twice));
    CHECK(same_tree(e, once));
  }
}

TEST_CASE("deterministic evaluation") {
  Expr e = parse("exp(x1*z) + sin(y1)*cos(z) - z^3/7", {"x1", "y1", "z"});
  Eigen::VectorXd p = vec({0.3, 0.7, 0.9});
  Jet2 a = eval_jet2(e, p);
  Jet2 b = eval_jet2(e, p);
  CHECK(a.value == b.value);
  CHECK((a.gradient - b.gradient).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.hessian - b.hessian).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("third and fourth finite-difference derivatives") {
  Expr bilinear = parse("x1*y1 - z", {"x1", "y1", "z"});
  int idx3[3] = {0, 1, 2};
  CHECK(eval_deriv_fd(bilinear, vec({0.5, 0.5, 0.5}), idx3) == doctest::Approx(0).epsilon(1e-9));

  Expr cubic = parse("x1*z^3", {"x1", "z"});
  int zzz[3] = {1, 1, 1};
  CHECK(eval_deriv_fd(cubic, vec({1, 1}), zzz) == doctest::Approx(6).epsilon(1e-6));

  Expr quartic = parse("z^4", {"z"});
  int zzzz[4] = {0, 0, 0, 0};
  CHECK(eval_deriv_fd(quartic, vec({1}), zzzz) == doctest::Approx(24).epsilon(1e-4));

  Expr mixed = parse("x1^2*z^2", {"x1", "z"});
  int xxzz[4] = {0, 1, 0, 1};
  CHECK(eval_deriv_fd(mixed, vec({1, 1}), xxzz) == doctest::Approx(4).epsilon(1e-4));
}

TEST_CASE("domain and finiteness errors") {
  Expr lg = parse("log(z)", {"z"});
  CHECK_THROWS_AS(eval_jet2(lg, vec({-1})), DomainError);
  CHECK_THROWS_AS(eval_jet2(lg, vec({0})), DomainError);
  Expr sq = parse("sqrt(z)", {"z"});
  CHECK_THROWS_AS(eval_jet2(sq, vec({-1})), DomainError);
  Expr pw = parse("z^0.5", {"z"});
  CHECK_THROWS_AS(eval_jet2(pw, vec({-1})), DomainError);
  Expr div = parse("1/z", {"z"});
  CHECK_THROWS_AS(eval_jet2(div, vec({0})), NonFiniteError);
  Expr big = parse("exp(exp(z))", {"z"});
  CHECK_THROWS_AS(eval_value(big, vec({100})), NonFiniteError);
  // Integer exponents tolerate negative bases.
  Expr ip = parse("z^3", {"z"});
  CHECK(eval_value(ip, vec({-2})) == -8.0);
  Expr in = parse("z^-2", {"z"});
  CHECK(eval_value(in, vec({-2})) == 0.25);
}

TEST_CASE("power associativity is left") {
  Expr e = parse("2^3^2", {});
  CHECK(eval_value(e, Eigen::VectorXd(0)) == 64.0);
}
