#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gscreen/errors.hpp"

namespace gscreen {

/// Closed-form scalar expressions over a declared variable list.
///
/// Grammar: decimal literals, variables, binary + - * / ^ (all
/// left-associative; ^ binds tightest, then unary -, then * /, then + -),
/// unary minus, one-argument functions exp, log, sqrt, sin, cos, abs, and
/// parentheses.  ^ with a non-integer constant exponent requires a positive
/// base; constant integer exponents are handled exactly.

enum class ExprFunc { Exp, Log, Sqrt, Sin, Cos, Abs };

struct ExprNode {
  enum class Kind { Constant, Variable, Unary, Binary, Call };
  Kind kind = Kind::Constant;
  double value = 0.0;   // Constant
  int var = -1;         // Variable
  char op = 0;          // Binary: + - * / ^   Unary: always negation
  ExprFunc func = ExprFunc::Exp;
  int a = -1, b = -1;   // child node indices (children precede parents)
};

struct Expr {
  std::vector<ExprNode> nodes;  // topological order, root last
  int root = -1;
  std::vector<std::string> variables;

  bool empty() const { return root < 0; }
  int arity() const { return static_cast<int>(variables.size()); }
  /// True if the expression references variable index `v` somewhere.
  bool references(int v) const;
};

/// Second-order jet: value with exact gradient and Hessian over the
/// expression's declared variables.  The Hessian is built from symmetric
/// updates, so it is symmetric bit-for-bit, not symmetrized after the fact.
struct Jet2 {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

Expr parse(const std::string& source, std::vector<std::string> variables);
std::string print(const Expr& e);

double eval_value(const Expr& e, const Eigen::VectorXd& point);
/// Value and exact gradient (first-order forward mode).
std::pair<double, Eigen::VectorXd> eval_grad(const Expr& e, const Eigen::VectorXd& point);
Jet2 eval_jet2(const Expr& e, const Eigen::VectorXd& point);

/// Mixed partial derivative of order 3 or 4 named by `multi_index`
/// (variable indices, one per differentiation).  The first two orders come
/// from the exact Hessian; the remaining one or two are central finite
/// differences with step h = max(1e-4, eps^(1/k)) * max(1, |point|_inf),
/// so the truncation error is O(h^2).
double eval_deriv_fd(const Expr& e, const Eigen::VectorXd& point, std::span<const int> multi_index);

/// Structural equality of the node trees (used by round-trip tests).
bool same_tree(const Expr& a, const Expr& b);

/// Convenience constructors for assembling expressions programmatically.
Expr expr_constant(double c, std::vector<std::string> variables);
Expr expr_variable(int var, std::vector<std::string> variables);
Expr expr_binary(char op, const Expr& a, const Expr& b);   // operands share variables
Expr expr_negate(const Expr& a);
/// Re-declare `e` over `variables`, remapping each old variable by name.
Expr expr_rebase(const Expr& e, std::vector<std::string> variables);

}  // namespace gscreen
