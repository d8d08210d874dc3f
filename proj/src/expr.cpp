#include "gscreen/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <utility>

namespace gscreen {

namespace {

// ---------------------------------------------------------------- tokenizer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  double num = 0.0;
  std::string text;
  std::size_t offset = 0;
};

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    Token t;
    t.offset = i;
    if ((c >= '0' && c <= '9') || c == '.') {
      double value = 0.0;
      const char* begin = src.data() + i;
      const char* end = src.data() + src.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr == begin) throw SyntaxError("malformed number", i);
      t.kind = Tok::Number;
      t.num = value;
      t.text.assign(begin, ptr);
      i += static_cast<std::size_t>(ptr - begin);
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.kind = Tok::Ident;
      t.text = src.substr(i, j - i);
      i = j;
    } else {
      switch (c) {
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '*': t.kind = Tok::Star; break;
        case '/': t.kind = Tok::Slash; break;
        case '^': t.kind = Tok::Caret; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case ',': t.kind = Tok::Comma; break;
        default: throw SyntaxError(std::string("unexpected character '") + c + "'", i);
      }
      ++i;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.offset = src.size();
  out.push_back(end);
  return out;
}

const std::map<std::string, ExprFunc>& function_table() {
  static const std::map<std::string, ExprFunc> table = {
      {"exp", ExprFunc::Exp}, {"log", ExprFunc::Log}, {"sqrt", ExprFunc::Sqrt},
      {"sin", ExprFunc::Sin}, {"cos", ExprFunc::Cos}, {"abs", ExprFunc::Abs},
  };
  return table;
}

// ------------------------------------------------------------------- parser

struct Parser {
  const std::vector<Token>& toks;
  Expr& out;
  std::size_t pos = 0;

  const Token& peek() const { return toks[pos]; }
  const Token& advance() { return toks[pos++]; }
  bool accept(Tok k) {
    if (peek().kind == k) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(Tok k, const char* what) {
    if (!accept(k)) throw SyntaxError(std::string("expected ") + what, peek().offset);
  }

  int add(ExprNode n) {
    out.nodes.push_back(n);
    return static_cast<int>(out.nodes.size()) - 1;
  }

  int var_index(const std::string& name, std::size_t offset) const {
    for (std::size_t v = 0; v < out.variables.size(); ++v)
      if (out.variables[v] == name) return static_cast<int>(v);
    throw UnknownVariableError("unknown variable '" + name + "'", offset);
  }

  int parse_expr() {
    int lhs = parse_term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      char op = peek().kind == Tok::Plus ? '+' : '-';
      ++pos;
      int rhs = parse_term();
      ExprNode n;
      n.kind = ExprNode::Kind::Binary;
      n.op = op;
      n.a = lhs;
      n.b = rhs;
      lhs = add(n);
    }
    return lhs;
  }

  int parse_term() {
    int lhs = parse_unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      char op = peek().kind == Tok::Star ? '*' : '/';
      ++pos;
      int rhs = parse_unary();
      ExprNode n;
      n.kind = ExprNode::Kind::Binary;
      n.op = op;
      n.a = lhs;
      n.b = rhs;
      lhs = add(n);
    }
    return lhs;
  }

  int parse_unary() {
    if (accept(Tok::Minus)) {
      int child = parse_unary();
      ExprNode n;
      n.kind = ExprNode::Kind::Unary;
      n.op = '-';
      n.a = child;
      return add(n);
    }
    return parse_power();
  }

  int parse_power() {
    int lhs = parse_atom();
    while (peek().kind == Tok::Caret) {
      ++pos;
      int rhs = parse_power_rhs();
      ExprNode n;
      n.kind = ExprNode::Kind::Binary;
      n.op = '^';
      n.a = lhs;
      n.b = rhs;
      lhs = add(n);  // a^b^c groups as (a^b)^c
    }
    return lhs;
  }

  int parse_power_rhs() {
    if (accept(Tok::Minus)) {
      int child = parse_power_rhs();
      ExprNode n;
      n.kind = ExprNode::Kind::Unary;
      n.op = '-';
      n.a = child;
      return add(n);
    }
    return parse_atom();
  }

  int parse_atom() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      ++pos;
      ExprNode n;
      n.kind = ExprNode::Kind::Constant;
      n.value = t.num;
      return add(n);
    }
    if (t.kind == Tok::Ident) {
      ++pos;
      auto fn = function_table().find(t.text);
      if (fn != function_table().end() && peek().kind == Tok::LParen) {
        ++pos;
        int arg = parse_expr();
        if (peek().kind == Tok::Comma)
          throw ArityError("function '" + t.text + "' takes exactly one argument", peek().offset);
        expect(Tok::RParen, "')'");
        ExprNode n;
        n.kind = ExprNode::Kind::Call;
        n.func = fn->second;
        n.a = arg;
        return add(n);
      }
      if (peek().kind == Tok::LParen)
        throw SyntaxError("'" + t.text + "' is not a function", peek().offset);
      int v = var_index(t.text, t.offset);
      ExprNode n;
      n.kind = ExprNode::Kind::Variable;
      n.var = v;
      return add(n);
    }
    if (t.kind == Tok::LParen) {
      ++pos;
      int inner = parse_expr();
      expect(Tok::RParen, "')'");
      return inner;
    }
    throw SyntaxError("expected operand", t.offset);
  }
};

// Constant-fold a subtree made of constants and unary minus; used to decide
// whether a ^ exponent is an exact integer.
std::optional<double> fold_sign_constant(const Expr& e, int node) {
  const ExprNode& n = e.nodes[static_cast<std::size_t>(node)];
  if (n.kind == ExprNode::Kind::Constant) return n.value;
  if (n.kind == ExprNode::Kind::Unary) {
    auto inner = fold_sign_constant(e, n.a);
    if (inner) return -*inner;
  }
  return std::nullopt;
}

std::optional<long long> integer_exponent(const Expr& e, int node) {
  auto c = fold_sign_constant(e, node);
  if (!c) return std::nullopt;
  double v = *c;
  if (!std::isfinite(v) || std::abs(v) > 1e9) return std::nullopt;
  double r = std::nearbyint(v);
  if (r != v) return std::nullopt;
  return static_cast<long long>(r);
}

// ------------------------------------------------------------------ printer

int precedence(const Expr& e, int node) {
  const ExprNode& n = e.nodes[static_cast<std::size_t>(node)];
  switch (n.kind) {
    case ExprNode::Kind::Binary:
      if (n.op == '+' || n.op == '-') return 1;
      if (n.op == '*' || n.op == '/') return 2;
      return 4;  // ^
    case ExprNode::Kind::Unary:
      return 3;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void print_node(const Expr& e, int node, std::string& out) {
  const ExprNode& n = e.nodes[static_cast<std::size_t>(node)];
  auto child = [&](int c, bool parens) {
    if (parens) out += '(';
    print_node(e, c, out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      if (n.value < 0 || (n.value == 0 && std::signbit(n.value))) {
        out += "(";
        out += format_number(n.value);
        out += ")";
      } else {
        out += format_number(n.value);
      }
      break;
    case ExprNode::Kind::Variable:
      out += e.variables[static_cast<std::size_t>(n.var)];
      break;
    case ExprNode::Kind::Unary:
      out += '-';
      child(n.a, precedence(e, n.a) < 3);
      break;
    case ExprNode::Kind::Call: {
      static const char* names[] = {"exp", "log", "sqrt", "sin", "cos", "abs"};
      out += names[static_cast<int>(n.func)];
      out += '(';
      print_node(e, n.a, out);
      out += ')';
      break;
    }
    case ExprNode::Kind::Binary: {
      int p = precedence(e, node);
      // Right operand of -, /, ^ (and same-precedence chains generally) is
      // parenthesized so that reparsing reproduces the exact tree.
      bool lp = precedence(e, n.a) < p;
      bool rp = precedence(e, n.b) <= p;
      child(n.a, lp);
      out += ' ';
      out += n.op;
      out += ' ';
      child(n.b, rp);
      break;
    }
  }
}

// --------------------------------------------------------------- evaluation

double call_value(ExprFunc f, double a) {
  switch (f) {
    case ExprFunc::Exp: return std::exp(a);
    case ExprFunc::Log:
      if (a <= 0) throw DomainError("log of non-positive argument");
      return std::log(a);
    case ExprFunc::Sqrt:
      if (a <= 0) throw DomainError("sqrt of non-positive argument");
      return std::sqrt(a);
    case ExprFunc::Sin: return std::sin(a);
    case ExprFunc::Cos: return std::cos(a);
    case ExprFunc::Abs: return std::abs(a);
  }
  return 0;
}

// First and second derivative of a builtin at a.
void call_derivs(ExprFunc f, double a, double value, double& d1, double& d2) {
  switch (f) {
    case ExprFunc::Exp: d1 = value; d2 = value; break;
    case ExprFunc::Log: d1 = 1.0 / a; d2 = -1.0 / (a * a); break;
    case ExprFunc::Sqrt: d1 = 0.5 / value; d2 = -0.25 / (value * a); break;
    case ExprFunc::Sin: d1 = std::cos(a); d2 = -value; break;
    case ExprFunc::Cos: d1 = -std::sin(a); d2 = -value; break;
    case ExprFunc::Abs: d1 = a >= 0 ? 1.0 : -1.0; d2 = 0.0; break;
  }
}

// Power helpers shared by the three evaluation passes.  pw[0] = u^p, pw[1]
// and pw[2] are d/du and d2/du2; pv, pm the v-partials (general case only).
struct PowPartials {
  double w, wu, wv, wuu, wuv, wvv;
};

PowPartials pow_partials(const Expr& e, int exp_node, double u, double v) {
  PowPartials p{};
  if (auto k = integer_exponent(e, exp_node)) {
    double kk = static_cast<double>(*k);
    p.w = std::pow(u, kk);
    p.wu = *k == 0 ? 0.0 : kk * std::pow(u, kk - 1);
    p.wuu = (*k == 0 || *k == 1) ? 0.0 : kk * (kk - 1) * std::pow(u, kk - 2);
    p.wv = p.wuv = p.wvv = 0.0;
    return p;
  }
  if (u <= 0) throw DomainError("x^p with non-integer exponent requires positive base");
  double lu = std::log(u);
  p.w = std::pow(u, v);
  p.wu = v * p.w / u;
  p.wv = p.w * lu;
  p.wuu = v * (v - 1) * p.w / (u * u);
  p.wuv = p.w / u * (1 + v * lu);
  p.wvv = p.w * lu * lu;
  return p;
}

}  // namespace

bool Expr::references(int v) const {
  for (const ExprNode& n : nodes)
    if (n.kind == ExprNode::Kind::Variable && n.var == v) return true;
  return false;
}

Expr parse(const std::string& source, std::vector<std::string> variables) {
  if (source.empty()) throw SyntaxError("empty expression", 0);
  Expr e;
  e.variables = std::move(variables);
  auto toks = tokenize(source);
  Parser p{toks, e};
  e.root = p.parse_expr();
  if (p.peek().kind != Tok::End) throw SyntaxError("unexpected trailing input", p.peek().offset);
  return e;
}

std::string print(const Expr& e) {
  std::string out;
  print_node(e, e.root, out);
  return out;
}

double eval_value(const Expr& e, const Eigen::VectorXd& point) {
  if (point.size() != e.arity()) throw InputError("point dimension does not match declared variables");
  std::vector<double> v(e.nodes.size());
  for (std::size_t i = 0; i < e.nodes.size(); ++i) {
    const ExprNode& n = e.nodes[i];
    switch (n.kind) {
      case ExprNode::Kind::Constant: v[i] = n.value; break;
      case ExprNode::Kind::Variable: v[i] = point[n.var]; break;
      case ExprNode::Kind::Unary: v[i] = -v[static_cast<std::size_t>(n.a)]; break;
      case ExprNode::Kind::Call: v[i] = call_value(n.func, v[static_cast<std::size_t>(n.a)]); break;
      case ExprNode::Kind::Binary: {
        double a = v[static_cast<std::size_t>(n.a)];
        double b = v[static_cast<std::size_t>(n.b)];
        switch (n.op) {
          case '+': v[i] = a + b; break;
          case '-': v[i] = a - b; break;
          case '*': v[i] = a * b; break;
          case '/': v[i] = a / b; break;
          case '^': v[i] = pow_partials(e, n.b, a, b).w; break;
        }
        break;
      }
    }
  }
  double out = v[static_cast<std::size_t>(e.root)];
  if (!std::isfinite(out)) throw NonFiniteError("expression value is not finite");
  return out;
}

std::pair<double, Eigen::VectorXd> eval_grad(const Expr& e, const Eigen::VectorXd& point) {
  if (point.size() != e.arity()) throw InputError("point dimension does not match declared variables");
  const int d = e.arity();
  std::vector<double> v(e.nodes.size());
  std::vector<Eigen::VectorXd> g(e.nodes.size());
  for (std::size_t i = 0; i < e.nodes.size(); ++i) {
    const ExprNode& n = e.nodes[i];
    switch (n.kind) {
      case ExprNode::Kind::Constant:
        v[i] = n.value;
        g[i] = Eigen::VectorXd::Zero(d);
        break;
      case ExprNode::Kind::Variable:
        v[i] = point[n.var];
        g[i] = Eigen::VectorXd::Zero(d);
        g[i][n.var] = 1.0;
        break;
      case ExprNode::Kind::Unary: {
        auto a = static_cast<std::size_t>(n.a);
        v[i] = -v[a];
        g[i] = -g[a];
        break;
      }
      case ExprNode::Kind::Call: {
        auto a = static_cast<std::size_t>(n.a);
        v[i] = call_value(n.func, v[a]);
        double d1, d2;
        call_derivs(n.func, v[a], v[i], d1, d2);
        g[i] = d1 * g[a];
        break;
      }
      case ExprNode::Kind::Binary: {
        auto a = static_cast<std::size_t>(n.a);
        auto b = static_cast<std::size_t>(n.b);
        switch (n.op) {
          case '+': v[i] = v[a] + v[b]; g[i] = g[a] + g[b]; break;
          case '-': v[i] = v[a] - v[b]; g[i] = g[a] - g[b]; break;
          case '*': v[i] = v[a] * v[b]; g[i] = v[b] * g[a] + v[a] * g[b]; break;
          case '/': {
            v[i] = v[a] / v[b];
            g[i] = (g[a] - v[i] * g[b]) / v[b];
            break;
          }
          case '^': {
            PowPartials p = pow_partials(e, n.b, v[a], v[b]);
            v[i] = p.w;
            g[i] = p.wu * g[a] + p.wv * g[b];
            break;
          }
        }
        break;
      }
    }
  }
  double out = v[static_cast<std::size_t>(e.root)];
  Eigen::VectorXd gout = g[static_cast<std::size_t>(e.root)];
  if (!std::isfinite(out) || !gout.allFinite()) throw NonFiniteError("expression jet is not finite");
  return {out, std::move(gout)};
}

Jet2 eval_jet2(const Expr& e, const Eigen::VectorXd& point) {
  if (point.size() != e.arity()) throw InputError("point dimension does not match declared variables");
  const int d = e.arity();
  std::vector<double> v(e.nodes.size());
  std::vector<Eigen::VectorXd> g(e.nodes.size());
  std::vector<Eigen::MatrixXd> h(e.nodes.size());
  auto sym_rank2 = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    // (a b^T + b a^T): entries (i,j) and (j,i) are the same two products
    // added in the same order, so the result is symmetric exactly.
    Eigen::MatrixXd m = a * b.transpose();
    m += b * a.transpose();
    return m;
  };
  // Outer products are materialized before scaling: folding the scalar into
  // one factor (as Eigen's scaled-product kernel does) breaks the bitwise
  // symmetry of the Hessian by one ulp.
  auto sym_outer = [](const Eigen::VectorXd& a) { return Eigen::MatrixXd(a * a.transpose()); };
  for (std::size_t i = 0; i < e.nodes.size(); ++i) {
    const ExprNode& n = e.nodes[i];
    switch (n.kind) {
      case ExprNode::Kind::Constant:
        v[i] = n.value;
        g[i] = Eigen::VectorXd::Zero(d);
        h[i] = Eigen::MatrixXd::Zero(d, d);
        break;
      case ExprNode::Kind::Variable:
        v[i] = point[n.var];
        g[i] = Eigen::VectorXd::Zero(d);
        g[i][n.var] = 1.0;
        h[i] = Eigen::MatrixXd::Zero(d, d);
        break;
      case ExprNode::Kind::Unary: {
        auto a = static_cast<std::size_t>(n.a);
        v[i] = -v[a];
        g[i] = -g[a];
        h[i] = -h[a];
        break;
      }
      case ExprNode::Kind::Call: {
        auto a = static_cast<std::size_t>(n.a);
        v[i] = call_value(n.func, v[a]);
        double d1, d2;
        call_derivs(n.func, v[a], v[i], d1, d2);
        g[i] = d1 * g[a];
        h[i] = d1 * h[a];
        if (d2 != 0.0) h[i] += d2 * sym_outer(g[a]);
        break;
      }
      case ExprNode::Kind::Binary: {
        auto a = static_cast<std::size_t>(n.a);
        auto b = static_cast<std::size_t>(n.b);
        switch (n.op) {
          case '+':
            v[i] = v[a] + v[b];
            g[i] = g[a] + g[b];
            h[i] = h[a] + h[b];
            break;
          case '-':
            v[i] = v[a] - v[b];
            g[i] = g[a] - g[b];
            h[i] = h[a] - h[b];
            break;
          case '*':
            v[i] = v[a] * v[b];
            g[i] = v[b] * g[a] + v[a] * g[b];
            h[i] = v[b] * h[a] + v[a] * h[b] + sym_rank2(g[a], g[b]);
            break;
          case '/': {
            double q = v[a] / v[b];
            v[i] = q;
            g[i] = (g[a] - q * g[b]) / v[b];
            h[i] = (h[a] - q * h[b] - sym_rank2(g[i], g[b])) / v[b];
            break;
          }
          case '^': {
            PowPartials p = pow_partials(e, n.b, v[a], v[b]);
            v[i] = p.w;
            g[i] = p.wu * g[a] + p.wv * g[b];
            h[i] = p.wu * h[a] + p.wuu * sym_outer(g[a]);
            if (p.wv != 0.0 || p.wvv != 0.0 || p.wuv != 0.0) {
              h[i] += p.wv * h[b] + p.wvv * sym_outer(g[b]) + p.wuv * sym_rank2(g[a], g[b]);
            }
            break;
          }
        }
        break;
      }
    }
  }
  Jet2 out;
  out.value = v[static_cast<std::size_t>(e.root)];
  out.gradient = std::move(g[static_cast<std::size_t>(e.root)]);
  out.hessian = std::move(h[static_cast<std::size_t>(e.root)]);
  if (!std::isfinite(out.value) || !out.gradient.allFinite() || !out.hessian.allFinite())
    throw NonFiniteError("expression jet is not finite");
  return out;
}

double eval_deriv_fd(const Expr& e, const Eigen::VectorXd& point, std::span<const int> multi_index) {
  const std::size_t k = multi_index.size();
  if (k != 3 && k != 4) throw InputError("eval_deriv_fd handles orders 3 and 4 only");
  for (int idx : multi_index)
    if (idx < 0 || idx >= e.arity()) throw InputError("derivative index out of range");
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max(1.0, point.size() ? point.lpNorm<Eigen::Infinity>() : 0.0);
  const double h = std::max(1e-4, std::pow(eps, 1.0 / static_cast<double>(k))) * scale;
  const int i = multi_index[0];
  const int j = multi_index[1];
  auto hess_entry = [&](const Eigen::VectorXd& at) { return eval_jet2(e, at).hessian(i, j); };
  Eigen::VectorXd p = point;
  if (k == 3) {
    const int a = multi_index[2];
    p[a] = point[a] + h;
    double up = hess_entry(p);
    p[a] = point[a] - h;
    double dn = hess_entry(p);
    return (up - dn) / (2 * h);
  }
  const int a = multi_index[2];
  const int b = multi_index[3];
  if (a == b) {
    double mid = hess_entry(point);
    p[a] = point[a] + h;
    double up = hess_entry(p);
    p[a] = point[a] - h;
    double dn = hess_entry(p);
    return (up - 2 * mid + dn) / (h * h);
  }
  p[a] = point[a] + h;
  p[b] = point[b] + h;
  double pp = hess_entry(p);
  p[b] = point[b] - h;
  double pm = hess_entry(p);
  p[a] = point[a] - h;
  p[b] = point[b] + h;
  double mp = hess_entry(p);
  p[b] = point[b] - h;
  double mm = hess_entry(p);
  return (pp - pm - mp + mm) / (4 * h * h);
}

bool same_tree(const Expr& a, const Expr& b) {
  if (a.variables != b.variables) return false;
  std::function<bool(int, int)> eq = [&](int na, int nb) {
    const ExprNode& x = a.nodes[static_cast<std::size_t>(na)];
    const ExprNode& y = b.nodes[static_cast<std::size_t>(nb)];
    if (x.kind != y.kind) return false;
    switch (x.kind) {
      case ExprNode::Kind::Constant:
        return x.value == y.value || (std::isnan(x.value) && std::isnan(y.value));
      case ExprNode::Kind::Variable: return x.var == y.var;
      case ExprNode::Kind::Unary: return eq(x.a, y.a);
      case ExprNode::Kind::Call: return x.func == y.func && eq(x.a, y.a);
      case ExprNode::Kind::Binary: return x.op == y.op && eq(x.a, y.a) && eq(x.b, y.b);
    }
    return false;
  };
  return eq(a.root, b.root);
}

Expr expr_constant(double c, std::vector<std::string> variables) {
  Expr e;
  e.variables = std::move(variables);
  ExprNode n;
  n.kind = ExprNode::Kind::Constant;
  n.value = c;
  e.nodes.push_back(n);
  e.root = 0;
  return e;
}

Expr expr_variable(int var, std::vector<std::string> variables) {
  Expr e;
  e.variables = std::move(variables);
  if (var < 0 || var >= e.arity()) throw InputError("expr_variable: index out of range");
  ExprNode n;
  n.kind = ExprNode::Kind::Variable;
  n.var = var;
  e.nodes.push_back(n);
  e.root = 0;
  return e;
}

namespace {
int append_subtree(Expr& dst, const Expr& src, int node, const std::vector<int>& varmap) {
  const ExprNode& n = src.nodes[static_cast<std::size_t>(node)];
  ExprNode copy = n;
  if (n.kind == ExprNode::Kind::Variable) copy.var = varmap[static_cast<std::size_t>(n.var)];
  if (n.a >= 0) copy.a = append_subtree(dst, src, n.a, varmap);
  if (n.b >= 0) copy.b = append_subtree(dst, src, n.b, varmap);
  dst.nodes.push_back(copy);
  return static_cast<int>(dst.nodes.size()) - 1;
}

std::vector<int> identity_map(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return m;
}
}  // namespace

Expr expr_binary(char op, const Expr& a, const Expr& b) {
  if (a.variables != b.variables) throw InputError("expr_binary: operand variable lists differ");
  Expr e;
  e.variables = a.variables;
  int na = append_subtree(e, a, a.root, identity_map(a.arity()));
  int nb = append_subtree(e, b, b.root, identity_map(b.arity()));
  ExprNode n;
  n.kind = ExprNode::Kind::Binary;
  n.op = op;
  n.a = na;
  n.b = nb;
  e.nodes.push_back(n);
  e.root = static_cast<int>(e.nodes.size()) - 1;
  return e;
}

Expr expr_negate(const Expr& a) {
  Expr e;
  e.variables = a.variables;
  int na = append_subtree(e, a, a.root, identity_map(a.arity()));
  ExprNode n;
  n.kind = ExprNode::Kind::Unary;
  n.op = '-';
  n.a = na;
  e.nodes.push_back(n);
  e.root = static_cast<int>(e.nodes.size()) - 1;
  return e;
}

Expr expr_rebase(const Expr& e, std::vector<std::string> variables) {
  std::vector<int> varmap(e.variables.size(), -1);
  for (std::size_t old = 0; old < e.variables.size(); ++old) {
    for (std::size_t v = 0; v < variables.size(); ++v) {
      if (variables[v] == e.variables[old]) {
        varmap[old] = static_cast<int>(v);
        break;
      }
    }
    if (varmap[old] < 0 && e.references(static_cast<int>(old)))
      throw InputError("expr_rebase: variable '" + e.variables[old] + "' missing from target list");
    if (varmap[old] < 0) varmap[old] = 0;  // unreferenced, any slot works
  }
  Expr out;
  out.variables = std::move(variables);
  out.root = append_subtree(out, e, e.root, varmap);
  return out;
}

}  // namespace gscreen
