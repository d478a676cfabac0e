// expr.hpp: operator expressions for spec files.
//
//   expr   := term (('+' | '-') term)*
//   term   := factor ('*' factor)*
//   factor := '-' factor | atom ('†' | '\'')*
//   atom   := number | number 'i' | 'sqrt(' expr ')' | ident '(' int ')' | '(' expr ')'
//
// ident is one of a, adag (mode ops) or sm, sp, sz (qubit ops). There is no
// implicit multiplication.

#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gqfn/operator.hpp"

namespace gqfn {

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : ValidationError(msg + " (at byte " + std::to_string(offset) + ")"), offset_(offset), detail_(msg) {}
  std::size_t offset() const { return offset_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t offset_;
  std::string detail_;
};

enum class NodeKind { Number, Imaginary, ModeOp, QubitOp, Sum, Product, ScalarMultiple, Dagger, Paren, Sqrt, Negate };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  NodeKind kind;
  std::size_t offset = 0;
  double value = 0.0;           // Number, Imaginary
  std::string name;             // ModeOp: a|adag, QubitOp: sm|sp|sz
  long index = 0;               // ModeOp, QubitOp
  std::vector<ExprPtr> children;
  std::vector<char> ops;        // Sum: operator before children[i+1]
};

inline bool ast_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind || a.value != b.value || a.name != b.name || a.index != b.index || a.ops != b.ops ||
      a.children.size() != b.children.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!ast_equal(*a.children[i], *b.children[i])) return false;
  }
  return true;
}

/// True when the subtree contains no operator atoms.
inline bool is_constant(const ExprNode& n) {
  if (n.kind == NodeKind::ModeOp || n.kind == NodeKind::QubitOp) return false;
  for (const auto& c : n.children) {
    if (!is_constant(*c)) return false;
  }
  return true;
}

namespace detail {

class Parser {
 public:
  explicit Parser(const std::string& src) : s_(src) {}

  ExprPtr parse() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    ExprPtr e = expr();
    skip_ws();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected character '") + s_[pos_] + "'", pos_);
    return e;
  }

 private:
  static ExprPtr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool eat_dagger() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '\'') {
      ++pos_;
      return true;
    }
    static const std::string dag = "\xE2\x80\xA0";  // †
    if (s_.compare(pos_, dag.size(), dag) == 0) {
      pos_ += dag.size();
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) {
      if (pos_ >= s_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  ExprPtr expr() {
    skip_ws();
    ExprNode sum;
    sum.kind = NodeKind::Sum;
    sum.offset = pos_;
    sum.children.push_back(term());
    for (;;) {
      skip_ws();
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
        sum.ops.push_back(s_[pos_++]);
        sum.children.push_back(term());
      } else {
        break;
      }
    }
    if (sum.children.size() == 1) return sum.children.front();
    return make(std::move(sum));
  }

  ExprPtr term() {
    skip_ws();
    const std::size_t start = pos_;
    std::vector<ExprPtr> fs{factor()};
    while (eat('*')) fs.push_back(factor());
    if (fs.size() == 1) return fs.front();
    ExprNode n;
    n.kind = NodeKind::Product;
    n.offset = start;
    if (fs.size() == 2 && is_constant(*fs[0]) && !is_constant(*fs[1])) n.kind = NodeKind::ScalarMultiple;
    n.children = std::move(fs);
    return make(std::move(n));
  }

  ExprPtr factor() {
    skip_ws();
    const std::size_t start = pos_;
    if (eat('-')) {
      ExprNode n;
      n.kind = NodeKind::Negate;
      n.offset = start;
      n.children.push_back(factor());
      return make(std::move(n));
    }
    ExprPtr a = atom();
    for (;;) {
      const std::size_t at = pos_;
      if (!eat_dagger()) break;
      ExprNode n;
      n.kind = NodeKind::Dagger;
      n.offset = at;
      n.children.push_back(a);
      a = make(std::move(n));
    }
    return a;
  }

  ExprPtr atom() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ExprNode n;
      n.kind = NodeKind::Paren;
      n.offset = start;
      n.children.push_back(expr());
      expect(')');
      return make(std::move(n));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return call();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr number() {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    auto digits = [&] {
      const std::size_t b = p;
      while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
      return p - b;
    };
    std::size_t nd = digits();
    if (p < s_.size() && s_[p] == '.') {
      ++p;
      nd += digits();
    }
    if (nd == 0) throw ParseError("malformed number", start);
    if (p < s_.size() && (s_[p] == 'e' || s_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
      const std::size_t eb = q;
      while (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) ++q;
      if (q == eb) throw ParseError("malformed exponent", p);
      p = q;
    }
    const double v = std::strtod(s_.substr(start, p - start).c_str(), nullptr);
    pos_ = p;
    ExprNode n;
    n.kind = NodeKind::Number;
    n.offset = start;
    n.value = v;
    if (pos_ < s_.size() && s_[pos_] == 'i' &&
        !(pos_ + 1 < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])) || s_[pos_ + 1] == '_'))) {
      ++pos_;
      n.kind = NodeKind::Imaginary;
    }
    return make(std::move(n));
  }

  ExprPtr call() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    if (id == "sqrt") {
      expect('(');
      ExprNode n;
      n.kind = NodeKind::Sqrt;
      n.offset = start;
      n.children.push_back(expr());
      expect(')');
      return make(std::move(n));
    }
    NodeKind kind;
    if (id == "a" || id == "adag") {
      kind = NodeKind::ModeOp;
    } else if (id == "sm" || id == "sp" || id == "sz") {
      kind = NodeKind::QubitOp;
    } else {
      throw ParseError("unknown identifier '" + id + "'", start);
    }
    expect('(');
    skip_ws();
    const std::size_t idx_at = pos_;
    if (pos_ < s_.size() && s_[pos_] == '-') throw ParseError("negative index", idx_at);
    std::size_t p = pos_;
    while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
    if (p == pos_) throw ParseError("expected integer index", idx_at);
    if (p - pos_ > 9) throw ParseError("index too large", idx_at);
    const long idx = std::strtol(s_.substr(pos_, p - pos_).c_str(), nullptr, 10);
    pos_ = p;
    expect(')');
    ExprNode n;
    n.kind = kind;
    n.offset = start;
    n.name = id;
    n.index = idx;
    return make(std::move(n));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

inline std::string num17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline ExprPtr parse_expr(const std::string& src) { return detail::Parser(src).parse(); }

inline std::string to_string(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Number:
      return detail::num17(n.value);
    case NodeKind::Imaginary:
      return detail::num17(n.value) + "i";
    case NodeKind::ModeOp:
    case NodeKind::QubitOp:
      return n.name + "(" + std::to_string(n.index) + ")";
    case NodeKind::Sum: {
      std::string s = to_string(*n.children[0]);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        s += std::string(" ") + n.ops[i - 1] + " " + to_string(*n.children[i]);
      }
      return s;
    }
    case NodeKind::Product:
    case NodeKind::ScalarMultiple: {
      std::string s = to_string(*n.children[0]);
      for (std::size_t i = 1; i < n.children.size(); ++i) s += "*" + to_string(*n.children[i]);
      return s;
    }
    case NodeKind::Dagger:
      return to_string(*n.children[0]) + "\xE2\x80\xA0";
    case NodeKind::Paren:
      return "(" + to_string(*n.children[0]) + ")";
    case NodeKind::Sqrt:
      return "sqrt(" + to_string(*n.children[0]) + ")";
    case NodeKind::Negate:
      return "-" + to_string(*n.children[0]);
  }
  return "";
}

/// Value of a constant subtree.
inline cplx constant_value(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Number:
      return n.value;
    case NodeKind::Imaginary:
      return cplx(0.0, n.value);
    case NodeKind::Sum: {
      cplx v = constant_value(*n.children[0]);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        const cplx c = constant_value(*n.children[i]);
        v = n.ops[i - 1] == '+' ? v + c : v - c;
      }
      return v;
    }
    case NodeKind::Product:
    case NodeKind::ScalarMultiple: {
      cplx v = 1.0;
      for (const auto& c : n.children) v *= constant_value(*c);
      return v;
    }
    case NodeKind::Dagger:
      return std::conj(constant_value(*n.children[0]));
    case NodeKind::Paren:
      return constant_value(*n.children[0]);
    case NodeKind::Sqrt:
      return std::sqrt(constant_value(*n.children[0]));
    case NodeKind::Negate:
      return -constant_value(*n.children[0]);
    case NodeKind::ModeOp:
    case NodeKind::QubitOp:
      break;
  }
  throw ParseError("operator found where a scalar is required", n.offset);
}

inline Operator evaluate(const ExprNode& n, const HilbertSpec& space) {
  if (is_constant(n)) return Operator::scalar(space, constant_value(n));
  switch (n.kind) {
    case NodeKind::ModeOp:
    case NodeKind::QubitOp: {
      if (n.index < 0 || static_cast<std::size_t>(n.index) >= space.factors()) {
        throw ParseError("index " + std::to_string(n.index) + " out of range for space " + space.to_string(),
                         n.offset);
      }
      const auto f = static_cast<std::size_t>(n.index);
      if (n.kind == NodeKind::ModeOp) {
        if (space.dim(f) < 2) throw ParseError("mode operator on a dimension-1 factor", n.offset);
        return n.name == "a" ? annihilator(space, f) : creator(space, f);
      }
      if (space.dim(f) != 2) {
        throw ParseError("qubit operator " + n.name + " on factor " + std::to_string(f) + " of dimension " +
                             std::to_string(space.dim(f)),
                         n.offset);
      }
      if (n.name == "sm") return sigma_minus(space, f);
      if (n.name == "sp") return sigma_plus(space, f);
      return sigma_z(space, f);
    }
    case NodeKind::Sum: {
      Operator v = evaluate(*n.children[0], space);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        const Operator c = evaluate(*n.children[i], space);
        if (n.ops[i - 1] == '+') {
          v += c;
        } else {
          v -= c;
        }
      }
      return v;
    }
    case NodeKind::Product:
    case NodeKind::ScalarMultiple: {
      Operator v = evaluate(*n.children[0], space);
      for (std::size_t i = 1; i < n.children.size(); ++i) v = v * evaluate(*n.children[i], space);
      return v;
    }
    case NodeKind::Dagger:
      return evaluate(*n.children[0], space).adjoint();
    case NodeKind::Paren:
      return evaluate(*n.children[0], space);
    case NodeKind::Negate:
      return -evaluate(*n.children[0], space);
    case NodeKind::Sqrt:
      throw ParseError("sqrt of an operator is not supported", n.offset);
    case NodeKind::Number:
    case NodeKind::Imaginary:
      break;
  }
  throw ParseError("internal: unhandled node", n.offset);
}

inline Operator evaluate(const std::string& src, const HilbertSpec& space) { return evaluate(*parse_expr(src), space); }

}  // namespace gqfn
