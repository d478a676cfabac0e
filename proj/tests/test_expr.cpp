#include <gtest/gtest.h>

#include "gqfn/expr.hpp"
#include "support/random.hpp"

using namespace gqfn;

namespace {

const std::string kDagger = "\xE2\x80\xA0";

std::size_t error_offset(const std::string& src) {
  try {
    parse_expr(src);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no parse error for " << src;
  return 0;
}

}  // namespace

TEST(Parse, ModeOp) {
  const ExprPtr e = parse_expr("a(0)");
  EXPECT_EQ(e->kind, NodeKind::ModeOp);
  EXPECT_EQ(e->name, "a");
  EXPECT_EQ(e->index, 0);
}

TEST(Parse, SumOfProductAndScalar) {
  const ExprPtr e = parse_expr("adag(0)*a(0) + 0.5");
  ASSERT_EQ(e->kind, NodeKind::Sum);
  ASSERT_EQ(e->children.size(), 2u);
  EXPECT_EQ(e->children[0]->kind, NodeKind::Product);
  EXPECT_EQ(e->children[1]->kind, NodeKind::Number);
  EXPECT_EQ(e->children[1]->value, 0.5);
}

TEST(Parse, DaggerBindsBeforeProduct) {
  const ExprPtr e = parse_expr("(1+2i)*a(1)" + kDagger);
  ASSERT_EQ(e->kind, NodeKind::ScalarMultiple);
  EXPECT_EQ(e->children[0]->kind, NodeKind::Paren);
  const ExprPtr& d = e->children[1];
  ASSERT_EQ(d->kind, NodeKind::Dagger);
  EXPECT_EQ(d->children[0]->kind, NodeKind::ModeOp);
  EXPECT_EQ(d->children[0]->index, 1);
}

TEST(Parse, QuoteIsDagger) {
  EXPECT_TRUE(ast_equal(*parse_expr("a(0)'"), *parse_expr("a(0)" + kDagger)));
}

TEST(Parse, WhitespaceInsignificant) {
  EXPECT_TRUE(ast_equal(*parse_expr("  adag( 0 ) *a(0)+\t2i "), *parse_expr("adag(0)*a(0)+2i")));
}

TEST(Parse, ErrorsCarryByteOffsets) {
  EXPECT_EQ(error_offset("a(0) + b(1)"), 7u);
  EXPECT_EQ(error_offset("a(-1)"), 2u);
  EXPECT_EQ(error_offset("a(0) * "), 7u);
  EXPECT_EQ(error_offset("a(0) a(1)"), 5u);
  EXPECT_THROW(parse_expr(""), ParseError);
  EXPECT_THROW(parse_expr("   "), ParseError);
  EXPECT_THROW(parse_expr("(a(0)"), ParseError);
}

TEST(Parse, NoImplicitMultiplication) {
  EXPECT_THROW(parse_expr("2a(0)"), ParseError);
  EXPECT_THROW(parse_expr("2 a(0)"), ParseError);
}

TEST(Evaluate, NumberOperator) {
  const Operator n = evaluate("adag(0)*a(0)", HilbertSpec({3}));
  Matrix want = Matrix::Zero(3, 3);
  want(1, 1) = 1;
  want(2, 2) = 2;
  EXPECT_LT(max_abs_diff(n.matrix(), want), 1e-15);
}

TEST(Evaluate, SigmaZ) {
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 1;
  want(1, 1) = -1;
  EXPECT_EQ(evaluate("sz(0)", HilbertSpec({2})).matrix(), want);
}

TEST(Evaluate, SqrtAndDaggerByHand) {
  HilbertSpec sp({4});
  // √2·a + a*, entries written out
  Matrix want = Matrix::Zero(4, 4);
  for (int i = 0; i < 3; ++i) {
    want(i, i + 1) = std::sqrt(2.0) * std::sqrt(i + 1.0);
    want(i + 1, i) = std::sqrt(i + 1.0);
  }
  EXPECT_LT(max_abs_diff(evaluate("sqrt(2)*a(0) + a(0)" + kDagger, sp).matrix(), want), 1e-15);
}

TEST(Evaluate, ScalarsBecomeIdentityMultiples) {
  HilbertSpec sp({2, 3});
  EXPECT_LT(max_abs_diff(evaluate("1+2i", sp).matrix(), cplx(1, 2) * Matrix::Identity(6, 6)), 1e-15);
  EXPECT_LT(max_abs_diff(evaluate("-3", sp).matrix(), -3.0 * Matrix::Identity(6, 6)), 1e-15);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate("a(2)", HilbertSpec({3, 3})), ParseError);
  EXPECT_THROW(evaluate("sm(0)", HilbertSpec({3})), ParseError);
  EXPECT_THROW(evaluate("sqrt(a(0))", HilbertSpec({3})), ParseError);
}

TEST(Evaluate, DaggerIsAdjoint) {
  HilbertSpec sp({3, 2});
  for (const std::string s : {"a(0)", "(1+2i)*a(0)*sm(1)", "adag(0)*a(0) + 0.5i*sz(1)", "sqrt(3)*a(0) - sp(1)"}) {
    const Operator x = evaluate(s, sp);
    const Operator xd = evaluate("(" + s + ")" + kDagger, sp);
    EXPECT_LT(max_abs_diff(xd, x.adjoint()), 1e-14) << s;
  }
}

TEST(Evaluate, ProductHomomorphism) {
  HilbertSpec sp({3, 2});
  const std::vector<std::string> atoms = {"a(0)", "adag(0)", "sm(1)", "sp(1)", "sz(1)", "(2-1i)", "sqrt(2)*a(0)",
                                          "(a(0) + sz(1))", "a(0)'*0.25"};
  gqfn::testing::Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const std::string x = atoms[rng.integer(0, static_cast<int>(atoms.size()) - 1)];
    const std::string y = atoms[rng.integer(0, static_cast<int>(atoms.size()) - 1)];
    const Operator lhs = evaluate(x + "*" + y, sp);
    const Operator rhs = evaluate(x, sp) * evaluate(y, sp);
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-14) << x << " * " << y;
  }
}

TEST(PrettyPrint, RoundTrip) {
  for (const std::string& s : std::vector<std::string>{"a(0)", "adag(0)*a(0) + 0.5", "(1+2i)*a(1)" + kDagger, "sqrt(2)*a(0) + a(0)'", "-a(0) - 0.1*sz(1)''",
        "0.1 + 1e-07i - (a(0) - sm(1))*sp(1)", "1.2345678901234567*a(3)", "sqrt(2 + 1i)*(a(0))" + kDagger}) {
    const ExprPtr a = parse_expr(s);
    const std::string printed = to_string(*a);
    const ExprPtr b = parse_expr(printed);
    EXPECT_TRUE(ast_equal(*a, *b)) << s << " -> " << printed;
    EXPECT_EQ(to_string(*b), printed);
  }
}
