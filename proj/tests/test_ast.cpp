#include <doctest.h>

#include "helpers.hpp"
#include "ldl/ast.hpp"
#include "ldl/parser.hpp"

using namespace ldl;

TEST_CASE("free_quantified_vars picks out infinite quantifiers") {
  SpecFile spec = parse_file(testing::src_path("specs/robustness.ldl"));
  auto vars = free_quantified_vars(spec.root().body);
  CHECK(vars == std::set<std::string>{"x"});

  CHECK(free_quantified_vars(real_const(3.0)).empty());

  ExprPtr finite = forall("i", LdlType::index(2),
                          apply2(BuiltinOp::Leq, real_const(1), real_const(2)));
  CHECK(free_quantified_vars(finite).empty());

  ExprPtr vecq = exists("v", LdlType::vec(3), bool_const(true));
  CHECK(free_quantified_vars(vecq) == std::set<std::string>{"v"});
}

TEST_CASE("substitute replaces free occurrences") {
  // (x ! i)[i -> 1]
  ExprPtr e = parse_expr("x ! i");
  ExprPtr subst = substitute(e, "i", index_const(1));
  CHECK(pretty_print(subst) == "x ! 1");

  // (lam y. x)[x -> 5]
  ExprPtr f = parse_expr("lam (y : Real) . x");
  ExprPtr g = substitute(f, "x", real_const(5));
  CHECK(pretty_print(g) == "lam (y : Real) . 5.0");
}

TEST_CASE("substitute avoids capture by renaming on print") {
  // (forall x. x + z)[z -> x] with x free in the replacement
  ExprPtr e = parse_expr("forall (x : Real) . x + z");
  ExprPtr x_free = parse_expr("x");
  ExprPtr out = substitute(e, "z", x_free);
  std::string printed = pretty_print(out);
  CHECK(printed == "forall (x' : Real) . x' + x");
  // Round-trips to the same binding structure.
  CHECK(alpha_equal(parse_expr(printed), out));
}

TEST_CASE("substitute is the identity when the name does not occur") {
  testing::TypedGen gen(41);
  for (int t = 0; t < 200; ++t) {
    ExprPtr e = gen.formula(3);
    ExprPtr s = substitute(e, "no_such_name", real_const(7));
    CHECK(alpha_equal(e, s));
  }
}

TEST_CASE("pretty printer basics") {
  CHECK(pretty_print(real_const(3.0)) == "3.0");
  ExprPtr sum = apply2(BuiltinOp::Add, real_const(1), real_const(2));
  CHECK(pretty_print(sum) == "1.0 + 2.0");
  CHECK(pretty_print(index_const(2)) == "2");
  CHECK(pretty_print(bool_const(true)) == "True");
}

TEST_CASE("type constructors enforce their invariants") {
  CHECK_THROWS(LdlType::vec(0));
  CHECK_THROWS(LdlType::index(0));
  CHECK_THROWS(LdlType::fun(LdlType::fun(LdlType::real(), LdlType::real()), LdlType::real()));
  LdlType t = LdlType::fun(LdlType::real(), LdlType::fun(LdlType::vec(3), LdlType::boolean()));
  CHECK(t.show() == "Real -> Vec 3 -> Bool");
  CHECK(t.result().is_bool());
}

TEST_CASE("alpha equality ignores binder names but not structure") {
  ExprPtr a = parse_expr("forall (x : Real) . x <= 1");
  ExprPtr b = parse_expr("forall (y : Real) . y <= 1");
  ExprPtr c = parse_expr("forall (y : Real) . y <= 2");
  CHECK(alpha_equal(a, b));
  CHECK(!alpha_equal(a, c));
  CHECK(!alpha_equal(parse_expr("a + b"), parse_expr("b + a")));
}

TEST_CASE("open_binder instantiates quantifier bodies") {
  ExprPtr q = parse_expr("forall (i : Index 2) . [5, 7] ! i <= 10");
  ExprPtr body = q->b;
  ExprPtr at0 = open_binder(body, index_const(0));
  CHECK(pretty_print(at0) == "[5.0, 7.0] ! 0 <= 10.0");
}
