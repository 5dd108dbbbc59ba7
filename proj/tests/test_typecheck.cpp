#include <doctest.h>

#include "helpers.hpp"
#include "ldl/typecheck.hpp"

using namespace ldl;

namespace {
LdlType check_closed(const ExprPtr& e) {
  NetworkTypeCtx nets;
  BoundTypeCtx bound;
  return check(nets, bound, e);
}
}  // namespace

TEST_CASE("the corpus root property has the documented type") {
  SpecFile spec = parse_file(testing::src_path("specs/robustness.ldl"));
  LdlType ty = check_spec(spec);
  LdlType expected = LdlType::fun(
      LdlType::real(),
      LdlType::fun(LdlType::real(), LdlType::fun(LdlType::vec(784), LdlType::boolean())));
  CHECK(ty == expected);
}

TEST_CASE("index literals are range-checked against their expected type") {
  ExprPtr e = parse_expr("[1, 2, 3] ! 5");
  try {
    check_closed(e);
    FAIL("expected IndexOutOfRange");
  } catch (const TypeError& err) {
    CHECK(err.code == TypeErrorCode::IndexOutOfRange);
    CHECK(std::string(err.what()).find("5") != std::string::npos);
    CHECK(std::string(err.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("quantifiers reject function-typed binders") {
  ExprPtr e = parse_expr("forall (g : Real -> Real) . True");
  try {
    check_closed(e);
    FAIL("expected QuantifierOverFunctionType");
  } catch (const TypeError& err) {
    CHECK(err.code == TypeErrorCode::QuantifierOverFunctionType);
  }
}

TEST_CASE("quantifier bodies must be Bool") {
  ExprPtr e = parse_expr("forall (x : Real) . x + 1");
  try {
    check_closed(e);
    FAIL("expected NonBooleanQuantifierBody");
  } catch (const TypeError& err) {
    CHECK(err.code == TypeErrorCode::NonBooleanQuantifierBody);
  }
}

TEST_CASE("classify_quantifier") {
  CHECK(classify_quantifier(LdlType::real()) == QuantifierClass::Infinite);
  CHECK(classify_quantifier(LdlType::vec(7)) == QuantifierClass::Infinite);
  CHECK(classify_quantifier(LdlType::index(10)) == QuantifierClass::Finite);
  CHECK(classify_quantifier(LdlType::boolean()) == QuantifierClass::Finite);
}

TEST_CASE("let bindings must match their annotation exactly") {
  ExprPtr bad = parse_expr("let (x : Real) = True in x");
  CHECK_THROWS_AS(check_closed(bad), TypeError);
  ExprPtr good = parse_expr("let (x : Real) = 3 in x + 1");
  CHECK(check_closed(good).is_real());
}

TEST_CASE("vector literals require Real elements") {
  ExprPtr bad = parse_expr("[1, True]");
  CHECK_THROWS_AS(check_closed(bad), TypeError);
  CHECK(check_closed(parse_expr("[1, 2]")) == LdlType::vec(2));
}

TEST_CASE("comparisons are Real -> Real -> Bool") {
  CHECK(check_closed(parse_expr("1 <= 2")).is_bool());
  CHECK_THROWS_AS(check_closed(parse_expr("True <= 2")), TypeError);
  CHECK_THROWS_AS(check_closed(parse_expr("[1,2] == [1,2]")), TypeError);
}

TEST_CASE("unbound variables are reported") {
  try {
    check_closed(parse_expr("zzz + 1"));
    FAIL("expected UnboundVariable");
  } catch (const TypeError& err) {
    CHECK(err.code == TypeErrorCode::UnboundVariable);
  }
}

TEST_CASE("checking is reproducible and weakening-stable") {
  testing::TypedGen gen(99);
  NetworkTypeCtx nets;
  for (int t = 0; t < 100; ++t) {
    ExprPtr e = gen.formula(4);
    BoundTypeCtx empty;
    LdlType t1 = check(nets, empty, e);
    LdlType t2 = check(nets, empty, e);
    CHECK(t1 == t2);
    // Extending the context at the outer end leaves indices intact.
    BoundTypeCtx wider;
    wider.push("unused_outer", LdlType::vec(9));
    CHECK(check(nets, wider, e) == t1);
  }
}

TEST_CASE("networks type as Vec m -> Vec n") {
  SpecFile spec = parse(
      "network f : Vec 3 -> Vec 2\n"
      "p : Vec 3 -> Bool = lam (v : Vec 3) . f v ! 0 <= 1");
  CHECK(check_spec(spec) == LdlType::fun(LdlType::vec(3), LdlType::boolean()));
  SpecFile bad = parse(
      "network f : Vec 3 -> Vec 2\n"
      "p : Vec 2 -> Bool = lam (v : Vec 2) . f v ! 0 <= 1");
  CHECK_THROWS_AS(check_spec(bad), TypeError);
}
