#include <doctest.h>

#include "helpers.hpp"
#include "ldl/parser.hpp"

using namespace ldl;

TEST_CASE("tokenize basics") {
  auto toks = tokenize("forall (x : Vec 2) .");
  REQUIRE(toks.size() == 9);  // incl. EOF
  CHECK(toks[0].kind == TokKind::Keyword);
  CHECK(toks[0].text == "forall");
  CHECK(toks[1].text == "(");
  CHECK(toks[2].kind == TokKind::Ident);
  CHECK(toks[2].text == "x");
  CHECK(toks[3].text == ":");
  CHECK(toks[4].text == "Vec");
  CHECK(toks[5].kind == TokKind::Nat);
  CHECK(toks[5].nat_val == 2);
  CHECK(toks[6].text == ")");
  CHECK(toks[7].text == ".");

  auto cmp = tokenize("a <= b");
  CHECK(cmp[0].kind == TokKind::Ident);
  CHECK(cmp[1].text == "<=");
  CHECK(cmp[2].text == "b");

  auto sci = tokenize("1.5e-3");
  CHECK(sci[0].kind == TokKind::Real);
  CHECK(sci[0].real_val == doctest::Approx(0.0015).epsilon(1e-15));
}

TEST_CASE("tokenize reports illegal characters with position") {
  CHECK_THROWS_WITH_AS(tokenize("a $ b"), doctest::Contains("illegal character"), ParseError);
  try {
    tokenize("ab\n  $");
  } catch (const ParseError& e) {
    CHECK(e.span.line == 2);
    CHECK(e.span.col == 3);
  }
}

TEST_CASE("the corpus robustness file parses to the documented shape") {
  SpecFile spec = parse_file(testing::src_path("specs/robustness.ldl"));
  CHECK(spec.networks.arity("f") == std::pair<int64_t, int64_t>{784, 10});
  REQUIRE(spec.definitions.size() == 2);
  CHECK(spec.definitions[0].name == "bounded");
  CHECK(spec.definitions[1].name == "robust");
  CHECK(spec.root().name == "robust");
}

TEST_CASE("parse failures carry useful diagnoses") {
  CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("empty root"), ParseError);
  CHECK_THROWS_WITH_AS(parse("p : Bool = g [1, 2] <= [3, 4] ! 0"),
                       doctest::Contains("g"), ParseError);
  CHECK_THROWS_WITH_AS(parse("p : Bool = 1 <= 2\np : Bool = 2 <= 3"),
                       doctest::Contains("duplicate definition"), ParseError);
  CHECK_THROWS_AS(parse("p : Real = 1 + 2"), ParseError);  // root must end in Bool
  CHECK_THROWS_AS(parse_expr("[]"), ParseError);
}

TEST_CASE("operator precedence table") {
  auto norm = [](const std::string& s) { return pretty_print(parse_expr(s)); };
  // lookup binds tightest, then unary, *, +/-, comparisons, and, or, =>
  CHECK(norm("a + b * c") == norm("a + (b * c)"));
  CHECK(norm("- v ! i") == norm("- (v ! i)"));
  CHECK(norm("a * b + c") == norm("(a * b) + c"));
  CHECK(norm("a - b - c") == norm("(a - b) - c"));
  CHECK(norm("a <= b + c") == norm("a <= (b + c)"));
  CHECK(norm("a <= b and c <= d") == norm("(a <= b) and (c <= d)"));
  CHECK(norm("p and q or r") == norm("(p and q) or r"));
  CHECK(norm("p or q and r") == norm("p or (q and r)"));
  CHECK(norm("p => q => r") == norm("p => (q => r)"));
  CHECK(norm("not p and q") == norm("(not p) and q"));
  CHECK(norm("p and q => r or s") == norm("(p and q) => (r or s)"));
  CHECK(norm("f x ! i") == norm("(f x) ! i"));
  CHECK(norm("forall (x : Real) . x <= 1 and x <= 2") ==
        norm("forall (x : Real) . (x <= 1 and x <= 2)"));
}

TEST_CASE("parsing is deterministic") {
  std::string src = "p : Bool = forall (x : Real) . x * x >= 0";
  SpecFile a = parse(src);
  SpecFile b = parse(src);
  CHECK(pretty_print(a.root_expr()) == pretty_print(b.root_expr()));
}

TEST_CASE("pretty-print / parse round trip on generated terms") {
  testing::TypedGen gen(2024);
  for (int t = 0; t < 400; ++t) {
    ExprPtr e = gen.formula(4);
    std::string printed = pretty_print(e);
    CAPTURE(printed);
    ExprPtr back = parse_expr(printed);
    CHECK(alpha_equal(e, back));
  }
}

TEST_CASE("definitions may reference earlier definitions") {
  SpecFile spec = parse(
      "half : Real -> Real = lam (x : Real) . 0.5 * x\n"
      "p : Real -> Bool = lam (y : Real) . half y <= y");
  CHECK(spec.definitions.size() == 2);
  ExprPtr root = spec.root_expr();
  CHECK(pretty_print(root).find("let") == 0);
}

TEST_CASE("operator sections parse as atoms") {
  ExprPtr e = parse_expr("(and) (1 <= 2) (2 <= 3)");
  CHECK(e->kind == ExprKind::App);
  ExprPtr cmp = parse_expr("(<=) 1 2");
  CHECK(alpha_equal(cmp, parse_expr("1 <= 2")));
}
