#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ldl/logics.hpp"

using namespace ldl;

namespace {
Logic L(LogicTag t) { return Logic::make(t); }
double and2(const Logic& l, double a, double b) {
  double vs[2] = {a, b};
  return interp_and(l, vs);
}
double or2(const Logic& l, double a, double b) {
  double vs[2] = {a, b};
  return interp_or(l, vs);
}
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

TEST_CASE("truth constants per logic") {
  CHECK(interp_top(L(LogicTag::Godel)) == 1.0);
  CHECK(interp_bottom(L(LogicTag::Godel)) == 0.0);
  CHECK(interp_top(L(LogicTag::DL2)) == 0.0);
  CHECK(interp_bottom(L(LogicTag::DL2)) == -kInf);
  CHECK(interp_top(L(LogicTag::STL)) == kInf);
  CHECK(interp_bottom(L(LogicTag::STL)) == -kInf);
  for (LogicTag t : {LogicTag::Lukasiewicz, LogicTag::Yager, LogicTag::Product}) {
    CHECK(interp_top(L(t)) == 1.0);
    CHECK(interp_bottom(L(t)) == 0.0);
  }
}

TEST_CASE("conjunctions") {
  CHECK(and2(L(LogicTag::Godel), 0.3, 0.7) == 0.3);
  CHECK(and2(L(LogicTag::STL), -1.0, -1.0) == -1.0);  // idempotence witness
  CHECK(and2(L(LogicTag::STL), 0.0, 5.0) == 0.0);     // v_min = 0 branch
  CHECK(and2(L(LogicTag::Lukasiewicz), 0.6, 0.7) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(and2(L(LogicTag::DL2), -1.0, -2.0) == -3.0);
  CHECK(and2(L(LogicTag::Product), 0.5, 0.5) == 0.25);
}

TEST_CASE("disjunctions") {
  CHECK(or2(L(LogicTag::DL2), -1.0, -2.0) == -2.0);
  CHECK(or2(L(LogicTag::DL2), 0.0, -7.0) == 0.0);  // top absorbs
  CHECK(or2(L(LogicTag::DL2), 0.0, -kInf) == 0.0);  // even against bottom
  CHECK(or2(L(LogicTag::Product), 0.5, 0.5) == 0.75);
  CHECK(or2(L(LogicTag::Godel), 0.2, 0.9) == 0.9);
}

TEST_CASE("negation") {
  CHECK(interp_not(L(LogicTag::Godel), 0.25) == 0.75);
  CHECK(interp_not(L(LogicTag::STL), 3.0) == -3.0);
  CHECK_THROWS_AS(interp_not(L(LogicTag::DL2), -1.0), NegationError);
}

TEST_CASE("implication") {
  CHECK(interp_implies(L(LogicTag::Godel), 1.0, 0.0) == 0.0);
  CHECK(interp_implies(L(LogicTag::Lukasiewicz), 0.4, 0.4) == 1.0);
  for (double b : {0.0, 0.25, 1.0})
    CHECK(interp_implies(L(LogicTag::Product), 1.0, b) == doctest::Approx(b).epsilon(1e-15));
  CHECK_THROWS_AS(interp_implies(L(LogicTag::DL2), 0.0, 0.0), NegationError);
}

TEST_CASE("comparisons") {
  CHECK(interp_comparison(L(LogicTag::DL2), BuiltinOp::Leq, 3, 5) == 0.0);
  CHECK(interp_comparison(L(LogicTag::DL2), BuiltinOp::Eq, 3, 5) == -2.0);
  CHECK(interp_comparison(L(LogicTag::Godel), BuiltinOp::Eq, 3, 3) == 1.0);
  CHECK(interp_comparison(L(LogicTag::STL), BuiltinOp::Leq, 3, 5) == 2.0);
  // composite comparisons
  CHECK(interp_comparison(L(LogicTag::DL2), BuiltinOp::Geq, 5, 3) == 0.0);
  CHECK(interp_comparison(L(LogicTag::DL2), BuiltinOp::Lt, 3, 5) == 0.0);
  CHECK(interp_comparison(L(LogicTag::DL2), BuiltinOp::Lt, 3, 3) == -1.0);  // xi = 1
  CHECK(interp_comparison(L(LogicTag::Godel), BuiltinOp::Neq, 2, 2) == 0.0);
  CHECK_THROWS_AS(interp_comparison(L(LogicTag::Godel), BuiltinOp::Leq, kInf, 1), EvalError);
}

TEST_CASE("fuzzy <= is symmetric in verbatim form, ordered with --leq-signed") {
  Logic g = L(LogicTag::Godel);
  double ab = interp_comparison(g, BuiltinOp::Leq, 3, 5);
  double ba = interp_comparison(g, BuiltinOp::Leq, 5, 3);
  CHECK(ab == ba);  // the printed Figure's |a-b| form
  g.leq_signed = true;
  CHECK(interp_comparison(g, BuiltinOp::Leq, 3, 5) == 1.0);
  CHECK(interp_comparison(g, BuiltinOp::Leq, 5, 3) ==
        doctest::Approx(1.0 - std::tanh(2.0)).epsilon(1e-15));
}

TEST_CASE("domain closure on random in-domain pairs") {
  for (LogicTag t : {LogicTag::DL2, LogicTag::Godel, LogicTag::Lukasiewicz, LogicTag::Yager,
                     LogicTag::Product, LogicTag::STL}) {
    Logic l = L(t);
    Rng rng(derive_seed(11, logic_name(t)));
    double lo = l.domain_lo(), hi = l.domain_hi();
    // finite surrogate for the unbounded domains
    double flo = std::isinf(lo) ? -1e6 : lo;
    double fhi = std::isinf(hi) ? 1e6 : hi;
    for (int i = 0; i < 10000; ++i) {
      double a = rng.uniform(flo, fhi), b = rng.uniform(flo, fhi);
      CHECK(l.in_domain(and2(l, a, b)));
      CHECK(l.in_domain(or2(l, a, b)));
      if (t != LogicTag::DL2) {
        CHECK(l.in_domain(kernel::negate(l, a)));
        CHECK(l.in_domain(kernel::implies(l, a, b)));
      }
      double c = rng.uniform(-3, 3), d = rng.uniform(-3, 3);
      for (BuiltinOp op : {BuiltinOp::Eq, BuiltinOp::Neq, BuiltinOp::Leq, BuiltinOp::Geq,
                           BuiltinOp::Lt, BuiltinOp::Gt})
        CHECK(l.in_domain(kernel::compare(l, op, c, d)));
    }
  }
}

TEST_CASE("Godel and STL conjunctions are idempotent") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    double a = rng.uniform01();
    CHECK(and2(L(LogicTag::Godel), a, a) == a);
    double v = rng.uniform(-10, 10);
    if (v != 0.0)
      CHECK(and2(L(LogicTag::STL), v, v) == doctest::Approx(v).epsilon(1e-12));
  }
  CHECK(and2(L(LogicTag::STL), 0.0, 0.0) == 0.0);
}

TEST_CASE("DL2 top absorption") {
  CHECK(and2(L(LogicTag::DL2), 0.0, 0.0) == 0.0);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    double a = -rng.uniform01() * 50;
    CHECK(or2(L(LogicTag::DL2), 0.0, a) == 0.0);
  }
}

TEST_CASE("Yager at p = 1 coincides with Lukasiewicz") {
  Logic y = L(LogicTag::Yager);
  y.yager_p = 1.0;
  Logic luk = L(LogicTag::Lukasiewicz);
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    double a = rng.uniform01(), b = rng.uniform01();
    CHECK(kernel::conj(y, a, b) == doctest::Approx(kernel::conj(luk, a, b)).epsilon(1e-12));
    CHECK(kernel::disj(y, a, b) == doctest::Approx(kernel::disj(luk, a, b)).epsilon(1e-12));
  }
}

TEST_CASE("or_S equals the independently transcribed dual") {
  // Independent transcription keyed on v_max rather than duality.
  Logic stl = L(LogicTag::STL);
  auto or_direct = [&](std::span<const double> vs) {
    double vmax = vs[0];
    for (double v : vs) vmax = std::max(vmax, v);
    if (std::isinf(vmax)) return vmax;
    if (vmax == 0.0) return 0.0;
    double num = 0, den = 0;
    if (vmax > 0) {
      for (double v : vs) {
        double vt = (v - vmax) / vmax;
        num += vmax * std::exp(vt) * std::exp(stl.stl_nu * vt);
        den += std::exp(stl.stl_nu * vt);
      }
    } else {
      for (double v : vs) {
        double vt = (v - vmax) / vmax;
        double w = std::exp(-stl.stl_nu * vt);
        den += w;
        num += w == 0.0 ? 0.0 : v * w;
      }
    }
    return num / den;
  };
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    size_t m = 2 + rng.below(3);
    std::vector<double> vs(m);
    for (double& v : vs) v = rng.uniform(-5, 5);
    double dual = kernel::stl_or(stl, vs);
    double direct = or_direct(vs);
    CHECK(dual == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("push_negation rewrites") {
  ExprPtr e = parse_expr("not (x <= y and y <= z)");
  CHECK(pretty_print(push_negation(e)) == pretty_print(parse_expr("x > y or y > z")));

  ExprPtr dd = parse_expr("not (not (a == b))");
  CHECK(pretty_print(push_negation(dd)) == pretty_print(parse_expr("a == b")));

  CHECK_THROWS_AS(push_negation(parse_expr("not (lam (x : Real) . True) 1")), NegationError);

  // quantifier duals
  ExprPtr q = parse_expr("not (forall (x : Real) . x <= 0)");
  CHECK(pretty_print(push_negation(q)) ==
        pretty_print(parse_expr("exists (x : Real) . x > 0")));
}

TEST_CASE("DL2 lowering rewrites implications away") {
  Logic dl2 = L(LogicTag::DL2);
  ExprPtr e = parse_expr("a <= b => c <= d");
  ExprPtr low = lower_for_logic(e, dl2);
  CHECK(pretty_print(low) == pretty_print(parse_expr("a > b or c <= d")));
  // non-DL2 logics pass through
  CHECK(lower_for_logic(e, L(LogicTag::Godel)) == e);
}

TEST_CASE("STL n-ary conjunction differs from its binary fold") {
  Logic stl = L(LogicTag::STL);
  double vs[3] = {-1.0, 2.0, 0.5};
  double flat = kernel::stl_and(stl, vs);
  double folded = kernel::conj(stl, kernel::conj(stl, vs[0], vs[1]), vs[2]);
  CHECK(flat != folded);
}

TEST_CASE("logic parameter parsing and validation") {
  CHECK(logic_from_name("godel").tag == LogicTag::Godel);
  CHECK_THROWS(logic_from_name("zadeh"));
  CHECK(L(LogicTag::Yager).yager_p == 2.0);
  CHECK(L(LogicTag::STL).stl_nu == 1.0);
  CHECK(L(LogicTag::DL2).neq_xi == 1.0);
}
