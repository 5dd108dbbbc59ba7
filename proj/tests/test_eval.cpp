#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ldl/eval.hpp"
#include "ldl/graph.hpp"

using namespace ldl;

namespace {

SemanticContext ctx_for(LogicTag t, uint64_t seed = 1, int64_t samples = 32) {
  SemanticContext ctx;
  ctx.logic = Logic::make(t);
  ctx.sampling.seed = seed;
  ctx.sampling.sample_count = samples;
  return ctx;
}

double eval_truth(const std::string& src, SemanticContext& ctx) {
  ExprPtr e = lower_for_logic(parse_expr(src), ctx.logic);
  return eval(e, ctx).as_truth();
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("figure-4 basics") {
  SemanticContext ctx = ctx_for(LogicTag::Godel);
  ExprPtr lets = parse_expr("let (x : Real) = 3 in x + 1");
  CHECK(eval(lets, ctx).as_real() == 4.0);
  ExprPtr lk = parse_expr("[1, 2, 3] ! 2");
  CHECK(eval(lk, ctx).as_real() == 3.0);
  ExprPtr lamapp = parse_expr("(lam (x : Real) . x * x) 5");
  CHECK(eval(lamapp, ctx).as_real() == 25.0);
}

TEST_CASE("closures capture their environment by value") {
  SemanticContext ctx = ctx_for(LogicTag::Godel);
  ExprPtr e = parse_expr(
      "let (a : Real) = 2 in "
      "let (f : Real -> Real) = lam (x : Real) . x + a in "
      "let (a : Real) = 100 in f 1");
  CHECK(eval(e, ctx).as_real() == 3.0);
}

TEST_CASE("bounded from the 2-D robustness spec is top on a satisfied instance") {
  SpecFile spec = parse_file(testing::src_path("specs/robust2.ldl"));
  SemanticContext ctx = ctx_for(LogicTag::DL2);
  // bounded [1,2] [1,2] 0.5 under DL2: every summand is -max(.,0) = 0
  ExprPtr body = spec.definitions[0].body;  // the bounded lambda
  Value bounded = eval(body, ctx);
  Value v1 = apply_value(bounded, Value::vec_v(Eigen::Vector2d(1, 2)), ctx);
  Value v2 = apply_value(v1, Value::vec_v(Eigen::Vector2d(1, 2)), ctx);
  Value v3 = apply_value(v2, Value::real_v(0.5), ctx);
  CHECK(v3.as_truth() == 0.0);
}

TEST_CASE("finite quantifier evaluation matches the hand-computed folds") {
  SemanticContext g = ctx_for(LogicTag::Godel);
  double expected = std::min(1.0 - std::max(std::tanh(std::fabs(5.0 - 10.0)), 0.0),
                             1.0 - std::max(std::tanh(std::fabs(7.0 - 10.0)), 0.0));
  CHECK(eval_truth("forall (i : Index 2) . [5, 7] ! i <= 10", g) == expected);

  // forall (b : Bool) . b or not b under Godel: min over {1,0} of max(b, 1-b) = 1
  CHECK(eval_truth("forall (b : Bool) . b or not b", g) == 1.0);

  SemanticContext d = ctx_for(LogicTag::DL2);
  CHECK(eval_truth("exists (i : Index 2) . [5, 7] ! i == 7", d) == 0.0);

  SemanticContext s = ctx_for(LogicTag::STL);
  CHECK(eval_truth("exists (b : Bool) . b", s) == kInf);
}

TEST_CASE("single-point empirical sampler pins the quantified value") {
  for (LogicTag t : {LogicTag::Godel, LogicTag::Lukasiewicz, LogicTag::Yager,
                     LogicTag::Product}) {
    SemanticContext ctx = ctx_for(t);
    ctx.samplers.emplace("x", Distribution::empirical({{3.0}}));
    CHECK(eval_truth("forall (x : Real) . x == 3", ctx) == 1.0);
  }
}

TEST_CASE("existential over a box is positive for STL when satisfied everywhere") {
  SemanticContext ctx = ctx_for(LogicTag::STL);
  ctx.samplers.emplace("x", Distribution::uniform_box({0.0}, {1.0}));
  CHECK(eval_truth("exists (x : Real) . x <= 2", ctx) > 0.0);
}

TEST_CASE("missing sampler raises a named error") {
  SemanticContext ctx = ctx_for(LogicTag::Godel);
  try {
    eval_truth("forall (x : Real) . x <= 0", ctx);
    FAIL("expected MissingSamplerError");
  } catch (const MissingSamplerError& e) {
    CHECK(e.binder_name == "x");
  }
}

TEST_CASE("nested reuse of a quantifier name is rejected") {
  SemanticContext ctx = ctx_for(LogicTag::Godel);
  ctx.samplers.emplace("x", Distribution::uniform_box({0.0}, {1.0}));
  CHECK_THROWS_WITH_AS(
      eval_truth("forall (x : Real) . exists (x : Real) . x <= 0", ctx),
      doctest::Contains("nested"), EvalError);
}

TEST_CASE("finite-expansion equivalence is exact for every logic") {
  testing::TypedGen gen(321);
  const LogicTag tags[] = {LogicTag::DL2,   LogicTag::Godel,   LogicTag::Lukasiewicz,
                           LogicTag::Yager, LogicTag::Product, LogicTag::STL};
  for (int t = 0; t < 60; ++t) {
    // random body over one Index binder
    gen.samplers.clear();
    gen.name_counter = 0;
    gen.scope.clear();
    int64_t n = 2 + (int64_t)gen.rng.below(3);
    gen.scope.push_back({"q", LdlType::index(n)});
    ExprPtr body = gen.gen_bool(3);
    gen.scope.pop_back();
    bool universal = gen.rng.below(2) == 0;
    ExprPtr quant = universal ? forall("q", LdlType::index(n), body)
                              : exists("q", LdlType::index(n), body);
    // explicit substituted expansion
    ExprPtr expansion;
    for (int64_t k = 0; k < n; ++k) {
      ExprPtr inst = open_binder(body, index_const(k));
      expansion = expansion ? apply2(universal ? BuiltinOp::And : BuiltinOp::Or,
                                     expansion, inst)
                            : inst;
    }
    for (LogicTag tag : tags) {
      SemanticContext ctx = ctx_for(tag);
      for (auto& [nm, dist] : gen.samplers) ctx.samplers.emplace(nm, dist);
      ExprPtr ql = lower_for_logic(quant, ctx.logic);
      ExprPtr el = lower_for_logic(expansion, ctx.logic);
      double qa = eval(ql, ctx).as_truth();
      double ea = eval(el, ctx).as_truth();
      CHECK(qa == ea);
    }
  }
}

TEST_CASE("sampling monotonicity under nested sample sets") {
  ExprPtr body = parse_expr("forall (x : Real) . x * x >= x - 0.2");
  ExprPtr ex = parse_expr("exists (x : Real) . x * x >= x - 0.2");
  for (LogicTag t : {LogicTag::Godel, LogicTag::DL2, LogicTag::STL}) {
    SemanticContext small = ctx_for(t, 77, 20);
    SemanticContext big = ctx_for(t, 77, 200);
    small.samplers.emplace("x", Distribution::uniform_box({-3.0}, {3.0}));
    big.samplers.emplace("x", Distribution::uniform_box({-3.0}, {3.0}));
    CHECK(eval(body, big).as_truth() <= eval(body, small).as_truth());
    CHECK(eval(ex, big).as_truth() >= eval(ex, small).as_truth());
  }
}

TEST_CASE("evaluation is deterministic and referentially transparent") {
  SemanticContext ctx = ctx_for(LogicTag::Product, 13, 64);
  ctx.samplers.emplace("x", Distribution::gaussian({0.0}, {1.0}));
  ExprPtr e = parse_expr("forall (x : Real) . x * x <= 9");
  double a = eval(e, ctx).as_truth();
  double b = eval(e, ctx).as_truth();
  CHECK(a == b);
}

TEST_CASE("Godel quantifiers commute with conjunction, DL2's do not") {
  // finite domain, exact
  SemanticContext g = ctx_for(LogicTag::Godel);
  double lhs = eval_truth(
      "forall (i : Index 2) . [0, 1] ! i <= 0.5 and [1, 0] ! i <= 0.5", g);
  double rhs = eval_truth(
      "(forall (i : Index 2) . [0, 1] ! i <= 0.5) and (forall (i : Index 2) . [1, 0] ! i <= 0.5)",
      g);
  CHECK(lhs == rhs);

  // infinite domain under a shared sample set
  SemanticContext g2 = ctx_for(LogicTag::Godel, 5, 64);
  g2.samplers.emplace("x", Distribution::uniform_box({-2.0}, {2.0}));
  double gl = eval_truth("forall (x : Real) . x == 1 and x == 0 - 1", g2);
  double gr = eval_truth("(forall (x : Real) . x == 1) and (forall (x : Real) . x == 0 - 1)", g2);
  CHECK(gl == gr);

  SemanticContext d2 = ctx_for(LogicTag::DL2, 5, 64);
  d2.samplers.emplace("x", Distribution::uniform_box({-2.0}, {2.0}));
  double dl = eval_truth("forall (x : Real) . x == 1 and x == 0 - 1", d2);
  double dr = eval_truth("(forall (x : Real) . x == 1) and (forall (x : Real) . x == 0 - 1)", d2);
  CHECK(dl != dr);
}

TEST_CASE("loss is penalty-oriented per logic") {
  SpecFile spec = parse_file(testing::src_path("specs/robust2.ldl"));
  ContextFile cf = load_context(testing::src_path("specs/fixtures/satisfied.ctx"));
  DenseNetwork net = load_network(testing::src_path("specs/fixtures/identity2.net"));

  SemanticContext ctx = ctx_for(LogicTag::DL2);
  ctx.networks.emplace("f", net);
  ctx.samplers = cf.samplers;
  std::vector<Value> args = {Value::real_v(0.1), Value::real_v(0.1),
                             Value::vec_v(Eigen::Vector2d(0, 0))};
  CHECK(loss(spec, ctx, args) == 0.0);

  // Godel reaches zero loss only on exact-equality instances.
  SemanticContext gctx = ctx_for(LogicTag::Godel);
  gctx.networks.emplace("f", net);
  gctx.samplers = cf.samplers;
  std::vector<Value> gargs = {Value::real_v(0.0), Value::real_v(0.0),
                              Value::vec_v(Eigen::Vector2d(0, 0))};
  CHECK(loss(spec, gctx, gargs) == 0.0);

  // STL penalty of a satisfied instance is negative (truth positive).
  SemanticContext sctx = ctx_for(LogicTag::STL);
  sctx.networks.emplace("f", net);
  sctx.samplers = cf.samplers;
  CHECK(loss(spec, sctx, args) < 0.0);
}

TEST_CASE("classical evaluation decides ground formulas exactly") {
  SemanticContext ctx;
  CHECK(eval_classical(parse_expr("3 <= 5"), ctx));
  CHECK(!eval_classical(parse_expr("3 <= 5 and not (2 == 2)"), ctx));
  CHECK(eval_classical(parse_expr("forall (i : Index 3) . [1, 2, 3] ! i <= 3"), ctx));
  CHECK(eval_classical(parse_expr("1 <= 2 => 2 <= 3"), ctx));
  CHECK(!eval_classical(parse_expr("exists (i : Index 2) . [1, 2] ! i > 5"), ctx));
}
