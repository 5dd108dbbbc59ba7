#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "ldl/graph.hpp"

using namespace ldl;

namespace {

// Shared harness: direct evaluation vs compiled-graph evaluation on
// seeded random inputs; exact equality expected.
bool differential_equal(const std::string& spec_path, LogicTag tag, uint64_t seed,
                        int inputs_count) {
  SpecFile spec = parse_file(spec_path);
  Logic L = Logic::make(tag);
  Rng rng(derive_seed(seed, spec_path + logic_name(tag)));

  std::map<std::string, DenseNetwork> nets;
  for (auto& [name, arity] : spec.networks.all())
    nets.emplace(name, testing::random_net(rng, arity.first, arity.second));

  std::map<std::string, Distribution> samplers;
  for (const std::string& var : free_quantified_vars(spec.root_expr())) {
    // dimension from the quantifier annotation
    std::function<int64_t(const ExprPtr&)> dim_of = [&](const ExprPtr& e) -> int64_t {
      if (!e) return 0;
      if ((e->kind == ExprKind::Forall || e->kind == ExprKind::Exists) && e->name == var)
        return e->annot.is_real() ? 1 : e->annot.size();
      int64_t d = dim_of(e->a);
      if (d) return d;
      d = dim_of(e->b);
      if (d) return d;
      for (auto& c : e->elems)
        if ((d = dim_of(c))) return d;
      return 0;
    };
    int64_t dim = dim_of(spec.root_expr());
    samplers.emplace(var, Distribution::uniform_box(std::vector<double>((size_t)dim, -2.0),
                                                    std::vector<double>((size_t)dim, 2.0)));
  }

  ExprGraph g = compile_spec(spec, L);

  bool all_equal = true;
  for (int t = 0; t < inputs_count; ++t) {
    SamplingConfig sc;
    sc.sample_count = 8;
    sc.seed = derive_seed(seed, "inputs-" + std::to_string(t));
    sc.refinement_steps = t % 2 == 0 ? 0 : 2;

    GraphInputs in;
    std::vector<Value> args;
    for (const GraphInput& gi : g.inputs) {
      if (gi.is_vec) {
        Eigen::VectorXd v(gi.dim);
        for (int64_t i = 0; i < gi.dim; ++i) v[i] = rng.uniform(-2, 2);
        in.vectors[gi.name] = v;
        args.push_back(Value::vec_v(v));
      } else {
        double v = rng.uniform(-2, 2);
        in.scalars[gi.name] = v;
        args.push_back(Value::real_v(v));
      }
    }

    SemanticContext ctx;
    ctx.logic = L;
    ctx.sampling = sc;
    ctx.networks = nets;
    ctx.samplers = samplers;
    double direct = loss(spec, ctx, args);
    double graphed = penalty_from_truth(L, graph_eval(g, in, nets, samplers, sc));
    if (!(direct == graphed || (std::isnan(direct) && std::isnan(graphed)))) {
      CAPTURE(spec_path);
      CAPTURE(logic_name(tag));
      CAPTURE(direct);
      CAPTURE(graphed);
      all_equal = false;
    }
  }
  return all_equal;
}

}  // namespace

TEST_CASE("lowered robustness graph contains only arithmetic ops") {
  SpecFile spec = parse_file(testing::src_path("specs/robust2.ldl"));
  ExprGraph g = compile_spec(spec, Logic::make(LogicTag::Godel));
  std::set<std::string> ops;
  for (auto& n : g.nodes) ops.insert(graph_op_name(n.op));
  CHECK(ops.count("min"));
  CHECK(ops.count("max"));
  CHECK(ops.count("tanh"));
  CHECK(!ops.count("reducemax"));
  CHECK(ops.count("reducemin"));  // the infinite forall survives as a reducer
  CHECK(g.inputs.size() == 3);
  CHECK(g.samplers.size() == 1);
  CHECK(g.samplers[0].first == "x");
}

TEST_CASE("finite quantifiers are expanded at compile time") {
  SpecFile spec = parse(
      "p : Real -> Bool = lam (c : Real) . forall (i : Index 2) . [1, 2] ! i <= c");
  ExprGraph g = compile_spec(spec, Logic::make(LogicTag::Godel));
  int vecgets = 0;
  for (auto& n : g.nodes)
    if (n.op == GraphOp::VecGet) ++vecgets;
  CHECK(vecgets == 2);  // one body copy per element
  for (auto& n : g.nodes) {
    CHECK(n.op != GraphOp::ReduceMin);
    CHECK(n.op != GraphOp::ReduceMax);
  }
}

TEST_CASE("graph serialization round trips byte-for-byte") {
  SpecFile spec = parse_file(testing::src_path("specs/robust2.ldl"));
  for (LogicTag t : {LogicTag::DL2, LogicTag::Godel, LogicTag::STL}) {
    ExprGraph g = compile_spec(spec, Logic::make(t));
    std::string text = serialize_graph(g);
    ExprGraph back = parse_graph(text);
    CHECK(serialize_graph(back) == text);
  }
}

TEST_CASE("graph evaluation equals direct evaluation on the corpus") {
  const LogicTag tags[] = {LogicTag::DL2,   LogicTag::Godel,   LogicTag::Lukasiewicz,
                           LogicTag::Yager, LogicTag::Product, LogicTag::STL};
  for (int i = 1; i <= 20; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "specs/diff/t%02d.ldl", i);
    for (LogicTag t : tags) {
      CHECK(differential_equal(testing::src_path(name), t, 42, 5));
    }
  }
}

TEST_CASE("graph gradients match finite differences away from kinks") {
  // implication-free spec so DL2 also passes through; no infinite
  // quantifiers so finite differences are deterministic
  SpecFile spec = parse(
      "network f : Vec 2 -> Vec 2\n"
      "p : Vec 2 -> Bool = lam (u : Vec 2) .\n"
      "  forall (i : Index 2) . f u ! i <= 0.75 and f u ! i >= 0 - 0.75");
  Rng rng(31337);
  const double h = 1e-6;
  for (LogicTag t : {LogicTag::DL2, LogicTag::Godel, LogicTag::Product, LogicTag::STL}) {
    Logic L = Logic::make(t);
    ExprGraph g = compile_spec(spec, L);
    for (int trial = 0; trial < 8; ++trial) {
      std::map<std::string, DenseNetwork> nets;
      nets.emplace("f", testing::random_net(rng, 2, 2));
      GraphInputs in;
      Eigen::VectorXd u(2);
      u << rng.uniform(-1, 1), rng.uniform(-1, 1);
      in.vectors["u"] = u;
      SamplingConfig sc;
      GraphGradients gg = graph_backward(g, in, nets, {}, sc);
      auto it = gg.networks.find("f");
      REQUIRE(it != gg.networks.end());
      for (int64_t r = 0; r < 2; ++r) {
        for (int64_t c = 0; c < 2; ++c) {
          auto nets_up = nets, nets_dn = nets;
          nets_up.at("f").layers[0].W(r, c) += h;
          nets_dn.at("f").layers[0].W(r, c) -= h;
          auto sig_up = graph_branch_signature(g, in, nets_up, {}, sc);
          auto sig_dn = graph_branch_signature(g, in, nets_dn, {}, sc);
          if (sig_up != sig_dn) continue;  // kink-adjacent coordinate
          double up = graph_eval(g, in, nets_up, {}, sc);
          double dn = graph_eval(g, in, nets_dn, {}, sc);
          double fd = (up - dn) / (2 * h);
          double an = it->second.dW[0](r, c);
          double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
          CHECK(std::fabs(fd - an) / denom < 1e-3);
        }
      }
    }
  }
}

TEST_CASE("reducer gradients flow through the winning sample") {
  SpecFile spec = parse(
      "network f : Vec 1 -> Vec 1\n"
      "p : Real -> Bool = lam (c : Real) . forall (x : Real) . f [x] ! 0 <= c");
  Logic L = Logic::make(LogicTag::DL2);
  ExprGraph g = compile_spec(spec, L);
  std::map<std::string, DenseNetwork> nets;
  DenseNetwork lin;
  lin.input_dim = 1;
  lin.output_dim = 1;
  Layer l;
  l.W.resize(1, 1);
  l.W(0, 0) = 1.0;
  l.b.resize(1);
  l.b[0] = 0.0;
  l.act = Activation::Identity;
  lin.layers.push_back(l);
  nets.emplace("f", lin);
  std::map<std::string, Distribution> samplers;
  samplers.emplace("x", Distribution::uniform_box({-1.0}, {1.0}));
  GraphInputs in;
  in.scalars["c"] = -2.0;  // violated everywhere: truth = -(max f(x) + 2 ... ) < 0
  SamplingConfig sc;
  sc.sample_count = 32;
  sc.seed = 9;
  GraphGradients gg = graph_backward(g, in, nets, samplers, sc);
  // truth = -max(w*x* - c, 0) at the worst sample x*; d truth / d w = -x*
  const double h = 1e-6;
  auto up = nets, dn = nets;
  up.at("f").layers[0].W(0, 0) += h;
  dn.at("f").layers[0].W(0, 0) -= h;
  double fd = (graph_eval(g, in, up, samplers, sc) - graph_eval(g, in, dn, samplers, sc)) /
              (2 * h);
  CHECK(gg.networks.at("f").dW[0](0, 0) == doctest::Approx(fd).epsilon(1e-4));
}
