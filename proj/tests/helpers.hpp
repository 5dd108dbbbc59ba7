#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ldl/eval.hpp"
#include "ldl/logics.hpp"
#include "ldl/netio.hpp"
#include "ldl/parser.hpp"
#include "ldl/sampling.hpp"
#include "ldl/typecheck.hpp"

namespace ldl::testing {

inline std::string src_path(const std::string& rel) {
  return std::string(LDL_SOURCE_DIR) + "/" + rel;
}

inline DenseNetwork random_net(Rng& rng, int64_t in, int64_t out, bool softmax_final = false,
                               int64_t hidden = 0) {
  DenseNetwork net;
  net.input_dim = in;
  net.output_dim = out;
  auto mk = [&](int64_t o, int64_t i, Activation act) {
    Layer l;
    l.W.resize(o, i);
    for (int64_t r = 0; r < o; ++r)
      for (int64_t c = 0; c < i; ++c) l.W(r, c) = rng.uniform(-1.0, 1.0);
    l.b.resize(o);
    for (int64_t r = 0; r < o; ++r) l.b(r) = rng.uniform(-0.5, 0.5);
    l.act = act;
    return l;
  };
  if (hidden > 0) {
    net.layers.push_back(mk(hidden, in, Activation::Relu));
    net.layers.push_back(mk(out, hidden, softmax_final ? Activation::Softmax : Activation::Identity));
  } else {
    net.layers.push_back(mk(out, in, softmax_final ? Activation::Softmax : Activation::Identity));
  }
  net.validate();
  return net;
}

// Random closed well-typed term generator. Quantifier binder names are
// globally fresh per term; every infinitely quantified variable gets a
// registered sampler.
struct TypedGen {
  Rng rng;
  bool allow_negation = true;  // not / => (off for DL2 fuzzing)
  int name_counter = 0;
  std::map<std::string, Distribution> samplers;

  struct ScopeVar {
    std::string name;
    LdlType ty;
  };
  std::vector<ScopeVar> scope;

  explicit TypedGen(uint64_t seed, bool allow_neg = true)
      : rng(seed), allow_negation(allow_neg) {}

  std::string fresh(const char* base) { return base + std::to_string(name_counter++); }

  ExprPtr var_of(const LdlType& want) {
    std::vector<size_t> hits;
    for (size_t i = 0; i < scope.size(); ++i)
      if (scope[i].ty == want) hits.push_back(i);
    if (hits.empty()) return nullptr;
    size_t pos = hits[rng.below(hits.size())];
    return bound_var(scope[pos].name, (int)(scope.size() - 1 - pos));
  }

  double small_const() {
    // quarter-grid constants keep arithmetic finite and exact-ish
    return (double)((int64_t)rng.below(17) - 8) / 4.0;
  }

  ExprPtr gen_real(int d) {
    if (d <= 0) {
      if (auto v = var_of(LdlType::real()); v && rng.below(2)) return v;
      return real_const(small_const());
    }
    switch (rng.below(7)) {
      case 0:
        if (auto v = var_of(LdlType::real())) return v;
        return real_const(small_const());
      case 1:
        return real_const(small_const());
      case 2:
        return apply2(BuiltinOp::Add, gen_real(d - 1), gen_real(d - 1));
      case 3:
        return apply2(BuiltinOp::Mul, gen_real(d - 1), gen_real(d - 1));
      case 4: {
        ExprPtr r = gen_real(d - 1);
        if (r->kind == ExprKind::RealConst) return real_const(-r->real_val);
        return apply1(BuiltinOp::Neg, r);
      }
      case 5: {  // lookup
        int64_t n = 2 + (int64_t)rng.below(2);
        ExprPtr vec = gen_vec(n, d - 1);
        ExprPtr idx;
        if (auto v = var_of(LdlType::index(n)); v && rng.below(2))
          idx = v;
        else
          idx = index_const((int64_t)rng.below((uint64_t)n));
        return apply2(BuiltinOp::Lookup, vec, idx);
      }
      default: {  // let
        std::string nm = fresh("r");
        ExprPtr bound = gen_real(d - 1);
        scope.push_back({nm, LdlType::real()});
        ExprPtr body = gen_real(d - 1);
        scope.pop_back();
        return let(nm, LdlType::real(), bound, body);
      }
    }
  }

  ExprPtr gen_vec(int64_t n, int d) {
    if (d > 0) {
      if (auto v = var_of(LdlType::vec(n)); v && rng.below(2)) return v;
      if (rng.below(4) == 0) {
        std::string nm = fresh("v");
        ExprPtr bound = gen_vec(n, d - 1);
        scope.push_back({nm, LdlType::vec(n)});
        ExprPtr body = gen_vec(n, d - 1);
        scope.pop_back();
        return let(nm, LdlType::vec(n), bound, body);
      }
    }
    std::vector<ExprPtr> elems;
    for (int64_t i = 0; i < n; ++i) elems.push_back(gen_real(std::max(0, d - 1)));
    return vec_lit(std::move(elems));
  }

  ExprPtr gen_bool(int d) {
    if (d <= 0) {
      if (auto v = var_of(LdlType::boolean()); v && rng.below(2) && allow_negation) return v;
      const BuiltinOp cmps[] = {BuiltinOp::Eq,  BuiltinOp::Neq, BuiltinOp::Leq,
                                BuiltinOp::Geq, BuiltinOp::Lt,  BuiltinOp::Gt};
      return apply2(cmps[rng.below(6)], gen_real(0), gen_real(0));
    }
    uint64_t choices = allow_negation ? 9 : 7;
    switch (rng.below(choices)) {
      case 0:
        return bool_const(rng.below(2) == 0);
      case 1: {
        const BuiltinOp cmps[] = {BuiltinOp::Eq,  BuiltinOp::Neq, BuiltinOp::Leq,
                                  BuiltinOp::Geq, BuiltinOp::Lt,  BuiltinOp::Gt};
        return apply2(cmps[rng.below(6)], gen_real(d - 1), gen_real(d - 1));
      }
      case 2:
        return apply2(BuiltinOp::And, gen_bool(d - 1), gen_bool(d - 1));
      case 3:
        return apply2(BuiltinOp::Or, gen_bool(d - 1), gen_bool(d - 1));
      case 4: {  // finite Index quantifier
        int64_t n = 2 + (int64_t)rng.below(2);
        std::string nm = fresh("i");
        scope.push_back({nm, LdlType::index(n)});
        ExprPtr body = gen_bool(d - 1);
        scope.pop_back();
        return rng.below(2) ? forall(nm, LdlType::index(n), body)
                            : exists(nm, LdlType::index(n), body);
      }
      case 5: {  // infinite Real quantifier
        std::string nm = fresh("x");
        samplers.emplace(nm, Distribution::uniform_box({-2.0}, {2.0}));
        scope.push_back({nm, LdlType::real()});
        ExprPtr body = gen_bool(d - 1);
        scope.pop_back();
        return rng.below(2) ? forall(nm, LdlType::real(), body)
                            : exists(nm, LdlType::real(), body);
      }
      case 6: {  // let-bound real used in a comparison
        std::string nm = fresh("r");
        ExprPtr bound = gen_real(d - 1);
        scope.push_back({nm, LdlType::real()});
        ExprPtr body = gen_bool(d - 1);
        scope.pop_back();
        return let(nm, LdlType::real(), bound, body);
      }
      case 7:
        return apply1(BuiltinOp::Not, gen_bool(d - 1));
      default:
        return apply2(BuiltinOp::Implies, gen_bool(d - 1), gen_bool(d - 1));
    }
  }

  // A closed Bool term plus the samplers its quantifiers need.
  ExprPtr formula(int depth) {
    samplers.clear();
    name_counter = 0;
    scope.clear();
    return gen_bool(depth);
  }
};

}  // namespace ldl::testing
