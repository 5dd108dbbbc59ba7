#include "ldl/eval.hpp"

#include <cmath>
#include <set>

#include "ldl/typecheck.hpp"

namespace ldl {

Value Value::real_v(double v) {
  Value x;
  x.kind = Kind::Real;
  x.real = v;
  return x;
}

Value Value::index_v(int64_t i) {
  Value x;
  x.kind = Kind::Index;
  x.index = i;
  return x;
}

Value Value::vec_v(Eigen::VectorXd v) {
  Value x;
  x.kind = Kind::Vec;
  x.vec = std::move(v);
  return x;
}

Value Value::truth_v(double v) {
  Value x;
  x.kind = Kind::Truth;
  x.real = v;
  return x;
}

double Value::as_real() const {
  if (kind != Kind::Real && kind != Kind::Truth) throw EvalError("expected a real value");
  return real;
}

double Value::as_truth() const {
  if (kind != Kind::Truth) throw EvalError("expected a truth value");
  return real;
}

int64_t Value::as_index() const {
  if (kind != Kind::Index) throw EvalError("expected an index value");
  return index;
}

const Eigen::VectorXd& Value::as_vec() const {
  if (kind != Kind::Vec) throw EvalError("expected a vector value");
  return vec;
}

std::string Value::show() const {
  switch (kind) {
    case Kind::Real: return format_real(real);
    case Kind::Truth: return format_real(real);
    case Kind::Index: return std::to_string(index);
    case Kind::Vec: {
      std::string s = "[";
      for (int64_t i = 0; i < vec.size(); ++i) {
        if (i) s += ", ";
        s += format_real(vec[i]);
      }
      return s + "]";
    }
    case Kind::Closure: return "<closure " + param + ">";
    case Kind::Builtin: return std::string("<builtin ") + builtin_name(op) + ">";
    case Kind::Network: return "<network>";
  }
  return "?";
}

Env env_push(Env env, Value v) {
  auto node = std::make_shared<EnvNode>();
  node->value = std::move(v);
  node->next = std::move(env);
  return node;
}

const Value& env_at(const Env& env, int debruijn) {
  const EnvNode* n = env.get();
  for (int i = 0; i < debruijn && n; ++i) n = n->next.get();
  if (!n) throw EvalError("environment lookup past the end");
  return n->value;
}

namespace {

int env_depth(const Env& env) {
  int d = 0;
  for (const EnvNode* n = env.get(); n; n = n->next.get()) ++d;
  return d;
}

struct Evaluator {
  const SemanticContext& ctx;
  // Infinite-quantifier binders currently in scope; nested reuse of a
  // name would alias the sampler, so it is rejected.
  std::set<std::string> active_infinite;

  Value run(const ExprPtr& e, const Env& env) {
    switch (e->kind) {
      case ExprKind::BoundVar: {
        int depth = env_depth(env);
        if (e->debruijn < depth) return env_at(env, e->debruijn);
        auto it = ctx.bound.find(e->name);
        if (it == ctx.bound.end())
          throw EvalError("no value bound for free variable '" + e->name + "'");
        return it->second;
      }
      case ExprKind::NetworkVar: {
        auto it = ctx.networks.find(e->name);
        if (it == ctx.networks.end())
          throw EvalError("no implementation bound for network '" + e->name + "'");
        Value v;
        v.kind = Value::Kind::Network;
        v.net = &it->second;
        return v;
      }
      case ExprKind::RealConst:
        return Value::real_v(e->real_val);
      case ExprKind::IndexConst:
        return Value::index_v(e->nat_val);
      case ExprKind::BoolConst:
        return Value::truth_v(e->truth ? ctx.logic.top() : ctx.logic.bottom());
      case ExprKind::Builtin: {
        Value v;
        v.kind = Value::Kind::Builtin;
        v.op = e->op;
        return v;
      }
      case ExprKind::Lam: {
        Value v;
        v.kind = Value::Kind::Closure;
        v.body = e->b;
        v.env = env;
        v.param = e->name;
        return v;
      }
      case ExprKind::Let: {
        Value bound = run(e->a, env);
        return run(e->b, env_push(env, std::move(bound)));
      }
      case ExprKind::VecLit: {
        Eigen::VectorXd v(e->elems.size());
        for (size_t i = 0; i < e->elems.size(); ++i) v[i] = run(e->elems[i], env).as_real();
        return Value::vec_v(std::move(v));
      }
      case ExprKind::App:
        return run_app(e, env);
      case ExprKind::Forall:
        return quantifier(e, env, /*is_forall=*/true);
      case ExprKind::Exists:
        return quantifier(e, env, /*is_forall=*/false);
    }
    throw EvalError("unhandled expression kind");
  }

  // Maximal run of one connective under a single parent, left to right.
  void flatten_chain(const ExprPtr& e, BuiltinOp op, std::vector<ExprPtr>& leaves) {
    if (e->kind == ExprKind::App && e->a && e->a->kind == ExprKind::App && e->a->a &&
        e->a->a->kind == ExprKind::Builtin && e->a->a->op == op) {
      flatten_chain(e->a->b, op, leaves);
      flatten_chain(e->b, op, leaves);
      return;
    }
    leaves.push_back(e);
  }

  Value run_app(const ExprPtr& e, const Env& env) {
    // STL conjunction is non-associative; surface chains become one
    // M-ary node so that expansion and evaluation agree (other logics
    // fold pairwise through the generic path).
    if (ctx.logic.tag == LogicTag::STL && e->a && e->a->kind == ExprKind::App && e->a->a &&
        e->a->a->kind == ExprKind::Builtin &&
        (e->a->a->op == BuiltinOp::And || e->a->a->op == BuiltinOp::Or)) {
      BuiltinOp op = e->a->a->op;
      std::vector<ExprPtr> leaves;
      flatten_chain(e, op, leaves);
      std::vector<double> vals;
      vals.reserve(leaves.size());
      for (auto& leaf : leaves) vals.push_back(run(leaf, env).as_truth());
      double r = op == BuiltinOp::And ? interp_and(ctx.logic, vals) : interp_or(ctx.logic, vals);
      return Value::truth_v(r);
    }
    Value fn = run(e->a, env);
    Value arg = run(e->b, env);
    return apply(fn, arg);
  }

  Value apply(const Value& fn, const Value& arg) {
    switch (fn.kind) {
      case Value::Kind::Closure:
        return run(fn.body, env_push(fn.env, arg));
      case Value::Kind::Network: {
        return Value::vec_v(forward(*fn.net, arg.as_vec()));
      }
      case Value::Kind::Builtin: {
        Value v = fn;
        v.args.push_back(arg);
        if ((int)v.args.size() == builtin_arity(v.op)) return apply_builtin(v.op, v.args);
        return v;
      }
      default:
        throw EvalError("cannot apply a non-function value");
    }
  }

  Value apply_builtin(BuiltinOp op, const std::vector<Value>& args) {
    switch (op) {
      case BuiltinOp::Add:
        return Value::real_v(args[0].as_real() + args[1].as_real());
      case BuiltinOp::Mul:
        return Value::real_v(args[0].as_real() * args[1].as_real());
      case BuiltinOp::Neg:
        return Value::real_v(-args[0].as_real());
      case BuiltinOp::And: {
        double vs[2] = {args[0].as_truth(), args[1].as_truth()};
        return Value::truth_v(interp_and(ctx.logic, vs));
      }
      case BuiltinOp::Or: {
        double vs[2] = {args[0].as_truth(), args[1].as_truth()};
        return Value::truth_v(interp_or(ctx.logic, vs));
      }
      case BuiltinOp::Not:
        return Value::truth_v(interp_not(ctx.logic, args[0].as_truth()));
      case BuiltinOp::Implies:
        return Value::truth_v(
            interp_implies(ctx.logic, args[0].as_truth(), args[1].as_truth()));
      case BuiltinOp::Lookup: {
        const Eigen::VectorXd& v = args[0].as_vec();
        int64_t i = args[1].as_index();
        if (i < 0 || i >= v.size()) throw EvalError("lookup index out of range");
        return Value::real_v(v[i]);
      }
      default: {
        double a = args[0].as_real();
        double b = args[1].as_real();
        return Value::truth_v(interp_comparison(ctx.logic, op, a, b));
      }
    }
  }

  Value quantifier(const ExprPtr& e, const Env& env, bool is_forall) {
    if (classify_quantifier(e->annot) == QuantifierClass::Finite) {
      // Element values of the domain for the binder.
      std::vector<Value> elems;
      if (e->annot.is_index()) {
        for (int64_t i = 0; i < e->annot.size(); ++i) elems.push_back(Value::index_v(i));
      } else {  // Bool enumerates {top, bottom}
        elems.push_back(Value::truth_v(ctx.logic.top()));
        elems.push_back(Value::truth_v(ctx.logic.bottom()));
      }
      std::vector<double> vals;
      if (ctx.logic.tag == LogicTag::STL) {
        // The substituted expansion e[x/d1] /\ ... /\ e[x/dn] flattens
        // through an and-rooted body, so the quantifier must too.
        std::vector<ExprPtr> leaves;
        flatten_chain(e->b, is_forall ? BuiltinOp::And : BuiltinOp::Or, leaves);
        for (const Value& d : elems) {
          Env inner = env_push(env, d);
          for (auto& leaf : leaves) vals.push_back(run(leaf, inner).as_truth());
        }
      } else {
        for (const Value& d : elems)
          vals.push_back(run(e->b, env_push(env, d)).as_truth());
      }
      return Value::truth_v(is_forall ? fold_and(ctx.logic, vals) : fold_or(ctx.logic, vals));
    }
    // Infinite quantifier: extremum of the sampled body.
    auto it = ctx.samplers.find(e->name);
    if (it == ctx.samplers.end()) throw MissingSamplerError(e->name);
    const Distribution& dist = it->second;
    int64_t want = e->annot.is_real() ? 1 : e->annot.size();
    if (dist.dim != want)
      throw EvalError("sampler for '" + e->name + "' has dimension " +
                      std::to_string(dist.dim) + ", quantifier needs " + std::to_string(want));
    if (!active_infinite.insert(e->name).second)
      throw EvalError("nested quantifiers reuse the name '" + e->name +
                      "', making its sampler ambiguous");
    ExtremumResult r = sample_extremum(
        dist, ctx.sampling, e->name, /*maximize=*/!is_forall,
        [&](std::span<const double> x) {
          Value v = e->annot.is_real()
                        ? Value::real_v(x[0])
                        : Value::vec_v(Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
          return run(e->b, env_push(env, std::move(v))).as_truth();
        });
    active_infinite.erase(e->name);
    return Value::truth_v(r.value);
  }
};

}  // namespace

Value eval(const ExprPtr& e, const SemanticContext& ctx) {
  Evaluator ev{ctx, {}};
  return ev.run(e, nullptr);
}

Value apply_value(const Value& fn, const Value& arg, const SemanticContext& ctx) {
  Evaluator ev{ctx, {}};
  return ev.apply(fn, arg);
}

double penalty_from_truth(const Logic& L, double truth) {
  switch (L.tag) {
    case LogicTag::DL2:
    case LogicTag::STL:
      return -truth;
    default:
      return 1.0 - truth;
  }
}

double loss(const SpecFile& spec, const SemanticContext& ctx, const std::vector<Value>& args) {
  ExprPtr root = lower_for_logic(spec.root_expr(), ctx.logic);
  Value v = eval(root, ctx);
  for (const Value& a : args) {
    if (v.kind != Value::Kind::Closure && v.kind != Value::Kind::Builtin &&
        v.kind != Value::Kind::Network)
      throw EvalError("loss: too many arguments for the root property");
    v = apply_value(v, a, ctx);
  }
  if (v.kind != Value::Kind::Truth)
    throw EvalError("loss: root property is not saturated to a truth value");
  return penalty_from_truth(ctx.logic, v.real);
}

namespace {

struct ClassicalEvaluator {
  const SemanticContext& ctx;

  Value run(const ExprPtr& e, const Env& env) {
    switch (e->kind) {
      case ExprKind::BoundVar: {
        int depth = env_depth_local(env);
        if (e->debruijn < depth) return env_at(env, e->debruijn);
        auto it = ctx.bound.find(e->name);
        if (it == ctx.bound.end())
          throw EvalError("no value bound for free variable '" + e->name + "'");
        return it->second;
      }
      case ExprKind::NetworkVar: {
        auto it = ctx.networks.find(e->name);
        if (it == ctx.networks.end())
          throw EvalError("no implementation bound for network '" + e->name + "'");
        Value v;
        v.kind = Value::Kind::Network;
        v.net = &it->second;
        return v;
      }
      case ExprKind::RealConst:
        return Value::real_v(e->real_val);
      case ExprKind::IndexConst:
        return Value::index_v(e->nat_val);
      case ExprKind::BoolConst:
        return Value::truth_v(e->truth ? 1.0 : 0.0);
      case ExprKind::Builtin: {
        Value v;
        v.kind = Value::Kind::Builtin;
        v.op = e->op;
        return v;
      }
      case ExprKind::Lam: {
        Value v;
        v.kind = Value::Kind::Closure;
        v.body = e->b;
        v.env = env;
        v.param = e->name;
        return v;
      }
      case ExprKind::Let:
        return run(e->b, env_push(env, run(e->a, env)));
      case ExprKind::VecLit: {
        Eigen::VectorXd v(e->elems.size());
        for (size_t i = 0; i < e->elems.size(); ++i) v[i] = run(e->elems[i], env).as_real();
        return Value::vec_v(std::move(v));
      }
      case ExprKind::App: {
        Value fn = run(e->a, env);
        Value arg = run(e->b, env);
        return apply(fn, arg);
      }
      case ExprKind::Forall:
        return quantifier(e, env, true);
      case ExprKind::Exists:
        return quantifier(e, env, false);
    }
    throw EvalError("unhandled expression kind");
  }

  static int env_depth_local(const Env& env) {
    int d = 0;
    for (const EnvNode* n = env.get(); n; n = n->next.get()) ++d;
    return d;
  }

  Value apply(const Value& fn, const Value& arg) {
    switch (fn.kind) {
      case Value::Kind::Closure:
        return run(fn.body, env_push(fn.env, arg));
      case Value::Kind::Network:
        return Value::vec_v(forward(*fn.net, arg.as_vec()));
      case Value::Kind::Builtin: {
        Value v = fn;
        v.args.push_back(arg);
        if ((int)v.args.size() == builtin_arity(v.op)) return apply_builtin(v.op, v.args);
        return v;
      }
      default:
        throw EvalError("cannot apply a non-function value");
    }
  }

  Value apply_builtin(BuiltinOp op, const std::vector<Value>& args) {
    auto tv = [](bool b) { return Value::truth_v(b ? 1.0 : 0.0); };
    auto as_bool = [](const Value& v) { return v.as_truth() != 0.0; };
    switch (op) {
      case BuiltinOp::Add:
        return Value::real_v(args[0].as_real() + args[1].as_real());
      case BuiltinOp::Mul:
        return Value::real_v(args[0].as_real() * args[1].as_real());
      case BuiltinOp::Neg:
        return Value::real_v(-args[0].as_real());
      case BuiltinOp::And:
        return tv(as_bool(args[0]) && as_bool(args[1]));
      case BuiltinOp::Or:
        return tv(as_bool(args[0]) || as_bool(args[1]));
      case BuiltinOp::Not:
        return tv(!as_bool(args[0]));
      case BuiltinOp::Implies:
        return tv(!as_bool(args[0]) || as_bool(args[1]));
      case BuiltinOp::Lookup: {
        const Eigen::VectorXd& v = args[0].as_vec();
        int64_t i = args[1].as_index();
        if (i < 0 || i >= v.size()) throw EvalError("lookup index out of range");
        return Value::real_v(v[i]);
      }
      case BuiltinOp::Eq:
        return tv(args[0].as_real() == args[1].as_real());
      case BuiltinOp::Neq:
        return tv(args[0].as_real() != args[1].as_real());
      case BuiltinOp::Leq:
        return tv(args[0].as_real() <= args[1].as_real());
      case BuiltinOp::Geq:
        return tv(args[0].as_real() >= args[1].as_real());
      case BuiltinOp::Lt:
        return tv(args[0].as_real() < args[1].as_real());
      case BuiltinOp::Gt:
        return tv(args[0].as_real() > args[1].as_real());
    }
    throw EvalError("unhandled builtin");
  }

  Value quantifier(const ExprPtr& e, const Env& env, bool is_forall) {
    auto body_at = [&](Value v) { return run(e->b, env_push(env, std::move(v))).as_truth() != 0.0; };
    if (classify_quantifier(e->annot) == QuantifierClass::Finite) {
      bool acc = is_forall;
      if (e->annot.is_index()) {
        for (int64_t i = 0; i < e->annot.size(); ++i) {
          bool b = body_at(Value::index_v(i));
          acc = is_forall ? (acc && b) : (acc || b);
        }
      } else {
        for (double t : {1.0, 0.0}) {
          bool b = body_at(Value::truth_v(t));
          acc = is_forall ? (acc && b) : (acc || b);
        }
      }
      return Value::truth_v(acc ? 1.0 : 0.0);
    }
    auto it = ctx.samplers.find(e->name);
    if (it == ctx.samplers.end()) throw MissingSamplerError(e->name);
    const Distribution& dist = it->second;
    Rng rng(derive_seed(ctx.sampling.seed, e->name));
    bool acc = is_forall;
    for (int64_t s = 0; s < ctx.sampling.sample_count; ++s) {
      std::vector<double> x = draw_sample(dist, rng);
      Value v = e->annot.is_real()
                    ? Value::real_v(x[0])
                    : Value::vec_v(Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
      bool b = body_at(std::move(v));
      acc = is_forall ? (acc && b) : (acc || b);
      if (is_forall != acc) break;  // short-circuit once decided
    }
    return Value::truth_v(acc ? 1.0 : 0.0);
  }
};

}  // namespace

bool eval_classical(const ExprPtr& e, const SemanticContext& ctx) {
  ClassicalEvaluator ev{ctx};
  Value v = ev.run(e, nullptr);
  return v.as_truth() != 0.0;
}

Value binding_to_value(const CtxBinding& b, const LdlType& ty, const std::string& name) {
  if (ty.is_real()) {
    if (b.is_vec) throw EvalError("binding '" + name + "' should be a scalar");
    return Value::real_v(b.scalar);
  }
  if (ty.is_vec()) {
    if (!b.is_vec || (int64_t)b.vec.size() != ty.size())
      throw EvalError("binding '" + name + "' should be a vector of length " +
                      std::to_string(ty.size()));
    return Value::vec_v(Eigen::Map<const Eigen::VectorXd>(b.vec.data(), b.vec.size()));
  }
  throw EvalError("binding '" + name + "' must have type Real or Vec n");
}

bool value_in_type(const Value& v, const LdlType& ty, const Logic& L) {
  switch (ty.kind()) {
    case TypeKind::Real:
      return v.kind == Value::Kind::Real && std::isfinite(v.real);
    case TypeKind::Bool:
      return v.kind == Value::Kind::Truth && L.in_domain(v.real);
    case TypeKind::Vec:
      return v.kind == Value::Kind::Vec && v.vec.size() == ty.size() &&
             v.vec.allFinite();
    case TypeKind::Index:
      return v.kind == Value::Kind::Index && v.index >= 0 && v.index < ty.size();
    case TypeKind::Fun:
      return v.kind == Value::Kind::Closure || v.kind == Value::Kind::Builtin ||
             v.kind == Value::Kind::Network;
  }
  return false;
}

}  // namespace ldl
