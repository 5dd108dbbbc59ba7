#include "ldl/typecheck.hpp"

#include <vector>

namespace ldl {

const char* type_error_code_name(TypeErrorCode c) {
  switch (c) {
    case TypeErrorCode::TypeMismatch: return "TypeMismatch";
    case TypeErrorCode::UnboundVariable: return "UnboundVariable";
    case TypeErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case TypeErrorCode::QuantifierOverFunctionType: return "QuantifierOverFunctionType";
    case TypeErrorCode::NonBooleanQuantifierBody: return "NonBooleanQuantifierBody";
    case TypeErrorCode::CannotInfer: return "CannotInfer";
  }
  return "?";
}

namespace {

class Checker {
 public:
  Checker(const NetworkTypeCtx& nets, const BoundTypeCtx& bound)
      : nets_(nets), bound_(bound) {}

  LdlType synth(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::BoundVar: {
        if (e->debruijn < 0 || e->debruijn >= (int)bound_.depth())
          throw TypeError(TypeErrorCode::UnboundVariable,
                          "unbound variable '" + e->name + "'", e->span);
        return bound_.type_at(e->debruijn);
      }
      case ExprKind::NetworkVar: {
        if (!nets_.contains(e->name))
          throw TypeError(TypeErrorCode::UnboundVariable,
                          "undeclared network '" + e->name + "'", e->span);
        auto [m, n] = nets_.arity(e->name);
        return LdlType::fun(LdlType::vec(m), LdlType::vec(n));
      }
      case ExprKind::RealConst:
        return LdlType::real();
      case ExprKind::IndexConst:
        throw TypeError(TypeErrorCode::CannotInfer,
                        "index literal needs an expected Index type (use it as a lookup index)",
                        e->span);
      case ExprKind::BoolConst:
        return LdlType::boolean();
      case ExprKind::Builtin:
        return builtin_type(e->op, e->span);
      case ExprKind::App:
        return synth_app(e);
      case ExprKind::Lam: {
        if (e->annot.is_fun())
          throw TypeError(TypeErrorCode::TypeMismatch,
                          "lambda binder must have a simple type", e->span);
        bound_.push(e->name, e->annot);
        LdlType body = synth(e->b);
        bound_.pop();
        return LdlType::fun(e->annot, body);
      }
      case ExprKind::Let: {
        check_against(e->a, e->annot);
        bound_.push(e->name, e->annot);
        LdlType body = synth(e->b);
        bound_.pop();
        return body;
      }
      case ExprKind::VecLit: {
        for (auto& c : e->elems) check_against(c, LdlType::real());
        return LdlType::vec((int64_t)e->elems.size());
      }
      case ExprKind::Forall:
      case ExprKind::Exists: {
        if (e->annot.is_fun())
          throw TypeError(TypeErrorCode::QuantifierOverFunctionType,
                          "cannot quantify over function type " + e->annot.show(), e->span);
        bound_.push(e->name, e->annot);
        LdlType body = synth(e->b);
        bound_.pop();
        if (!body.is_bool())
          throw TypeError(TypeErrorCode::NonBooleanQuantifierBody,
                          "quantifier body must have type Bool, got " + body.show(),
                          e->b->span);
        return LdlType::boolean();
      }
    }
    throw TypeError(TypeErrorCode::CannotInfer, "unhandled expression", e->span);
  }

  void check_against(const ExprPtr& e, const LdlType& expected) {
    if (e->kind == ExprKind::IndexConst) {
      if (!expected.is_index())
        throw TypeError(TypeErrorCode::TypeMismatch,
                        "expected " + expected.show() + ", got index literal", e->span);
      if (e->nat_val < 0 || e->nat_val >= expected.size())
        throw TypeError(TypeErrorCode::IndexOutOfRange,
                        "index " + std::to_string(e->nat_val) + " out of range for Index " +
                            std::to_string(expected.size()),
                        e->span);
      return;
    }
    LdlType got = synth(e);
    if (got != expected)
      throw TypeError(TypeErrorCode::TypeMismatch,
                      "expected " + expected.show() + ", got " + got.show(), e->span);
  }

 private:
  LdlType builtin_type(BuiltinOp op, Span s) {
    const LdlType B = LdlType::boolean();
    const LdlType R = LdlType::real();
    switch (op) {
      case BuiltinOp::And:
      case BuiltinOp::Or:
      case BuiltinOp::Implies:
        return LdlType::fun(B, LdlType::fun(B, B));
      case BuiltinOp::Not:
        return LdlType::fun(B, B);
      case BuiltinOp::Add:
      case BuiltinOp::Mul:
        return LdlType::fun(R, LdlType::fun(R, R));
      case BuiltinOp::Neg:
        return LdlType::fun(R, R);
      case BuiltinOp::Eq:
      case BuiltinOp::Neq:
      case BuiltinOp::Leq:
      case BuiltinOp::Geq:
      case BuiltinOp::Lt:
      case BuiltinOp::Gt:
        return LdlType::fun(R, LdlType::fun(R, B));
      case BuiltinOp::Lookup:
        // Size-polymorphic; resolvable only at an application spine.
        throw TypeError(TypeErrorCode::CannotInfer,
                        "bare '!' needs a vector operand to fix its type", s);
    }
    throw TypeError(TypeErrorCode::CannotInfer, "unknown builtin", s);
  }

  LdlType synth_app(const ExprPtr& e) {
    // Collect the application spine to special-case lookup.
    std::vector<ExprPtr> args;
    ExprPtr head = e;
    while (head->kind == ExprKind::App) {
      args.push_back(head->b);
      head = head->a;
    }
    std::reverse(args.begin(), args.end());
    if (head->kind == ExprKind::Builtin && head->op == BuiltinOp::Lookup) {
      if (args.empty())
        return builtin_type(head->op, head->span);  // throws
      LdlType vt = synth(args[0]);
      if (!vt.is_vec())
        throw TypeError(TypeErrorCode::TypeMismatch,
                        "'!' expects a Vec operand, got " + vt.show(), args[0]->span);
      LdlType rest = LdlType::fun(LdlType::index(vt.size()), LdlType::real());
      LdlType cur = rest;
      for (size_t i = 1; i < args.size(); ++i) {
        if (!cur.is_fun())
          throw TypeError(TypeErrorCode::TypeMismatch, "too many arguments to '!'",
                          args[i]->span);
        check_against(args[i], cur.dom());
        cur = cur.cod();
      }
      return cur;
    }
    LdlType fn = synth(head);
    for (size_t i = 0; i < args.size(); ++i) {
      if (!fn.is_fun())
        throw TypeError(TypeErrorCode::TypeMismatch,
                        "cannot apply a non-function of type " + fn.show(), args[i]->span);
      check_against(args[i], fn.dom());
      fn = fn.cod();
    }
    return fn;
  }

  const NetworkTypeCtx& nets_;
  BoundTypeCtx bound_;
};

}  // namespace

LdlType check(const NetworkTypeCtx& nets, const BoundTypeCtx& bound, const ExprPtr& e) {
  Checker c(nets, bound);
  return c.synth(e);
}

LdlType check_spec(const SpecFile& spec) {
  BoundTypeCtx bound;
  for (auto& def : spec.definitions) {
    Checker c(spec.networks, bound);
    c.check_against(def.body, def.type);
    bound.push(def.name, def.type);
  }
  return spec.definitions.back().type;
}

QuantifierClass classify_quantifier(const LdlType& t) {
  if (t.is_fun()) throw std::logic_error("classify_quantifier: function type");
  if (t.is_real() || t.is_vec()) return QuantifierClass::Infinite;
  return QuantifierClass::Finite;
}

}  // namespace ldl
