#include "ldl/logics.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace ldl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* logic_name(LogicTag t) {
  switch (t) {
    case LogicTag::DL2: return "dl2";
    case LogicTag::Godel: return "godel";
    case LogicTag::Lukasiewicz: return "lukasiewicz";
    case LogicTag::Yager: return "yager";
    case LogicTag::Product: return "product";
    case LogicTag::STL: return "stl";
  }
  return "?";
}

bool logic_is_fuzzy(LogicTag t) {
  return t == LogicTag::Godel || t == LogicTag::Lukasiewicz || t == LogicTag::Yager ||
         t == LogicTag::Product;
}

Logic Logic::make(LogicTag tag) {
  Logic L;
  L.tag = tag;
  return L;
}

Logic logic_from_name(const std::string& name) {
  for (LogicTag t : {LogicTag::DL2, LogicTag::Godel, LogicTag::Lukasiewicz, LogicTag::Yager,
                     LogicTag::Product, LogicTag::STL}) {
    if (name == logic_name(t)) return Logic::make(t);
  }
  throw std::invalid_argument("unknown logic: " + name);
}

double Logic::top() const {
  switch (tag) {
    case LogicTag::DL2: return 0.0;
    case LogicTag::STL: return kInf;
    default: return 1.0;
  }
}

double Logic::bottom() const {
  switch (tag) {
    case LogicTag::DL2:
    case LogicTag::STL:
      return -kInf;
    default:
      return 0.0;
  }
}

double Logic::domain_lo() const {
  return tag == LogicTag::DL2 || tag == LogicTag::STL ? -kInf : 0.0;
}

double Logic::domain_hi() const {
  switch (tag) {
    case LogicTag::DL2: return 0.0;
    case LogicTag::STL: return kInf;
    default: return 1.0;
  }
}

bool Logic::in_domain(double v) const {
  return v >= domain_lo() && v <= domain_hi();
}

std::string Logic::describe() const {
  std::string s = logic_name(tag);
  if (tag == LogicTag::Yager) s += " p=" + std::to_string(yager_p);
  if (tag == LogicTag::STL) s += " nu=" + std::to_string(stl_nu);
  return s;
}

namespace kernel {

double mul_absorb(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

double stl_and(const Logic& L, std::span<const double> vs) {
  double vmin = vs[0];
  for (size_t i = 1; i < vs.size(); ++i) vmin = std::min(vmin, vs[i]);
  if (std::isinf(vmin)) return vmin;
  if (vmin == 0.0) return 0.0;
  const double nu = L.stl_nu;
  double num = 0.0, den = 0.0;
  if (vmin < 0.0) {
    for (double v : vs) {
      double vt = (v - vmin) / vmin;
      double e1 = std::exp(vt);
      double w = std::exp(nu * vt);
      num += vmin * e1 * w;
      den += w;
    }
  } else {
    for (double v : vs) {
      double vt = (v - vmin) / vmin;
      double w = std::exp(-(nu * vt));
      den += w;
      num += (w == 0.0) ? 0.0 : v * w;
    }
  }
  return num / den;
}

double stl_or(const Logic& L, std::span<const double> vs) {
  std::vector<double> flipped(vs.size());
  for (size_t i = 0; i < vs.size(); ++i) flipped[i] = -vs[i];
  return -stl_and(L, flipped);
}

double conj(const Logic& L, double a, double b) {
  switch (L.tag) {
    case LogicTag::DL2:
      return a + b;
    case LogicTag::Godel:
      return std::min(a, b);
    case LogicTag::Lukasiewicz:
      return std::max(a + b - 1.0, 0.0);
    case LogicTag::Yager: {
      double p = L.yager_p;
      double s = std::pow(std::pow(1.0 - a, p) + std::pow(1.0 - b, p), 1.0 / p);
      return std::max(1.0 - s, 0.0);
    }
    case LogicTag::Product:
      return a * b;
    case LogicTag::STL: {
      double args[2] = {a, b};
      return stl_and(L, args);
    }
  }
  return 0;
}

double disj(const Logic& L, double a, double b) {
  switch (L.tag) {
    case LogicTag::DL2:
      return -mul_absorb(a, b);
    case LogicTag::Godel:
      return std::max(a, b);
    case LogicTag::Lukasiewicz:
      return std::min(a + b, 1.0);
    case LogicTag::Yager: {
      double p = L.yager_p;
      return std::min(std::pow(std::pow(a, p) + std::pow(b, p), 1.0 / p), 1.0);
    }
    case LogicTag::Product:
      return a + b - a * b;
    case LogicTag::STL: {
      double args[2] = {a, b};
      return stl_or(L, args);
    }
  }
  return 0;
}

double negate(const Logic& L, double a) {
  switch (L.tag) {
    case LogicTag::DL2:
      throw NegationError("DL2 has no negation kernel; run push_negation first");
    case LogicTag::STL:
      return -a;
    default:
      return 1.0 - a;
  }
}

double implies(const Logic& L, double a, double b) {
  switch (L.tag) {
    case LogicTag::DL2:
      throw NegationError("DL2 implication is rewritten at the syntax level");
    case LogicTag::Godel:
      return std::max(1.0 - a, b);
    case LogicTag::Lukasiewicz:
      return std::min(1.0 - a + b, 1.0);
    case LogicTag::Yager:
      // Not provided separately; negation + disjunction.
      return disj(L, negate(L, a), b);
    case LogicTag::Product:
      return 1.0 - a + a * b;
    case LogicTag::STL: {
      double args[2] = {-a, b};
      return stl_or(L, args);
    }
  }
  return 0;
}

namespace {

double cmp_eq(const Logic& L, double a, double b) {
  switch (L.tag) {
    case LogicTag::DL2:
    case LogicTag::STL:
      return -std::fabs(a - b);
    default:
      return 1.0 - std::tanh(std::fabs(a - b));
  }
}

double cmp_leq(const Logic& L, double a, double b) {
  switch (L.tag) {
    case LogicTag::DL2:
      return -std::max(a - b, 0.0);
    case LogicTag::STL:
      return b - a;
    default:
      // Verbatim form is symmetric in a,b; --leq-signed opts into the
      // order-sensitive variant.
      if (L.leq_signed) return 1.0 - std::max(std::tanh(a - b), 0.0);
      return 1.0 - std::max(std::tanh(std::fabs(a - b)), 0.0);
  }
}

double cmp_neq(const Logic& L, double a, double b) {
  double ind = (a == b) ? 1.0 : 0.0;
  switch (L.tag) {
    case LogicTag::DL2:
    case LogicTag::STL:
      return -(L.neq_xi * ind);
    default:
      return 1.0 - ind;
  }
}

}  // namespace

double compare(const Logic& L, BuiltinOp op, double a, double b) {
  switch (op) {
    case BuiltinOp::Eq:
      return cmp_eq(L, a, b);
    case BuiltinOp::Leq:
      return cmp_leq(L, a, b);
    case BuiltinOp::Neq:
      return cmp_neq(L, a, b);
    case BuiltinOp::Geq:
      return cmp_leq(L, b, a);
    case BuiltinOp::Lt:
      return conj(L, cmp_leq(L, a, b), cmp_neq(L, a, b));
    case BuiltinOp::Gt:
      return conj(L, cmp_leq(L, b, a), cmp_neq(L, a, b));
    default:
      throw std::logic_error("compare: not a comparison op");
  }
}

}  // namespace kernel

namespace {
void require_domain(const Logic& L, double v, const char* what) {
  if (!L.in_domain(v))
    throw EvalError(std::string(what) + " argument " + std::to_string(v) +
                    " outside the " + logic_name(L.tag) + " truth domain");
}
}  // namespace

double interp_top(const Logic& L) { return L.top(); }
double interp_bottom(const Logic& L) { return L.bottom(); }

double interp_and(const Logic& L, std::span<const double> args) {
  if (args.empty()) throw EvalError("conjunction needs at least one argument");
  for (double a : args) require_domain(L, a, "conjunction");
  if (L.tag == LogicTag::STL) return kernel::stl_and(L, args);
  if (args.size() != 2) throw EvalError("binary conjunction expects two arguments");
  return kernel::conj(L, args[0], args[1]);
}

double interp_or(const Logic& L, std::span<const double> args) {
  if (args.empty()) throw EvalError("disjunction needs at least one argument");
  for (double a : args) require_domain(L, a, "disjunction");
  if (L.tag == LogicTag::STL) return kernel::stl_or(L, args);
  if (args.size() != 2) throw EvalError("binary disjunction expects two arguments");
  return kernel::disj(L, args[0], args[1]);
}

double interp_not(const Logic& L, double a) {
  require_domain(L, a, "negation");
  return kernel::negate(L, a);
}

double interp_implies(const Logic& L, double a, double b) {
  require_domain(L, a, "implication");
  require_domain(L, b, "implication");
  return kernel::implies(L, a, b);
}

double interp_comparison(const Logic& L, BuiltinOp op, double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw EvalError("comparison on non-finite operand");
  return kernel::compare(L, op, a, b);
}

double fold_and(const Logic& L, std::span<const double> args) {
  if (args.empty()) throw EvalError("empty conjunction fold");
  if (L.tag == LogicTag::STL) return args.size() == 1 ? args[0] : kernel::stl_and(L, args);
  double acc = args[0];
  for (size_t i = 1; i < args.size(); ++i) acc = kernel::conj(L, acc, args[i]);
  return acc;
}

double fold_or(const Logic& L, std::span<const double> args) {
  if (args.empty()) throw EvalError("empty disjunction fold");
  if (L.tag == LogicTag::STL) return args.size() == 1 ? args[0] : kernel::stl_or(L, args);
  double acc = args[0];
  for (size_t i = 1; i < args.size(); ++i) acc = kernel::disj(L, acc, args[i]);
  return acc;
}

namespace {

bool is_builtin_app2(const ExprPtr& e, BuiltinOp op) {
  return e->kind == ExprKind::App && e->a && e->a->kind == ExprKind::App && e->a->a &&
         e->a->a->kind == ExprKind::Builtin && e->a->a->op == op;
}

bool is_builtin_app1(const ExprPtr& e, BuiltinOp op) {
  return e->kind == ExprKind::App && e->a && e->a->kind == ExprKind::Builtin &&
         e->a->op == op;
}

std::optional<BuiltinOp> comparison_head(const ExprPtr& e) {
  if (e->kind == ExprKind::App && e->a && e->a->kind == ExprKind::App && e->a->a &&
      e->a->a->kind == ExprKind::Builtin && builtin_is_comparison(e->a->a->op))
    return e->a->a->op;
  return std::nullopt;
}

BuiltinOp flip_comparison(BuiltinOp op) {
  switch (op) {
    case BuiltinOp::Leq: return BuiltinOp::Gt;
    case BuiltinOp::Lt: return BuiltinOp::Geq;
    case BuiltinOp::Geq: return BuiltinOp::Lt;
    case BuiltinOp::Gt: return BuiltinOp::Leq;
    case BuiltinOp::Eq: return BuiltinOp::Neq;
    case BuiltinOp::Neq: return BuiltinOp::Eq;
    default: throw std::logic_error("flip_comparison");
  }
}

ExprPtr push(const ExprPtr& e);

// The negation of e, with the negation eliminated.
ExprPtr negated(const ExprPtr& e) {
  if (e->kind == ExprKind::BoolConst) return bool_const(!e->truth, e->span);
  if (is_builtin_app1(e, BuiltinOp::Not)) return push(e->b);  // double negation
  if (is_builtin_app2(e, BuiltinOp::And))
    return apply2(BuiltinOp::Or, negated(e->a->b), negated(e->b));
  if (is_builtin_app2(e, BuiltinOp::Or))
    return apply2(BuiltinOp::And, negated(e->a->b), negated(e->b));
  if (is_builtin_app2(e, BuiltinOp::Implies))
    return apply2(BuiltinOp::And, push(e->a->b), negated(e->b));
  if (auto cmp = comparison_head(e))
    return apply2(flip_comparison(*cmp), push(e->a->b), push(e->b));
  if (e->kind == ExprKind::Forall)
    return exists(e->name, e->annot, negated(e->b), e->span);
  if (e->kind == ExprKind::Exists)
    return forall(e->name, e->annot, negated(e->b), e->span);
  if (e->kind == ExprKind::Let)
    return let(e->name, e->annot, push(e->a), negated(e->b), e->span);
  const char* what = "application";
  switch (e->kind) {
    case ExprKind::Lam: what = "lambda"; break;
    case ExprKind::BoundVar: what = "variable"; break;
    case ExprKind::NetworkVar: what = "network variable"; break;
    default: break;
  }
  throw NegationError(std::string("cannot push negation through ") + what);
}

ExprPtr push(const ExprPtr& e) {
  if (!e) return e;
  if (is_builtin_app1(e, BuiltinOp::Not)) return negated(push(e->b));
  switch (e->kind) {
    case ExprKind::App:
      return app(push(e->a), push(e->b), e->span);
    case ExprKind::Lam:
      return lam(e->name, e->annot, push(e->b), e->span);
    case ExprKind::Let:
      return let(e->name, e->annot, push(e->a), push(e->b), e->span);
    case ExprKind::VecLit: {
      std::vector<ExprPtr> es;
      es.reserve(e->elems.size());
      for (auto& c : e->elems) es.push_back(push(c));
      return vec_lit(std::move(es), e->span);
    }
    case ExprKind::Forall:
      return forall(e->name, e->annot, push(e->b), e->span);
    case ExprKind::Exists:
      return exists(e->name, e->annot, push(e->b), e->span);
    default:
      return e;
  }
}

// DL2 lowering: bottom-up, implications become (pushed not-lhs) or rhs.
ExprPtr lower_dl2(const ExprPtr& e) {
  if (!e) return e;
  if (is_builtin_app2(e, BuiltinOp::Implies)) {
    ExprPtr lhs = lower_dl2(e->a->b);
    ExprPtr rhs = lower_dl2(e->b);
    return apply2(BuiltinOp::Or, negated(lhs), rhs);
  }
  if (is_builtin_app1(e, BuiltinOp::Not)) return negated(lower_dl2(e->b));
  switch (e->kind) {
    case ExprKind::App:
      return app(lower_dl2(e->a), lower_dl2(e->b), e->span);
    case ExprKind::Lam:
      return lam(e->name, e->annot, lower_dl2(e->b), e->span);
    case ExprKind::Let:
      return let(e->name, e->annot, lower_dl2(e->a), lower_dl2(e->b), e->span);
    case ExprKind::VecLit: {
      std::vector<ExprPtr> es;
      es.reserve(e->elems.size());
      for (auto& c : e->elems) es.push_back(lower_dl2(c));
      return vec_lit(std::move(es), e->span);
    }
    case ExprKind::Forall:
      return forall(e->name, e->annot, lower_dl2(e->b), e->span);
    case ExprKind::Exists:
      return exists(e->name, e->annot, lower_dl2(e->b), e->span);
    default:
      return e;
  }
}

}  // namespace

ExprPtr push_negation(const ExprPtr& e) { return push(e); }

ExprPtr lower_for_logic(const ExprPtr& e, const Logic& L) {
  if (L.tag != LogicTag::DL2) return e;
  return lower_dl2(e);
}

}  // namespace ldl
