#include "ldl/ast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>

namespace ldl {

LdlType LdlType::vec(int64_t n) {
  if (n < 1) throw std::invalid_argument("Vec size must be >= 1");
  LdlType t(TypeKind::Vec, n);
  return t;
}

LdlType LdlType::index(int64_t n) {
  if (n < 1) throw std::invalid_argument("Index size must be >= 1");
  LdlType t(TypeKind::Index, n);
  return t;
}

LdlType LdlType::fun(const LdlType& dom, const LdlType& cod) {
  if (dom.is_fun()) throw std::invalid_argument("function domains must be simple types");
  LdlType t(TypeKind::Fun, 0);
  t.dom_ = std::make_shared<LdlType>(dom);
  t.cod_ = std::make_shared<LdlType>(cod);
  return t;
}

const LdlType& LdlType::result() const {
  const LdlType* t = this;
  while (t->is_fun()) t = t->cod_.get();
  return *t;
}

bool LdlType::operator==(const LdlType& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case TypeKind::Bool:
    case TypeKind::Real:
      return true;
    case TypeKind::Vec:
    case TypeKind::Index:
      return size_ == o.size_;
    case TypeKind::Fun:
      return *dom_ == *o.dom_ && *cod_ == *o.cod_;
  }
  return false;
}

std::string LdlType::show() const {
  switch (kind_) {
    case TypeKind::Bool: return "Bool";
    case TypeKind::Real: return "Real";
    case TypeKind::Vec: return "Vec " + std::to_string(size_);
    case TypeKind::Index: return "Index " + std::to_string(size_);
    case TypeKind::Fun: {
      std::string d = dom_->show();
      if (dom_->is_fun()) d = "(" + d + ")";
      return d + " -> " + cod_->show();
    }
  }
  return "?";
}

int builtin_arity(BuiltinOp op) {
  switch (op) {
    case BuiltinOp::Not:
    case BuiltinOp::Neg:
      return 1;
    default:
      return 2;
  }
}

bool builtin_is_comparison(BuiltinOp op) {
  switch (op) {
    case BuiltinOp::Eq:
    case BuiltinOp::Neq:
    case BuiltinOp::Leq:
    case BuiltinOp::Geq:
    case BuiltinOp::Lt:
    case BuiltinOp::Gt:
      return true;
    default:
      return false;
  }
}

const char* builtin_name(BuiltinOp op) {
  switch (op) {
    case BuiltinOp::And: return "and";
    case BuiltinOp::Or: return "or";
    case BuiltinOp::Not: return "not";
    case BuiltinOp::Implies: return "=>";
    case BuiltinOp::Add: return "+";
    case BuiltinOp::Neg: return "-";
    case BuiltinOp::Mul: return "*";
    case BuiltinOp::Eq: return "==";
    case BuiltinOp::Neq: return "!=";
    case BuiltinOp::Leq: return "<=";
    case BuiltinOp::Geq: return ">=";
    case BuiltinOp::Lt: return "<";
    case BuiltinOp::Gt: return ">";
    case BuiltinOp::Lookup: return "!";
  }
  return "?";
}

namespace {
std::shared_ptr<Expr> make(ExprKind k, Span s) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->span = s;
  return e;
}
}  // namespace

ExprPtr bound_var(std::string name, int debruijn, Span s) {
  auto e = make(ExprKind::BoundVar, s);
  e->name = std::move(name);
  e->debruijn = debruijn;
  return e;
}

ExprPtr network_var(std::string name, Span s) {
  auto e = make(ExprKind::NetworkVar, s);
  e->name = std::move(name);
  return e;
}

ExprPtr real_const(double v, Span s) {
  auto e = make(ExprKind::RealConst, s);
  e->real_val = v;
  return e;
}

ExprPtr index_const(int64_t v, Span s) {
  auto e = make(ExprKind::IndexConst, s);
  e->nat_val = v;
  return e;
}

ExprPtr bool_const(bool truth, Span s) {
  auto e = make(ExprKind::BoolConst, s);
  e->truth = truth;
  return e;
}

ExprPtr app(ExprPtr fn, ExprPtr arg, Span s) {
  auto e = make(ExprKind::App, s);
  e->a = std::move(fn);
  e->b = std::move(arg);
  return e;
}

ExprPtr lam(std::string binder, LdlType annot, ExprPtr body, Span s) {
  auto e = make(ExprKind::Lam, s);
  e->name = std::move(binder);
  e->annot = std::move(annot);
  e->b = std::move(body);
  return e;
}

ExprPtr let(std::string binder, LdlType annot, ExprPtr bound, ExprPtr body, Span s) {
  auto e = make(ExprKind::Let, s);
  e->name = std::move(binder);
  e->annot = std::move(annot);
  e->a = std::move(bound);
  e->b = std::move(body);
  return e;
}

ExprPtr builtin(BuiltinOp op, Span s) {
  auto e = make(ExprKind::Builtin, s);
  e->op = op;
  return e;
}

ExprPtr vec_lit(std::vector<ExprPtr> elems, Span s) {
  auto e = make(ExprKind::VecLit, s);
  e->elems = std::move(elems);
  return e;
}

ExprPtr forall(std::string binder, LdlType annot, ExprPtr body, Span s) {
  auto e = make(ExprKind::Forall, s);
  e->name = std::move(binder);
  e->annot = std::move(annot);
  e->b = std::move(body);
  return e;
}

ExprPtr exists(std::string binder, LdlType annot, ExprPtr body, Span s) {
  auto e = make(ExprKind::Exists, s);
  e->name = std::move(binder);
  e->annot = std::move(annot);
  e->b = std::move(body);
  return e;
}

ExprPtr apply2(BuiltinOp op, ExprPtr l, ExprPtr r) {
  Span s = l ? l->span : Span{};
  return app(app(builtin(op, s), std::move(l), s), std::move(r), s);
}

ExprPtr apply1(BuiltinOp op, ExprPtr e) {
  Span s = e ? e->span : Span{};
  return app(builtin(op, s), std::move(e), s);
}

void NetworkTypeCtx::declare(const std::string& name, int64_t m, int64_t n) {
  if (nets_.count(name)) throw std::invalid_argument("duplicate network declaration: " + name);
  nets_[name] = {m, n};
}

bool NetworkTypeCtx::contains(const std::string& name) const { return nets_.count(name) > 0; }

std::pair<int64_t, int64_t> NetworkTypeCtx::arity(const std::string& name) const {
  auto it = nets_.find(name);
  if (it == nets_.end()) throw std::out_of_range("unknown network: " + name);
  return it->second;
}

void BoundTypeCtx::push(const std::string& name, const LdlType& ty) {
  entries_.emplace_back(name, ty);
}

void BoundTypeCtx::pop() { entries_.pop_back(); }

const LdlType& BoundTypeCtx::type_at(int debruijn) const {
  return entries_.at(entries_.size() - 1 - debruijn).second;
}

const std::string& BoundTypeCtx::name_at(int debruijn) const {
  return entries_.at(entries_.size() - 1 - debruijn).first;
}

namespace {

void collect_quantified(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::Forall || e->kind == ExprKind::Exists) {
    if (e->annot.is_real() || e->annot.is_vec()) out.insert(e->name);
  }
  if (e->a) collect_quantified(e->a, out);
  if (e->b) collect_quantified(e->b, out);
  for (auto& c : e->elems) collect_quantified(c, out);
}

// Shift free de Bruijn indices >= cutoff by delta.
ExprPtr shift(const ExprPtr& e, int delta, int cutoff) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::BoundVar:
      if (e->debruijn >= cutoff) return bound_var(e->name, e->debruijn + delta, e->span);
      return e;
    case ExprKind::NetworkVar:
    case ExprKind::RealConst:
    case ExprKind::IndexConst:
    case ExprKind::BoolConst:
    case ExprKind::Builtin:
      return e;
    case ExprKind::App:
      return app(shift(e->a, delta, cutoff), shift(e->b, delta, cutoff), e->span);
    case ExprKind::Lam:
      return lam(e->name, e->annot, shift(e->b, delta, cutoff + 1), e->span);
    case ExprKind::Let:
      return let(e->name, e->annot, shift(e->a, delta, cutoff),
                 shift(e->b, delta, cutoff + 1), e->span);
    case ExprKind::VecLit: {
      std::vector<ExprPtr> es;
      es.reserve(e->elems.size());
      for (auto& c : e->elems) es.push_back(shift(c, delta, cutoff));
      return vec_lit(std::move(es), e->span);
    }
    case ExprKind::Forall:
      return forall(e->name, e->annot, shift(e->b, delta, cutoff + 1), e->span);
    case ExprKind::Exists:
      return exists(e->name, e->annot, shift(e->b, delta, cutoff + 1), e->span);
  }
  return e;
}

// Replace index `target` with r (shifted by depth), decrement indices above.
ExprPtr subst_index(const ExprPtr& e, int target, const ExprPtr& r) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::BoundVar:
      if (e->debruijn == target) return shift(r, target, 0);
      if (e->debruijn > target) return bound_var(e->name, e->debruijn - 1, e->span);
      return e;
    case ExprKind::NetworkVar:
    case ExprKind::RealConst:
    case ExprKind::IndexConst:
    case ExprKind::BoolConst:
    case ExprKind::Builtin:
      return e;
    case ExprKind::App:
      return app(subst_index(e->a, target, r), subst_index(e->b, target, r), e->span);
    case ExprKind::Lam:
      return lam(e->name, e->annot, subst_index(e->b, target + 1, r), e->span);
    case ExprKind::Let:
      return let(e->name, e->annot, subst_index(e->a, target, r),
                 subst_index(e->b, target + 1, r), e->span);
    case ExprKind::VecLit: {
      std::vector<ExprPtr> es;
      es.reserve(e->elems.size());
      for (auto& c : e->elems) es.push_back(subst_index(c, target, r));
      return vec_lit(std::move(es), e->span);
    }
    case ExprKind::Forall:
      return forall(e->name, e->annot, subst_index(e->b, target + 1, r), e->span);
    case ExprKind::Exists:
      return exists(e->name, e->annot, subst_index(e->b, target + 1, r), e->span);
  }
  return e;
}

// Replace free-by-name occurrences (index escaping the local depth).
ExprPtr subst_free_name(const ExprPtr& e, const std::string& name, const ExprPtr& r,
                        int depth) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::BoundVar:
      if (e->debruijn >= depth && e->name == name) return shift(r, depth, 0);
      return e;
    case ExprKind::NetworkVar:
    case ExprKind::RealConst:
    case ExprKind::IndexConst:
    case ExprKind::BoolConst:
    case ExprKind::Builtin:
      return e;
    case ExprKind::App:
      return app(subst_free_name(e->a, name, r, depth),
                 subst_free_name(e->b, name, r, depth), e->span);
    case ExprKind::Lam:
      return lam(e->name, e->annot, subst_free_name(e->b, name, r, depth + 1), e->span);
    case ExprKind::Let:
      return let(e->name, e->annot, subst_free_name(e->a, name, r, depth),
                 subst_free_name(e->b, name, r, depth + 1), e->span);
    case ExprKind::VecLit: {
      std::vector<ExprPtr> es;
      es.reserve(e->elems.size());
      for (auto& c : e->elems) es.push_back(subst_free_name(c, name, r, depth));
      return vec_lit(std::move(es), e->span);
    }
    case ExprKind::Forall:
      return forall(e->name, e->annot, subst_free_name(e->b, name, r, depth + 1), e->span);
    case ExprKind::Exists:
      return exists(e->name, e->annot, subst_free_name(e->b, name, r, depth + 1), e->span);
  }
  return e;
}

}  // namespace

std::set<std::string> free_quantified_vars(const ExprPtr& e) {
  std::set<std::string> out;
  collect_quantified(e, out);
  return out;
}

ExprPtr substitute(const ExprPtr& e, const std::string& binder, const ExprPtr& replacement) {
  return subst_free_name(e, binder, replacement, 0);
}

ExprPtr open_binder(const ExprPtr& body, const ExprPtr& replacement) {
  return subst_index(body, 0, replacement);
}

namespace {

bool alpha_equal_at(const ExprPtr& a, const ExprPtr& b, int depth) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::BoundVar:
      if (a->debruijn != b->debruijn) return false;
      // Escaping indices are free variables: names must agree too.
      if (a->debruijn >= depth) return a->name == b->name;
      return true;
    case ExprKind::NetworkVar:
      return a->name == b->name;
    case ExprKind::RealConst:
      return a->real_val == b->real_val ||
             (std::isnan(a->real_val) && std::isnan(b->real_val));
    case ExprKind::IndexConst:
      return a->nat_val == b->nat_val;
    case ExprKind::BoolConst:
      return a->truth == b->truth;
    case ExprKind::Builtin:
      return a->op == b->op;
    case ExprKind::App:
      return alpha_equal_at(a->a, b->a, depth) && alpha_equal_at(a->b, b->b, depth);
    case ExprKind::Lam:
    case ExprKind::Forall:
    case ExprKind::Exists:
      return a->annot == b->annot && alpha_equal_at(a->b, b->b, depth + 1);
    case ExprKind::Let:
      return a->annot == b->annot && alpha_equal_at(a->a, b->a, depth) &&
             alpha_equal_at(a->b, b->b, depth + 1);
    case ExprKind::VecLit: {
      if (a->elems.size() != b->elems.size()) return false;
      for (size_t i = 0; i < a->elems.size(); ++i)
        if (!alpha_equal_at(a->elems[i], b->elems[i], depth)) return false;
      return true;
    }
  }
  return false;
}

}  // namespace

bool alpha_equal(const ExprPtr& a, const ExprPtr& b) { return alpha_equal_at(a, b, 0); }

bool mentions_name(const ExprPtr& e, const std::string& name) {
  if (!e) return false;
  if (e->kind == ExprKind::BoundVar && e->name == name) return true;
  if (e->a && mentions_name(e->a, name)) return true;
  if (e->b && mentions_name(e->b, name)) return true;
  for (auto& c : e->elems)
    if (mentions_name(c, name)) return true;
  return false;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Force a real-literal shape so the lexer does not see a natural.
  if (!std::strpbrk(buf, ".eE")) std::strcat(buf, ".0");
  return buf;
}

namespace {

// Printer precedence levels, loosest first. Must agree with the parser.
enum Prec {
  PrecImplies = 1,
  PrecOr = 2,
  PrecAnd = 3,
  PrecCmp = 4,
  PrecAdd = 5,
  PrecMul = 6,
  PrecUnary = 7,
  PrecLookup = 8,
  PrecApp = 9,
  PrecAtom = 10
};

int binop_prec(BuiltinOp op) {
  switch (op) {
    case BuiltinOp::Implies: return PrecImplies;
    case BuiltinOp::Or: return PrecOr;
    case BuiltinOp::And: return PrecAnd;
    case BuiltinOp::Add: return PrecAdd;
    case BuiltinOp::Mul: return PrecMul;
    case BuiltinOp::Lookup: return PrecLookup;
    default: return PrecCmp;
  }
}

struct Printer {
  // Stack of binder names in scope, innermost last (post-freshening).
  std::vector<std::string> scope;

  std::string fresh(const std::string& base, const ExprPtr& body) {
    // Rename only when the body refers to an outer binder (or free
    // variable) of the same name, which the new binder would capture.
    bool clash = false;
    std::function<void(const ExprPtr&, int)> walk = [&](const ExprPtr& e, int depth) {
      if (!e || clash) return;
      if (e->kind == ExprKind::BoundVar && e->name == base && e->debruijn > depth) clash = true;
      int bump = 0;
      if (e->kind == ExprKind::Lam || e->kind == ExprKind::Forall ||
          e->kind == ExprKind::Exists || e->kind == ExprKind::Let)
        bump = 1;
      if (e->a) walk(e->a, depth + (e->kind == ExprKind::Let ? 0 : bump * 0));
      if (e->b) walk(e->b, depth + bump);
      for (auto& c : e->elems) walk(c, depth);
    };
    walk(body, 0);
    if (!clash) return base;
    std::string n = base;
    do {
      n += "'";
    } while (mentions_name(body, n));
    return n;
  }

  std::string var_name(const Expr& e) {
    if (e.debruijn >= 0 && e.debruijn < (int)scope.size())
      return scope[scope.size() - 1 - e.debruijn];
    return e.name;  // free variable
  }

  std::string paren(const std::string& s, int prec, int min_prec) {
    if (prec < min_prec) return "(" + s + ")";
    return s;
  }

  std::string print(const ExprPtr& e, int min_prec) {
    switch (e->kind) {
      case ExprKind::BoundVar:
        return var_name(*e);
      case ExprKind::NetworkVar:
        return e->name;
      case ExprKind::RealConst:
        if (e->real_val < 0 || std::isnan(e->real_val) ||
            (std::isinf(e->real_val) && e->real_val < 0))
          return paren(format_real(e->real_val), PrecUnary, min_prec);
        return format_real(e->real_val);
      case ExprKind::IndexConst:
        return std::to_string(e->nat_val);
      case ExprKind::BoolConst:
        return e->truth ? "True" : "False";
      case ExprKind::Builtin:
        // Bare operator; parenthesized so it re-parses as an atom.
        return std::string("(") + builtin_name(e->op) + ")";
      case ExprKind::VecLit: {
        std::string s = "[";
        for (size_t i = 0; i < e->elems.size(); ++i) {
          if (i) s += ", ";
          s += print(e->elems[i], 0);
        }
        return s + "]";
      }
      case ExprKind::App: {
        // Recover infix/prefix sugar for saturated builtins.
        if (e->a && e->a->kind == ExprKind::App && e->a->a &&
            e->a->a->kind == ExprKind::Builtin) {
          BuiltinOp op = e->a->a->op;
          if (builtin_arity(op) == 2) {
            const ExprPtr& l = e->a->b;
            const ExprPtr& r = e->b;
            // a + (- b) prints as a - b
            if (op == BuiltinOp::Add && r->kind == ExprKind::App &&
                r->a && r->a->kind == ExprKind::Builtin && r->a->op == BuiltinOp::Neg) {
              std::string s = print(l, PrecAdd) + " - " + print(r->b, PrecAdd + 1);
              return paren(s, PrecAdd, min_prec);
            }
            int p = binop_prec(op);
            bool right_assoc = (op == BuiltinOp::Implies);
            std::string s;
            if (op == BuiltinOp::Lookup) {
              s = print(l, p) + " ! " + print(r, p + 1);
            } else {
              s = print(l, right_assoc ? p + 1 : p) + " " + builtin_name(op) + " " +
                  print(r, right_assoc ? p : p + 1);
            }
            return paren(s, p, min_prec);
          }
        }
        if (e->a && e->a->kind == ExprKind::Builtin && builtin_arity(e->a->op) == 1) {
          const char* n = e->a->op == BuiltinOp::Not ? "not " : "- ";
          return paren(n + print(e->b, PrecUnary), PrecUnary, min_prec);
        }
        return paren(print(e->a, PrecApp) + " " + print(e->b, PrecAtom), PrecApp, min_prec);
      }
      case ExprKind::Lam:
      case ExprKind::Forall:
      case ExprKind::Exists: {
        const char* kw = e->kind == ExprKind::Lam ? "lam"
                         : e->kind == ExprKind::Forall ? "forall"
                                                       : "exists";
        std::string n = fresh(e->name, e->b);
        scope.push_back(n);
        std::string s = std::string(kw) + " (" + n + " : " + e->annot.show() + ") . " +
                        print(e->b, 0);
        scope.pop_back();
        return paren(s, 0, min_prec);
      }
      case ExprKind::Let: {
        std::string bound = print(e->a, 0);
        std::string n = fresh(e->name, e->b);
        scope.push_back(n);
        std::string s = "let (" + n + " : " + e->annot.show() + ") = " + bound + " in " +
                        print(e->b, 0);
        scope.pop_back();
        return paren(s, 0, min_prec);
      }
    }
    return "?";
  }
};

}  // namespace

std::string pretty_print(const ExprPtr& e) {
  Printer p;
  return p.print(e, 0);
}

}  // namespace ldl
