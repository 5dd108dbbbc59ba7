#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldl {

// Source position, 1-based. Carried for diagnostics only.
struct Span {
  int line = 0;
  int col = 0;
};

enum class TypeKind { Bool, Real, Vec, Index, Fun };

// Types of the specification language. Fun domains are restricted to
// simple (non-function) types; vec/index sizes are >= 1.
class LdlType {
 public:
  LdlType() : kind_(TypeKind::Real), size_(0) {}

  static LdlType boolean() { return LdlType(TypeKind::Bool, 0); }
  static LdlType real() { return LdlType(TypeKind::Real, 0); }
  static LdlType vec(int64_t n);
  static LdlType index(int64_t n);
  static LdlType fun(const LdlType& dom, const LdlType& cod);

  TypeKind kind() const { return kind_; }
  int64_t size() const { return size_; }
  const LdlType& dom() const { return *dom_; }
  const LdlType& cod() const { return *cod_; }

  bool is_fun() const { return kind_ == TypeKind::Fun; }
  bool is_bool() const { return kind_ == TypeKind::Bool; }
  bool is_real() const { return kind_ == TypeKind::Real; }
  bool is_vec() const { return kind_ == TypeKind::Vec; }
  bool is_index() const { return kind_ == TypeKind::Index; }

  // Final codomain of a (possibly nested) function type.
  const LdlType& result() const;

  bool operator==(const LdlType& o) const;
  bool operator!=(const LdlType& o) const { return !(*this == o); }

  std::string show() const;

 private:
  LdlType(TypeKind k, int64_t n) : kind_(k), size_(n) {}
  TypeKind kind_;
  int64_t size_;
  std::shared_ptr<const LdlType> dom_, cod_;
};

enum class BuiltinOp {
  And,
  Or,
  Not,
  Implies,
  Add,
  Neg,
  Mul,
  Eq,
  Neq,
  Leq,
  Geq,
  Lt,
  Gt,
  Lookup
};

int builtin_arity(BuiltinOp op);
bool builtin_is_comparison(BuiltinOp op);
const char* builtin_name(BuiltinOp op);

enum class ExprKind {
  BoundVar,
  NetworkVar,
  RealConst,
  IndexConst,
  BoolConst,
  App,
  Lam,
  Let,
  Builtin,
  VecLit,
  Forall,
  Exists
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression node. Binders are resolved: BoundVar carries the
// de Bruijn index (0 = innermost binder) alongside the surface name,
// which is kept for printing and sampler lookup.
struct Expr {
  ExprKind kind;
  Span span;

  std::string name;       // BoundVar, NetworkVar, Lam, Let, Forall, Exists
  int debruijn = -1;      // BoundVar
  double real_val = 0.0;  // RealConst
  int64_t nat_val = 0;    // IndexConst
  bool truth = false;     // BoolConst: true = top
  BuiltinOp op = BuiltinOp::And;  // Builtin
  LdlType annot;                  // Lam, Let, Forall, Exists
  ExprPtr a, b;  // App: fn/arg; Lam/Forall/Exists: body in b; Let: bound in a, body in b
  std::vector<ExprPtr> elems;  // VecLit
};

ExprPtr bound_var(std::string name, int debruijn, Span s = {});
ExprPtr network_var(std::string name, Span s = {});
ExprPtr real_const(double v, Span s = {});
ExprPtr index_const(int64_t v, Span s = {});
ExprPtr bool_const(bool truth, Span s = {});
ExprPtr app(ExprPtr fn, ExprPtr arg, Span s = {});
ExprPtr lam(std::string binder, LdlType annot, ExprPtr body, Span s = {});
ExprPtr let(std::string binder, LdlType annot, ExprPtr bound, ExprPtr body, Span s = {});
ExprPtr builtin(BuiltinOp op, Span s = {});
ExprPtr vec_lit(std::vector<ExprPtr> elems, Span s = {});
ExprPtr forall(std::string binder, LdlType annot, ExprPtr body, Span s = {});
ExprPtr exists(std::string binder, LdlType annot, ExprPtr body, Span s = {});

// Sugar for curried builtin application.
ExprPtr apply2(BuiltinOp op, ExprPtr l, ExprPtr r);
ExprPtr apply1(BuiltinOp op, ExprPtr e);

// Network typing context Xi: name -> (input dim, output dim).
class NetworkTypeCtx {
 public:
  void declare(const std::string& name, int64_t m, int64_t n);
  bool contains(const std::string& name) const;
  std::pair<int64_t, int64_t> arity(const std::string& name) const;
  const std::map<std::string, std::pair<int64_t, int64_t>>& all() const { return nets_; }

 private:
  std::map<std::string, std::pair<int64_t, int64_t>> nets_;
};

// Bound typing context Delta, innermost binding last. Lookup by de
// Bruijn index; names kept for messages.
class BoundTypeCtx {
 public:
  void push(const std::string& name, const LdlType& ty);
  void pop();
  size_t depth() const { return entries_.size(); }
  // index 0 = innermost
  const LdlType& type_at(int debruijn) const;
  const std::string& name_at(int debruijn) const;

 private:
  std::vector<std::pair<std::string, LdlType>> entries_;
};

// Variables bound by an infinite quantifier (Real or Vec) anywhere in e.
std::set<std::string> free_quantified_vars(const ExprPtr& e);

// Replace free occurrences of `binder` in e with `replacement`,
// capture-avoiding (indices of open replacements are shifted under
// binders; the printer freshens clashing surface names).
ExprPtr substitute(const ExprPtr& e, const std::string& binder, const ExprPtr& replacement);

// Substitute `replacement` for de Bruijn index 0 of a binder body and
// unshift. This is the quantifier-expansion workhorse.
ExprPtr open_binder(const ExprPtr& body, const ExprPtr& replacement);

bool alpha_equal(const ExprPtr& a, const ExprPtr& b);

// Does any variable occurrence in e (free or bound) use this name?
bool mentions_name(const ExprPtr& e, const std::string& name);

std::string pretty_print(const ExprPtr& e);

// Formats a real so it re-lexes as a real literal (always has '.', 'e'
// or inf/nan marker), with round-trip precision.
std::string format_real(double v);

}  // namespace ldl
