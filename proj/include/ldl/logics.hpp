#pragma once

#include <span>
#include <string>
#include <vector>

#include "ldl/ast.hpp"

namespace ldl {

enum class LogicTag { DL2, Godel, Lukasiewicz, Yager, Product, STL };

const char* logic_name(LogicTag t);
bool logic_is_fuzzy(LogicTag t);  // Godel, Lukasiewicz, Yager, Product

struct EvalError : std::runtime_error {
  explicit EvalError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// A differentiable logic: truth domain, constants, connectives and
// comparison semantics. Values are extended reals inside the domain.
struct Logic {
  LogicTag tag = LogicTag::Godel;
  double yager_p = 2.0;   // Yager only, >= 1
  double stl_nu = 1.0;    // STL only, > 0
  double neq_xi = 1.0;    // != constant, > 0
  bool leq_signed = false;  // fuzzy <=: use tanh(a-b) instead of tanh|a-b|

  static Logic make(LogicTag tag);

  double top() const;
  double bottom() const;
  // Truth domain endpoints [lo, hi].
  double domain_lo() const;
  double domain_hi() const;
  bool in_domain(double v) const;

  std::string describe() const;
};

Logic logic_from_name(const std::string& name);

// Raw connective kernels. No domain validation: the property checkers
// probe them outside the truth domain on purpose. Binary except where
// noted; the STL pair is M-ary.
namespace kernel {

double conj(const Logic& L, double a, double b);
double disj(const Logic& L, double a, double b);
double stl_and(const Logic& L, std::span<const double> vs);
double stl_or(const Logic& L, std::span<const double> vs);
double negate(const Logic& L, double a);        // throws for DL2
double implies(const Logic& L, double a, double b);  // throws for DL2
double compare(const Logic& L, BuiltinOp op, double a, double b);

// Multiplication where an exact zero absorbs infinity: 0 * (+-inf) = 0.
// Used by the DL2 disjunction so that top absorbs bottom.
double mul_absorb(double a, double b);

}  // namespace kernel

// Checked interpretation entry points (domain-validating, per spec).
double interp_top(const Logic& L);
double interp_bottom(const Logic& L);
double interp_and(const Logic& L, std::span<const double> args);
double interp_or(const Logic& L, std::span<const double> args);
double interp_not(const Logic& L, double a);
double interp_implies(const Logic& L, double a, double b);
double interp_comparison(const Logic& L, BuiltinOp op, double a, double b);

// Left fold of the binary connective; one n-ary node for STL.
double fold_and(const Logic& L, std::span<const double> args);
double fold_or(const Logic& L, std::span<const double> args);

struct NegationError : std::runtime_error {
  explicit NegationError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Rewrites e to an equivalent expression with no `not` nodes: De Morgan
// over and/or, comparison flips, double-negation elimination, plus the
// standard quantifier duals. Throws NegationError when a negation sits
// over syntax it cannot cross (lambda, let, opaque application).
ExprPtr push_negation(const ExprPtr& e);

// Logic-dependent syntax lowering before evaluation/compilation.
// DL2 has no negation or implication kernels: `a => b` becomes
// push_negation(not a) or b, and stray `not` nodes are pushed.
// Other logics pass through unchanged.
ExprPtr lower_for_logic(const ExprPtr& e, const Logic& L);

}  // namespace ldl
