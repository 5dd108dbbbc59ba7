#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ldl/ast.hpp"
#include "ldl/logics.hpp"
#include "ldl/netio.hpp"
#include "ldl/parser.hpp"
#include "ldl/sampling.hpp"

namespace ldl {

struct MissingSamplerError : EvalError {
  explicit MissingSamplerError(const std::string& binder)
      : EvalError("missing sampler for quantified variable '" + binder + "'"),
        binder_name(binder) {}
  std::string binder_name;
};

struct EnvNode;
using Env = std::shared_ptr<const EnvNode>;

// Runtime semantic value. Truth values are reals in the active logic's
// Bool domain; closures capture their environment by value.
class Value {
 public:
  enum class Kind { Real, Index, Vec, Truth, Closure, Builtin, Network };

  Kind kind = Kind::Real;
  double real = 0.0;    // Real, Truth
  int64_t index = 0;    // Index
  Eigen::VectorXd vec;  // Vec

  ExprPtr body;  // Closure
  Env env;
  std::string param;

  BuiltinOp op = BuiltinOp::And;  // Builtin (partial application)
  std::vector<Value> args;

  const DenseNetwork* net = nullptr;  // Network

  static Value real_v(double v);
  static Value index_v(int64_t i);
  static Value vec_v(Eigen::VectorXd v);
  static Value truth_v(double v);

  double as_real() const;
  double as_truth() const;
  int64_t as_index() const;
  const Eigen::VectorXd& as_vec() const;

  std::string show() const;
};

struct EnvNode {
  Value value;
  Env next;
};

Env env_push(Env env, Value v);
const Value& env_at(const Env& env, int debruijn);

// The (N, Q, Gamma) triple plus the logic and sampling choices.
struct SemanticContext {
  std::map<std::string, DenseNetwork> networks;
  std::map<std::string, Distribution> samplers;
  std::map<std::string, Value> bound;  // values for free variables, by name
  Logic logic;
  SamplingConfig sampling;
};

// Interprets a well-typed expression. DL2 callers must lower the
// expression first (see lower_for_logic); eval itself does not rewrite.
Value eval(const ExprPtr& e, const SemanticContext& ctx);

// Applies a function value (closure, builtin or network).
Value apply_value(const Value& fn, const Value& arg, const SemanticContext& ctx);

// Penalty-oriented loss of the spec's root property applied to args:
// 0 at full satisfaction for DL2/fuzzy (top - value), -value for STL.
// Handles DL2 lowering internally.
double loss(const SpecFile& spec, const SemanticContext& ctx, const std::vector<Value>& args);

double penalty_from_truth(const Logic& L, double truth);

// Exact classical interpretation: comparisons decided exactly,
// connectives boolean, finite quantifiers enumerated, infinite
// quantifiers checked over the sampled points (all/any).
bool eval_classical(const ExprPtr& e, const SemanticContext& ctx);

// Converts a context-file entry to a Value of the given type.
Value binding_to_value(const CtxBinding& b, const LdlType& ty, const std::string& name);

// True when v inhabits the interpretation of ty under logic L
// (finite real / vec of matching length with finite entries / index in
// range / truth value inside the logic's Bool domain / function-like).
bool value_in_type(const Value& v, const LdlType& ty, const Logic& L);

}  // namespace ldl
