#pragma once

#include <string>

#include "ldl/ast.hpp"
#include "ldl/parser.hpp"

namespace ldl {

enum class TypeErrorCode {
  TypeMismatch,
  UnboundVariable,
  IndexOutOfRange,
  QuantifierOverFunctionType,
  NonBooleanQuantifierBody,
  CannotInfer
};

struct TypeError : std::runtime_error {
  TypeError(TypeErrorCode c, std::string msg, Span s)
      : std::runtime_error(std::move(msg)), code(c), span(s) {}
  TypeErrorCode code;
  Span span;
};

const char* type_error_code_name(TypeErrorCode c);

// Synthesizes the unique type of e under the Figure-2 style rules, or
// throws TypeError. Annotations on every binder make this a pure
// synthesis pass.
LdlType check(const NetworkTypeCtx& nets, const BoundTypeCtx& bound, const ExprPtr& e);

// Typechecks every definition (body type must equal its annotation) and
// returns the root property's type.
LdlType check_spec(const SpecFile& spec);

enum class QuantifierClass { Finite, Infinite };

// Real and Vec quantify over infinite domains; Index and Bool are finite.
QuantifierClass classify_quantifier(const LdlType& binder_type);

}  // namespace ldl
