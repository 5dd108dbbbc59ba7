#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ldl/ast.hpp"

namespace ldl {

struct ParseError : std::runtime_error {
  ParseError(std::string msg, Span s)
      : std::runtime_error(std::move(msg)), span(s) {}
  Span span;
};

enum class TokKind {
  Ident,
  Nat,
  Real,
  Keyword,   // let in lam forall exists network Real Bool Vec Index True False
  Op,        // and or not => + - * == != <= >= < > ! : . -> ( ) [ ] , =
  Eof
};

struct Token {
  TokKind kind;
  std::string text;
  double real_val = 0.0;
  int64_t nat_val = 0;
  Span span;
};

// Maximal-munch lexer. `--` starts a line comment.
std::vector<Token> tokenize(const std::string& source);

struct Definition {
  std::string name;
  LdlType type;
  ExprPtr body;
  Span span;
};

// A parsed .ldl file: network declarations followed by definitions.
// The final definition is the root property.
struct SpecFile {
  NetworkTypeCtx networks;
  std::vector<Definition> definitions;

  const Definition& root() const;
  // Definitions folded into a let-chain around a reference to the root.
  ExprPtr root_expr() const;
};

SpecFile parse(const std::string& source);
SpecFile parse_file(const std::string& path);

// Parses a single expression (no network declarations); used by tests.
ExprPtr parse_expr(const std::string& source);

}  // namespace ldl
