#include "ldl/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <sstream>

namespace ldl {

namespace {

const char* kKeywords[] = {"let",     "in",   "lam",  "forall", "exists", "network",
                           "Real",    "Bool", "Vec",  "Index",  "True",   "False"};

bool is_keyword(const std::string& s) {
  for (auto* k : kKeywords)
    if (s == k) return true;
  return false;
}

bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
bool ident_char(char c) { return std::isalnum((unsigned char)c) || c == '_' || c == '\''; }

}  // namespace

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto push = [&](TokKind k, std::string text, Span s) {
    Token t;
    t.kind = k;
    t.text = std::move(text);
    t.span = s;
    out.push_back(std::move(t));
  };
  while (i < src.size()) {
    char c = src[i];
    Span here{line, col};
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace((unsigned char)c)) {
      ++col;
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (ident_start(c)) {
      size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      std::string word = src.substr(i, j - i);
      push(is_keyword(word) ? TokKind::Keyword : TokKind::Ident, word, here);
      col += (int)(j - i);
      i = j;
      continue;
    }
    if (std::isdigit((unsigned char)c)) {
      size_t j = i;
      while (j < src.size() && std::isdigit((unsigned char)src[j])) ++j;
      bool is_real = false;
      if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
          std::isdigit((unsigned char)src[j + 1])) {
        is_real = true;
        ++j;
        while (j < src.size() && std::isdigit((unsigned char)src[j])) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit((unsigned char)src[k])) {
          is_real = true;
          j = k;
          while (j < src.size() && std::isdigit((unsigned char)src[j])) ++j;
        }
      }
      std::string text = src.substr(i, j - i);
      Token t;
      t.span = here;
      t.text = text;
      if (is_real) {
        t.kind = TokKind::Real;
        t.real_val = std::strtod(text.c_str(), nullptr);
      } else {
        t.kind = TokKind::Nat;
        t.nat_val = std::strtoll(text.c_str(), nullptr, 10);
        t.real_val = (double)t.nat_val;
      }
      out.push_back(std::move(t));
      col += (int)(j - i);
      i = j;
      continue;
    }
    // Multi-char operators first (maximal munch).
    auto two = [&](const char* op) {
      return i + 1 < src.size() && src[i] == op[0] && src[i + 1] == op[1];
    };
    const char* two_ops[] = {"=>", "==", "!=", "<=", ">=", "->"};
    bool matched = false;
    for (auto* op : two_ops) {
      if (two(op)) {
        push(TokKind::Op, op, here);
        i += 2;
        col += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    switch (c) {
      case '+': case '-': case '*': case '<': case '>': case '!': case ':':
      case '.': case '(': case ')': case '[': case ']': case ',': case '=':
        push(TokKind::Op, std::string(1, c), here);
        ++i;
        ++col;
        continue;
      default:
        throw ParseError(std::string("illegal character '") + c + "'", here);
    }
  }
  Token eof;
  eof.kind = TokKind::Eof;
  eof.span = {line, col};
  out.push_back(eof);
  return out;
}

namespace {

// "inf"/"nan" are ordinary identifiers in source; the printer only emits
// them for degenerate constants, which the parser folds back here.
std::optional<double> special_real(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, bool full_file)
      : toks_(std::move(toks)), full_file_(full_file) {}

  SpecFile parse_spec() {
    SpecFile spec;
    while (at_keyword("network")) parse_network_decl(spec);
    while (!at_eof()) {
      parse_definition(spec);
    }
    if (spec.definitions.empty())
      throw ParseError("expected at least one definition (empty root)", peek().span);
    const LdlType& rt = spec.definitions.back().type.result();
    if (!rt.is_bool())
      throw ParseError("root property must have type Bool or end in Bool, got " +
                           spec.definitions.back().type.show(),
                       spec.definitions.back().span);
    return spec;
  }

  ExprPtr parse_single_expr() {
    ExprPtr e = parse_expr();
    expect_eof();
    return e;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  bool full_file_;
  NetworkTypeCtx* nets_ = nullptr;
  std::vector<std::string> scope_;            // binders, innermost last
  std::vector<std::string> def_names_;        // earlier top-level definitions

  const Token& peek(size_t ahead = 0) const {
    size_t p = pos_ + ahead;
    if (p >= toks_.size()) p = toks_.size() - 1;
    return toks_[p];
  }
  const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at_eof() const { return peek().kind == TokKind::Eof; }
  bool at_op(const char* op) const { return peek().kind == TokKind::Op && peek().text == op; }
  bool at_keyword(const char* kw) const {
    return peek().kind == TokKind::Keyword && peek().text == kw;
  }
  void expect_op(const char* op) {
    if (!at_op(op)) throw ParseError(std::string("expected '") + op + "', got '" + peek().text + "'", peek().span);
    advance();
  }
  void expect_keyword(const char* kw) {
    if (!at_keyword(kw))
      throw ParseError(std::string("expected '") + kw + "', got '" + peek().text + "'",
                       peek().span);
    advance();
  }
  std::string expect_ident() {
    if (peek().kind != TokKind::Ident)
      throw ParseError("expected identifier, got '" + peek().text + "'", peek().span);
    return advance().text;
  }
  void expect_eof() {
    if (!at_eof()) throw ParseError("unexpected trailing input '" + peek().text + "'", peek().span);
  }

  int64_t expect_nat() {
    if (peek().kind != TokKind::Nat)
      throw ParseError("expected natural number, got '" + peek().text + "'", peek().span);
    return advance().nat_val;
  }

  void parse_network_decl(SpecFile& spec) {
    Span s = peek().span;
    expect_keyword("network");
    std::string name = expect_ident();
    expect_op(":");
    LdlType ty = parse_type();
    if (!(ty.is_fun() && ty.dom().is_vec() && ty.cod().is_vec()))
      throw ParseError("network type must be Vec m -> Vec n, got " + ty.show(), s);
    spec.networks.declare(name, ty.dom().size(), ty.cod().size());
  }

  void parse_definition(SpecFile& spec) {
    nets_ = &spec.networks;
    Span s = peek().span;
    std::string name = expect_ident();
    for (auto& d : spec.definitions)
      if (d.name == name) throw ParseError("duplicate definition name: " + name, s);
    expect_op(":");
    LdlType ty = parse_type();
    expect_op("=");
    ExprPtr body = parse_expr();
    Definition def;
    def.name = name;
    def.type = ty;
    def.body = body;
    def.span = s;
    spec.definitions.push_back(std::move(def));
    def_names_.push_back(name);
  }

  LdlType parse_type() {
    LdlType lhs = parse_simple_type();
    if (at_op("->")) {
      advance();
      if (lhs.is_fun())
        throw ParseError("function domains must be simple types", peek().span);
      LdlType rhs = parse_type();
      return LdlType::fun(lhs, rhs);
    }
    return lhs;
  }

  LdlType parse_simple_type() {
    Span s = peek().span;
    if (at_keyword("Real")) { advance(); return LdlType::real(); }
    if (at_keyword("Bool")) { advance(); return LdlType::boolean(); }
    if (at_keyword("Vec")) {
      advance();
      int64_t n = expect_nat();
      if (n < 1) throw ParseError("Vec size must be >= 1", s);
      return LdlType::vec(n);
    }
    if (at_keyword("Index")) {
      advance();
      int64_t n = expect_nat();
      if (n < 1) throw ParseError("Index size must be >= 1", s);
      return LdlType::index(n);
    }
    if (at_op("(")) {
      advance();
      LdlType t = parse_type();
      expect_op(")");
      return t;
    }
    throw ParseError("expected type, got '" + peek().text + "'", s);
  }

  ExprPtr resolve_ident(const std::string& name, Span s) {
    for (size_t i = 0; i < scope_.size(); ++i) {
      size_t idx = scope_.size() - 1 - i;
      if (scope_[idx] == name) return bound_var(name, (int)i, s);
    }
    // Earlier top-level definitions behave like let bindings wrapped
    // around the root: definition k sits below (defs after k) + local binders.
    for (size_t i = 0; i < def_names_.size(); ++i) {
      size_t idx = def_names_.size() - 1 - i;
      if (def_names_[idx] == name)
        return bound_var(name, (int)(scope_.size() + i), s);
    }
    if (nets_ && nets_->contains(name)) return network_var(name, s);
    if (auto v = special_real(name)) return real_const(*v, s);
    if (nets_)
      throw ParseError("unbound identifier '" + name +
                           "' (network variables must be declared with 'network')",
                       s);
    // Bare-expression mode: unknown names become free variables.
    return bound_var(name, (int)scope_.size() + 1000000, s);
  }

  // Precedence climbing; level 0 entry.
  ExprPtr parse_expr() { return parse_implies(); }

  ExprPtr parse_implies() {
    ExprPtr lhs = parse_or();
    if (at_op("=>")) {
      Span s = peek().span;
      advance();
      ExprPtr rhs = parse_implies();  // right-associative
      return app(app(builtin(BuiltinOp::Implies, s), lhs, s), rhs, s);
    }
    return lhs;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (at_keyword_op("or")) {
      Span s = advance().span;
      lhs = app(app(builtin(BuiltinOp::Or, s), lhs, s), parse_and(), s);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_cmp();
    while (at_keyword_op("and")) {
      Span s = advance().span;
      lhs = app(app(builtin(BuiltinOp::And, s), lhs, s), parse_cmp(), s);
    }
    return lhs;
  }

  bool at_keyword_op(const char* name) const {
    return peek().kind == TokKind::Ident && peek().text == name;
  }

  std::optional<BuiltinOp> peek_cmp() const {
    if (peek().kind != TokKind::Op) return std::nullopt;
    const std::string& t = peek().text;
    if (t == "==") return BuiltinOp::Eq;
    if (t == "!=") return BuiltinOp::Neq;
    if (t == "<=") return BuiltinOp::Leq;
    if (t == ">=") return BuiltinOp::Geq;
    if (t == "<") return BuiltinOp::Lt;
    if (t == ">") return BuiltinOp::Gt;
    return std::nullopt;
  }

  ExprPtr parse_cmp() {
    ExprPtr lhs = parse_add();
    while (auto op = peek_cmp()) {
      Span s = advance().span;
      lhs = app(app(builtin(*op, s), lhs, s), parse_add(), s);
    }
    return lhs;
  }

  ExprPtr parse_add() {
    ExprPtr lhs = parse_mul();
    while (at_op("+") || at_op("-")) {
      bool minus = peek().text == "-";
      Span s = advance().span;
      ExprPtr rhs = parse_mul();
      if (minus) rhs = app(builtin(BuiltinOp::Neg, s), rhs, s);
      lhs = app(app(builtin(BuiltinOp::Add, s), lhs, s), rhs, s);
    }
    return lhs;
  }

  ExprPtr parse_mul() {
    ExprPtr lhs = parse_unary();
    while (at_op("*")) {
      Span s = advance().span;
      lhs = app(app(builtin(BuiltinOp::Mul, s), lhs, s), parse_unary(), s);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (at_op("-")) {
      Span s = advance().span;
      ExprPtr operand = parse_unary();
      // Fold negated real literals so printing round-trips.
      if (operand->kind == ExprKind::RealConst)
        return real_const(-operand->real_val, s);
      return app(builtin(BuiltinOp::Neg, s), operand, s);
    }
    if (at_keyword_op("not")) {
      Span s = advance().span;
      return app(builtin(BuiltinOp::Not, s), parse_unary(), s);
    }
    return parse_lookup();
  }

  ExprPtr parse_lookup() {
    ExprPtr lhs = parse_app();
    while (at_op("!")) {
      Span s = advance().span;
      ExprPtr idx;
      if (peek().kind == TokKind::Nat) {
        Token t = advance();
        idx = index_const(t.nat_val, t.span);
      } else {
        idx = parse_atom();
      }
      lhs = app(app(builtin(BuiltinOp::Lookup, s), lhs, s), idx, s);
    }
    return lhs;
  }

  // Juxtaposition application. Stops before `ident :` which starts the
  // next top-level definition in file mode.
  ExprPtr parse_app() {
    ExprPtr fn = parse_atom();
    while (atom_ahead()) {
      ExprPtr arg = parse_atom();
      fn = app(fn, arg, fn->span);
    }
    return fn;
  }

  bool atom_ahead() const {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Nat:
      case TokKind::Real:
        return true;
      case TokKind::Ident:
        if (t.text == "and" || t.text == "or" || t.text == "not") return false;
        if (full_file_ && peek(1).kind == TokKind::Op && peek(1).text == ":") return false;
        return true;
      case TokKind::Keyword:
        return t.text == "True" || t.text == "False";
      case TokKind::Op:
        return t.text == "(" || t.text == "[";
      case TokKind::Eof:
        return false;
    }
    return false;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    Span s = t.span;
    switch (t.kind) {
      case TokKind::Real: {
        advance();
        return real_const(t.real_val, s);
      }
      case TokKind::Nat: {
        advance();
        // Digit-only literals are reals except in lookup position
        // (handled in parse_lookup).
        return real_const((double)t.nat_val, s);
      }
      case TokKind::Ident: {
        advance();
        return resolve_ident(t.text, s);
      }
      case TokKind::Keyword: {
        if (t.text == "True") { advance(); return bool_const(true, s); }
        if (t.text == "False") { advance(); return bool_const(false, s); }
        if (t.text == "lam" || t.text == "forall" || t.text == "exists")
          return parse_binder(t.text);
        if (t.text == "let") return parse_let();
        throw ParseError("unexpected keyword '" + t.text + "'", s);
      }
      case TokKind::Op: {
        if (t.text == "(") {
          advance();
          // Operator section: (and), (+), ...
          if (auto op = section_op()) {
            advance();
            expect_op(")");
            return builtin(*op, s);
          }
          ExprPtr e = parse_expr();
          expect_op(")");
          return e;
        }
        if (t.text == "[") {
          advance();
          std::vector<ExprPtr> elems;
          if (at_op("]"))
            throw ParseError("empty vector literal (Vec n requires n >= 1)", s);
          elems.push_back(parse_expr());
          while (at_op(",")) {
            advance();
            elems.push_back(parse_expr());
          }
          expect_op("]");
          return vec_lit(std::move(elems), s);
        }
        throw ParseError("unexpected token '" + t.text + "'", s);
      }
      default:
        throw ParseError("unexpected end of input", s);
    }
  }

  std::optional<BuiltinOp> section_op() const {
    const Token& t = peek();
    if (t.kind == TokKind::Ident) {
      if (t.text == "and" && next_is_rparen()) return BuiltinOp::And;
      if (t.text == "or" && next_is_rparen()) return BuiltinOp::Or;
      if (t.text == "not" && next_is_rparen()) return BuiltinOp::Not;
    }
    if (t.kind != TokKind::Op) return std::nullopt;
    if (!next_is_rparen()) return std::nullopt;
    const std::string& x = t.text;
    if (x == "=>") return BuiltinOp::Implies;
    if (x == "+") return BuiltinOp::Add;
    if (x == "-") return BuiltinOp::Neg;
    if (x == "*") return BuiltinOp::Mul;
    if (x == "==") return BuiltinOp::Eq;
    if (x == "!=") return BuiltinOp::Neq;
    if (x == "<=") return BuiltinOp::Leq;
    if (x == ">=") return BuiltinOp::Geq;
    if (x == "<") return BuiltinOp::Lt;
    if (x == ">") return BuiltinOp::Gt;
    if (x == "!") return BuiltinOp::Lookup;
    return std::nullopt;
  }

  bool next_is_rparen() const {
    return peek(1).kind == TokKind::Op && peek(1).text == ")";
  }

  ExprPtr parse_binder(const std::string& kw) {
    Span s = advance().span;  // lam/forall/exists
    expect_op("(");
    std::string name = expect_ident();
    expect_op(":");
    LdlType ty = parse_type();
    expect_op(")");
    expect_op(".");
    scope_.push_back(name);
    ExprPtr body = parse_expr();
    scope_.pop_back();
    if (kw == "lam") return lam(name, ty, body, s);
    if (kw == "forall") return forall(name, ty, body, s);
    return exists(name, ty, body, s);
  }

  ExprPtr parse_let() {
    Span s = advance().span;  // let
    expect_op("(");
    std::string name = expect_ident();
    expect_op(":");
    LdlType ty = parse_type();
    expect_op(")");
    expect_op("=");
    ExprPtr bound = parse_expr();
    expect_keyword("in");
    scope_.push_back(name);
    ExprPtr body = parse_expr();
    scope_.pop_back();
    return let(name, ty, bound, body, s);
  }
};

}  // namespace

const Definition& SpecFile::root() const {
  if (definitions.empty()) throw std::logic_error("empty spec");
  return definitions.back();
}

ExprPtr SpecFile::root_expr() const {
  // let d1 = e1 in ... let dn = en in dn
  ExprPtr body = bound_var(definitions.back().name, 0);
  for (size_t i = definitions.size(); i-- > 0;) {
    const Definition& d = definitions[i];
    body = let(d.name, d.type, d.body, body, d.span);
  }
  return body;
}

SpecFile parse(const std::string& source) {
  Parser p(tokenize(source), true);
  return p.parse_spec();
}

SpecFile parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ExprPtr parse_expr(const std::string& source) {
  Parser p(tokenize(source), false);
  return p.parse_single_expr();
}

}  // namespace ldl
