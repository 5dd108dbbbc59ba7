#include "ldl/graph.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "ldl/typecheck.hpp"

namespace ldl {

const char* graph_op_name(GraphOp op) {
  switch (op) {
    case GraphOp::Const: return "const";
    case GraphOp::Input: return "input";
    case GraphOp::InputVec: return "inputvec";
    case GraphOp::SampleVar: return "samplevar";
    case GraphOp::Add: return "add";
    case GraphOp::Sub: return "sub";
    case GraphOp::Mul: return "mul";
    case GraphOp::MulAbsorb: return "mul0";
    case GraphOp::Neg: return "neg";
    case GraphOp::Div: return "div";
    case GraphOp::Min: return "min";
    case GraphOp::Max: return "max";
    case GraphOp::Abs: return "abs";
    case GraphOp::Tanh: return "tanh";
    case GraphOp::Exp: return "exp";
    case GraphOp::PowC: return "powc";
    case GraphOp::IndEq: return "indeq";
    case GraphOp::IfZero: return "ifzero";
    case GraphOp::IfInf: return "ifinf";
    case GraphOp::Sign3: return "sign3";
    case GraphOp::VecMake: return "vecmake";
    case GraphOp::VecGet: return "vecget";
    case GraphOp::NetApply: return "netapply";
    case GraphOp::ReduceMin: return "reducemin";
    case GraphOp::ReduceMax: return "reducemax";
  }
  return "?";
}

namespace {

struct CEnvNode;
using CEnv = std::shared_ptr<const CEnvNode>;

struct CValue {
  enum class K { Scalar, Vec, Index, Fun, Builtin, Net };
  K k = K::Scalar;
  int32_t id = -1;     // Scalar / Vec
  int64_t index = 0;   // Index
  ExprPtr fun;         // Fun (a Lam node)
  CEnv env;
  BuiltinOp op = BuiltinOp::And;  // Builtin partial
  std::vector<CValue> args;
  std::string net;  // Net
};

struct CEnvNode {
  CValue v;
  CEnv next;
};

CEnv cenv_push(CEnv env, CValue v) {
  auto n = std::make_shared<CEnvNode>();
  n->v = std::move(v);
  n->next = std::move(env);
  return n;
}

const CValue& cenv_at(const CEnv& env, int debruijn) {
  const CEnvNode* n = env.get();
  for (int i = 0; i < debruijn && n; ++i) n = n->next.get();
  if (!n) throw CompileError("compile environment lookup past the end");
  return n->v;
}

int cenv_depth(const CEnv& env) {
  int d = 0;
  for (const CEnvNode* n = env.get(); n; n = n->next.get()) ++d;
  return d;
}

class Compiler {
 public:
  explicit Compiler(const Logic& L) { g_.logic = L; }

  ExprGraph take() && { return std::move(g_); }

  int32_t emit(GraphNode n) {
    g_.nodes.push_back(std::move(n));
    return (int32_t)(g_.nodes.size() - 1);
  }

  int32_t n0(GraphOp op) {
    GraphNode n;
    n.op = op;
    return emit(std::move(n));
  }
  int32_t nconst(double v) {
    GraphNode n;
    n.op = GraphOp::Const;
    n.imm = v;
    return emit(std::move(n));
  }
  int32_t n1(GraphOp op, int32_t a) {
    GraphNode n;
    n.op = op;
    n.operands = {a};
    return emit(std::move(n));
  }
  int32_t n2(GraphOp op, int32_t a, int32_t b) {
    GraphNode n;
    n.op = op;
    n.operands = {a, b};
    return emit(std::move(n));
  }
  int32_t n3(GraphOp op, int32_t a, int32_t b, int32_t c) {
    GraphNode n;
    n.op = op;
    n.operands = {a, b, c};
    return emit(std::move(n));
  }
  int32_t powc(int32_t a, double e) {
    GraphNode n;
    n.op = GraphOp::PowC;
    n.operands = {a};
    n.imm = e;
    return emit(std::move(n));
  }

  // --- connective emission; each mirrors its kernel's fl-op order ---

  int32_t emit_not(int32_t a) {
    switch (g_.logic.tag) {
      case LogicTag::DL2:
        throw CompileError("DL2 negation must be pushed before compilation");
      case LogicTag::STL:
        return n1(GraphOp::Neg, a);
      default:
        return n2(GraphOp::Sub, nconst(1.0), a);
    }
  }

  int32_t emit_and2(int32_t a, int32_t b) {
    switch (g_.logic.tag) {
      case LogicTag::DL2:
        return n2(GraphOp::Add, a, b);
      case LogicTag::Godel:
        return n2(GraphOp::Min, a, b);
      case LogicTag::Lukasiewicz:
        return n2(GraphOp::Max, n2(GraphOp::Sub, n2(GraphOp::Add, a, b), nconst(1.0)),
                  nconst(0.0));
      case LogicTag::Yager: {
        double p = g_.logic.yager_p;
        int32_t sa = powc(n2(GraphOp::Sub, nconst(1.0), a), p);
        int32_t sb = powc(n2(GraphOp::Sub, nconst(1.0), b), p);
        int32_t s = powc(n2(GraphOp::Add, sa, sb), 1.0 / p);
        return n2(GraphOp::Max, n2(GraphOp::Sub, nconst(1.0), s), nconst(0.0));
      }
      case LogicTag::Product:
        return n2(GraphOp::Mul, a, b);
      case LogicTag::STL: {
        int32_t vs[2] = {a, b};
        return emit_stl_and({vs, 2});
      }
    }
    return -1;
  }

  int32_t emit_or2(int32_t a, int32_t b) {
    switch (g_.logic.tag) {
      case LogicTag::DL2:
        return n1(GraphOp::Neg, n2(GraphOp::MulAbsorb, a, b));
      case LogicTag::Godel:
        return n2(GraphOp::Max, a, b);
      case LogicTag::Lukasiewicz:
        return n2(GraphOp::Min, n2(GraphOp::Add, a, b), nconst(1.0));
      case LogicTag::Yager: {
        double p = g_.logic.yager_p;
        int32_t s = powc(n2(GraphOp::Add, powc(a, p), powc(b, p)), 1.0 / p);
        return n2(GraphOp::Min, s, nconst(1.0));
      }
      case LogicTag::Product:
        return n2(GraphOp::Sub, n2(GraphOp::Add, a, b), n2(GraphOp::Mul, a, b));
      case LogicTag::STL: {
        int32_t vs[2] = {a, b};
        return emit_stl_or({vs, 2});
      }
    }
    return -1;
  }

  int32_t emit_implies(int32_t a, int32_t b) {
    switch (g_.logic.tag) {
      case LogicTag::DL2:
        throw CompileError("DL2 implication must be rewritten before compilation");
      case LogicTag::Godel:
        return n2(GraphOp::Max, n2(GraphOp::Sub, nconst(1.0), a), b);
      case LogicTag::Lukasiewicz:
        return n2(GraphOp::Min, n2(GraphOp::Add, n2(GraphOp::Sub, nconst(1.0), a), b),
                  nconst(1.0));
      case LogicTag::Yager:
        return emit_or2(emit_not(a), b);
      case LogicTag::Product:
        return n2(GraphOp::Add, n2(GraphOp::Sub, nconst(1.0), a), n2(GraphOp::Mul, a, b));
      case LogicTag::STL: {
        int32_t vs[2] = {n1(GraphOp::Neg, a), b};
        return emit_stl_or({vs, 2});
      }
    }
    return -1;
  }

  int32_t emit_stl_and(std::span<const int32_t> vs) {
    double nu = g_.logic.stl_nu;
    int32_t m = vs[0];
    for (size_t i = 1; i < vs.size(); ++i) m = n2(GraphOp::Min, m, vs[i]);
    // v_min < 0 branch
    int32_t num_n = nconst(0.0), den_n = nconst(0.0);
    for (int32_t v : vs) {
      int32_t vt = n2(GraphOp::Div, n2(GraphOp::Sub, v, m), m);
      int32_t e1 = n1(GraphOp::Exp, vt);
      int32_t w = n1(GraphOp::Exp, n2(GraphOp::Mul, nconst(nu), vt));
      num_n = n2(GraphOp::Add, num_n, n2(GraphOp::Mul, n2(GraphOp::Mul, m, e1), w));
      den_n = n2(GraphOp::Add, den_n, w);
    }
    int32_t bneg = n2(GraphOp::Div, num_n, den_n);
    // v_min > 0 branch
    int32_t num_p = nconst(0.0), den_p = nconst(0.0);
    for (int32_t v : vs) {
      int32_t vt = n2(GraphOp::Div, n2(GraphOp::Sub, v, m), m);
      int32_t w = n1(GraphOp::Exp, n1(GraphOp::Neg, n2(GraphOp::Mul, nconst(nu), vt)));
      den_p = n2(GraphOp::Add, den_p, w);
      num_p = n2(GraphOp::Add, num_p,
                 n3(GraphOp::IfZero, w, nconst(0.0), n2(GraphOp::Mul, v, w)));
    }
    int32_t bpos = n2(GraphOp::Div, num_p, den_p);
    GraphNode sel;
    sel.op = GraphOp::Sign3;
    sel.operands = {m, bneg, nconst(0.0), bpos};
    int32_t s = emit(std::move(sel));
    return n3(GraphOp::IfInf, m, m, s);
  }

  int32_t emit_stl_or(std::span<const int32_t> vs) {
    std::vector<int32_t> flipped(vs.size());
    for (size_t i = 0; i < vs.size(); ++i) flipped[i] = n1(GraphOp::Neg, vs[i]);
    return n1(GraphOp::Neg, emit_stl_and(flipped));
  }

  int32_t emit_fold_and(std::span<const int32_t> vs) {
    if (vs.empty()) throw CompileError("empty conjunction fold");
    if (g_.logic.tag == LogicTag::STL) return vs.size() == 1 ? vs[0] : emit_stl_and(vs);
    int32_t acc = vs[0];
    for (size_t i = 1; i < vs.size(); ++i) acc = emit_and2(acc, vs[i]);
    return acc;
  }

  int32_t emit_fold_or(std::span<const int32_t> vs) {
    if (vs.empty()) throw CompileError("empty disjunction fold");
    if (g_.logic.tag == LogicTag::STL) return vs.size() == 1 ? vs[0] : emit_stl_or(vs);
    int32_t acc = vs[0];
    for (size_t i = 1; i < vs.size(); ++i) acc = emit_or2(acc, vs[i]);
    return acc;
  }

  int32_t emit_cmp_eq(int32_t a, int32_t b) {
    int32_t d = n1(GraphOp::Abs, n2(GraphOp::Sub, a, b));
    switch (g_.logic.tag) {
      case LogicTag::DL2:
      case LogicTag::STL:
        return n1(GraphOp::Neg, d);
      default:
        return n2(GraphOp::Sub, nconst(1.0), n1(GraphOp::Tanh, d));
    }
  }

  int32_t emit_cmp_leq(int32_t a, int32_t b) {
    switch (g_.logic.tag) {
      case LogicTag::DL2:
        return n1(GraphOp::Neg, n2(GraphOp::Max, n2(GraphOp::Sub, a, b), nconst(0.0)));
      case LogicTag::STL:
        return n2(GraphOp::Sub, b, a);
      default: {
        int32_t t = g_.logic.leq_signed
                        ? n1(GraphOp::Tanh, n2(GraphOp::Sub, a, b))
                        : n1(GraphOp::Tanh, n1(GraphOp::Abs, n2(GraphOp::Sub, a, b)));
        return n2(GraphOp::Sub, nconst(1.0), n2(GraphOp::Max, t, nconst(0.0)));
      }
    }
  }

  int32_t emit_cmp_neq(int32_t a, int32_t b) {
    int32_t ind = n2(GraphOp::IndEq, a, b);
    switch (g_.logic.tag) {
      case LogicTag::DL2:
      case LogicTag::STL:
        return n1(GraphOp::Neg, n2(GraphOp::Mul, nconst(g_.logic.neq_xi), ind));
      default:
        return n2(GraphOp::Sub, nconst(1.0), ind);
    }
  }

  int32_t emit_comparison(BuiltinOp op, int32_t a, int32_t b) {
    switch (op) {
      case BuiltinOp::Eq: return emit_cmp_eq(a, b);
      case BuiltinOp::Leq: return emit_cmp_leq(a, b);
      case BuiltinOp::Neq: return emit_cmp_neq(a, b);
      case BuiltinOp::Geq: return emit_cmp_leq(b, a);
      case BuiltinOp::Lt: return emit_and2(emit_cmp_leq(a, b), emit_cmp_neq(a, b));
      case BuiltinOp::Gt: return emit_and2(emit_cmp_leq(b, a), emit_cmp_neq(a, b));
      default: throw CompileError("not a comparison");
    }
  }

  // --- expression compilation ---

  CValue compile(const ExprPtr& e, const CEnv& env) {
    switch (e->kind) {
      case ExprKind::BoundVar: {
        if (e->debruijn >= cenv_depth(env))
          throw CompileError("free variable '" + e->name + "' in compiled expression");
        return cenv_at(env, e->debruijn);
      }
      case ExprKind::NetworkVar: {
        CValue v;
        v.k = CValue::K::Net;
        v.net = e->name;
        return v;
      }
      case ExprKind::RealConst: {
        CValue v;
        v.k = CValue::K::Scalar;
        v.id = nconst(e->real_val);
        return v;
      }
      case ExprKind::IndexConst: {
        CValue v;
        v.k = CValue::K::Index;
        v.index = e->nat_val;
        return v;
      }
      case ExprKind::BoolConst: {
        CValue v;
        v.k = CValue::K::Scalar;
        v.id = nconst(e->truth ? g_.logic.top() : g_.logic.bottom());
        return v;
      }
      case ExprKind::Builtin: {
        CValue v;
        v.k = CValue::K::Builtin;
        v.op = e->op;
        return v;
      }
      case ExprKind::Lam: {
        CValue v;
        v.k = CValue::K::Fun;
        v.fun = e;
        v.env = env;
        return v;
      }
      case ExprKind::Let: {
        CValue bound = compile(e->a, env);
        return compile(e->b, cenv_push(env, std::move(bound)));
      }
      case ExprKind::VecLit: {
        GraphNode n;
        n.op = GraphOp::VecMake;
        for (auto& c : e->elems) n.operands.push_back(scalar_id(compile(c, env)));
        n.iimm = (int64_t)e->elems.size();
        CValue v;
        v.k = CValue::K::Vec;
        v.id = emit(std::move(n));
        return v;
      }
      case ExprKind::App:
        return compile_app(e, env);
      case ExprKind::Forall:
        return compile_quantifier(e, env, true);
      case ExprKind::Exists:
        return compile_quantifier(e, env, false);
    }
    throw CompileError("unhandled expression");
  }

  void flatten_chain(const ExprPtr& e, BuiltinOp op, std::vector<ExprPtr>& leaves) {
    if (e->kind == ExprKind::App && e->a && e->a->kind == ExprKind::App && e->a->a &&
        e->a->a->kind == ExprKind::Builtin && e->a->a->op == op) {
      flatten_chain(e->a->b, op, leaves);
      flatten_chain(e->b, op, leaves);
      return;
    }
    leaves.push_back(e);
  }

  CValue compile_app(const ExprPtr& e, const CEnv& env) {
    if (g_.logic.tag == LogicTag::STL && e->a && e->a->kind == ExprKind::App && e->a->a &&
        e->a->a->kind == ExprKind::Builtin &&
        (e->a->a->op == BuiltinOp::And || e->a->a->op == BuiltinOp::Or)) {
      BuiltinOp op = e->a->a->op;
      std::vector<ExprPtr> leaves;
      flatten_chain(e, op, leaves);
      std::vector<int32_t> ids;
      ids.reserve(leaves.size());
      for (auto& leaf : leaves) ids.push_back(scalar_id(compile(leaf, env)));
      CValue v;
      v.k = CValue::K::Scalar;
      v.id = op == BuiltinOp::And ? emit_stl_and(ids) : emit_stl_or(ids);
      return v;
    }
    CValue fn = compile(e->a, env);
    CValue arg = compile(e->b, env);
    return apply(fn, arg);
  }

  CValue apply(const CValue& fn, const CValue& arg) {
    switch (fn.k) {
      case CValue::K::Fun:
        return compile(fn.fun->b, cenv_push(fn.env, arg));
      case CValue::K::Net: {
        if (arg.k != CValue::K::Vec) throw CompileError("network applied to a non-vector");
        GraphNode n;
        n.op = GraphOp::NetApply;
        n.name = fn.net;
        n.operands = {arg.id};
        CValue v;
        v.k = CValue::K::Vec;
        v.id = emit(std::move(n));
        return v;
      }
      case CValue::K::Builtin: {
        CValue v = fn;
        v.args.push_back(arg);
        if ((int)v.args.size() == builtin_arity(v.op)) return apply_builtin(v.op, v.args);
        return v;
      }
      default:
        throw CompileError("cannot apply a non-function");
    }
  }

  CValue apply_builtin(BuiltinOp op, const std::vector<CValue>& args) {
    CValue v;
    v.k = CValue::K::Scalar;
    switch (op) {
      case BuiltinOp::Add:
        v.id = n2(GraphOp::Add, scalar_id(args[0]), scalar_id(args[1]));
        return v;
      case BuiltinOp::Mul:
        v.id = n2(GraphOp::Mul, scalar_id(args[0]), scalar_id(args[1]));
        return v;
      case BuiltinOp::Neg:
        v.id = n1(GraphOp::Neg, scalar_id(args[0]));
        return v;
      case BuiltinOp::And:
        v.id = emit_and2(scalar_id(args[0]), scalar_id(args[1]));
        return v;
      case BuiltinOp::Or:
        v.id = emit_or2(scalar_id(args[0]), scalar_id(args[1]));
        return v;
      case BuiltinOp::Not:
        v.id = emit_not(scalar_id(args[0]));
        return v;
      case BuiltinOp::Implies:
        v.id = emit_implies(scalar_id(args[0]), scalar_id(args[1]));
        return v;
      case BuiltinOp::Lookup: {
        if (args[0].k != CValue::K::Vec) throw CompileError("'!' needs a vector operand");
        if (args[1].k != CValue::K::Index)
          throw CompileError("'!' needs a compile-time index (finite quantifiers expand)");
        GraphNode n;
        n.op = GraphOp::VecGet;
        n.operands = {args[0].id};
        n.iimm = args[1].index;
        v.id = emit(std::move(n));
        return v;
      }
      default:
        v.id = emit_comparison(op, scalar_id(args[0]), scalar_id(args[1]));
        return v;
    }
  }

  CValue compile_quantifier(const ExprPtr& e, const CEnv& env, bool is_forall) {
    CValue out;
    out.k = CValue::K::Scalar;
    if (classify_quantifier(e->annot) == QuantifierClass::Finite) {
      std::vector<CValue> elems;
      if (e->annot.is_index()) {
        for (int64_t i = 0; i < e->annot.size(); ++i) {
          CValue elem;
          elem.k = CValue::K::Index;
          elem.index = i;
          elems.push_back(elem);
        }
      } else {
        for (bool t : {true, false}) {
          CValue elem;
          elem.k = CValue::K::Scalar;
          elem.id = nconst(t ? g_.logic.top() : g_.logic.bottom());
          elems.push_back(elem);
        }
      }
      std::vector<int32_t> vals;
      if (g_.logic.tag == LogicTag::STL) {
        // Mirror the evaluator: the expansion flattens through an
        // and/or-rooted body into one M-ary node.
        std::vector<ExprPtr> leaves;
        flatten_chain(e->b, is_forall ? BuiltinOp::And : BuiltinOp::Or, leaves);
        for (const CValue& d : elems) {
          CEnv inner = cenv_push(env, d);
          for (auto& leaf : leaves) vals.push_back(scalar_id(compile(leaf, inner)));
        }
      } else {
        for (const CValue& d : elems)
          vals.push_back(scalar_id(compile(e->b, cenv_push(env, d))));
      }
      out.id = is_forall ? emit_fold_and(vals) : emit_fold_or(vals);
      return out;
    }
    int64_t dim = e->annot.is_real() ? 1 : e->annot.size();
    register_sampler(e->name, dim);
    GraphNode sv;
    sv.op = GraphOp::SampleVar;
    sv.name = e->name;
    sv.iimm = dim;
    int32_t svid = emit(std::move(sv));
    CValue binder;
    if (e->annot.is_real()) {
      binder.k = CValue::K::Scalar;
      binder.id = svid;
    } else {
      binder.k = CValue::K::Vec;
      binder.id = svid;
    }
    int32_t body = scalar_id(compile(e->b, cenv_push(env, binder)));
    GraphNode red;
    red.op = is_forall ? GraphOp::ReduceMin : GraphOp::ReduceMax;
    red.name = e->name;
    red.operands = {body};
    out.id = emit(std::move(red));
    return out;
  }

  void register_sampler(const std::string& name, int64_t dim) {
    for (auto& [n, d] : g_.samplers) {
      if (n == name) {
        if (d != dim) throw CompileError("sampler '" + name + "' used at two dimensions");
        return;
      }
    }
    g_.samplers.emplace_back(name, dim);
  }

  int32_t scalar_id(const CValue& v) {
    // SampleVar of dim 1 doubles as a scalar.
    if (v.k == CValue::K::Scalar) return v.id;
    throw CompileError("expected a scalar value at compile time");
  }

  ExprGraph g_;
};

}  // namespace

ExprGraph compile_spec(const SpecFile& spec, const Logic& L) {
  check_spec(spec);
  ExprPtr root = lower_for_logic(spec.root_expr(), L);
  Compiler cc(L);
  CValue f = cc.compile(root, nullptr);
  const LdlType* ty = &spec.root().type;
  std::vector<GraphInput> inputs;
  // Peel the root property's parameters into named graph inputs.
  while (f.k == CValue::K::Fun) {
    if (!ty->is_fun()) throw CompileError("root type/value arity mismatch");
    const LdlType& dom = ty->dom();
    GraphInput gi;
    gi.name = f.fun->name;
    for (auto& prev : inputs)
      if (prev.name == gi.name)
        throw CompileError("duplicate root parameter name '" + gi.name + "'");
    CValue arg;
    if (dom.is_real()) {
      gi.is_vec = false;
      gi.dim = 1;
      GraphNode n;
      n.op = GraphOp::Input;
      n.name = gi.name;
      arg.k = CValue::K::Scalar;
      arg.id = cc.emit(std::move(n));
    } else if (dom.is_vec()) {
      gi.is_vec = true;
      gi.dim = dom.size();
      GraphNode n;
      n.op = GraphOp::InputVec;
      n.name = gi.name;
      n.iimm = dom.size();
      arg.k = CValue::K::Vec;
      arg.id = cc.emit(std::move(n));
    } else {
      throw CompileError("root parameters must be Real or Vec, got " + dom.show());
    }
    inputs.push_back(gi);
    f = cc.apply(f, arg);
    ty = &ty->cod();
  }
  if (f.k != CValue::K::Scalar) throw CompileError("root did not compile to a truth value");
  ExprGraph g = std::move(cc).take();
  g.inputs = std::move(inputs);
  g.root = f.id;
  return g;
}

namespace {

std::string fmt_imm(double v) { return format_real(v); }

}  // namespace

std::string serialize_graph(const ExprGraph& g) {
  std::ostringstream out;
  out << "ldl-graph 1\n";
  out << "logic " << logic_name(g.logic.tag) << " yager-p " << fmt_imm(g.logic.yager_p)
      << " stl-nu " << fmt_imm(g.logic.stl_nu) << " neq-xi " << fmt_imm(g.logic.neq_xi)
      << " leq-signed " << (g.logic.leq_signed ? 1 : 0) << "\n";
  for (const GraphInput& in : g.inputs) {
    if (in.is_vec)
      out << "input " << in.name << " vec " << in.dim << "\n";
    else
      out << "input " << in.name << " real\n";
  }
  for (auto& [name, dim] : g.samplers) out << "sampler " << name << " " << dim << "\n";
  out << "root " << g.root << "\n";
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    out << "node " << i << " " << graph_op_name(n.op);
    switch (n.op) {
      case GraphOp::Const:
        out << " " << fmt_imm(n.imm);
        break;
      case GraphOp::Input:
        out << " " << n.name;
        break;
      case GraphOp::InputVec:
      case GraphOp::SampleVar:
        out << " " << n.name << " " << n.iimm;
        break;
      case GraphOp::PowC:
        out << " " << n.operands[0] << " " << fmt_imm(n.imm);
        break;
      case GraphOp::VecGet:
        out << " " << n.operands[0] << " " << n.iimm;
        break;
      case GraphOp::NetApply:
      case GraphOp::ReduceMin:
      case GraphOp::ReduceMax:
        out << " " << n.name;
        for (int32_t o : n.operands) out << " " << o;
        break;
      default:
        for (int32_t o : n.operands) out << " " << o;
        break;
    }
    out << "\n";
  }
  return out.str();
}

ExprGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  auto need = [&](const char* what) {
    if (!(in >> word)) throw IoError(std::string("graph: expected ") + what);
    return word;
  };
  if (need("header") != "ldl-graph") throw IoError("not an ldl-graph file");
  if (need("version") != "1") throw IoError("unsupported graph version");
  ExprGraph g;
  if (need("'logic'") != "logic") throw IoError("graph: expected logic line");
  g.logic = logic_from_name(need("logic name"));
  auto num = [&](const char* what) {
    std::string t = need(what);
    return std::stod(t);
  };
  if (need("yager-p") != "yager-p") throw IoError("graph: expected yager-p");
  g.logic.yager_p = num("yager-p value");
  if (need("stl-nu") != "stl-nu") throw IoError("graph: expected stl-nu");
  g.logic.stl_nu = num("stl-nu value");
  if (need("neq-xi") != "neq-xi") throw IoError("graph: expected neq-xi");
  g.logic.neq_xi = num("neq-xi value");
  if (need("leq-signed") != "leq-signed") throw IoError("graph: expected leq-signed");
  g.logic.leq_signed = num("leq-signed value") != 0;
  while (in >> word) {
    if (word == "input") {
      GraphInput gi;
      gi.name = need("input name");
      std::string k = need("input kind");
      if (k == "vec") {
        gi.is_vec = true;
        gi.dim = (int64_t)num("input dim");
      } else if (k == "real") {
        gi.is_vec = false;
        gi.dim = 1;
      } else {
        throw IoError("graph: bad input kind '" + k + "'");
      }
      g.inputs.push_back(std::move(gi));
    } else if (word == "sampler") {
      std::string name = need("sampler name");
      int64_t dim = (int64_t)num("sampler dim");
      g.samplers.emplace_back(name, dim);
    } else if (word == "root") {
      g.root = (int32_t)num("root id");
    } else if (word == "node") {
      int32_t id = (int32_t)num("node id");
      if (id != (int32_t)g.nodes.size()) throw IoError("graph: nodes out of order");
      std::string opname = need("op");
      GraphNode n;
      bool found = false;
      for (int o = 0; o <= (int)GraphOp::ReduceMax; ++o) {
        if (opname == graph_op_name((GraphOp)o)) {
          n.op = (GraphOp)o;
          found = true;
          break;
        }
      }
      if (!found) throw IoError("graph: unknown op '" + opname + "'");
      auto operand = [&](const char* what) {
        int32_t v = (int32_t)num(what);
        if (v < 0 || v >= id) throw IoError("graph: operand out of range");
        return v;
      };
      switch (n.op) {
        case GraphOp::Const:
          n.imm = num("const value");
          break;
        case GraphOp::Input:
          n.name = need("input name");
          break;
        case GraphOp::InputVec:
        case GraphOp::SampleVar:
          n.name = need("name");
          n.iimm = (int64_t)num("dim");
          break;
        case GraphOp::PowC:
          n.operands = {operand("operand")};
          n.imm = num("exponent");
          break;
        case GraphOp::VecGet:
          n.operands = {operand("operand")};
          n.iimm = (int64_t)num("index");
          break;
        case GraphOp::NetApply:
          n.name = need("network name");
          n.operands = {operand("operand")};
          break;
        case GraphOp::ReduceMin:
        case GraphOp::ReduceMax:
          n.name = need("var name");
          n.operands = {operand("body")};
          break;
        case GraphOp::Neg:
        case GraphOp::Abs:
        case GraphOp::Tanh:
        case GraphOp::Exp:
          n.operands = {operand("operand")};
          break;
        case GraphOp::IfZero:
        case GraphOp::IfInf:
          n.operands = {operand("c"), operand("a"), operand("b")};
          break;
        case GraphOp::Sign3:
          n.operands = {operand("c"), operand("a"), operand("b"), operand("d")};
          break;
        case GraphOp::VecMake: {
          // Count = iimm; emitted as plain operand list, recover from rest of line.
          // VecMake lines: node <id> vecmake <o1> <o2> ... ; read until newline.
          std::string rest;
          std::getline(in, rest);
          std::istringstream rs(rest);
          int32_t o;
          while (rs >> o) {
            if (o < 0 || o >= id) throw IoError("graph: operand out of range");
            n.operands.push_back(o);
          }
          n.iimm = (int64_t)n.operands.size();
          g.nodes.push_back(std::move(n));
          goto next_token;
        }
        default:
          n.operands = {operand("a"), operand("b")};
          break;
      }
      g.nodes.push_back(std::move(n));
    next_token:;
    } else {
      throw IoError("graph: unexpected token '" + word + "'");
    }
  }
  if (g.root < 0 || g.root >= (int32_t)g.nodes.size())
    throw IoError("graph: missing or invalid root");
  return g;
}

namespace {

struct Runtime {
  const ExprGraph& g;
  const GraphInputs& inputs;
  const std::map<std::string, DenseNetwork>& networks;
  const std::map<std::string, Distribution>& samplers;
  SamplingConfig cfg;

  std::vector<double> sval;
  std::vector<Eigen::VectorXd> vval;
  std::vector<char> computed;
  std::map<std::string, std::vector<double>> bound_samples;
  std::vector<std::vector<double>> argpoints;
  std::vector<std::vector<int32_t>> reduce_deps;  // per node id (reduces only)
  std::vector<int64_t>* signature = nullptr;

  Runtime(const ExprGraph& graph, const GraphInputs& in,
          const std::map<std::string, DenseNetwork>& nets,
          const std::map<std::string, Distribution>& samps, const SamplingConfig& c)
      : g(graph), inputs(in), networks(nets), samplers(samps), cfg(c) {
    size_t n = g.nodes.size();
    sval.assign(n, 0.0);
    vval.resize(n);
    computed.assign(n, 0);
    argpoints.resize(n);
    reduce_deps.resize(n);
    for (size_t i = 0; i < n; ++i) {
      if (g.nodes[i].op == GraphOp::ReduceMin || g.nodes[i].op == GraphOp::ReduceMax)
        reduce_deps[i] = dependents_of(g.nodes[i].name, g.nodes[i].operands[0]);
    }
  }

  std::vector<int32_t> dependents_of(const std::string& var, int32_t body_root) {
    std::vector<char> dep(g.nodes.size(), 0);
    std::vector<int32_t> out;
    for (int32_t i = 0; i <= body_root; ++i) {
      const GraphNode& n = g.nodes[i];
      bool d = n.op == GraphOp::SampleVar && n.name == var;
      for (int32_t o : n.operands) d = d || dep[o];
      dep[i] = d;
      if (d) out.push_back(i);
    }
    return out;
  }

  void mark_branch(int32_t id, int64_t code) {
    if (signature) signature->push_back(((int64_t)id << 3) | code);
  }

  bool is_vec_node(int32_t id) const {
    const GraphNode& n = g.nodes[id];
    switch (n.op) {
      case GraphOp::InputVec:
      case GraphOp::VecMake:
      case GraphOp::NetApply:
        return true;
      case GraphOp::SampleVar:
        return n.iimm > 1;
      default:
        return false;
    }
  }

  double scalar(int32_t id) {
    compute(id);
    return sval[id];
  }

  const Eigen::VectorXd& vec(int32_t id) {
    compute(id);
    return vval[id];
  }

  void invalidate(const std::vector<int32_t>& ids) {
    for (int32_t i : ids) computed[i] = 0;
  }

  void compute(int32_t id) {
    if (computed[id]) return;
    const GraphNode& n = g.nodes[id];
    auto S = [&](int k) { return scalar(n.operands[k]); };
    switch (n.op) {
      case GraphOp::Const:
        sval[id] = n.imm;
        break;
      case GraphOp::Input: {
        auto it = inputs.scalars.find(n.name);
        if (it == inputs.scalars.end()) throw EvalError("graph input '" + n.name + "' not bound");
        sval[id] = it->second;
        break;
      }
      case GraphOp::InputVec: {
        auto it = inputs.vectors.find(n.name);
        if (it == inputs.vectors.end()) throw EvalError("graph input '" + n.name + "' not bound");
        if (it->second.size() != n.iimm)
          throw EvalError("graph input '" + n.name + "' has the wrong dimension");
        vval[id] = it->second;
        break;
      }
      case GraphOp::SampleVar: {
        auto it = bound_samples.find(n.name);
        if (it == bound_samples.end())
          throw EvalError("sample variable '" + n.name + "' used outside its reducer");
        if (n.iimm > 1)
          vval[id] = Eigen::Map<const Eigen::VectorXd>(it->second.data(), it->second.size());
        else
          sval[id] = it->second[0];
        break;
      }
      case GraphOp::Add:
        sval[id] = S(0) + S(1);
        break;
      case GraphOp::Sub:
        sval[id] = S(0) - S(1);
        break;
      case GraphOp::Mul:
        sval[id] = S(0) * S(1);
        break;
      case GraphOp::MulAbsorb: {
        double a = S(0), b = S(1);
        bool absorb = (a == 0.0 || b == 0.0);
        mark_branch(id, absorb ? 1 : 0);
        sval[id] = kernel::mul_absorb(a, b);
        break;
      }
      case GraphOp::Neg:
        sval[id] = -S(0);
        break;
      case GraphOp::Div:
        sval[id] = S(0) / S(1);
        break;
      case GraphOp::Min: {
        double a = S(0), b = S(1);
        mark_branch(id, a < b ? 0 : 1);
        sval[id] = std::min(a, b);
        break;
      }
      case GraphOp::Max: {
        double a = S(0), b = S(1);
        mark_branch(id, a > b ? 0 : 1);
        sval[id] = std::max(a, b);
        break;
      }
      case GraphOp::Abs: {
        double a = S(0);
        mark_branch(id, a > 0 ? 0 : (a < 0 ? 1 : 2));
        sval[id] = std::fabs(a);
        break;
      }
      case GraphOp::Tanh:
        sval[id] = std::tanh(S(0));
        break;
      case GraphOp::Exp:
        sval[id] = std::exp(S(0));
        break;
      case GraphOp::PowC:
        sval[id] = std::pow(S(0), n.imm);
        break;
      case GraphOp::IndEq: {
        bool eq = S(0) == S(1);
        mark_branch(id, eq ? 1 : 0);
        sval[id] = eq ? 1.0 : 0.0;
        break;
      }
      case GraphOp::IfZero: {
        bool z = S(0) == 0.0;
        mark_branch(id, z ? 1 : 0);
        sval[id] = z ? S(1) : S(2);
        break;
      }
      case GraphOp::IfInf: {
        bool i = std::isinf(S(0));
        mark_branch(id, i ? 1 : 0);
        sval[id] = i ? S(1) : S(2);
        break;
      }
      case GraphOp::Sign3: {
        double c = S(0);
        int64_t br = c < 0 ? 0 : (c == 0 ? 1 : 2);
        mark_branch(id, br);
        sval[id] = br == 0 ? S(1) : (br == 1 ? S(2) : S(3));
        break;
      }
      case GraphOp::VecMake: {
        Eigen::VectorXd v(n.operands.size());
        for (size_t k = 0; k < n.operands.size(); ++k) v[k] = scalar(n.operands[k]);
        vval[id] = std::move(v);
        break;
      }
      case GraphOp::VecGet: {
        const Eigen::VectorXd& v = vec(n.operands[0]);
        if (n.iimm < 0 || n.iimm >= v.size()) throw EvalError("vecget out of range");
        sval[id] = v[n.iimm];
        break;
      }
      case GraphOp::NetApply: {
        auto it = networks.find(n.name);
        if (it == networks.end())
          throw EvalError("no implementation bound for network '" + n.name + "'");
        vval[id] = forward(it->second, vec(n.operands[0]));
        break;
      }
      case GraphOp::ReduceMin:
      case GraphOp::ReduceMax: {
        auto it = samplers.find(n.name);
        if (it == samplers.end()) throw MissingSamplerError(n.name);
        const Distribution& dist = it->second;
        bool maximize = n.op == GraphOp::ReduceMax;
        ExtremumResult r = sample_extremum(
            dist, cfg, n.name, maximize, [&](std::span<const double> x) {
              bound_samples[n.name] = std::vector<double>(x.begin(), x.end());
              invalidate(reduce_deps[id]);
              return scalar(n.operands[0]);
            });
        argpoints[id] = r.argpoint;
        sval[id] = r.value;
        break;
      }
    }
    computed[id] = 1;
  }
};

}  // namespace

double graph_eval(const ExprGraph& g, const GraphInputs& in,
                  const std::map<std::string, DenseNetwork>& networks,
                  const std::map<std::string, Distribution>& samplers,
                  const SamplingConfig& cfg) {
  Runtime rt(g, in, networks, samplers, cfg);
  return rt.scalar(g.root);
}

std::vector<int64_t> graph_branch_signature(const ExprGraph& g, const GraphInputs& in,
                                            const std::map<std::string, DenseNetwork>& networks,
                                            const std::map<std::string, Distribution>& samplers,
                                            const SamplingConfig& cfg) {
  Runtime rt(g, in, networks, samplers, cfg);
  std::vector<int64_t> sig;
  rt.signature = &sig;
  (void)rt.scalar(g.root);
  return sig;
}

GraphGradients graph_backward(const ExprGraph& g, const GraphInputs& in,
                              const std::map<std::string, DenseNetwork>& networks,
                              const std::map<std::string, Distribution>& samplers,
                              const SamplingConfig& cfg) {
  Runtime rt(g, in, networks, samplers, cfg);
  GraphGradients out;
  out.value = rt.scalar(g.root);

  size_t n = g.nodes.size();
  std::vector<double> cot(n, 0.0);
  std::vector<Eigen::VectorXd> cotv(n);
  auto add_vec_cot = [&](int32_t id, const Eigen::VectorXd& v) {
    if (cotv[id].size() == 0) cotv[id] = Eigen::VectorXd::Zero(v.size());
    cotv[id] += v;
  };
  cot[g.root] = 1.0;

  for (int32_t id = (int32_t)n - 1; id >= 0; --id) {
    const GraphNode& node = g.nodes[id];
    bool is_vec = rt.is_vec_node(id);
    if (!is_vec && cot[id] == 0.0) continue;
    if (is_vec && cotv[id].size() == 0) continue;
    double c = cot[id];
    switch (node.op) {
      case GraphOp::Const:
      case GraphOp::SampleVar:
        break;
      case GraphOp::Input:
        out.input_scalars[node.name] += c;
        break;
      case GraphOp::InputVec: {
        auto [it, fresh] = out.input_vectors.try_emplace(node.name, cotv[id]);
        if (!fresh) it->second += cotv[id];
        break;
      }
      case GraphOp::Add:
        cot[node.operands[0]] += c;
        cot[node.operands[1]] += c;
        break;
      case GraphOp::Sub:
        cot[node.operands[0]] += c;
        cot[node.operands[1]] -= c;
        break;
      case GraphOp::Mul:
        cot[node.operands[0]] += c * rt.sval[node.operands[1]];
        cot[node.operands[1]] += c * rt.sval[node.operands[0]];
        break;
      case GraphOp::MulAbsorb: {
        double a = rt.sval[node.operands[0]], b = rt.sval[node.operands[1]];
        if (!(a == 0.0 && std::isinf(b))) cot[node.operands[0]] += c * b;
        if (!(b == 0.0 && std::isinf(a))) cot[node.operands[1]] += c * a;
        break;
      }
      case GraphOp::Neg:
        cot[node.operands[0]] -= c;
        break;
      case GraphOp::Div: {
        double a = rt.sval[node.operands[0]], b = rt.sval[node.operands[1]];
        cot[node.operands[0]] += c / b;
        cot[node.operands[1]] += -c * a / (b * b);
        break;
      }
      case GraphOp::Min: {
        double a = rt.sval[node.operands[0]], b = rt.sval[node.operands[1]];
        cot[node.operands[a < b ? 0 : 1]] += c;
        break;
      }
      case GraphOp::Max: {
        double a = rt.sval[node.operands[0]], b = rt.sval[node.operands[1]];
        cot[node.operands[a > b ? 0 : 1]] += c;
        break;
      }
      case GraphOp::Abs: {
        double a = rt.sval[node.operands[0]];
        cot[node.operands[0]] += c * (a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0));
        break;
      }
      case GraphOp::Tanh: {
        double t = rt.sval[id];
        cot[node.operands[0]] += c * (1.0 - t * t);
        break;
      }
      case GraphOp::Exp:
        cot[node.operands[0]] += c * rt.sval[id];
        break;
      case GraphOp::PowC: {
        double a = rt.sval[node.operands[0]];
        cot[node.operands[0]] += c * node.imm * std::pow(a, node.imm - 1.0);
        break;
      }
      case GraphOp::IndEq:
        break;
      case GraphOp::IfZero: {
        bool z = rt.sval[node.operands[0]] == 0.0;
        cot[node.operands[z ? 1 : 2]] += c;
        break;
      }
      case GraphOp::IfInf: {
        bool i = std::isinf(rt.sval[node.operands[0]]);
        cot[node.operands[i ? 1 : 2]] += c;
        break;
      }
      case GraphOp::Sign3: {
        double s = rt.sval[node.operands[0]];
        int k = s < 0 ? 1 : (s == 0 ? 2 : 3);
        cot[node.operands[k]] += c;
        break;
      }
      case GraphOp::VecMake:
        for (size_t k = 0; k < node.operands.size(); ++k)
          cot[node.operands[k]] += cotv[id][k];
        break;
      case GraphOp::VecGet: {
        int32_t src = node.operands[0];
        if (cotv[src].size() == 0)
          cotv[src] = Eigen::VectorXd::Zero(rt.vval[src].size());
        cotv[src][node.iimm] += c;
        break;
      }
      case GraphOp::NetApply: {
        const DenseNetwork& net = networks.at(node.name);
        ForwardTrace tr = forward_trace(net, rt.vval[node.operands[0]]);
        NetGradients ng = backprop(net, tr, cotv[id]);
        auto [it, fresh] = out.networks.try_emplace(node.name, NetGradients::zeros_like(net));
        it->second.accumulate(ng);
        add_vec_cot(node.operands[0], ng.dx);
        break;
      }
      case GraphOp::ReduceMin:
      case GraphOp::ReduceMax: {
        // Pin the winning sample and refresh the body's values (this
        // also refreshes nested reducers' argpoints), then flow the
        // cotangent through the winner only.
        rt.bound_samples[node.name] = rt.argpoints[id];
        rt.invalidate(rt.reduce_deps[id]);
        (void)rt.scalar(node.operands[0]);
        cot[node.operands[0]] += c;
        break;
      }
    }
  }
  return out;
}

}  // namespace ldl
