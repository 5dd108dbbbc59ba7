#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "ldl/eval.hpp"
#include "ldl/logics.hpp"
#include "ldl/netio.hpp"
#include "ldl/parser.hpp"
#include "ldl/sampling.hpp"

namespace ldl {

// Lowered operation set. Logic connectives are resolved to arithmetic
// here; only quantifiers over infinite domains survive, as reducers
// over a sampler axis.
enum class GraphOp {
  Const,
  Input,      // named scalar parameter
  InputVec,   // named vector parameter (dim in iimm)
  SampleVar,  // bound by the enclosing reduce (dim in iimm)
  Add,
  Sub,
  Mul,
  MulAbsorb,  // exact zero absorbs infinity (DL2 disjunction)
  Neg,
  Div,
  Min,
  Max,
  Abs,
  Tanh,
  Exp,
  PowC,   // operand ^ imm
  IndEq,  // [a == b]
  IfZero,  // operands c,a,b : c == 0 ? a : b
  IfInf,   // operands c,a,b : isinf(c) ? a : b
  Sign3,   // operands c,a,b,d : c < 0 ? a : (c == 0 ? b : d)
  VecMake,
  VecGet,    // operand vec, element iimm
  NetApply,  // named network, vector operand
  ReduceMin,  // named sampler var; operands[0] = body root
  ReduceMax
};

const char* graph_op_name(GraphOp op);

struct GraphNode {
  GraphOp op = GraphOp::Const;
  double imm = 0.0;
  int64_t iimm = 0;
  std::string name;
  std::vector<int32_t> operands;
};

struct GraphInput {
  std::string name;
  bool is_vec = false;
  int64_t dim = 1;
};

// Topologically ordered DAG: every operand precedes its user.
struct ExprGraph {
  Logic logic;
  std::vector<GraphNode> nodes;
  int32_t root = -1;
  std::vector<GraphInput> inputs;
  std::vector<std::pair<std::string, int64_t>> samplers;  // var -> dim
};

struct CompileError : std::runtime_error {
  explicit CompileError(std::string m) : std::runtime_error(std::move(m)) {}
};

// Lowers the typechecked spec root under logic L: lets/lambdas are
// normalized away, DL2 negations pushed, finite quantifiers expanded,
// connectives and comparisons resolved to arithmetic. Root parameters
// become graph inputs in order.
ExprGraph compile_spec(const SpecFile& spec, const Logic& L);

std::string serialize_graph(const ExprGraph& g);
ExprGraph parse_graph(const std::string& text);

struct GraphInputs {
  std::map<std::string, double> scalars;
  std::map<std::string, Eigen::VectorXd> vectors;
};

// Evaluates the graph. Sample draws use the same per-variable streams
// as the direct evaluator, so results agree exactly.
double graph_eval(const ExprGraph& g, const GraphInputs& in,
                  const std::map<std::string, DenseNetwork>& networks,
                  const std::map<std::string, Distribution>& samplers,
                  const SamplingConfig& cfg);

struct GraphGradients {
  double value = 0.0;
  std::map<std::string, NetGradients> networks;
  std::map<std::string, double> input_scalars;
  std::map<std::string, Eigen::VectorXd> input_vectors;
};

// Reverse pass. Min/max/abs take the attaining-branch subgradient (ties
// route to the second operand, 0 at abs kinks); reducers differentiate
// through the winning sample only.
GraphGradients graph_backward(const ExprGraph& g, const GraphInputs& in,
                              const std::map<std::string, DenseNetwork>& networks,
                              const std::map<std::string, Distribution>& samplers,
                              const SamplingConfig& cfg);

// Branch signature of one evaluation: which side every min/max/abs/
// select took. Two evaluations with different signatures bracket a kink.
std::vector<int64_t> graph_branch_signature(const ExprGraph& g, const GraphInputs& in,
                                            const std::map<std::string, DenseNetwork>& networks,
                                            const std::map<std::string, Distribution>& samplers,
                                            const SamplingConfig& cfg);

}  // namespace ldl
