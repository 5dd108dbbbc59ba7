#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ldl/eval.hpp"
#include "ldl/graph.hpp"
#include "ldl/netio.hpp"
#include "ldl/parser.hpp"
#include "ldl/properties.hpp"
#include "ldl/trainer.hpp"
#include "ldl/typecheck.hpp"

using nlohmann::json;

namespace {

// Exit codes: 1 parse, 2 type, 3 I/O, 4 evaluation.
constexpr int kExitParse = 1;
constexpr int kExitType = 2;
constexpr int kExitIo = 3;
constexpr int kExitEval = 4;

struct LogicFlags {
  std::string name = "godel";
  double yager_p = 2.0;
  double stl_nu = 1.0;
  double neq_xi = 1.0;
  bool leq_signed = false;

  ldl::Logic build() const {
    ldl::Logic L = ldl::logic_from_name(name);
    if (yager_p < 1.0) throw std::invalid_argument("--yager-p must be >= 1");
    if (stl_nu <= 0.0) throw std::invalid_argument("--stl-nu must be > 0");
    if (neq_xi <= 0.0) throw std::invalid_argument("--neq-xi must be > 0");
    L.yager_p = yager_p;
    L.stl_nu = stl_nu;
    L.neq_xi = neq_xi;
    L.leq_signed = leq_signed;
    return L;
  }
};

void add_logic_flags(CLI::App* cmd, LogicFlags& lf) {
  cmd->add_option("--logic", lf.name, "dl2|godel|lukasiewicz|yager|product|stl")
      ->default_val("godel");
  cmd->add_option("--yager-p", lf.yager_p, "Yager p parameter (>= 1)");
  cmd->add_option("--stl-nu", lf.stl_nu, "STL nu parameter (> 0)");
  cmd->add_option("--neq-xi", lf.neq_xi, "!= penalty constant (> 0)");
  cmd->add_flag("--leq-signed", lf.leq_signed,
                "use the order-sensitive fuzzy <= (tanh(a-b) instead of tanh|a-b|)");
}

std::map<std::string, ldl::DenseNetwork> load_networks(
    const std::vector<std::string>& specs, const ldl::SpecFile& spec) {
  std::map<std::string, ldl::DenseNetwork> nets;
  for (const std::string& s : specs) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ldl::IoError("--net expects name=path, got '" + s + "'");
    std::string name = s.substr(0, eq);
    ldl::DenseNetwork net = ldl::load_network(s.substr(eq + 1));
    if (!spec.networks.contains(name))
      throw ldl::IoError("network '" + name + "' is not declared by the spec");
    auto [m, n] = spec.networks.arity(name);
    if (net.input_dim != m || net.output_dim != n)
      throw ldl::IoError("network '" + name + "' has shape (" +
                         std::to_string(net.input_dim) + "," +
                         std::to_string(net.output_dim) + "), spec declares (" +
                         std::to_string(m) + "," + std::to_string(n) + ")");
    nets.emplace(std::move(name), std::move(net));
  }
  return nets;
}

json span_json(ldl::Span s) { return json{{"line", s.line}, {"col", s.col}}; }

int report_error(const char* code, const std::string& msg, ldl::Span span, bool json_errors,
                 int exit_code) {
  if (json_errors) {
    json j{{"code", code}, {"message", msg}, {"span", span_json(span)}};
    std::cerr << j.dump() << "\n";
  } else {
    if (span.line > 0)
      std::cerr << "error[" << code << "] at " << span.line << ":" << span.col << ": " << msg
                << "\n";
    else
      std::cerr << "error[" << code << "]: " << msg << "\n";
  }
  return exit_code;
}

int cmd_check(const std::string& spec_path, bool json_errors) {
  std::ifstream probe(spec_path);
  if (!probe) return report_error("io", "cannot open file: " + spec_path, {}, json_errors, kExitIo);
  try {
    ldl::SpecFile spec = ldl::parse_file(spec_path);
    ldl::check_spec(spec);
    std::cout << "ok: " << spec.definitions.size() << " definition(s), root '"
              << spec.root().name << "' : " << spec.root().type.show() << "\n";
    return 0;
  } catch (const ldl::ParseError& e) {
    return report_error("parse", e.what(), e.span, json_errors, kExitParse);
  } catch (const ldl::TypeError& e) {
    return report_error(ldl::type_error_code_name(e.code), e.what(), e.span, json_errors,
                        kExitType);
  } catch (const std::exception& e) {
    return report_error("io", e.what(), {}, json_errors, kExitIo);
  }
}

int cmd_eval(const std::string& spec_path, const std::string& ctx_path,
             const std::vector<std::string>& net_args, const LogicFlags& lf,
             int64_t samples, uint64_t seed, int64_t refine, bool trace, bool json_errors) {
  try {
    ldl::SpecFile spec = ldl::parse_file(spec_path);
    ldl::check_spec(spec);
    ldl::Logic L = lf.build();
    ldl::ContextFile ctx = ldl::load_context(ctx_path);
    auto nets = load_networks(net_args, spec);
    ldl::ExprGraph g = ldl::compile_spec(spec, L);
    ldl::GraphInputs in;
    for (const ldl::GraphInput& gi : g.inputs) {
      auto it = ctx.bindings.find(gi.name);
      if (it == ctx.bindings.end())
        throw ldl::EvalError("root parameter '" + gi.name + "' has no binding in " + ctx_path);
      if (gi.is_vec) {
        if (!it->second.is_vec || (int64_t)it->second.vec.size() != gi.dim)
          throw ldl::EvalError("binding '" + gi.name + "' has the wrong shape");
        in.vectors[gi.name] = Eigen::Map<const Eigen::VectorXd>(
            it->second.vec.data(), (int64_t)it->second.vec.size());
      } else {
        if (it->second.is_vec)
          throw ldl::EvalError("binding '" + gi.name + "' should be a scalar");
        in.scalars[gi.name] = it->second.scalar;
      }
    }
    ldl::SamplingConfig sc;
    sc.sample_count = samples;
    sc.seed = seed;
    sc.refinement_steps = refine;
    double truth = ldl::graph_eval(g, in, nets, ctx.samplers, sc);
    double penalty = ldl::penalty_from_truth(L, truth);
    if (trace) {
      // Re-run node by node and print the final value of every node.
      for (size_t i = 0; i < g.nodes.size(); ++i) {
        const ldl::GraphNode& n = g.nodes[i];
        std::cerr << "node " << i << " " << ldl::graph_op_name(n.op);
        if (!n.name.empty()) std::cerr << " " << n.name;
        std::cerr << "\n";
      }
      std::cerr << "truth value: " << ldl::format_real(truth) << "\n";
    }
    std::printf("%.17g\n", penalty);
    return 0;
  } catch (const ldl::ParseError& e) {
    return report_error("parse", e.what(), e.span, json_errors, kExitParse);
  } catch (const ldl::TypeError& e) {
    return report_error(ldl::type_error_code_name(e.code), e.what(), e.span, json_errors,
                        kExitType);
  } catch (const ldl::IoError& e) {
    return report_error("io", e.what(), {}, json_errors, kExitIo);
  } catch (const std::exception& e) {
    return report_error("eval", e.what(), {}, json_errors, kExitEval);
  }
}

int cmd_compile(const std::string& spec_path, const LogicFlags& lf, const std::string& out,
                bool json_errors) {
  try {
    ldl::SpecFile spec = ldl::parse_file(spec_path);
    ldl::Logic L = lf.build();
    ldl::ExprGraph g = ldl::compile_spec(spec, L);
    std::string text = ldl::serialize_graph(g);
    if (out.empty() || out == "-") {
      std::cout << text;
    } else {
      std::ofstream os(out);
      if (!os) throw ldl::IoError("cannot write " + out);
      os << text;
    }
    return 0;
  } catch (const ldl::ParseError& e) {
    return report_error("parse", e.what(), e.span, json_errors, kExitParse);
  } catch (const ldl::TypeError& e) {
    return report_error(ldl::type_error_code_name(e.code), e.what(), e.span, json_errors,
                        kExitType);
  } catch (const ldl::CompileError& e) {
    return report_error("eval", e.what(), {}, json_errors, kExitEval);
  } catch (const std::exception& e) {
    return report_error("io", e.what(), {}, json_errors, kExitIo);
  }
}

json verdict_json(const ldl::MatrixEntry& e) {
  json j;
  j["logic"] = ldl::logic_name(e.verdict.logic);
  j["property"] = ldl::prop_name(e.verdict.prop);
  j["verdict"] = e.verdict.holds ? "holds" : "fails";
  j["vacuous"] = e.verdict.vacuous;
  j["expected"] = e.expected_holds ? "holds" : "fails";
  j["matches"] = e.matches;
  j["trials"] = e.verdict.trials;
  j["tolerance"] = e.verdict.tolerance;
  if (!e.verdict.note.empty()) j["note"] = e.verdict.note;
  if (e.verdict.witness) {
    j["witness"] = json{{"description", e.verdict.witness->description},
                        {"values", e.verdict.witness->values},
                        {"magnitude", e.verdict.witness->magnitude}};
  }
  return j;
}

int cmd_props(const std::string& logic, bool all, int64_t trials, uint64_t seed,
              const std::string& report, double tol) {
  try {
    std::vector<ldl::MatrixEntry> entries = ldl::check_matrix(trials, seed, tol);
    if (!all) {
      ldl::LogicTag want = ldl::logic_from_name(logic).tag;
      std::erase_if(entries, [&](const ldl::MatrixEntry& e) { return e.verdict.logic != want; });
    }
    bool all_match = true;
    for (const auto& e : entries) {
      all_match = all_match && e.matches;
      if (report == "structured") {
        std::cout << verdict_json(e).dump() << "\n";
      } else {
        std::printf("%-12s %-26s %-6s expected %-6s %s%s\n",
                    ldl::logic_name(e.verdict.logic), ldl::prop_name(e.verdict.prop),
                    e.verdict.holds ? "holds" : "fails",
                    e.expected_holds ? "holds" : "fails",
                    e.matches ? "MATCH" : "MISMATCH",
                    e.verdict.vacuous ? " (vacuous)" : "");
      }
    }
    if (report != "structured")
      std::printf("%s\n", all_match ? "all entries match the published matrix"
                                    : "MISMATCHES against the published matrix");
    return all_match ? 0 : kExitEval;
  } catch (const std::exception& e) {
    return report_error("eval", e.what(), {}, false, kExitEval);
  }
}

int cmd_train(const std::string& spec_path, const std::vector<std::string>& net_args,
              const std::string& data_path, const std::string& ctx_path,
              const LogicFlags& lf, const ldl::TrainConfig& cfg_in,
              const std::string& report_path, bool json_errors) {
  try {
    ldl::SpecFile spec = ldl::parse_file(spec_path);
    ldl::check_spec(spec);
    ldl::Logic L = lf.build();
    auto nets = load_networks(net_args, spec);
    if (nets.size() != 1)
      throw ldl::IoError("train expects exactly one --net name=path");
    ldl::Dataset data = ldl::load_dataset(data_path);
    ldl::ContextFile ctx = ldl::load_context(ctx_path);
    ldl::DenseNetwork net = nets.begin()->second;
    ldl::TrainReport rep = ldl::train(spec, net, data, ctx, L, cfg_in);
    if (!report_path.empty()) ldl::save_report(rep, report_path);
    for (size_t e = 0; e < rep.epochs.size(); ++e) {
      const ldl::EpochStats& s = rep.epochs[e];
      std::printf(
          "epoch %zu total %.6f ce %.6f dl %.6f acc %.4f constraint-sat %.4f\n", e,
          s.total_loss, s.ce_loss, s.dl_loss, s.accuracy, s.constraint_satisfaction);
    }
    return 0;
  } catch (const ldl::ParseError& e) {
    return report_error("parse", e.what(), e.span, json_errors, kExitParse);
  } catch (const ldl::TypeError& e) {
    return report_error(ldl::type_error_code_name(e.code), e.what(), e.span, json_errors,
                        kExitType);
  } catch (const ldl::IoError& e) {
    return report_error("io", e.what(), {}, json_errors, kExitIo);
  } catch (const std::exception& e) {
    return report_error("eval", e.what(), {}, json_errors, kExitEval);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ldl: typechecker, loss-function compiler and property lab for the LDL "
               "specification language"};
  app.require_subcommand(1);

  std::string spec_path, ctx_path, data_path, out_path, report_path;
  std::vector<std::string> net_args;
  bool json_errors = false, all_logics = false, trace = false;
  int64_t samples = 100, refine = 0, trials = 1000;
  uint64_t seed = 0;
  double tol = 1e-3;
  std::string report_kind = "text";
  LogicFlags lf;
  ldl::TrainConfig tcfg;

  CLI::App* check = app.add_subcommand("check", "parse and typecheck a spec");
  check->add_option("--spec", spec_path, ".ldl file")->required();
  check->add_flag("--json-errors", json_errors, "machine-readable errors on stderr");

  CLI::App* ev = app.add_subcommand("eval", "evaluate the spec's loss under a logic");
  ev->add_option("--spec", spec_path, ".ldl file")->required();
  ev->add_option("--ctx", ctx_path, ".ctx context file")->required();
  ev->add_option("--net", net_args, "name=path network bindings");
  add_logic_flags(ev, lf);
  ev->add_option("--samples", samples, "samples per infinite quantifier");
  ev->add_option("--seed", seed, "sampling seed");
  ev->add_option("--refine", refine, "coordinate-descent polish rounds");
  ev->add_flag("--trace", trace, "print per-node debug info to stderr");
  ev->add_flag("--json-errors", json_errors);

  CLI::App* comp = app.add_subcommand("compile", "emit the lowered expression graph");
  comp->add_option("--spec", spec_path, ".ldl file")->required();
  add_logic_flags(comp, lf);
  comp->add_option("-o,--out", out_path, "output path (default stdout)");
  comp->add_flag("--json-errors", json_errors);

  CLI::App* props = app.add_subcommand("props", "check the logic/property matrix");
  props->add_option("--logic", lf.name, "restrict to one logic");
  props->add_flag("--all", all_logics, "check all six logics");
  props->add_option("--trials", trials, "trials per property");
  props->add_option("--seed", seed, "trial seed");
  props->add_option("--tol", tol, "algebraic-law tolerance");
  props->add_option("--report", report_kind, "text|structured");

  CLI::App* tr = app.add_subcommand("train", "gradient descent on alpha*CE + beta*DL");
  tr->add_option("--spec", spec_path, ".ldl file")->required();
  tr->add_option("--net", net_args, "name=path network binding")->required();
  tr->add_option("--data", data_path, ".csv dataset")->required();
  tr->add_option("--ctx", ctx_path, ".ctx context file")->required();
  add_logic_flags(tr, lf);
  tr->add_option("--alpha", tcfg.alpha, "cross-entropy weight");
  tr->add_option("--beta", tcfg.beta, "DL loss weight");
  tr->add_option("--epochs", tcfg.epochs, "epochs");
  tr->add_option("--batch", tcfg.batch_size, "batch size");
  tr->add_option("--lr", tcfg.lr, "learning rate");
  tr->add_option("--seed", tcfg.seed, "training seed");
  tr->add_option("--samples", tcfg.quant_samples, "quantifier samples per loss eval");
  tr->add_option("--eval-samples", tcfg.eval_samples, "constraint-satisfaction probe count");
  tr->add_option("--refine", tcfg.refine, "quantifier polish rounds");
  tr->add_option("--report", report_path, "write per-epoch stats to this file");
  tr->add_flag("--json-errors", json_errors);

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return cmd_check(spec_path, json_errors);
  if (ev->parsed())
    return cmd_eval(spec_path, ctx_path, net_args, lf, samples, seed, refine, trace,
                    json_errors);
  if (comp->parsed()) return cmd_compile(spec_path, lf, out_path, json_errors);
  if (props->parsed()) return cmd_props(lf.name, all_logics, trials, seed, report_kind, tol);
  if (tr->parsed())
    return cmd_train(spec_path, net_args, data_path, ctx_path, lf, tcfg, report_path,
                     json_errors);
  return 0;
}
