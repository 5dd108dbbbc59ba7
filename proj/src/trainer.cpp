#include "ldl/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "ldl/eval.hpp"
#include "ldl/typecheck.hpp"

namespace ldl {

double cross_entropy(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw EvalError("cross_entropy: dimension mismatch");
  double loss = 0.0;
  for (int64_t i = 0; i < pred.size(); ++i)
    loss -= truth[i] * std::log(std::max(pred[i], 1e-12));
  return loss;
}

Dataset make_synthetic_dataset(uint64_t seed, int64_t n_points, double margin) {
  if (margin <= 0) throw std::invalid_argument("margin must be positive");
  Rng rng(derive_seed(seed, "blobs"));
  const double radius = 1.0;
  const double sigma = 0.5;
  double cx = margin / 2.0 + radius;
  Dataset ds;
  ds.input_dim = 2;
  ds.output_dim = 2;
  for (int64_t i = 0; i < n_points; ++i) {
    int cls = (int)(i % 2);
    double cx_i = cls == 0 ? -cx : cx;
    Eigen::VectorXd x(2);
    do {
      x[0] = cx_i + sigma * rng.gaussian();
      x[1] = sigma * rng.gaussian();
    } while (std::max(std::fabs(x[0] - cx_i), std::fabs(x[1])) > radius);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
    y[cls] = 1.0;
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(std::move(y));
  }
  return ds;
}

namespace {

struct BoundArgs {
  GraphInputs inputs;        // all parameters except the data slot
  std::string data_param;    // the one Vec parameter fed from the dataset
};

// Matches the spec's root parameters against ctx bindings; exactly one
// Vec parameter of the data dimension must remain unbound.
BoundArgs resolve_args(const ExprGraph& g, const ContextFile& ctx, int64_t data_dim) {
  BoundArgs out;
  for (const GraphInput& gi : g.inputs) {
    auto it = ctx.bindings.find(gi.name);
    if (it != ctx.bindings.end()) {
      if (gi.is_vec) {
        if (!it->second.is_vec || (int64_t)it->second.vec.size() != gi.dim)
          throw EvalError("binding '" + gi.name + "' has the wrong shape");
        out.inputs.vectors[gi.name] = Eigen::Map<const Eigen::VectorXd>(
            it->second.vec.data(), (int64_t)it->second.vec.size());
      } else {
        if (it->second.is_vec) throw EvalError("binding '" + gi.name + "' should be scalar");
        out.inputs.scalars[gi.name] = it->second.scalar;
      }
      continue;
    }
    if (gi.is_vec && gi.dim == data_dim && out.data_param.empty()) {
      out.data_param = gi.name;
      continue;
    }
    throw EvalError("root parameter '" + gi.name + "' is not bound by the context file");
  }
  if (out.data_param.empty())
    throw EvalError("no unbound Vec parameter of the data dimension to feed from the dataset");
  return out;
}

double accuracy_of(const DenseNetwork& net, const Dataset& ds) {
  int64_t hits = 0;
  for (size_t i = 0; i < ds.size(); ++i) {
    Eigen::VectorXd p = forward(net, ds.inputs[i]);
    int64_t pi, yi;
    p.maxCoeff(&pi);
    ds.labels[i].maxCoeff(&yi);
    if (pi == yi) ++hits;
  }
  return (double)hits / (double)ds.size();
}

}  // namespace

bool property_holds_classically(const SpecFile& spec, const DenseNetwork& net,
                                const ContextFile& ctx, const Eigen::VectorXd& point,
                                int64_t samples, uint64_t seed) {
  SemanticContext sc;
  sc.logic = Logic::make(LogicTag::Godel);  // unused by the classical path
  sc.sampling.sample_count = samples;
  sc.sampling.seed = seed;
  sc.samplers = ctx.samplers;
  for (auto& [name, _] : spec.networks.all()) {
    (void)_;
    sc.networks.emplace(name, net);
  }
  // Build the applied root: parameters come from ctx bindings, the one
  // remaining Vec parameter takes the probe point as a literal.
  ExprPtr applied = spec.root_expr();
  const LdlType* ty = &spec.root().type;
  bool used_point = false;
  ExprPtr lam_walk = spec.root().body;
  while (ty->is_fun()) {
    const LdlType& dom = ty->dom();
    if (lam_walk->kind != ExprKind::Lam)
      throw EvalError("root property is not a lambda spine");
    const std::string& pname = lam_walk->name;
    ExprPtr arg;
    auto it = ctx.bindings.find(pname);
    if (it != ctx.bindings.end()) {
      if (dom.is_real() && !it->second.is_vec) {
        arg = real_const(it->second.scalar);
      } else if (dom.is_vec() && it->second.is_vec &&
                 (int64_t)it->second.vec.size() == dom.size()) {
        std::vector<ExprPtr> elems;
        for (double v : it->second.vec) elems.push_back(real_const(v));
        arg = vec_lit(std::move(elems));
      } else {
        throw EvalError("binding '" + pname + "' has the wrong shape");
      }
    } else if (dom.is_vec() && dom.size() == point.size() && !used_point) {
      std::vector<ExprPtr> elems;
      for (int64_t i = 0; i < point.size(); ++i) elems.push_back(real_const(point[i]));
      arg = vec_lit(std::move(elems));
      used_point = true;
    } else {
      throw EvalError("root parameter '" + pname + "' is not bound");
    }
    applied = app(applied, arg);
    lam_walk = lam_walk->b;
    ty = &ty->cod();
  }
  if (!used_point) throw EvalError("probe point was not consumed by any parameter");
  return eval_classical(applied, sc);
}

TrainReport train(const SpecFile& spec, DenseNetwork& net, const Dataset& data,
                  const ContextFile& ctx, const Logic& logic, const TrainConfig& cfg) {
  if (cfg.alpha + cfg.beta <= 0) throw std::invalid_argument("alpha + beta must be > 0");
  if (cfg.alpha > 0 && net.layers.back().act != Activation::Softmax)
    throw EvalError("cross-entropy training needs a softmax final layer");
  check_spec(spec);
  ExprGraph graph = compile_spec(spec, logic);
  BoundArgs bound = resolve_args(graph, ctx, data.input_dim);

  TrainReport report;
  int64_t n = (int64_t)data.size();
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  auto dl_penalty_batchpoint = [&](const Eigen::VectorXd& x, uint64_t batch_seed,
                                   GraphGradients* grads) {
    GraphInputs in = bound.inputs;
    in.vectors[bound.data_param] = x;
    std::map<std::string, DenseNetwork> nets;
    for (auto& [name, _] : spec.networks.all()) {
      (void)_;
      nets.emplace(name, net);
    }
    SamplingConfig sc;
    sc.sample_count = cfg.quant_samples;
    sc.seed = batch_seed;
    sc.refinement_steps = cfg.refine;
    if (grads) {
      *grads = graph_backward(graph, in, nets, ctx.samplers, sc);
      return penalty_from_truth(logic, grads->value);
    }
    return penalty_from_truth(logic, graph_eval(graph, in, nets, ctx.samplers, sc));
  };

  auto epoch_stats = [&](int64_t epoch) {
    EpochStats st;
    for (size_t i = 0; i < data.size(); ++i) {
      Eigen::VectorXd p = forward(net, data.inputs[i]);
      st.ce_loss += cross_entropy(p, data.labels[i]);
    }
    st.ce_loss /= (double)data.size();
    uint64_t eval_seed = derive_seed(cfg.seed, "epoch-eval");
    int64_t probes = std::min<int64_t>(cfg.eval_samples, n);
    double dl_sum = 0.0;
    int64_t sat = 0;
    for (int64_t i = 0; i < probes; ++i) {
      dl_sum += dl_penalty_batchpoint(data.inputs[(size_t)i], eval_seed, nullptr);
      if (property_holds_classically(spec, net, ctx, data.inputs[(size_t)i],
                                     cfg.quant_samples, eval_seed))
        ++sat;
    }
    st.dl_loss = dl_sum / (double)probes;
    st.constraint_satisfaction = (double)sat / (double)probes;
    st.accuracy = accuracy_of(net, data);
    st.total_loss = cfg.alpha * st.ce_loss + cfg.beta * st.dl_loss;
    (void)epoch;
    return st;
  };

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Deterministic shuffle per epoch.
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle-" + std::to_string(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    for (int64_t b = 0; b * cfg.batch_size < n; ++b) {
      int64_t lo = b * cfg.batch_size;
      int64_t hi = std::min(n, lo + cfg.batch_size);
      int64_t bs = hi - lo;
      NetGradients acc = NetGradients::zeros_like(net);
      double batch_ce = 0.0, batch_dl = 0.0;
      uint64_t batch_seed =
          derive_seed(cfg.seed, "batch-" + std::to_string(epoch) + "-" + std::to_string(b));
      for (int64_t k = lo; k < hi; ++k) {
        const Eigen::VectorXd& x = data.inputs[(size_t)order[(size_t)k]];
        const Eigen::VectorXd& y = data.labels[(size_t)order[(size_t)k]];
        if (cfg.alpha > 0) {
          ForwardTrace tr = forward_trace(net, x);
          const Eigen::VectorXd& p = tr.output();
          batch_ce += cross_entropy(p, y);
          Eigen::VectorXd dp(p.size());
          for (int64_t i = 0; i < p.size(); ++i)
            dp[i] = p[i] > 1e-12 ? -y[i] / p[i] : 0.0;
          NetGradients gce = backprop(net, tr, dp);
          acc.accumulate(gce, cfg.alpha / (double)bs);
        }
        if (cfg.beta > 0) {
          GraphGradients gg;
          double pen = dl_penalty_batchpoint(x, batch_seed, &gg);
          batch_dl += pen;
          for (auto& [name, ng] : gg.networks) {
            (void)name;
            // d(penalty)/d(truth) = -1 for every logic.
            acc.accumulate(ng, -cfg.beta / (double)bs);
          }
        }
      }
      double batch_loss = cfg.alpha * batch_ce / (double)bs + cfg.beta * batch_dl / (double)bs;
      if (!std::isfinite(batch_loss))
        throw EvalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(b) + " (ce=" + std::to_string(batch_ce) +
                        ", dl=" + std::to_string(batch_dl) + ")");
      for (size_t l = 0; l < net.layers.size(); ++l) {
        net.layers[l].W -= cfg.lr * acc.dW[l];
        net.layers[l].b -= cfg.lr * acc.db[l];
      }
    }
    report.epochs.push_back(epoch_stats(epoch));
  }
  return report;
}

void save_report(const TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  out << "epoch,total_loss,ce_loss,dl_loss,accuracy,constraint_satisfaction\n";
  for (size_t e = 0; e < report.epochs.size(); ++e) {
    const EpochStats& s = report.epochs[e];
    out << e << "," << format_real(s.total_loss) << "," << format_real(s.ce_loss) << ","
        << format_real(s.dl_loss) << "," << format_real(s.accuracy) << ","
        << format_real(s.constraint_satisfaction) << "\n";
  }
}

}  // namespace ldl
