#include "ldl/netio.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ldl/ast.hpp"

namespace ldl {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

void DenseNetwork::validate() const {
  if (layers.empty()) throw IoError("network has no layers");
  int64_t prev = input_dim;
  for (size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (layer.W.cols() != prev)
      throw IoError("layer " + std::to_string(l) + " expects " +
                    std::to_string(layer.W.cols()) + " inputs after a " +
                    std::to_string(prev) + "-output stage");
    if (layer.b.size() != layer.W.rows())
      throw IoError("layer " + std::to_string(l) + " bias size mismatch");
    if (layer.act == Activation::Softmax && l + 1 != layers.size())
      throw IoError("softmax is only allowed on the final layer");
    prev = layer.W.rows();
  }
  if (prev != output_dim) throw IoError("output dimension mismatch");
}

namespace {

Eigen::VectorXd apply_activation(Activation act, const Eigen::VectorXd& z) {
  switch (act) {
    case Activation::Identity:
      return z;
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Softmax: {
      Eigen::VectorXd shifted = z.array() - z.maxCoeff();
      Eigen::VectorXd e = shifted.array().exp();
      return e / e.sum();
    }
  }
  return z;
}

}  // namespace

Eigen::VectorXd forward(const DenseNetwork& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim)
    throw IoError("forward: input has dimension " + std::to_string(x.size()) +
                  ", network expects " + std::to_string(net.input_dim));
  Eigen::VectorXd a = x;
  for (const Layer& layer : net.layers) {
    Eigen::VectorXd z = layer.W * a + layer.b;
    a = apply_activation(layer.act, z);
  }
  return a;
}

ForwardTrace forward_trace(const DenseNetwork& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim)
    throw IoError("forward: input dimension mismatch");
  ForwardTrace t;
  t.input = x;
  Eigen::VectorXd a = x;
  for (const Layer& layer : net.layers) {
    Eigen::VectorXd z = layer.W * a + layer.b;
    a = apply_activation(layer.act, z);
    t.pre.push_back(z);
    t.post.push_back(a);
  }
  return t;
}

void NetGradients::accumulate(const NetGradients& other, double scale) {
  for (size_t l = 0; l < dW.size(); ++l) {
    dW[l] += scale * other.dW[l];
    db[l] += scale * other.db[l];
  }
}

NetGradients NetGradients::zeros_like(const DenseNetwork& net) {
  NetGradients g;
  for (const Layer& layer : net.layers) {
    g.dW.push_back(Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()));
    g.db.push_back(Eigen::VectorXd::Zero(layer.b.size()));
  }
  g.dx = Eigen::VectorXd::Zero(net.input_dim);
  return g;
}

NetGradients backprop(const DenseNetwork& net, const ForwardTrace& trace,
                      const Eigen::VectorXd& dy) {
  NetGradients g;
  g.dW.resize(net.layers.size());
  g.db.resize(net.layers.size());
  Eigen::VectorXd da = dy;
  for (size_t l = net.layers.size(); l-- > 0;) {
    const Layer& layer = net.layers[l];
    const Eigen::VectorXd& z = trace.pre[l];
    Eigen::VectorXd dz;
    switch (layer.act) {
      case Activation::Identity:
        dz = da;
        break;
      case Activation::Relu:
        dz = (z.array() > 0.0).select(da, 0.0);
        break;
      case Activation::Softmax: {
        const Eigen::VectorXd& s = trace.post[l];
        double dot = da.dot(s);
        dz = s.array() * (da.array() - dot);
        break;
      }
    }
    const Eigen::VectorXd& a_prev = l == 0 ? trace.input : trace.post[l - 1];
    g.dW[l] = dz * a_prev.transpose();
    g.db[l] = dz;
    da = layer.W.transpose() * dz;
  }
  g.dx = da;
  return g;
}

Eigen::MatrixXd jacobian(const DenseNetwork& net, const Eigen::VectorXd& x) {
  ForwardTrace t = forward_trace(net, x);
  Eigen::MatrixXd J(net.output_dim, net.input_dim);
  for (int64_t i = 0; i < net.output_dim; ++i) {
    Eigen::VectorXd dy = Eigen::VectorXd::Zero(net.output_dim);
    dy[i] = 1.0;
    J.row(i) = backprop(net, t, dy).dx.transpose();
  }
  return J;
}

namespace {

// Whitespace token reader with `--` line comments.
class TokenReader {
 public:
  explicit TokenReader(const std::string& text) {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      auto cut = line.find("--");
      if (cut != std::string::npos) line.resize(cut);
      std::istringstream ws(line);
      std::string tok;
      while (ws >> tok) toks_.push_back(tok);
    }
  }
  bool done() const { return pos_ >= toks_.size(); }
  const std::string& peek() const {
    static const std::string empty;
    return done() ? empty : toks_[pos_];
  }
  std::string next(const char* what) {
    if (done()) throw IoError(std::string("unexpected end of file, expected ") + what);
    return toks_[pos_++];
  }
  void expect(const std::string& word) {
    std::string t = next(word.c_str());
    if (t != word) throw IoError("expected '" + word + "', got '" + t + "'");
  }
  double number(const char* what) {
    std::string t = next(what);
    try {
      size_t used = 0;
      double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw IoError(std::string("expected number for ") + what + ", got '" + t + "'");
    }
  }
  int64_t natural(const char* what) {
    double v = number(what);
    if (v < 0 || v != std::floor(v)) throw IoError(std::string(what) + " must be a natural");
    return (int64_t)v;
  }
  bool peek_is_number() const {
    if (done()) return false;
    const std::string& t = peek();
    try {
      size_t used = 0;
      (void)std::stod(t, &used);
      return used == t.size();
    } catch (const std::exception&) {
      return false;
    }
  }

 private:
  std::vector<std::string> toks_;
  size_t pos_ = 0;
};

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  if (s == "softmax") return Activation::Softmax;
  throw IoError("unknown activation '" + s + "'");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

DenseNetwork parse_network(const std::string& text) {
  TokenReader r(text);
  r.expect("ldl-net");
  if (r.natural("version") != 1) throw IoError("unsupported ldl-net version");
  r.expect("input");
  DenseNetwork net;
  net.input_dim = r.natural("input dimension");
  while (!r.done()) {
    r.expect("layer");
    Layer layer;
    layer.act = activation_from_name(r.next("activation"));
    int64_t out = r.natural("layer output size");
    int64_t in = r.natural("layer input size");
    layer.W.resize(out, in);
    r.expect("w");
    for (int64_t i = 0; i < out; ++i)
      for (int64_t j = 0; j < in; ++j) layer.W(i, j) = r.number("weight");
    r.expect("b");
    layer.b.resize(out);
    for (int64_t i = 0; i < out; ++i) layer.b(i) = r.number("bias");
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw IoError("network file declares no layers");
  net.output_dim = net.layers.back().W.rows();
  net.validate();
  return net;
}

DenseNetwork load_network(const std::string& path) { return parse_network(slurp(path)); }

void save_network(const DenseNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << "ldl-net 1\n";
  out << "input " << net.input_dim << "\n";
  for (const Layer& layer : net.layers) {
    out << "layer " << activation_name(layer.act) << " " << layer.W.rows() << " "
        << layer.W.cols() << "\n";
    out << "w\n";
    for (int64_t i = 0; i < layer.W.rows(); ++i) {
      for (int64_t j = 0; j < layer.W.cols(); ++j) {
        if (j) out << " ";
        out << format_real(layer.W(i, j));
      }
      out << "\n";
    }
    out << "b\n";
    for (int64_t i = 0; i < layer.b.size(); ++i) {
      if (i) out << " ";
      out << format_real(layer.b(i));
    }
    out << "\n";
  }
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream lines(text);
  std::string header;
  if (!std::getline(lines, header)) throw IoError("empty dataset");
  std::vector<bool> is_input;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      // Trim whitespace.
      while (!col.empty() && std::isspace((unsigned char)col.front())) col.erase(col.begin());
      while (!col.empty() && std::isspace((unsigned char)col.back())) col.pop_back();
      if (col.rfind('x', 0) == 0)
        is_input.push_back(true);
      else if (col.rfind('y', 0) == 0)
        is_input.push_back(false);
      else
        throw IoError("dataset header columns must start with x (input) or y (label): '" +
                      col + "'");
    }
  }
  Dataset ds;
  ds.input_dim = (int64_t)std::count(is_input.begin(), is_input.end(), true);
  ds.output_dim = (int64_t)is_input.size() - ds.input_dim;
  if (ds.input_dim == 0 || ds.output_dim == 0)
    throw IoError("dataset needs both x* and y* columns");
  std::string line;
  size_t lineno = 1;
  while (std::getline(lines, line)) {
    ++lineno;
    bool blank = true;
    for (char c : line)
      if (!std::isspace((unsigned char)c)) blank = false;
    if (blank) continue;
    std::istringstream ls(line);
    std::string cell;
    Eigen::VectorXd x(ds.input_dim), y(ds.output_dim);
    int64_t xi = 0, yi = 0;
    size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= is_input.size())
        throw IoError("dataset row " + std::to_string(lineno) + " has too many columns");
      double v;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError("dataset row " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      if (is_input[col])
        x[xi++] = v;
      else
        y[yi++] = v;
      ++col;
    }
    if (col != is_input.size())
      throw IoError("dataset row " + std::to_string(lineno) + " has too few columns");
    double sum = y.sum();
    if (std::fabs(sum - 1.0) > 1e-9)
      throw IoError("dataset row " + std::to_string(lineno) +
                    ": labels must form a probability vector (sum=" + std::to_string(sum) +
                    ")");
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(std::move(y));
  }
  if (ds.inputs.empty()) throw IoError("dataset has no rows");
  return ds;
}

Dataset load_dataset(const std::string& path) { return parse_dataset(slurp(path)); }

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  for (int64_t i = 0; i < ds.input_dim; ++i) out << (i ? "," : "") << "x" << i;
  for (int64_t i = 0; i < ds.output_dim; ++i) out << ",y" << i;
  out << "\n";
  for (size_t r = 0; r < ds.size(); ++r) {
    for (int64_t i = 0; i < ds.input_dim; ++i)
      out << (i ? "," : "") << format_real(ds.inputs[r][i]);
    for (int64_t i = 0; i < ds.output_dim; ++i) out << "," << format_real(ds.labels[r][i]);
    out << "\n";
  }
}

namespace {

std::vector<double> read_broadcast_list(TokenReader& r, int64_t dim, const char* what) {
  std::vector<double> vals;
  while (r.peek_is_number()) vals.push_back(r.number(what));
  if ((int64_t)vals.size() == dim) return vals;
  if (vals.size() == 1) return std::vector<double>((size_t)dim, vals[0]);
  throw IoError(std::string(what) + ": expected 1 or " + std::to_string(dim) +
                " values, got " + std::to_string(vals.size()));
}

}  // namespace

ContextFile parse_context(const std::string& text) {
  TokenReader r(text);
  r.expect("ldl-ctx");
  if (r.natural("version") != 1) throw IoError("unsupported ldl-ctx version");
  ContextFile ctx;
  while (!r.done()) {
    std::string word = r.next("'bind' or 'sample'");
    if (word == "bind") {
      std::string name = r.next("binding name");
      if (ctx.bindings.count(name)) throw IoError("duplicate binding for '" + name + "'");
      CtxBinding b;
      if (r.peek() == "vec") {
        r.expect("vec");
        b.is_vec = true;
        int64_t n = r.natural("vector size");
        for (int64_t i = 0; i < n; ++i) b.vec.push_back(r.number("vector element"));
      } else {
        b.scalar = r.number("binding value");
      }
      ctx.bindings[name] = std::move(b);
    } else if (word == "sample") {
      std::string name = r.next("sampler name");
      if (ctx.samplers.count(name)) throw IoError("duplicate sampler for '" + name + "'");
      std::string kind = r.next("distribution kind");
      int64_t dim = r.natural("distribution dimension");
      if (kind == "uniform") {
        r.expect("lo");
        auto lo = read_broadcast_list(r, dim, "lo");
        r.expect("hi");
        auto hi = read_broadcast_list(r, dim, "hi");
        ctx.samplers.emplace(name, Distribution::uniform_box(std::move(lo), std::move(hi)));
      } else if (kind == "gaussian") {
        r.expect("mean");
        auto mean = read_broadcast_list(r, dim, "mean");
        r.expect("std");
        auto sd = read_broadcast_list(r, dim, "std");
        for (double s : sd)
          if (s < 0) throw IoError("gaussian stddev must be >= 0");
        ctx.samplers.emplace(name, Distribution::gaussian(std::move(mean), std::move(sd)));
      } else if (kind == "empirical") {
        r.expect("points");
        int64_t k = r.natural("point count");
        if (k < 1) throw IoError("empirical distribution needs at least one point");
        std::vector<std::vector<double>> pts((size_t)k);
        for (int64_t i = 0; i < k; ++i) {
          pts[i].resize((size_t)dim);
          for (int64_t j = 0; j < dim; ++j) pts[i][j] = r.number("point coordinate");
        }
        ctx.samplers.emplace(name, Distribution::empirical(std::move(pts)));
      } else {
        throw IoError("unknown distribution kind '" + kind + "'");
      }
    } else {
      throw IoError("expected 'bind' or 'sample', got '" + word + "'");
    }
  }
  return ctx;
}

ContextFile load_context(const std::string& path) { return parse_context(slurp(path)); }

}  // namespace ldl
