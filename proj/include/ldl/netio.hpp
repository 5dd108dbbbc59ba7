#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "ldl/sampling.hpp"

namespace ldl {

struct IoError : std::runtime_error {
  explicit IoError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

enum class Activation { Relu, Identity, Softmax };

const char* activation_name(Activation a);

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
  Activation act = Activation::Identity;
};

// Dense feed-forward network: affine layers with relu/identity/softmax.
// Softmax may only appear on the final layer.
struct DenseNetwork {
  std::vector<Layer> layers;
  int64_t input_dim = 0;
  int64_t output_dim = 0;

  void validate() const;
};

Eigen::VectorXd forward(const DenseNetwork& net, const Eigen::VectorXd& x);

// Per-layer pre-activations and activations, for reverse accumulation.
struct ForwardTrace {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;   // z_l = W_l a_{l-1} + b_l
  std::vector<Eigen::VectorXd> post;  // a_l = act(z_l)
  const Eigen::VectorXd& output() const { return post.back(); }
};

ForwardTrace forward_trace(const DenseNetwork& net, const Eigen::VectorXd& x);

struct NetGradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
  Eigen::VectorXd dx;

  void accumulate(const NetGradients& other, double scale = 1.0);
  static NetGradients zeros_like(const DenseNetwork& net);
};

// Reverse accumulation of an upstream cotangent dL/dy through the
// network. relu subgradient at 0 is 0.
NetGradients backprop(const DenseNetwork& net, const ForwardTrace& trace,
                      const Eigen::VectorXd& dy);

// dy_i/dx_j, built from output_dim reverse passes.
Eigen::MatrixXd jacobian(const DenseNetwork& net, const Eigen::VectorXd& x);

DenseNetwork load_network(const std::string& path);
DenseNetwork parse_network(const std::string& text);
void save_network(const DenseNetwork& net, const std::string& path);

struct Dataset {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> labels;
  int64_t input_dim = 0;
  int64_t output_dim = 0;
  size_t size() const { return inputs.size(); }
};

Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const std::string& text);
void save_dataset(const Dataset& ds, const std::string& path);

// Scalar-or-vector binding from a context file.
struct CtxBinding {
  bool is_vec = false;
  double scalar = 0.0;
  std::vector<double> vec;
};

struct ContextFile {
  std::map<std::string, Distribution> samplers;
  std::map<std::string, CtxBinding> bindings;
};

ContextFile load_context(const std::string& path);
ContextFile parse_context(const std::string& text);

}  // namespace ldl
