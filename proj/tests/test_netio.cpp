#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ldl/netio.hpp"

using namespace ldl;

TEST_CASE("identity network computes identity") {
  DenseNetwork net = load_network(testing::src_path("specs/fixtures/identity2.net"));
  CHECK(net.input_dim == 2);
  CHECK(net.output_dim == 2);
  Eigen::VectorXd y = forward(net, Eigen::Vector2d(3, -1));
  CHECK(y[0] == 3.0);
  CHECK(y[1] == -1.0);
}

TEST_CASE("relu clamps below zero") {
  DenseNetwork net = parse_network(
      "ldl-net 1\n"
      "input 1\n"
      "layer relu 1 1\n"
      "w\n1\nb\n-2\n");
  Eigen::VectorXd x(1);
  x[0] = 1.0;
  CHECK(forward(net, x)[0] == 0.0);
  x[0] = 5.0;
  CHECK(forward(net, x)[0] == 3.0);
}

TEST_CASE("malformed network files are rejected") {
  // 3x2 weight block after a 4-output layer breaks the chain
  CHECK_THROWS_WITH_AS(parse_network("ldl-net 1\n"
                                     "input 2\n"
                                     "layer relu 4 2\nw\n1 0\n0 1\n1 1\n0 0\nb\n0 0 0 0\n"
                                     "layer identity 3 2\nw\n1 0\n0 1\n1 1\nb\n0 0 0\n"),
                       doctest::Contains("expects"), IoError);
  CHECK_THROWS_WITH_AS(parse_network("ldl-net 1\ninput 1\nlayer swish 1 1\nw\n1\nb\n0\n"),
                       doctest::Contains("activation"), IoError);
  CHECK_THROWS_WITH_AS(
      parse_network("ldl-net 1\ninput 1\n"
                    "layer softmax 2 1\nw\n1\n1\nb\n0 0\n"
                    "layer identity 1 2\nw\n1 1\nb\n0\n"),
      doctest::Contains("softmax"), IoError);
}

TEST_CASE("forward equals an independent loop transcription") {
  Rng rng(404);
  DenseNetwork net = testing::random_net(rng, 3, 2, /*softmax=*/true, /*hidden=*/4);
  Eigen::VectorXd x(3);
  x << 0.3, -0.7, 1.1;
  // independent, scalar-loop forward pass
  std::vector<double> a = {x[0], x[1], x[2]};
  for (const Layer& layer : net.layers) {
    std::vector<double> z((size_t)layer.W.rows(), 0.0);
    for (int64_t r = 0; r < layer.W.rows(); ++r) {
      double acc = layer.b[r];
      for (int64_t c = 0; c < layer.W.cols(); ++c) acc += layer.W(r, c) * a[(size_t)c];
      z[(size_t)r] = acc;
    }
    if (layer.act == Activation::Relu) {
      for (double& v : z) v = v > 0 ? v : 0.0;
    } else if (layer.act == Activation::Softmax) {
      double mx = z[0];
      for (double v : z) mx = std::max(mx, v);
      double sum = 0;
      for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (double& v : z) v /= sum;
    }
    a = z;
  }
  Eigen::VectorXd y = forward(net, x);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == doctest::Approx(a[0]).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(a[1]).epsilon(1e-14));
  CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jacobian of the identity network is the identity") {
  DenseNetwork net = load_network(testing::src_path("specs/fixtures/identity2.net"));
  Eigen::MatrixXd J = jacobian(net, Eigen::Vector2d(0.4, -0.2));
  CHECK(J(0, 0) == 1.0);
  CHECK(J(1, 1) == 1.0);
  CHECK(J(0, 1) == 0.0);
  CHECK(J(1, 0) == 0.0);
}

TEST_CASE("scalar linear net: d y / d w = x") {
  DenseNetwork net;
  net.input_dim = 1;
  net.output_dim = 1;
  Layer l;
  l.W.resize(1, 1);
  l.W(0, 0) = 2.5;
  l.b.resize(1);
  l.b[0] = 0.0;
  l.act = Activation::Identity;
  net.layers.push_back(l);
  Eigen::VectorXd x(1);
  x[0] = 1.75;
  ForwardTrace tr = forward_trace(net, x);
  Eigen::VectorXd dy(1);
  dy[0] = 1.0;
  NetGradients g = backprop(net, tr, dy);
  CHECK(g.dW[0](0, 0) == 1.75);
  CHECK(g.db[0][0] == 1.0);
  CHECK(g.dx[0] == 2.5);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(777);
  int failures = 0;
  for (int trial = 0; trial < 25; ++trial) {
    DenseNetwork net = testing::random_net(rng, 3, 2, /*softmax=*/false, /*hidden=*/3);
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1, 1);
    Eigen::VectorXd w(2);
    w << 0.7, -0.4;  // scalar post-composition L = w . y
    ForwardTrace tr = forward_trace(net, x);
    NetGradients g = backprop(net, tr, w);
    const double h = 1e-5;
    for (size_t l = 0; l < net.layers.size(); ++l) {
      for (int64_t r = 0; r < net.layers[l].W.rows(); ++r) {
        for (int64_t c = 0; c < net.layers[l].W.cols(); ++c) {
          DenseNetwork up = net, dn = net;
          up.layers[l].W(r, c) += h;
          dn.layers[l].W(r, c) -= h;
          double fd = (w.dot(forward(up, x)) - w.dot(forward(dn, x))) / (2 * h);
          double an = g.dW[l](r, c);
          double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
          if (std::fabs(fd - an) / denom > 1e-4) ++failures;
        }
      }
    }
  }
  // relu kinks can put a coordinate on a non-differentiable point; the
  // acceptance suite excludes them explicitly, here they are just rare
  CHECK(failures <= 2);
}

TEST_CASE("forward_trace output equals forward exactly") {
  Rng rng(12);
  DenseNetwork net = testing::random_net(rng, 4, 3, true, 5);
  Eigen::VectorXd x(4);
  for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-2, 2);
  CHECK(forward_trace(net, x).output() == forward(net, x));
}

TEST_CASE("network save/load round trip") {
  Rng rng(55);
  DenseNetwork net = testing::random_net(rng, 3, 2, false, 4);
  std::string path = "/tmp/ldl_test_roundtrip.net";
  save_network(net, path);
  DenseNetwork back = load_network(path);
  CHECK(back.layers.size() == net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(back.layers[l].W == net.layers[l].W);
    CHECK(back.layers[l].b == net.layers[l].b);
  }
}

TEST_CASE("datasets load, validate and round trip") {
  Dataset ds = parse_dataset("x0,x1,y0,y1\n1,2,1,0\n3,4,0,1\n");
  CHECK(ds.input_dim == 2);
  CHECK(ds.output_dim == 2);
  CHECK(ds.size() == 2);
  CHECK(ds.inputs[1][0] == 3.0);
  CHECK_THROWS_WITH_AS(parse_dataset("x0,y0,y1\n1,0.4,0.7\n"),
                       doctest::Contains("probability"), IoError);
  CHECK_THROWS_AS(parse_dataset("x0,x1\n1,2\n"), IoError);
  std::string path = "/tmp/ldl_test_roundtrip.csv";
  save_dataset(ds, path);
  Dataset back = load_dataset(path);
  CHECK(back.inputs[0] == ds.inputs[0]);
  CHECK(back.labels[1] == ds.labels[1]);
}

TEST_CASE("context files declare samplers and bindings") {
  ContextFile ctx = parse_context(
      "ldl-ctx 1\n"
      "bind eps 0.1\n"
      "bind xhat vec 2 0 0\n"
      "sample x uniform 2 lo 0 hi 1\n"
      "sample y gaussian 1 mean 0 std 1\n"
      "sample z empirical 2 points 2\n1 0\n0 1\n");
  CHECK(ctx.bindings.at("eps").scalar == 0.1);
  CHECK(ctx.bindings.at("xhat").vec.size() == 2);
  CHECK(ctx.samplers.at("x").kind == DistKind::UniformBox);
  CHECK(ctx.samplers.at("x").lo == std::vector<double>{0.0, 0.0});  // broadcast
  CHECK(ctx.samplers.at("y").kind == DistKind::Gaussian);
  CHECK(ctx.samplers.at("z").points.size() == 2);
  CHECK_THROWS_WITH_AS(parse_context("ldl-ctx 1\nsample w gaussian 1 mean 0 std -1\n"),
                       doctest::Contains("stddev"), IoError);
  CHECK_THROWS_AS(parse_context("ldl-ctx 1\nsample w uniform 2 lo 1 0 3 hi 2\n"), IoError);
}
