#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ldl/graph.hpp"
#include "ldl/netio.hpp"
#include "ldl/parser.hpp"

namespace ldl {

struct TrainConfig {
  double alpha = 1.0;  // cross-entropy weight
  double beta = 0.0;   // differentiable-logic weight
  int64_t epochs = 10;
  int64_t batch_size = 16;
  double lr = 0.05;
  uint64_t seed = 0;
  int64_t eval_samples = 50;   // probe points for constraint satisfaction
  int64_t quant_samples = 40;  // quantifier samples per loss evaluation
  int64_t refine = 0;
};

struct EpochStats {
  double total_loss = 0.0;
  double ce_loss = 0.0;
  double dl_loss = 0.0;
  double accuracy = 0.0;
  double constraint_satisfaction = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
};

// -sum y_i log(pred_i), predictions clamped at 1e-12 before the log.
double cross_entropy(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

// Two margin-separated 2-D gaussian blobs with one-hot labels. Points
// are resampled into a radius-1 ball around each center, so classes are
// at least `margin` apart and linearly separable along the first axis.
Dataset make_synthetic_dataset(uint64_t seed, int64_t n_points, double margin);

// Minibatch SGD on alpha*CE + beta*DL. The DL term evaluates the spec's
// root property with the dataset input bound to its one unbound Vec
// parameter and fresh seeded quantifier samples per batch. Deterministic
// given cfg.seed.
TrainReport train(const SpecFile& spec, DenseNetwork& net, const Dataset& data,
                  const ContextFile& ctx, const Logic& logic, const TrainConfig& cfg);

// Classical (exact-comparison) check of the property at one data point;
// infinite quantifiers range over `samples` seeded draws.
bool property_holds_classically(const SpecFile& spec, const DenseNetwork& net,
                                const ContextFile& ctx, const Eigen::VectorXd& point,
                                int64_t samples, uint64_t seed);

void save_report(const TrainReport& report, const std::string& path);

}  // namespace ldl
