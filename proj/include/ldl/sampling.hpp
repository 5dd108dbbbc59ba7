#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldl {

enum class DistKind { UniformBox, Gaussian, Empirical };

// Per-variable sampling distribution for infinite quantifiers.
struct Distribution {
  DistKind kind = DistKind::UniformBox;
  int64_t dim = 1;
  std::vector<double> lo, hi;          // UniformBox
  std::vector<double> mean, stddev;    // Gaussian
  std::vector<std::vector<double>> points;  // Empirical (drawn with replacement)

  static Distribution uniform_box(std::vector<double> lo, std::vector<double> hi);
  static Distribution gaussian(std::vector<double> mean, std::vector<double> stddev);
  static Distribution empirical(std::vector<std::vector<double>> points);

  void validate() const;
};

struct SamplingConfig {
  int64_t sample_count = 100;   // >= 1
  uint64_t seed = 0;
  int64_t refinement_steps = 0;  // coordinate-descent polish rounds
};

// Deterministic stream with portable transforms. mt19937_64 output is
// pinned by the standard; the uniform/gaussian shaping is done by hand
// because the std distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  uint64_t next_u64() { return gen_(); }
  double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double gaussian();
  uint64_t below(uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable per-quantifier stream: the same (seed, binder) pair always
// yields the same draws, so growing sample_count nests sample sets and
// parallel quantifiers over the same variable share one set.
uint64_t derive_seed(uint64_t seed, const std::string& binder_name);

std::vector<double> draw_sample(const Distribution& d, Rng& rng);

struct ExtremumResult {
  double value = 0.0;
  std::vector<double> argpoint;
};

// Draws cfg.sample_count points, evaluates `body` at each, keeps the
// extremum, then polishes it with coordinate descent (step sizes are
// halving fractions of the per-coordinate domain width). Empirical
// distributions skip refinement: their support is the point set.
ExtremumResult sample_extremum(const Distribution& d, const SamplingConfig& cfg,
                               const std::string& binder_name, bool maximize,
                               const std::function<double(std::span<const double>)>& body);

}  // namespace ldl
