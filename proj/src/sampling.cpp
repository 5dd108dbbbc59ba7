#include "ldl/sampling.hpp"

#include <cmath>

namespace ldl {

Distribution Distribution::uniform_box(std::vector<double> lo, std::vector<double> hi) {
  Distribution d;
  d.kind = DistKind::UniformBox;
  d.dim = (int64_t)lo.size();
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  d.validate();
  return d;
}

Distribution Distribution::gaussian(std::vector<double> mean, std::vector<double> stddev) {
  Distribution d;
  d.kind = DistKind::Gaussian;
  d.dim = (int64_t)mean.size();
  d.mean = std::move(mean);
  d.stddev = std::move(stddev);
  d.validate();
  return d;
}

Distribution Distribution::empirical(std::vector<std::vector<double>> points) {
  Distribution d;
  d.kind = DistKind::Empirical;
  if (points.empty()) throw std::invalid_argument("empirical distribution needs points");
  d.dim = (int64_t)points[0].size();
  d.points = std::move(points);
  d.validate();
  return d;
}

void Distribution::validate() const {
  if (dim < 1) throw std::invalid_argument("distribution dimension must be >= 1");
  switch (kind) {
    case DistKind::UniformBox:
      if ((int64_t)lo.size() != dim || (int64_t)hi.size() != dim)
        throw std::invalid_argument("uniform bounds must match dimension");
      for (int64_t i = 0; i < dim; ++i)
        if (!(lo[i] <= hi[i]))
          throw std::invalid_argument("uniform bounds need lo <= hi componentwise");
      break;
    case DistKind::Gaussian:
      if ((int64_t)mean.size() != dim || (int64_t)stddev.size() != dim)
        throw std::invalid_argument("gaussian parameters must match dimension");
      for (double s : stddev)
        if (!(s >= 0.0)) throw std::invalid_argument("gaussian stddev must be >= 0");
      break;
    case DistKind::Empirical:
      if (points.empty()) throw std::invalid_argument("empirical distribution needs points");
      for (auto& p : points)
        if ((int64_t)p.size() != dim)
          throw std::invalid_argument("empirical points must share one dimension");
      break;
  }
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller on hand-shaped uniforms for cross-platform stability.
  double u1 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

uint64_t derive_seed(uint64_t seed, const std::string& binder_name) {
  // FNV-1a over the name, then splitmix64 finalization.
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : binder_name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<double> draw_sample(const Distribution& d, Rng& rng) {
  std::vector<double> x((size_t)d.dim);
  switch (d.kind) {
    case DistKind::UniformBox:
      for (int64_t i = 0; i < d.dim; ++i) x[i] = rng.uniform(d.lo[i], d.hi[i]);
      break;
    case DistKind::Gaussian:
      for (int64_t i = 0; i < d.dim; ++i) x[i] = d.mean[i] + d.stddev[i] * rng.gaussian();
      break;
    case DistKind::Empirical:
      x = d.points[rng.below(d.points.size())];
      break;
  }
  return x;
}

namespace {

std::vector<double> refine_widths(const Distribution& d) {
  std::vector<double> w((size_t)d.dim, 0.0);
  switch (d.kind) {
    case DistKind::UniformBox:
      for (int64_t i = 0; i < d.dim; ++i) w[i] = d.hi[i] - d.lo[i];
      break;
    case DistKind::Gaussian:
      for (int64_t i = 0; i < d.dim; ++i) w[i] = 2.0 * d.stddev[i];
      break;
    case DistKind::Empirical:
      break;  // discrete support, no polish
  }
  return w;
}

}  // namespace

ExtremumResult sample_extremum(const Distribution& d, const SamplingConfig& cfg,
                               const std::string& binder_name, bool maximize,
                               const std::function<double(std::span<const double>)>& body) {
  if (cfg.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  Rng rng(derive_seed(cfg.seed, binder_name));
  ExtremumResult best;
  bool first = true;
  for (int64_t s = 0; s < cfg.sample_count; ++s) {
    std::vector<double> x = draw_sample(d, rng);
    double v = body(x);
    bool better = first || (maximize ? v > best.value : v < best.value);
    if (better) {
      best.value = v;
      best.argpoint = x;
      first = false;
    }
  }
  if (cfg.refinement_steps > 0 && d.kind != DistKind::Empirical) {
    std::vector<double> widths = refine_widths(d);
    for (int64_t k = 1; k <= cfg.refinement_steps; ++k) {
      double frac = std::ldexp(1.0, -(int)k);  // 2^-k of the width
      for (int64_t c = 0; c < d.dim; ++c) {
        if (widths[c] <= 0.0) continue;
        for (double dir : {-1.0, 1.0}) {
          std::vector<double> cand = best.argpoint;
          cand[c] += dir * frac * widths[c];
          if (d.kind == DistKind::UniformBox) {
            if (cand[c] < d.lo[c] || cand[c] > d.hi[c]) continue;
          }
          double v = body(cand);
          if (maximize ? v > best.value : v < best.value) {
            best.value = v;
            best.argpoint = std::move(cand);
          }
        }
      }
    }
  }
  return best;
}

}  // namespace ldl
