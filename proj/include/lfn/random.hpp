#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"

namespace lfn {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

// Normal(mean, sd) redrawn below 1% of the mean; clamped after 100 tries.
inline double draw_wage(Rng& rng, double mean, double sd) {
  const double floor = 0.01 * mean;
  if (sd <= 0.0) return std::max(mean, floor);
  std::normal_distribution<double> normal(mean, sd);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double w = normal(rng);
    if (w >= floor) return w;
  }
  return floor;
}

// Beta(a, b) rescaled to (lo, hi).
struct AlphaDistribution {
  double beta_a = 2.0;
  double beta_b = 2.0;
  double lo = 0.05;
  double hi = 0.95;

  double sample(Rng& rng) const {
    const double x = std::gamma_distribution<double>(beta_a, 1.0)(rng);
    const double y = std::gamma_distribution<double>(beta_b, 1.0)(rng);
    const double u = (x + y) > 0.0 ? x / (x + y) : 0.5;
    return lo + (hi - lo) * u;
  }

  void validate() const {
    if (!(beta_a > 0.0 && beta_b > 0.0)) throw ValidationError("alpha.beta", "shape parameters must be > 0");
    if (!(lo > 0.0 && hi < 1.0 && lo < hi)) throw ValidationError("alpha.range", "need 0 < lo < hi < 1");
  }

  bool operator==(const AlphaDistribution&) const = default;
};

// Draws cells with probability proportional to their position count.
class CellSampler {
 public:
  CellSampler() = default;
  explicit CellSampler(const JobDistribution& jobs) : jobs_(&jobs) {
    cumulative_.reserve(jobs.counts.size());
    double acc = 0.0;
    for (auto c : jobs.counts) {
      acc += static_cast<double>(c);
      cumulative_.push_back(acc);
    }
    if (!(acc > 0.0)) throw DegenerateError("CellSampler: no positions in the job distribution");
  }

  Cell sample(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return jobs_->dims.cell(static_cast<std::size_t>(it - cumulative_.begin()));
  }

  JobSnapshot sample_job(Rng& rng) const {
    JobSnapshot s;
    s.cell = sample(rng);
    const auto k = jobs_->dims.index(s.cell);
    s.wage = draw_wage(rng, jobs_->wage_mean[k], jobs_->wage_std[k]);
    return s;
  }

 private:
  const JobDistribution* jobs_ = nullptr;
  std::vector<double> cumulative_;
};

}  // namespace lfn
