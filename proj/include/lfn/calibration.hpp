#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"
#include "flows.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "similarity.hpp"
#include "suite.hpp"

namespace lfn {

// e = observed - mean simulated, per network.
struct ErrorMatrices {
  Matrix eR, eI, eO;

  const Matrix& operator[](FlowDimension d) const {
    switch (d) {
      case FlowDimension::region: return eR;
      case FlowDimension::industry: return eI;
      case FlowDimension::occupation: return eO;
    }
    return eR;
  }
};

inline ErrorMatrices compute_errors(const FlowTriple& observed, std::span<const FlowTriple> suite) {
  if (suite.empty()) throw InsufficientData("compute_errors: empty suite");
  ErrorMatrices e{observed.region, observed.industry, observed.occupation};
  const double inv_m = 1.0 / static_cast<double>(suite.size());
  for (const auto& sim : suite) {
    Matrix::require_same_shape(sim.region, observed.region, "compute_errors region");
    Matrix::require_same_shape(sim.industry, observed.industry, "compute_errors industry");
    Matrix::require_same_shape(sim.occupation, observed.occupation, "compute_errors occupation");
    e.eR -= sim.region * inv_m;
    e.eI -= sim.industry * inv_m;
    e.eO -= sim.occupation * inv_m;
  }
  return e;
}

// Denominator floor where the observed density is zero.
inline constexpr double kDeltaFloor = 1e-6;
inline constexpr double kMaxGrowth = 1.5;
inline constexpr double kMaxShrink = 0.5;

// One multiplicative step per cell. Too much simulated flow (e < 0) raises
// the exponent, making the pair less similar; too little lowers it. The
// factor is capped at 3/2 and floored at 1/2.
inline Matrix update_nu(const Matrix& nu, const Matrix& errors, const Matrix& observed) {
  Matrix::require_same_shape(nu, errors, "update_nu errors");
  Matrix::require_same_shape(nu, observed, "update_nu observed");
  Matrix out(nu.rows(), nu.cols());
  for (std::size_t k = 0; k < nu.size(); ++k) {
    const double v = nu.flat()[k];
    if (!(v > 0.0)) throw DomainError("update_nu: exponent must be positive");
    const double e = errors.flat()[k];
    const double delta = std::abs(e) / std::max(observed.flat()[k], kDeltaFloor);
    const double factor = e < 0.0 ? std::min(1.0 + delta, kMaxGrowth) : std::max(1.0 - delta, kMaxShrink);
    out.flat()[k] = v * factor;
  }
  return out;
}

// The base matrix is accepted for interface symmetry with the bundle; cells
// whose base is 0 or 1 are updated all the same and simply have no effect.
inline Matrix update_nu(const Matrix& nu, const Matrix& errors, const Matrix& observed, const Matrix& base) {
  Matrix::require_same_shape(nu, base, "update_nu base");
  return update_nu(nu, errors, observed);
}

inline double mean_error(const ErrorMatrices& e, bool signed_mean = false) {
  auto avg = [signed_mean](const Matrix& m) {
    double s = 0.0;
    for (double v : m.flat()) s += signed_mean ? v : std::abs(v);
    return m.empty() ? 0.0 : s / static_cast<double>(m.size());
  };
  return (avg(e.eR) + avg(e.eI) + avg(e.eO)) / 3.0;
}

struct CalibrationIteration {
  int iteration = 0;
  double mean_error = 0.0;
  FitReport fit;
};

struct CalibrationResult {
  SimilarityBundle bundle;  // exponents of the lowest-error iteration
  std::vector<CalibrationIteration> history;
  int best_iteration = 0;
  double best_error = std::numeric_limits<double>::infinity();
  bool converged = false;
  FlowTriple best_mean_flows;
};

inline SimilarityBundle with_unit_exponents(const SimilarityBundle& b) {
  return b.with_nu(Matrix(b.R.rows(), b.R.cols(), 1.0), Matrix(b.I.rows(), b.I.cols(), 1.0),
                   Matrix(b.O.rows(), b.O.cols(), 1.0));
}

// Multi-output gradient descent on the exponent matrices: run a Monte Carlo
// suite, compare mean flows to the observed ones, update all three exponent
// matrices at once, until the mean error drops under the threshold.
inline CalibrationResult calibrate(const FlowTriple& observed, const CalibrationConfig& cc,
                                   const ScenarioConfig& scenario, unsigned threads = 0) {
  cc.validate();
  ScenarioConfig cfg = scenario;
  cfg.observed = observed;
  cfg.collection_steps = cc.collection_steps;
  cfg.similarity = with_unit_exponents(scenario.similarity);
  cfg.validate();

  const auto m = static_cast<std::size_t>(cc.m_simulations);
  const std::uint64_t base_seed = scenario.seeds.front();
  RunOptions opt;
  opt.keep_log = false;

  CalibrationResult res;
  res.bundle = cfg.similarity;
  for (int it = 0; it < cc.max_iterations; ++it) {
    std::vector<std::uint64_t> seeds;
    if (!cc.seeds.empty() && cc.fixed_seeds) {
      seeds = cc.seeds;
    } else if (!cc.seeds.empty()) {
      seeds = seed_block(cc.seeds.front(), static_cast<std::size_t>(it), m);
    } else {
      seeds = seed_block(base_seed, cc.fixed_seeds ? 0 : static_cast<std::size_t>(it), m);
    }
    const auto runs = run_suite(cfg, seeds, opt, threads);
    std::vector<FlowTriple> sims;
    sims.reserve(runs.size());
    for (const auto& r : runs) sims.push_back(r.flows);
    const auto errors = compute_errors(observed, sims);
    const double e_bar = mean_error(errors, cc.signed_mean_error);
    const auto mean = mean_flows(runs);

    CalibrationIteration rec;
    rec.iteration = it;
    rec.mean_error = e_bar;
    rec.fit = fit_report(mean.region, observed.region, mean.industry, observed.industry, mean.occupation,
                         observed.occupation);
    res.history.push_back(rec);
    if (std::abs(e_bar) < res.best_error) {
      res.best_error = std::abs(e_bar);
      res.best_iteration = it;
      res.bundle = cfg.similarity;
      res.best_mean_flows = mean;
    }
    if (std::abs(e_bar) < cc.threshold) {
      res.converged = true;
      break;
    }
    const auto& b = cfg.similarity;
    cfg.similarity = b.with_nu(update_nu(b.nuR, errors.eR, observed.region, b.R),
                               update_nu(b.nuI, errors.eI, observed.industry, b.I),
                               update_nu(b.nuO, errors.eO, observed.occupation, b.O));
  }
  return res;
}

}  // namespace lfn
