#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "flows.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "scenario.hpp"
#include "suite.hpp"

namespace lfn {

namespace detail {

inline int draw_proportional(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    acc += weights[k];
    last_positive = static_cast<int>(k);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

}  // namespace detail

// Moves every position of each shocked industry onto one region and/or one
// occupation. Targets are drawn per industry in proportion to the industry's
// own marginal unless the spec pins them. Wage moments of a target cell that
// had no positions become the count-weighted moments of the cells moved in.
inline JobDistribution apply_positional_shock(const JobDistribution& jobs, const ShockSpec& spec, Rng& rng) {
  if (spec.kind != ShockKind::positional) throw ValidationError("shock.kind", "expected a positional shock");
  spec.validate(jobs.dims);
  const auto d = jobs.dims;
  JobDistribution out = jobs;
  for (int ind : spec.industries) {
    std::vector<double> by_region(static_cast<std::size_t>(d.regions), 0.0);
    std::vector<double> by_occ(static_cast<std::size_t>(d.occupations), 0.0);
    double industry_total = 0.0;
    double wage_mean_acc = 0.0, wage_std_acc = 0.0;
    for (int r = 0; r < d.regions; ++r)
      for (int o = 0; o < d.occupations; ++o) {
        const auto k = d.index({r, ind, o});
        const auto c = static_cast<double>(out.counts[k]);
        by_region[static_cast<std::size_t>(r)] += c;
        by_occ[static_cast<std::size_t>(o)] += c;
        industry_total += c;
        wage_mean_acc += c * out.wage_mean[k];
        wage_std_acc += c * out.wage_std[k];
      }
    if (!(industry_total > 0.0))
      throw DegenerateError("apply_positional_shock: industry " + std::to_string(ind) + " holds no positions");

    std::optional<int> region, occupation;
    if (spec.homogenise_region)
      region = spec.region_target ? *spec.region_target : detail::draw_proportional(by_region, rng);
    if (spec.homogenise_occupation)
      occupation = spec.occupation_target ? *spec.occupation_target : detail::draw_proportional(by_occ, rng);

    std::vector<std::int64_t> moved(d.cells(), 0);
    for (int r = 0; r < d.regions; ++r)
      for (int o = 0; o < d.occupations; ++o) {
        const auto from = d.index({r, ind, o});
        const Cell to{region.value_or(r), ind, occupation.value_or(o)};
        moved[d.index(to)] += out.counts[from];
      }
    for (int r = 0; r < d.regions; ++r)
      for (int o = 0; o < d.occupations; ++o) {
        const auto k = d.index({r, ind, o});
        if (moved[k] > 0 && out.counts[k] == 0 && !(out.wage_mean[k] > 0.0)) {
          out.wage_mean[k] = wage_mean_acc / industry_total;
          out.wage_std[k] = wage_std_acc / industry_total;
        }
        out.counts[k] = moved[k];
      }
  }
  return out;
}

// Shifts each populated cell's mean wage in the shocked industries by
// +/- sigma_multiplier times that cell's own std, floored at 1% of the
// original mean.
inline JobDistribution apply_wage_shock(const JobDistribution& jobs, const ShockSpec& spec) {
  if (spec.kind == ShockKind::positional) throw ValidationError("shock.kind", "expected a wage shock");
  spec.validate(jobs.dims);
  const auto d = jobs.dims;
  JobDistribution out = jobs;
  const double sign = spec.kind == ShockKind::wage_up ? 1.0 : -1.0;
  for (int ind : spec.industries)
    for (int r = 0; r < d.regions; ++r)
      for (int o = 0; o < d.occupations; ++o) {
        const auto k = d.index({r, ind, o});
        if (out.counts[k] <= 0) continue;
        const double original = jobs.wage_mean[k];
        out.wage_mean[k] = std::max(original + sign * spec.sigma_multiplier * jobs.wage_std[k], 0.01 * original);
      }
  return out;
}

inline JobDistribution apply_shock(const JobDistribution& jobs, const ShockSpec& spec) {
  Rng rng(spec.seed);
  return spec.kind == ShockKind::positional ? apply_positional_shock(jobs, spec, rng) : apply_wage_shock(jobs, spec);
}

// Share of all positions held by the shocked industries.
inline double shocked_fraction(const JobDistribution& jobs, std::span<const int> industries) {
  const auto d = jobs.dims;
  std::int64_t hit = 0;
  for (int ind : industries)
    for (int r = 0; r < d.regions; ++r)
      for (int o = 0; o < d.occupations; ++o) hit += jobs.count({r, ind, o});
  return static_cast<double>(hit) / static_cast<double>(jobs.total());
}

struct FlaggedEdge {
  int from = 0;
  int to = 0;
  double mean_change = 0.0;  // shocked - baseline
  double p_value = 1.0;
};

inline constexpr std::size_t kMinSignificanceSamples = 3;

// Per-edge two-sided Mann-Whitney U test at level `alpha`. Both groups are
// expressed as differences from the baseline mean density, i.e. shocked vs
// unshocked deviations against unshocked vs unshocked deviations.
inline std::vector<FlaggedEdge> flow_significance(std::span<const Matrix> shocked, std::span<const Matrix> baseline,
                                                  double alpha = 0.05) {
  if (shocked.size() < kMinSignificanceSamples || baseline.size() < kMinSignificanceSamples)
    throw InsufficientData("flow_significance: need at least 3 samples per group");
  const auto& shape = baseline.front();
  for (const auto& m : shocked) Matrix::require_same_shape(m, shape, "flow_significance");
  for (const auto& m : baseline) Matrix::require_same_shape(m, shape, "flow_significance");

  std::vector<FlaggedEdge> flagged;
  std::vector<double> x(shocked.size()), y(baseline.size());
  for (std::size_t a = 0; a < shape.rows(); ++a)
    for (std::size_t b = 0; b < shape.cols(); ++b) {
      double base_mean = 0.0, shock_mean = 0.0;
      for (const auto& m : baseline) base_mean += m(a, b);
      for (const auto& m : shocked) shock_mean += m(a, b);
      base_mean /= static_cast<double>(baseline.size());
      shock_mean /= static_cast<double>(shocked.size());
      for (std::size_t k = 0; k < shocked.size(); ++k) x[k] = shocked[k](a, b) - base_mean;
      for (std::size_t k = 0; k < baseline.size(); ++k) y[k] = baseline[k](a, b) - base_mean;
      const auto test = mann_whitney_u(x, y);
      if (test.p_value < alpha)
        flagged.push_back({static_cast<int>(a), static_cast<int>(b), shock_mean - base_mean, test.p_value});
    }
  return flagged;
}

struct DimensionShockReport {
  double jaccard = 0.0;  // mean over paired shocked/baseline runs
  double band_min = 0.0;  // baseline-vs-baseline pairings
  double band_max = 0.0;
  double clustering_baseline = 0.0;
  double clustering_shocked = 0.0;
  std::vector<FlaggedEdge> flagged;
};

struct ShockReport {
  ShockSpec spec;
  int m = 0;
  double fraction_shocked = 0.0;
  DimensionShockReport region, industry, occupation;

  DimensionShockReport& operator[](FlowDimension d) {
    switch (d) {
      case FlowDimension::region: return region;
      case FlowDimension::industry: return industry;
      case FlowDimension::occupation: return occupation;
    }
    return region;
  }
  const DimensionShockReport& operator[](FlowDimension d) const {
    return const_cast<ShockReport&>(*this)[d];
  }
};

struct ShockRuns {
  std::vector<RunResult> baseline;
  std::vector<RunResult> shocked;
};

// Assembles a report from already-run suites (equal sizes, m >= 3).
inline ShockReport summarise_shock(const ShockSpec& spec, const JobDistribution& baseline_jobs, const ShockRuns& runs,
                                   double alpha = 0.05) {
  const std::size_t m = runs.baseline.size();
  if (m < kMinSignificanceSamples || runs.shocked.size() != m)
    throw InsufficientData("summarise_shock: need m >= 3 runs in each suite");
  ShockReport rep;
  rep.spec = spec;
  rep.m = static_cast<int>(m);
  rep.fraction_shocked = shocked_fraction(baseline_jobs, spec.industries);
  for (auto d : kFlowDimensions) {
    auto& out = rep[d];
    double j = 0.0;
    for (std::size_t k = 0; k < m; ++k) j += weighted_jaccard_distance(runs.shocked[k].flows[d], runs.baseline[k].flows[d]);
    out.jaccard = j / static_cast<double>(m);
    out.band_min = std::numeric_limits<double>::infinity();
    out.band_max = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) {
        const double v = weighted_jaccard_distance(runs.baseline[a].flows[d], runs.baseline[b].flows[d]);
        out.band_min = std::min(out.band_min, v);
        out.band_max = std::max(out.band_max, v);
      }
    std::vector<Matrix> s, b;
    for (std::size_t k = 0; k < m; ++k) {
      s.push_back(runs.shocked[k].flows[d]);
      b.push_back(runs.baseline[k].flows[d]);
      out.clustering_shocked += weighted_clustering(s.back());
      out.clustering_baseline += weighted_clustering(b.back());
    }
    out.clustering_shocked /= static_cast<double>(m);
    out.clustering_baseline /= static_cast<double>(m);
    out.flagged = flow_significance(s, b, alpha);
  }
  return rep;
}

inline ScenarioConfig shocked_scenario(const ScenarioConfig& baseline, const ShockSpec& spec) {
  spec.validate(baseline.dims());
  ScenarioConfig shocked = baseline;
  shocked.jobs = apply_shock(baseline.jobs, spec);
  shocked.shock = spec;
  shocked.validate();
  return shocked;
}

// Suites of m runs on disjoint seed blocks derived from spec.seed: block 0
// for the baseline, block 1 for the shocked economy. Experiments sharing a
// spec seed therefore share their baseline suite.
inline std::vector<RunResult> run_baseline_suite(const ScenarioConfig& baseline, const ShockSpec& spec, int m,
                                                 unsigned threads = 0) {
  if (m < static_cast<int>(kMinSignificanceSamples)) throw InsufficientData("shock suites need m >= 3");
  RunOptions opt;
  opt.keep_log = false;
  return run_suite(baseline, seed_block(spec.seed, 0, static_cast<std::size_t>(m)), opt, threads);
}

inline std::vector<RunResult> run_shocked_suite(const ScenarioConfig& baseline, const ShockSpec& spec, int m,
                                                unsigned threads = 0) {
  if (m < static_cast<int>(kMinSignificanceSamples)) throw InsufficientData("shock suites need m >= 3");
  RunOptions opt;
  opt.keep_log = false;
  return run_suite(shocked_scenario(baseline, spec), seed_block(spec.seed, 1, static_cast<std::size_t>(m)), opt,
                   threads);
}

// Baseline and shocked suites; the shock is applied to the inputs before
// t = 0.
inline ShockReport run_experiment(const ScenarioConfig& baseline, const ShockSpec& spec, int m,
                                  unsigned threads = 0, ShockRuns* keep = nullptr) {
  ShockRuns runs;
  runs.baseline = run_baseline_suite(baseline, spec, m, threads);
  runs.shocked = run_shocked_suite(baseline, spec, m, threads);
  auto rep = summarise_shock(spec, baseline.jobs, runs);
  if (keep) *keep = std::move(runs);
  return rep;
}

}  // namespace lfn
