#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "flows.hpp"
#include "random.hpp"
#include "similarity.hpp"

namespace lfn {

struct NodeMetadata {
  std::vector<std::string> regions;
  std::vector<std::string> industries;
  std::vector<std::string> occupations;

  Dimensions dims() const noexcept {
    return {static_cast<int>(regions.size()), static_cast<int>(industries.size()),
            static_cast<int>(occupations.size())};
  }
  const std::vector<std::string>& labels(FlowDimension d) const {
    switch (d) {
      case FlowDimension::region: return regions;
      case FlowDimension::industry: return industries;
      case FlowDimension::occupation: return occupations;
    }
    return regions;
  }
  bool operator==(const NodeMetadata&) const = default;
};

struct CalibrationConfig {
  int m_simulations = 5;
  double threshold = 1e-4;
  int max_iterations = 30;
  int collection_steps = 200;
  std::vector<std::uint64_t> seeds;  // length M; generated from the scenario seed when empty
  bool fixed_seeds = true;           // reuse the same seeds every iteration
  bool signed_mean_error = false;

  void validate() const {
    if (m_simulations < 1) throw ValidationError("calibration.m_simulations", "must be >= 1");
    if (!(threshold > 0.0)) throw ValidationError("calibration.threshold", "must be > 0");
    if (max_iterations < 1) throw ValidationError("calibration.max_iterations", "must be >= 1");
    if (collection_steps < 1) throw ValidationError("calibration.collection_steps", "must be >= 1");
    if (!seeds.empty() && seeds.size() != static_cast<std::size_t>(m_simulations))
      throw ValidationError("calibration.seeds", "length must equal m_simulations");
  }
  bool operator==(const CalibrationConfig&) const = default;
};

enum class ShockKind { positional, wage_up, wage_down };

struct ShockSpec {
  ShockKind kind = ShockKind::positional;
  std::vector<int> industries;
  bool homogenise_region = true;
  bool homogenise_occupation = true;
  double sigma_multiplier = 2.0;
  std::uint64_t seed = 0;
  std::optional<int> region_target;      // overrides the proportional draw
  std::optional<int> occupation_target;  // likewise

  void validate(const Dimensions& dims) const {
    if (industries.empty()) throw ValidationError("shock.industries", "must be non-empty");
    for (int i : industries)
      if (i < 0 || i >= dims.industries) throw ValidationError("shock.industries", "index out of range");
    if (kind == ShockKind::positional && !homogenise_region && !homogenise_occupation)
      throw ValidationError("shock.homogenise", "positional shock must homogenise region or occupation");
    if (region_target && (*region_target < 0 || *region_target >= dims.regions))
      throw ValidationError("shock.region_target", "index out of range");
    if (occupation_target && (*occupation_target < 0 || *occupation_target >= dims.occupations))
      throw ValidationError("shock.occupation_target", "index out of range");
  }
  bool operator==(const ShockSpec&) const = default;
};

enum class XiMode { cumulative, windowed };

// Paths the scenario was loaded from; empty when built in memory.
struct ScenarioSources {
  std::string jobs;
  std::string distances;
  std::string io_table;
  std::string skills;
  std::string similarity_region, similarity_industry, similarity_occupation;
  std::string labels;
  std::string survival;
  std::string nu_region, nu_industry, nu_occupation;
  std::string observed_region, observed_industry, observed_occupation;
  bool operator==(const ScenarioSources&) const = default;
};

// A fully loaded, validated run specification.
struct ScenarioConfig {
  EconomyParams economy;
  JobDistribution jobs;
  SimilarityBundle similarity;
  NodeMetadata labels;
  SteadyStateParams steady_state;
  XiMode xi_mode = XiMode::cumulative;
  int collection_steps = 200;
  AlphaDistribution alpha;
  int initial_age_min = 18;
  int initial_age_max = 65;
  double vacancy_fraction = 800.0 / 36000.0;
  std::vector<std::uint64_t> seeds = {1};
  std::optional<CalibrationConfig> calibration;
  std::optional<ShockSpec> shock;
  std::optional<FlowTriple> observed;
  ScenarioSources sources;
  std::string output_dir = "out";

  Dimensions dims() const noexcept { return jobs.dims; }

  void validate() const {
    economy.validate();
    jobs.validate();
    similarity.validate();
    steady_state.validate();
    alpha.validate();
    const auto d = jobs.dims;
    if (similarity.dims() != d)
      throw DimensionMismatch(sources.jobs.empty() ? "jobs" : sources.jobs, "similarity",
                              "category counts differ between job distribution and similarity matrices");
    if (labels.dims() != d)
      throw DimensionMismatch(sources.labels.empty() ? "labels" : sources.labels,
                              sources.jobs.empty() ? "jobs" : sources.jobs, "label counts differ from job dimensions");
    if (jobs.total() != economy.n_positions)
      throw ValidationError("economy.n_positions", "does not equal the job distribution total " +
                                                       std::to_string(jobs.total()));
    if (collection_steps < 1) throw ValidationError("collection_steps", "must be >= 1");
    if (initial_age_min < 0 || initial_age_max < initial_age_min)
      throw ValidationError("initial_age", "need 0 <= min <= max");
    if (!(vacancy_fraction >= 0.0 && vacancy_fraction < 1.0))
      throw ValidationError("vacancy_fraction", "must lie in [0,1)");
    if (seeds.empty()) throw ValidationError("seeds", "at least one seed required");
    if (calibration) calibration->validate();
    if (shock) shock->validate(d);
    if (observed) {
      const auto& o = *observed;
      if (o.region.rows() != static_cast<std::size_t>(d.regions) || !o.region.is_square() ||
          o.industry.rows() != static_cast<std::size_t>(d.industries) || !o.industry.is_square() ||
          o.occupation.rows() != static_cast<std::size_t>(d.occupations) || !o.occupation.is_square())
        throw DimensionMismatch("observed", "jobs", "observed flow matrices do not match dimensions");
    }
  }

  bool operator==(const ScenarioConfig&) const = default;
};

}  // namespace lfn
