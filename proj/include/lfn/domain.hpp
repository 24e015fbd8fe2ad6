#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lfn {

using AgentId = std::int64_t;
using PositionId = std::int64_t;

// Region / industry / occupation coordinates of a job.
struct Cell {
  int region = 0;
  int industry = 0;
  int occupation = 0;
  bool operator==(const Cell&) const = default;
};

struct Dimensions {
  int regions = 0;
  int industries = 0;
  int occupations = 0;

  std::size_t cells() const noexcept {
    return static_cast<std::size_t>(regions) * static_cast<std::size_t>(industries) *
           static_cast<std::size_t>(occupations);
  }
  std::size_t index(const Cell& c) const noexcept {
    return (static_cast<std::size_t>(c.region) * static_cast<std::size_t>(industries) +
            static_cast<std::size_t>(c.industry)) *
               static_cast<std::size_t>(occupations) +
           static_cast<std::size_t>(c.occupation);
  }
  Cell cell(std::size_t index) const noexcept {
    Cell c;
    c.occupation = static_cast<int>(index % static_cast<std::size_t>(occupations));
    index /= static_cast<std::size_t>(occupations);
    c.industry = static_cast<int>(index % static_cast<std::size_t>(industries));
    c.region = static_cast<int>(index / static_cast<std::size_t>(industries));
    return c;
  }
  bool contains(const Cell& c) const noexcept {
    return c.region >= 0 && c.region < regions && c.industry >= 0 && c.industry < industries &&
           c.occupation >= 0 && c.occupation < occupations;
  }
  bool operator==(const Dimensions&) const = default;
};

// A job slot. `occupant` holds the slot index of the filling agent.
struct Position {
  PositionId id = 0;
  Cell cell;
  double wage = 1.0;
  std::optional<std::size_t> occupant;

  bool vacant() const noexcept { return !occupant.has_value(); }
};

// Where an agent last worked; used for similarity when unemployed.
struct JobSnapshot {
  Cell cell;
  double wage = 1.0;
  bool operator==(const JobSnapshot&) const = default;
};

struct Agent {
  AgentId id = 0;
  int age = 18;
  double alpha = 0.5;
  std::optional<std::size_t> position;  // slot index when employed
  JobSnapshot last;                     // current job if employed, else last one

  bool employed() const noexcept { return position.has_value(); }
};

// Age-indexed survival probabilities starting at `first_age`. Ages past the
// end of the table survive with probability 0.
struct SurvivalTable {
  int first_age = 18;
  std::vector<double> probability;

  int max_age() const noexcept { return first_age + static_cast<int>(probability.size()) - 1; }

  double at(int age) const noexcept {
    if (probability.empty() || age > max_age()) return 0.0;
    if (age < first_age) return probability.front();
    return probability[static_cast<std::size_t>(age - first_age)];
  }

  void validate(int entry_age) const {
    if (probability.empty()) throw ValidationError("survival", "empty table");
    if (first_age > entry_age)
      throw ValidationError("survival", "table starts above entry age " + std::to_string(entry_age));
    for (double p : probability)
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("survival", "probability outside [0,1]");
    if (probability.back() != 0.0)
      throw ValidationError("survival", "probability at maximum age must be 0");
  }

  bool operator==(const SurvivalTable&) const = default;
};

struct EconomyParams {
  int n_agents = 3500;
  int n_positions = 3600;
  double lambda = 0.0463;
  double gamma = 0.9662;
  double theta_e = 0.10;
  double theta_ue = 0.50;
  SurvivalTable survival;
  int entry_age = 18;
  int age_increment = 1;

  void validate() const {
    if (n_agents < 1) throw ValidationError("economy.n_agents", "must be positive");
    if (n_positions < 1) throw ValidationError("economy.n_positions", "must be positive");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(lambda)) throw ValidationError("economy.lambda", "must lie in [0,1]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("economy.gamma", "must lie in (0,1)");
    if (!unit(theta_e)) throw ValidationError("economy.theta_e", "must lie in [0,1]");
    if (!unit(theta_ue)) throw ValidationError("economy.theta_ue", "must lie in [0,1]");
    if (entry_age < 0) throw ValidationError("economy.entry_age", "must be non-negative");
    if (age_increment < 0) throw ValidationError("age_increment", "must be non-negative");
    survival.validate(entry_age);
  }

  bool operator==(const EconomyParams&) const = default;
};

// Position counts and wage moments per (region, industry, occupation) cell.
struct JobDistribution {
  Dimensions dims;
  std::vector<std::int64_t> counts;
  std::vector<double> wage_mean;
  std::vector<double> wage_std;

  JobDistribution() = default;
  explicit JobDistribution(Dimensions d)
      : dims(d), counts(d.cells(), 0), wage_mean(d.cells(), 1.0), wage_std(d.cells(), 0.0) {}

  std::int64_t total() const noexcept {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }

  std::int64_t& count(const Cell& c) { return counts[dims.index(c)]; }
  std::int64_t count(const Cell& c) const { return counts[dims.index(c)]; }

  void validate() const {
    const auto n = dims.cells();
    if (n == 0) throw ValidationError("jobs", "empty dimensions");
    if (counts.size() != n || wage_mean.size() != n || wage_std.size() != n)
      throw ValidationError("jobs", "array sizes do not match dimensions");
    for (std::size_t k = 0; k < n; ++k) {
      if (counts[k] < 0) throw ValidationError("jobs.counts", "negative count");
      if (counts[k] > 0 && !(wage_mean[k] > 0.0))
        throw ValidationError("jobs.wage_mean", "non-positive mean wage in a populated cell");
      if (!(wage_std[k] >= 0.0)) throw ValidationError("jobs.wage_std", "negative std");
    }
    if (total() <= 0) throw ValidationError("jobs.counts", "no positions");
  }

  bool operator==(const JobDistribution&) const = default;
};

// Lifetime utility at the optimal leisure choice for a fixed wage:
//   gamma^L / (1 - gamma) * w * alpha^alpha * ((1 - alpha) / w)^(1 - alpha)
inline double optimal_utility(int agent_age, double alpha, double wage, double gamma) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("optimal_utility: alpha must lie in (0,1)");
  if (!(wage > 0.0)) throw DomainError("optimal_utility: wage must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("optimal_utility: gamma must lie in (0,1)");
  if (agent_age < 0) throw DomainError("optimal_utility: age must be non-negative");
  const double discount = std::pow(gamma, agent_age) / (1.0 - gamma);
  return discount * wage * std::pow(alpha, alpha) * std::pow((1.0 - alpha) / wage, 1.0 - alpha);
}

// U*(candidate) > U*(current). Age, alpha and gamma are shared by both sides,
// so the closed form reduces to alpha^alpha (1-alpha)^(1-alpha) w^alpha, which
// is strictly increasing in w; comparing wages avoids pow rounding ties.
inline bool prefers_switch(double current_wage, double candidate_wage, double alpha) {
  if (!(current_wage > 0.0) || !(candidate_wage > 0.0))
    throw DomainError("prefers_switch: wages must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("prefers_switch: alpha must lie in (0,1)");
  return candidate_wage > current_wage;
}

inline bool prefers_switch(const Agent& agent, double candidate_wage, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("prefers_switch: gamma must lie in (0,1)");
  return prefers_switch(agent.last.wage, candidate_wage, agent.alpha);
}

}  // namespace lfn
