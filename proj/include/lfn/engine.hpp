#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "flows.hpp"
#include "random.hpp"
#include "scenario.hpp"
#include "similarity.hpp"

namespace lfn {

struct StepStats {
  std::int64_t destroyed = 0;
  std::int64_t active = 0;
  std::int64_t applications = 0;
  std::int64_t hires = 0;
  std::int64_t deaths = 0;
};

struct SimulationState {
  std::vector<Agent> agents;
  std::vector<Position> positions;
  std::int64_t step = 0;
  Rng rng;
  std::vector<TransitionRecord> transition_log;
  std::vector<TransitionRecord> last_transitions;  // hires of the most recent step
  StepStats last_stats;
  AgentId next_agent_id = 0;
  PositionId next_position_id = 0;
  bool keep_log = true;
};

// Everything a step reads but never changes.
struct StepContext {
  const EconomyParams& economy;
  const JobDistribution& jobs;
  const SimilarityKernel& kernel;
  const AlphaDistribution& alpha;
  CellSampler cells;

  StepContext(const EconomyParams& e, const JobDistribution& j, const SimilarityKernel& k,
              const AlphaDistribution& a)
      : economy(e), jobs(j), kernel(k), alpha(a), cells(j) {}
};

struct Vacancy {
  std::size_t slot = 0;
  Cell cell;
  double wage = 0.0;
};

struct Application {
  std::size_t agent = 0;  // agent slot
  double score = 0.0;     // S(k, g)
  std::int64_t submission = 0;
};

// Draws vacancies with probability proportional to S(origin, vacancy).
// S factorises into region, industry and occupation terms, so a draw picks a
// (region, industry) block, then an occupation within it, then a vacancy of
// that cell uniformly; the product of the three stages is S / sum(S).
// Tables are built lazily per origin and reused while the pool is frozen.
class VacancySampler {
 public:
  VacancySampler(std::span<const Vacancy> vacancies, const SimilarityKernel& kernel, const Dimensions& dims)
      : vacancies_(vacancies), kernel_(&kernel), dims_(dims), by_cell_(dims.cells()) {
    for (std::size_t v = 0; v < vacancies.size(); ++v) by_cell_[dims.index(vacancies[v].cell)].push_back(v);
  }

  // Index into the vacancy span, or nothing when the pool is empty or every
  // score from this origin is zero.
  std::optional<std::size_t> sample(const Cell& origin, Rng& rng) {
    if (vacancies_.empty()) return std::nullopt;
    const auto& blocks = block_table(origin);
    const auto block = draw(blocks, rng);
    if (!block) return std::nullopt;
    const int r = static_cast<int>(*block / static_cast<std::size_t>(dims_.industries));
    const int i = static_cast<int>(*block % static_cast<std::size_t>(dims_.industries));

    occ_cum_.clear();
    double acc = 0.0;
    const auto& occ = kernel_->occupation();
    for (int o = 0; o < dims_.occupations; ++o) {
      const auto n = by_cell_[dims_.index({r, i, o})].size();
      acc += static_cast<double>(n) * occ(static_cast<std::size_t>(origin.occupation), static_cast<std::size_t>(o));
      occ_cum_.push_back(acc);
    }
    const auto o = draw(occ_cum_, rng);
    if (!o) return std::nullopt;
    const auto& pool = by_cell_[dims_.index({r, i, static_cast<int>(*o)})];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)];
  }

  double score(const Cell& origin, std::size_t vacancy) const {
    return (*kernel_)(origin, vacancies_[vacancy].cell);
  }

 private:
  // Index of a positive-weight entry of a cumulative table, drawn in
  // proportion to its weight.
  static std::optional<std::size_t> draw(const std::vector<double>& cum, Rng& rng) {
    const double total = cum.back();
    if (!(total > 0.0)) return std::nullopt;
    const double u = uniform01(rng) * total;
    auto idx = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (idx == cum.size()) {
      // u rounded up to the total; take the last entry with positive weight.
      idx = cum.size() - 1;
      while (idx > 0 && cum[idx] == cum[idx - 1]) --idx;
    }
    return idx;
  }

  // sum over occupations o' of (#vacancies in (r, i, o')) * O^nu(origin_o, o')
  const std::vector<double>& occupation_mass(int origin_occupation) {
    auto [it, inserted] = occ_mass_.try_emplace(origin_occupation);
    if (inserted) {
      const auto& occ = kernel_->occupation();
      const auto blocks = static_cast<std::size_t>(dims_.regions) * static_cast<std::size_t>(dims_.industries);
      it->second.assign(blocks, 0.0);
      for (std::size_t b = 0; b < blocks; ++b) {
        double m = 0.0;
        for (int o = 0; o < dims_.occupations; ++o) {
          const auto n = by_cell_[b * static_cast<std::size_t>(dims_.occupations) + static_cast<std::size_t>(o)].size();
          if (n) m += static_cast<double>(n) * occ(static_cast<std::size_t>(origin_occupation), static_cast<std::size_t>(o));
        }
        it->second[b] = m;
      }
    }
    return it->second;
  }

  const std::vector<double>& block_table(const Cell& origin) {
    const auto key = dims_.index(origin);
    auto it = blocks_.find(key);
    if (it != blocks_.end()) return it->second;
    const auto& mass = occupation_mass(origin.occupation);
    const auto& reg = kernel_->region();
    const auto& ind = kernel_->industry();
    std::vector<double> cum;
    cum.reserve(mass.size());
    double acc = 0.0;
    const auto ro = static_cast<std::size_t>(origin.region), io = static_cast<std::size_t>(origin.industry);
    for (int r = 0; r < dims_.regions; ++r) {
      const double a = reg(ro, static_cast<std::size_t>(r));
      for (int i = 0; i < dims_.industries; ++i) {
        const auto b = static_cast<std::size_t>(r) * static_cast<std::size_t>(dims_.industries) + static_cast<std::size_t>(i);
        if (mass[b] > 0.0) acc += a * ind(io, static_cast<std::size_t>(i)) * mass[b];
        cum.push_back(acc);
      }
    }
    return blocks_.emplace(key, std::move(cum)).first->second;
  }

  std::span<const Vacancy> vacancies_;
  const SimilarityKernel* kernel_;
  Dimensions dims_;
  std::vector<std::vector<std::size_t>> by_cell_;
  std::unordered_map<int, std::vector<double>> occ_mass_;
  std::unordered_map<std::size_t, std::vector<double>> blocks_;
  std::vector<double> occ_cum_;
};

// Samples one vacancy for an active agent and decides whether to apply.
// Employed agents apply only to a strictly better-paid match; unemployed
// agents apply to any match.
inline std::optional<std::size_t> match_and_apply(const Agent& agent, VacancySampler& sampler,
                                                  std::span<const Vacancy> vacancies, Rng& rng) {
  const auto pick = sampler.sample(agent.last.cell, rng);
  if (!pick) return std::nullopt;
  if (agent.employed() && !prefers_switch(agent.last.wage, vacancies[*pick].wage, agent.alpha)) return std::nullopt;
  return pick;
}

inline std::optional<std::size_t> match_and_apply(const Agent& agent, std::span<const Vacancy> vacancies,
                                                  const SimilarityKernel& kernel, const Dimensions& dims, Rng& rng) {
  VacancySampler sampler(vacancies, kernel, dims);
  return match_and_apply(agent, sampler, vacancies, rng);
}

// Best applicant: highest S, then earliest submission.
inline std::optional<std::size_t> rank_and_hire(std::span<const Application> applications) {
  if (applications.empty()) return std::nullopt;
  const auto best = std::min_element(applications.begin(), applications.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.submission < b.submission;
  });
  return best->agent;
}

namespace detail {

inline Position make_position(SimulationState& s, const StepContext& ctx) {
  Position p;
  p.id = s.next_position_id++;
  const auto job = ctx.cells.sample_job(s.rng);
  p.cell = job.cell;
  p.wage = job.wage;
  return p;
}

inline Agent make_entrant(SimulationState& s, const StepContext& ctx, int age) {
  Agent a;
  a.id = s.next_agent_id++;
  a.age = age;
  a.alpha = ctx.alpha.sample(s.rng);
  a.last = ctx.cells.sample_job(s.rng);
  return a;
}

inline void vacate(SimulationState& s, std::size_t position_slot) {
  auto& p = s.positions[position_slot];
  if (p.occupant) {
    auto& a = s.agents[*p.occupant];
    a.position.reset();
    a.last = JobSnapshot{p.cell, p.wage};
    p.occupant.reset();
  }
}

inline void fill(SimulationState& s, std::size_t position_slot, std::size_t agent_slot) {
  auto& p = s.positions[position_slot];
  auto& a = s.agents[agent_slot];
  p.occupant = agent_slot;
  a.position = position_slot;
  a.last = JobSnapshot{p.cell, p.wage};
}

}  // namespace detail

// Builds the initial population: positions from the job counts, a vacancy
// fraction left open, remaining slots filled at random, leftover agents
// unemployed with a sampled previous job.
inline SimulationState initialise(const ScenarioConfig& cfg, const StepContext& ctx, std::uint64_t seed) {
  SimulationState s;
  s.rng.seed(seed);
  const auto& jobs = cfg.jobs;
  s.positions.reserve(static_cast<std::size_t>(jobs.total()));
  for (std::size_t k = 0; k < jobs.counts.size(); ++k) {
    for (std::int64_t c = 0; c < jobs.counts[k]; ++c) {
      Position p;
      p.id = s.next_position_id++;
      p.cell = jobs.dims.cell(k);
      p.wage = draw_wage(s.rng, jobs.wage_mean[k], jobs.wage_std[k]);
      s.positions.push_back(p);
    }
  }
  const auto n_agents = static_cast<std::size_t>(cfg.economy.n_agents);
  s.agents.reserve(n_agents);
  std::uniform_int_distribution<int> age(cfg.initial_age_min, cfg.initial_age_max);
  for (std::size_t k = 0; k < n_agents; ++k) {
    Agent a;
    a.id = s.next_agent_id++;
    a.age = age(s.rng);
    a.alpha = cfg.alpha.sample(s.rng);
    s.agents.push_back(a);
  }
  const auto n_pos = s.positions.size();
  const auto open = static_cast<std::size_t>(std::llround(cfg.vacancy_fraction * static_cast<double>(n_pos)));
  const auto filled = std::min(n_agents, n_pos - std::min(open, n_pos));
  std::vector<std::size_t> order(n_pos);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), s.rng);
  for (std::size_t k = 0; k < filled; ++k) detail::fill(s, order[k], k);
  for (std::size_t k = filled; k < n_agents; ++k) s.agents[k].last = ctx.cells.sample_job(s.rng);
  return s;
}

// One period: destroy/create positions, age and search, hire, survive.
inline void step(SimulationState& s, const StepContext& ctx) {
  const auto& econ = ctx.economy;
  StepStats stats;
  s.last_transitions.clear();

  // Destruction, then as many new vacant positions as were destroyed.
  std::vector<std::size_t> destroyed;
  for (std::size_t k = 0; k < s.positions.size(); ++k)
    if (bernoulli(s.rng, econ.lambda)) destroyed.push_back(k);
  for (auto k : destroyed) detail::vacate(s, k);
  for (auto k : destroyed) s.positions[k] = detail::make_position(s, ctx);
  stats.destroyed = static_cast<std::int64_t>(destroyed.size());

  // Ageing, activation, matching and application. The vacancy pool is
  // frozen for the whole phase.
  std::vector<Vacancy> vacancies;
  for (std::size_t k = 0; k < s.positions.size(); ++k)
    if (s.positions[k].vacant()) vacancies.push_back({k, s.positions[k].cell, s.positions[k].wage});
  VacancySampler sampler(vacancies, ctx.kernel, ctx.jobs.dims);
  std::vector<std::vector<Application>> applications(vacancies.size());
  std::int64_t submission = 0;
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    auto& a = s.agents[k];
    a.age += econ.age_increment;
    if (!bernoulli(s.rng, a.employed() ? econ.theta_e : econ.theta_ue)) continue;
    ++stats.active;
    const auto target = match_and_apply(a, sampler, vacancies, s.rng);
    if (!target) continue;
    applications[*target].push_back({k, sampler.score(a.last.cell, *target), submission++});
  }
  stats.applications = submission;

  // Vacancies hire in random order. Each agent applied at most once, so a
  // hire never invalidates another vacancy's list.
  std::vector<std::size_t> order(vacancies.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), s.rng);
  for (auto v : order) {
    const auto hired = rank_and_hire(applications[v]);
    if (!hired) continue;
    auto& a = s.agents[*hired];
    TransitionRecord t;
    t.step = s.step;
    t.from = a.last.cell;
    t.wage_from = a.last.wage;
    t.mover = a.employed() ? MoverStatus::employed : MoverStatus::unemployed;
    if (a.position) detail::vacate(s, *a.position);
    const auto slot = vacancies[v].slot;
    detail::fill(s, slot, *hired);
    t.to = s.positions[slot].cell;
    t.wage_to = s.positions[slot].wage;
    s.last_transitions.push_back(t);
    ++stats.hires;
  }

  // Survival; the dead are replaced by unemployed entrants.
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    if (bernoulli(s.rng, econ.survival.at(s.agents[k].age))) continue;
    if (s.agents[k].position) detail::vacate(s, *s.agents[k].position);
    s.agents[k] = detail::make_entrant(s, ctx, econ.entry_age);
    ++stats.deaths;
  }

  if (s.keep_log)
    s.transition_log.insert(s.transition_log.end(), s.last_transitions.begin(), s.last_transitions.end());
  s.last_stats = stats;
  ++s.step;
}

// Checks conservation and the bidirectional agent/position links.
inline bool state_consistent(const SimulationState& s, std::size_t n_agents, std::size_t n_positions) {
  if (s.agents.size() != n_agents || s.positions.size() != n_positions) return false;
  for (std::size_t k = 0; k < s.positions.size(); ++k) {
    const auto& p = s.positions[k];
    if (!(p.wage > 0.0)) return false;
    if (p.occupant) {
      if (*p.occupant >= s.agents.size()) return false;
      const auto& a = s.agents[*p.occupant];
      if (!a.position || *a.position != k) return false;
    }
  }
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    const auto& a = s.agents[k];
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) return false;
    if (a.position) {
      if (*a.position >= s.positions.size()) return false;
      const auto& p = s.positions[*a.position];
      if (!p.occupant || *p.occupant != k) return false;
    } else if (!(a.last.wage > 0.0)) {
      return false;
    }
  }
  return true;
}

struct RunOptions {
  bool keep_log = true;
  // Fixed step budget instead of steady-state detection (burn-in steps).
  std::optional<int> fixed_burn_in;
};

struct RunResult {
  SimulationState state;
  FlowTriple flows;            // densities over the collection window
  FlowCounter collected;       // raw counts over the collection window
  std::vector<double> xi_history;
  std::int64_t steady_step = 0;  // step at which the steady state was declared
  std::uint64_t seed = 0;
};

inline FlowTriple uniform_reference(const Dimensions& d) {
  auto u = [](int n) {
    const auto s = static_cast<std::size_t>(n);
    return Matrix(s, s, 1.0 / static_cast<double>(s * s));
  };
  return {u(d.regions), u(d.industries), u(d.occupations)};
}

// Steps until the Xi criterion holds (against the observed networks when
// given, else a uniform reference), then collects `collection_steps` more.
inline RunResult run(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opt = {}) {
  const SimilarityKernel kernel(cfg.similarity);
  const StepContext ctx(cfg.economy, cfg.jobs, kernel, cfg.alpha);
  const auto dims = cfg.jobs.dims;
  const FlowTriple reference = cfg.observed ? *cfg.observed : uniform_reference(dims);

  RunResult out;
  out.seed = seed;
  out.state = initialise(cfg, ctx, seed);
  out.state.keep_log = opt.keep_log;

  FlowCounter cumulative(dims), windowed(dims);
  std::deque<FlowCounter> window;
  const auto& ss = cfg.steady_state;
  bool steady = false;
  while (!steady) {
    if (out.state.step >= ss.max_steps)
      throw NonConvergence("run: steady state not reached within " + std::to_string(ss.max_steps) + " steps");
    step(out.state, ctx);
    FlowCounter this_step(dims);
    for (const auto& t : out.state.last_transitions) this_step.add(t);
    cumulative.add(this_step);
    if (cfg.xi_mode == XiMode::windowed) {
      windowed.add(this_step);
      window.push_back(std::move(this_step));
      if (window.size() > static_cast<std::size_t>(ss.window)) {
        windowed.subtract(window.front());
        window.pop_front();
      }
    }
    const auto& source = cfg.xi_mode == XiMode::windowed ? windowed : cumulative;
    out.xi_history.push_back(error_xi(source.densities(), reference));
    if (opt.fixed_burn_in) {
      steady = out.state.step >= *opt.fixed_burn_in;
    } else if (out.xi_history.size() >= ss.min_history()) {
      steady = steady_state_reached(out.xi_history, ss);
    }
  }
  out.steady_step = out.state.step;

  out.collected = FlowCounter(dims);
  for (int k = 0; k < cfg.collection_steps; ++k) {
    step(out.state, ctx);
    for (const auto& t : out.state.last_transitions) out.collected.add(t);
  }
  out.flows = out.collected.densities();
  return out;
}

}  // namespace lfn
