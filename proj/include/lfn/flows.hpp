#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "metrics.hpp"

namespace lfn {

enum class FlowDimension { region, industry, occupation };

inline constexpr std::array<FlowDimension, 3> kFlowDimensions = {FlowDimension::region, FlowDimension::industry,
                                                                 FlowDimension::occupation};

inline const char* to_string(FlowDimension d) {
  switch (d) {
    case FlowDimension::region: return "region";
    case FlowDimension::industry: return "industry";
    case FlowDimension::occupation: return "occupation";
  }
  return "?";
}

inline int category(const Cell& c, FlowDimension d) noexcept {
  switch (d) {
    case FlowDimension::region: return c.region;
    case FlowDimension::industry: return c.industry;
    case FlowDimension::occupation: return c.occupation;
  }
  return 0;
}

enum class MoverStatus : std::uint8_t { employed, unemployed };

// One realised hire: the mover's previous (or last) job cell to the new one.
struct TransitionRecord {
  std::int64_t step = 0;
  Cell from;
  Cell to;
  MoverStatus mover = MoverStatus::employed;
  double wage_from = 0.0;
  double wage_to = 0.0;
  bool operator==(const TransitionRecord&) const = default;
};

// Densities summing to 1, or all zeros when no transitions were seen.
inline Matrix accumulate(std::span<const TransitionRecord> transitions, FlowDimension dim, int n) {
  Matrix m = Matrix::square(static_cast<std::size_t>(n));
  for (const auto& t : transitions) {
    const int a = category(t.from, dim), b = category(t.to, dim);
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw IndexOutOfRange(std::string("accumulate: ") + to_string(dim) + " index out of range");
    m(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) += 1.0;
  }
  if (!transitions.empty()) m *= 1.0 / static_cast<double>(transitions.size());
  return m;
}

// The region, industry and occupation matrices of one network snapshot.
struct FlowTriple {
  Matrix region, industry, occupation;

  const Matrix& operator[](FlowDimension d) const {
    switch (d) {
      case FlowDimension::region: return region;
      case FlowDimension::industry: return industry;
      case FlowDimension::occupation: return occupation;
    }
    return region;
  }
  Matrix& operator[](FlowDimension d) {
    return const_cast<Matrix&>(static_cast<const FlowTriple&>(*this)[d]);
  }

  static FlowTriple zeros(const Dimensions& dims) {
    return {Matrix::square(static_cast<std::size_t>(dims.regions)),
            Matrix::square(static_cast<std::size_t>(dims.industries)),
            Matrix::square(static_cast<std::size_t>(dims.occupations))};
  }

  bool operator==(const FlowTriple&) const = default;
};

inline FlowTriple accumulate_all(std::span<const TransitionRecord> transitions, const Dimensions& dims) {
  return {accumulate(transitions, FlowDimension::region, dims.regions),
          accumulate(transitions, FlowDimension::industry, dims.industries),
          accumulate(transitions, FlowDimension::occupation, dims.occupations)};
}

// Running transition counts; densities on demand.
class FlowCounter {
 public:
  FlowCounter() = default;
  explicit FlowCounter(const Dimensions& dims) : counts_(FlowTriple::zeros(dims)) {}

  void add(const TransitionRecord& t) {
    for (auto d : kFlowDimensions)
      counts_[d](static_cast<std::size_t>(category(t.from, d)), static_cast<std::size_t>(category(t.to, d))) += 1.0;
    ++total_;
  }
  void add(const FlowCounter& other) {
    for (auto d : kFlowDimensions) counts_[d] += other.counts_[d];
    total_ += other.total_;
  }
  void subtract(const FlowCounter& other) {
    for (auto d : kFlowDimensions) counts_[d] -= other.counts_[d];
    total_ -= other.total_;
  }

  std::int64_t total() const noexcept { return total_; }
  const FlowTriple& counts() const noexcept { return counts_; }

  FlowTriple densities() const {
    FlowTriple out = counts_;
    if (total_ > 0)
      for (auto d : kFlowDimensions) out[d] *= 1.0 / static_cast<double>(total_);
    return out;
  }

 private:
  FlowTriple counts_;
  std::int64_t total_ = 0;
};

// Mean Frobenius distance between simulated and observed networks.
inline double error_xi(const FlowTriple& sim, const FlowTriple& obs) {
  double s = 0.0;
  for (auto d : kFlowDimensions) s += frobenius_distance(sim[d], obs[d]);
  return s / 3.0;
}

struct SteadyStateParams {
  int window = 20;
  int lag = 20;
  double epsilon = 1e-3;
  int max_steps = 2000;

  void validate() const {
    if (window < 1) throw ValidationError("steady_state.window", "must be >= 1");
    if (lag < 1) throw ValidationError("steady_state.lag", "must be >= 1");
    if (!(epsilon > 0.0)) throw ValidationError("steady_state.epsilon", "must be > 0");
    if (max_steps < 1) throw ValidationError("steady_state.max_steps", "must be >= 1");
  }

  // Entries needed before the condition can be evaluated.
  std::size_t min_history() const noexcept { return static_cast<std::size_t>(window + lag + 1); }

  bool operator==(const SteadyStateParams&) const = default;
};

// Compares the mean of Xi over [T-k, T] with the mean over [T-k-l, T-l]
// (both inclusive, k+1 entries each), T being the last entry.
inline bool steady_state_reached(std::span<const double> xi_history, const SteadyStateParams& p) {
  if (p.window < 1 || p.lag < 1) throw ValidationError("steady_state", "window and lag must be >= 1");
  if (xi_history.size() < p.min_history())
    throw InsufficientData("steady_state_reached: need " + std::to_string(p.min_history()) +
                           " entries, have " + std::to_string(xi_history.size()));
  const std::size_t last = xi_history.size() - 1;
  const auto k = static_cast<std::size_t>(p.window), l = static_cast<std::size_t>(p.lag);
  double recent = 0.0, lagged = 0.0;
  for (std::size_t t = last - k; t <= last; ++t) recent += xi_history[t];
  for (std::size_t t = last - k - l; t <= last - l; ++t) lagged += xi_history[t];
  const double width = static_cast<double>(k + 1);
  return std::abs(recent / width - lagged / width) < p.epsilon;
}

}  // namespace lfn
