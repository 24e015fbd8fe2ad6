#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace lfn {

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("pearson: length mismatch");
  if (a.size() < 2) throw DegenerateError("pearson: need at least two entries");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma, db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DegenerateError("pearson: constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Pearson over all n^2 cells, diagonal included.
inline double pearson(const Matrix& a, const Matrix& b) {
  Matrix::require_same_shape(a, b, "pearson");
  return pearson(a.flat(), b.flat());
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.flat()) s += v * v;
  return std::sqrt(s);
}

inline double frobenius_distance(const Matrix& a, const Matrix& b) {
  Matrix::require_same_shape(a, b, "frobenius_distance");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.flat()[k] - b.flat()[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// 1 - sum(min)/sum(max). Absent edges are expected as zeros.
inline double weighted_jaccard_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("weighted_jaccard_distance: length mismatch");
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < 0.0 || b[k] < 0.0) throw DomainError("weighted_jaccard_distance: negative weight");
    lo += std::min(a[k], b[k]);
    hi += std::max(a[k], b[k]);
  }
  if (!(hi > 0.0)) throw DegenerateError("weighted_jaccard_distance: both vectors are zero");
  return 1.0 - lo / hi;
}

inline double weighted_jaccard_distance(const Matrix& a, const Matrix& b) {
  Matrix::require_same_shape(a, b, "weighted_jaccard_distance");
  return weighted_jaccard_distance(a.flat(), b.flat());
}

// Average weighted clustering of a flow matrix. Directions are merged by
// summing w_ij + w_ji, self-loops dropped, weights scaled by the largest edge;
// each node scores the geometric-mean intensity of its closed triangles over
// deg * (deg - 1). Isolated and degree-1 nodes score 0.
inline double weighted_clustering(const Matrix& flows) {
  if (!flows.is_square()) throw ShapeMismatch("weighted_clustering: matrix must be square");
  const std::size_t n = flows.rows();
  if (n == 0) return 0.0;
  Matrix w(n, n);
  double max_w = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (flows(i, j) < 0.0) throw DomainError("weighted_clustering: negative weight");
      w(i, j) = flows(i, j) + flows(j, i);
      max_w = std::max(max_w, w(i, j));
    }
  if (!(max_w > 0.0)) return 0.0;
  Matrix cube(n, n);
  for (std::size_t k = 0; k < w.size(); ++k) cube.flat()[k] = std::cbrt(w.flat()[k] / max_w);

  double total = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<std::size_t> nbrs;
    for (std::size_t v = 0; v < n; ++v)
      if (w(u, v) > 0.0) nbrs.push_back(v);
    const std::size_t deg = nbrs.size();
    if (deg < 2) continue;
    double tri = 0.0;
    for (std::size_t a = 0; a < deg; ++a)
      for (std::size_t b = a + 1; b < deg; ++b)
        tri += cube(u, nbrs[a]) * cube(u, nbrs[b]) * cube(nbrs[a], nbrs[b]);
    total += 2.0 * tri / static_cast<double>(deg * (deg - 1));
  }
  return total / static_cast<double>(n);
}

// Midranks (1-based) of the values; ties share the mean of their positions.
inline std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return values[l] < values[r]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("spearman: length mismatch");
  const auto ra = midranks(a);
  const auto rb = midranks(b);
  return pearson(ra, rb);
}

struct MannWhitneyResult {
  double u = 0.0;        // U of the first sample: #(x > y) + 0.5 #(x == y)
  double p_value = 1.0;  // two-sided
  bool exact = false;
};

// Largest group size for which the permutation distribution is enumerated.
inline constexpr std::size_t kMannWhitneyExactLimit = 8;

inline MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  const std::size_t nx = x.size(), ny = y.size();
  if (nx == 0 || ny == 0) throw InsufficientData("mann_whitney_u: empty sample");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);

  double rank_sum = 0.0;
  for (std::size_t k = 0; k < nx; ++k) rank_sum += ranks[k];
  const double fx = static_cast<double>(nx), fy = static_cast<double>(ny);
  MannWhitneyResult res;
  res.u = rank_sum - fx * (fx + 1.0) / 2.0;
  const double mean_u = fx * fy / 2.0;

  if (nx <= kMannWhitneyExactLimit && ny <= kMannWhitneyExactLimit) {
    // Enumerate every assignment of nx pooled midranks to the first group.
    // Doubled midranks are integers, so the comparison is exact.
    const std::size_t n = nx + ny;
    std::vector<std::int64_t> twice(n);
    for (std::size_t k = 0; k < n; ++k) twice[k] = static_cast<std::int64_t>(std::llround(2.0 * ranks[k]));
    const std::int64_t twice_expected = static_cast<std::int64_t>(nx * (n + 1));  // 2 * nx(n+1)/2
    const std::int64_t observed = std::llabs(static_cast<std::int64_t>(std::llround(2.0 * rank_sum)) - twice_expected);
    std::uint64_t extreme = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != nx) continue;
      std::int64_t s = 0;
      for (std::size_t k = 0; k < n; ++k)
        if (mask & (1u << k)) s += twice[k];
      ++total;
      if (std::llabs(s - twice_expected) >= observed) ++extreme;
    }
    res.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    res.exact = true;
    return res;
  }

  // Normal approximation with tie correction and continuity correction.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double n = fx + fy;
  const double var = fx * fy / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    res.p_value = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::abs(res.u - mean_u) - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

struct DimensionFit {
  double pearson = 0.0;
  double frobenius = 0.0;
};

// Per-dimension agreement plus a total weighted by matrix cell counts.
struct FitReport {
  DimensionFit region, industry, occupation, total;
};

inline FitReport fit_report(const Matrix& sim_r, const Matrix& obs_r, const Matrix& sim_i, const Matrix& obs_i,
                            const Matrix& sim_o, const Matrix& obs_o) {
  FitReport rep;
  auto one = [](const Matrix& s, const Matrix& o) {
    return DimensionFit{pearson(s, o), frobenius_distance(s, o)};
  };
  rep.region = one(sim_r, obs_r);
  rep.industry = one(sim_i, obs_i);
  rep.occupation = one(sim_o, obs_o);
  const double wr = static_cast<double>(obs_r.size()), wi = static_cast<double>(obs_i.size()),
               wo = static_cast<double>(obs_o.size());
  const double w = wr + wi + wo;
  rep.total.pearson = (wr * rep.region.pearson + wi * rep.industry.pearson + wo * rep.occupation.pearson) / w;
  rep.total.frobenius =
      (wr * rep.region.frobenius + wi * rep.industry.frobenius + wo * rep.occupation.frobenius) / w;
  return rep;
}

}  // namespace lfn
