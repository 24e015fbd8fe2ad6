#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "matrix.hpp"

namespace lfn {

using SkillVector = std::vector<double>;

// Geographical proximity from pairwise distances: 1 at the closest pair
// (the diagonal, for a zero-diagonal input) and 0 at the farthest.
inline Matrix region_similarity(const Matrix& distances) {
  if (!distances.is_square() || distances.empty())
    throw ShapeMismatch("region_similarity: distances must be square and non-empty");
  const auto [lo_it, hi_it] = std::minmax_element(distances.flat().begin(), distances.flat().end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw DegenerateError("region_similarity: all distances equal");
  Matrix out(distances.rows(), distances.cols());
  for (std::size_t k = 0; k < distances.size(); ++k)
    out.flat()[k] = 1.0 - (distances.flat()[k] - lo) / (hi - lo);
  return out;
}

// Row-stochastic share of industry i's inputs that come from industry j.
inline Matrix industry_affinity(const Matrix& io_table) {
  if (!io_table.is_square() || io_table.empty())
    throw ShapeMismatch("industry_affinity: io table must be square and non-empty");
  Matrix out(io_table.rows(), io_table.cols());
  for (std::size_t i = 0; i < io_table.rows(); ++i) {
    double total = 0.0;
    for (double x : io_table.row(i)) {
      if (x < 0.0) throw DomainError("industry_affinity: negative input value");
      total += x;
    }
    if (!(total > 0.0)) throw DegenerateError("industry_affinity: row " + std::to_string(i) + " sums to 0");
    for (std::size_t j = 0; j < io_table.cols(); ++j) out(i, j) = io_table(i, j) / total;
  }
  return out;
}

// Cosine similarity between occupation skill vectors.
inline Matrix occupation_closeness(std::span<const SkillVector> skills) {
  if (skills.empty()) throw ShapeMismatch("occupation_closeness: no skill vectors");
  const std::size_t n_s = skills.front().size();
  std::vector<double> norms;
  norms.reserve(skills.size());
  for (std::size_t i = 0; i < skills.size(); ++i) {
    if (skills[i].size() != n_s) throw ShapeMismatch("occupation_closeness: ragged skill vectors");
    double sq = 0.0;
    for (double v : skills[i]) {
      if (v < 0.0) throw DomainError("occupation_closeness: negative skill level");
      sq += v * v;
    }
    if (!(sq > 0.0)) throw DegenerateError("occupation_closeness: zero-norm skill vector " + std::to_string(i));
    norms.push_back(std::sqrt(sq));
  }
  const std::size_t n = skills.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n_s; ++k) dot += skills[i][k] * skills[j][k];
      const double c = std::clamp(dot / (norms[i] * norms[j]), 0.0, 1.0);
      out(i, j) = c;
      out(j, i) = c;
    }
  }
  return out;
}

// Min-max scaling into [0,1], diagonal included.
inline Matrix normalize_matrix(const Matrix& m) {
  if (m.empty()) throw ShapeMismatch("normalize_matrix: empty matrix");
  for (double v : m.flat())
    if (!std::isfinite(v)) throw DomainError("normalize_matrix: non-finite entry");
  const auto [lo_it, hi_it] = std::minmax_element(m.flat().begin(), m.flat().end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw DegenerateError("normalize_matrix: constant matrix");
  if (lo == 0.0 && hi == 1.0) return m;
  Matrix out(m.rows(), m.cols());
  for (std::size_t k = 0; k < m.size(); ++k) out.flat()[k] = (m.flat()[k] - lo) / (hi - lo);
  return out;
}

// Base similarity matrices plus their calibrated exponents.
struct SimilarityBundle {
  Matrix R, I, O;
  Matrix nuR, nuI, nuO;

  Dimensions dims() const noexcept {
    return {static_cast<int>(R.rows()), static_cast<int>(I.rows()), static_cast<int>(O.rows())};
  }

  void validate() const {
    auto check = [](const Matrix& base, const Matrix& nu, const char* name) {
      if (!base.is_square() || base.empty()) throw ShapeMismatch(std::string(name) + " must be square");
      Matrix::require_same_shape(base, nu, std::string("nu") + name);
      for (double v : base.flat())
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(name) + " entry outside [0,1]");
      for (double v : nu.flat())
        if (!(v > 0.0)) throw DomainError(std::string("nu") + name + " entry not positive");
    };
    check(R, nuR, "R");
    check(I, nuI, "I");
    check(O, nuO, "O");
  }

  SimilarityBundle with_nu(Matrix r, Matrix i, Matrix o) const {
    SimilarityBundle b = *this;
    b.nuR = std::move(r);
    b.nuI = std::move(i);
    b.nuO = std::move(o);
    b.validate();
    return b;
  }

  bool operator==(const SimilarityBundle&) const = default;
};

// Normalises each raw matrix independently and starts every exponent at 1.
inline SimilarityBundle normalize_bundle(const Matrix& raw_r, const Matrix& raw_i, const Matrix& raw_o) {
  SimilarityBundle b;
  b.R = normalize_matrix(raw_r);
  b.I = normalize_matrix(raw_i);
  b.O = normalize_matrix(raw_o);
  b.nuR = Matrix(b.R.rows(), b.R.cols(), 1.0);
  b.nuI = Matrix(b.I.rows(), b.I.cols(), 1.0);
  b.nuO = Matrix(b.O.rows(), b.O.cols(), 1.0);
  b.validate();
  return b;
}

// S = R^nuR * I^nuI * O^nuO for the move `from` -> `to`.
inline double compose_similarity(const SimilarityBundle& b, const Cell& from, const Cell& to) {
  auto factor = [](const Matrix& base, const Matrix& nu, int a, int c) {
    const auto r = static_cast<std::size_t>(a), s = static_cast<std::size_t>(c);
    if (r >= base.rows() || s >= base.cols()) throw IndexOutOfRange("compose_similarity: category index");
    return std::pow(base(r, s), nu(r, s));
  };
  return factor(b.R, b.nuR, from.region, to.region) * factor(b.I, b.nuI, from.industry, to.industry) *
         factor(b.O, b.nuO, from.occupation, to.occupation);
}

// Exponentiated factors cached once per bundle for the simulation hot loop.
class SimilarityKernel {
 public:
  SimilarityKernel() = default;
  explicit SimilarityKernel(const SimilarityBundle& b)
      : r_(powered(b.R, b.nuR)), i_(powered(b.I, b.nuI)), o_(powered(b.O, b.nuO)) {}

  double operator()(const Cell& from, const Cell& to) const noexcept {
    return r_(static_cast<std::size_t>(from.region), static_cast<std::size_t>(to.region)) *
           i_(static_cast<std::size_t>(from.industry), static_cast<std::size_t>(to.industry)) *
           o_(static_cast<std::size_t>(from.occupation), static_cast<std::size_t>(to.occupation));
  }

  const Matrix& region() const noexcept { return r_; }
  const Matrix& industry() const noexcept { return i_; }
  const Matrix& occupation() const noexcept { return o_; }

 private:
  static Matrix powered(const Matrix& base, const Matrix& nu) {
    Matrix out(base.rows(), base.cols());
    for (std::size_t k = 0; k < base.size(); ++k) out.flat()[k] = std::pow(base.flat()[k], nu.flat()[k]);
    return out;
  }

  Matrix r_, i_, o_;
};

}  // namespace lfn
