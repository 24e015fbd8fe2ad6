#include <lfn/metrics.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

namespace lfn {
namespace {

TEST(Pearson, Examples) {
  const Matrix a{{1, 2}, {3, 4}};
  EXPECT_DOUBLE_EQ(pearson(a, a), 1.0);
  EXPECT_DOUBLE_EQ(pearson(a, Matrix{{2, 4}, {6, 8}}), 1.0);
  EXPECT_DOUBLE_EQ(pearson(a, Matrix{{9, 8}, {7, 6}}), -1.0);
  EXPECT_THROW(pearson(a, Matrix{{1, 1}, {1, 1}}), DegenerateError);
  EXPECT_THROW(pearson(a, Matrix{{1, 2, 3}}), ShapeMismatch);
}

TEST(Pearson, InvariantUnderPositiveAffineMaps) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 100; ++rep) {
    Matrix a = Matrix::square(4), b = Matrix::square(4);
    for (double& v : a.flat()) v = n(rng);
    for (double& v : b.flat()) v = n(rng);
    Matrix c = a;
    for (double& v : c.flat()) v = 3.5 * v + 2.0;
    EXPECT_NEAR(pearson(a, b), pearson(c, b), 1e-12);
  }
}

TEST(Frobenius, ThreeFourFive) {
  EXPECT_DOUBLE_EQ(frobenius_distance(Matrix{{3, 4}, {0, 0}}, Matrix::square(2)), 5.0);
  EXPECT_EQ(frobenius_distance(Matrix{{1, 2}, {3, 4}}, Matrix{{1, 2}, {3, 4}}), 0.0);
}

TEST(Frobenius, TriangleInequality) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u;
  for (int rep = 0; rep < 200; ++rep) {
    Matrix a = Matrix::square(3), b = Matrix::square(3), c = Matrix::square(3);
    for (auto* m : {&a, &b, &c})
      for (double& v : m->flat()) v = u(rng);
    EXPECT_LE(frobenius_distance(a, c), frobenius_distance(a, b) + frobenius_distance(b, c) + 1e-12);
  }
}

TEST(WeightedJaccard, Examples) {
  const std::vector<double> a{2, 1}, b{1, 2}, e1{1, 0}, e2{0, 1};
  EXPECT_DOUBLE_EQ(weighted_jaccard_distance(a, b), 0.5);
  EXPECT_DOUBLE_EQ(weighted_jaccard_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(weighted_jaccard_distance(e1, e2), 1.0);
  const std::vector<double> z{0, 0};
  EXPECT_THROW(weighted_jaccard_distance(z, z), DegenerateError);
}

TEST(WeightedJaccard, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u;
  std::bernoulli_distribution sparse(0.3);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> a(6), b(6), c(6);
    for (auto* v : {&a, &b, &c})
      for (double& x : *v) x = sparse(rng) ? 0.0 : u(rng);
    a[0] = b[1] = c[2] = 0.5;  // keep every vector non-zero
    const double ab = weighted_jaccard_distance(a, b), ba = weighted_jaccard_distance(b, a);
    const double bc = weighted_jaccard_distance(b, c), ac = weighted_jaccard_distance(a, c);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(weighted_jaccard_distance(a, a), 0.0);
    EXPECT_LE(ac, ab + bc + 1e-12);
  }
}

TEST(WeightedClustering, CompleteEqualTriangleIsOne) {
  const Matrix m{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  EXPECT_NEAR(weighted_clustering(m), 1.0, 1e-12);
}

TEST(WeightedClustering, StarIsZero) {
  const Matrix star{{0, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  EXPECT_EQ(weighted_clustering(star), 0.0);
  EXPECT_EQ(weighted_clustering(Matrix::square(3)), 0.0);
}

// Frozen from networkx.average_clustering(G, weight="weight") on the
// undirected graph with w_ij + w_ji edge weights and no self-loops.
TEST(WeightedClustering, MatchesGeometricMeanReference) {
  const Matrix w{{0, 0.2, 0.1, 0.0}, {0.05, 0.1, 0.3, 0.02}, {0.1, 0.0, 0, 0.08}, {0.0, 0.04, 0.01, 0}};
  EXPECT_NEAR(weighted_clustering(w), 0.50564893981682346, 1e-12);
}

TEST(WeightedClustering, ScaleInvariant) {
  const Matrix w{{0, 0.2, 0.1, 0.0}, {0.05, 0.1, 0.3, 0.02}, {0.1, 0.0, 0, 0.08}, {0.0, 0.04, 0.01, 0}};
  EXPECT_NEAR(weighted_clustering(w * 17.0), weighted_clustering(w), 1e-12);
}

TEST(Midranks, TiesShareMeanRank) {
  const std::vector<double> v{3, 1, 3, 2};
  EXPECT_EQ(midranks(v), (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(MannWhitney, SeparatedGroupsOfFour) {
  const std::vector<double> x{0.1, 0.11, 0.12, 0.13}, y{0.5, 0.51, 0.52, 0.53};
  const auto r = mann_whitney_u(x, y);
  EXPECT_EQ(r.u, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p_value, 2.0 / 70.0, 1e-15);  // two extreme splits out of C(8,4)
}

TEST(MannWhitney, IdenticalSamplesGivePOne) {
  const std::vector<double> x{0.2, 0.3, 0.4};
  EXPECT_DOUBLE_EQ(mann_whitney_u(x, x).p_value, 1.0);
  const std::vector<double> big(12, 0.5);
  EXPECT_DOUBLE_EQ(mann_whitney_u(big, big).p_value, 1.0);
}

TEST(MannWhitney, ExactPValueWithTies) {
  // 14 of the 126 splits are at least as extreme (checked by enumeration).
  const std::vector<double> x{1, 2, 2, 3}, y{2, 3, 3, 4, 5};
  const auto r = mann_whitney_u(x, y);
  EXPECT_EQ(r.u, 3.0);
  EXPECT_NEAR(r.p_value, 14.0 / 126.0, 1e-15);
}

// Frozen from scipy.stats.mannwhitneyu(method="asymptotic",
// use_continuity=True, alternative="two-sided").
TEST(MannWhitney, NormalApproximationWithTieCorrection) {
  const std::vector<double> x{1, 2, 2, 3, 5, 5, 5, 8, 9, 10}, y{2, 4, 5, 6, 7, 7, 8, 11, 12, 12, 13, 14};
  const auto r = mann_whitney_u(x, y);
  EXPECT_FALSE(r.exact);
  EXPECT_EQ(r.u, 30.0);
  EXPECT_NEAR(r.p_value, 0.050633124547632302, 1e-12);
}

double pair_count_u(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0.0;
  for (double a : x)
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return u;
}

// Independent route: U by pair counting, p by enumerating every relabelling
// of the pooled sample and pair-counting each one.
TEST(MannWhitney, MatchesExhaustiveEnumerationUpToSix) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> val(0, 6);  // small support forces ties
  for (std::size_t nx = 1; nx <= 6; ++nx)
    for (std::size_t ny = 1; ny <= 6; ++ny) {
      std::vector<double> x(nx), y(ny);
      for (double& v : x) v = val(rng);
      for (double& v : y) v = val(rng);
      const auto r = mann_whitney_u(x, y);
      const double u = pair_count_u(x, y);
      ASSERT_EQ(r.u, u) << nx << "x" << ny;

      std::vector<double> pool(x);
      pool.insert(pool.end(), y.begin(), y.end());
      std::vector<int> pick(pool.size(), 0);
      std::fill(pick.begin(), pick.begin() + static_cast<long>(nx), 1);
      std::sort(pick.begin(), pick.end());
      const double centre = static_cast<double>(nx * ny) / 2.0;
      int extreme = 0, total = 0;
      do {
        std::vector<double> a, b;
        for (std::size_t k = 0; k < pool.size(); ++k) (pick[k] ? a : b).push_back(pool[k]);
        ++total;
        if (std::abs(pair_count_u(a, b) - centre) >= std::abs(u - centre)) ++extreme;
      } while (std::next_permutation(pick.begin(), pick.end()));
      EXPECT_NEAR(r.p_value, static_cast<double>(extreme) / total, 1e-12) << nx << "x" << ny;
    }
}

TEST(Spearman, MonotoneTransformIsOne) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{1, 4, 9, 16, 100};
  EXPECT_DOUBLE_EQ(spearman(a, b), 1.0);
}

TEST(FitReport, PerfectAgreement) {
  const Matrix a{{0.1, 0.2}, {0.3, 0.4}}, b{{0.5, 0.5}, {0, 0}};
  const auto f = fit_report(a, a, b, b, a, a);
  EXPECT_DOUBLE_EQ(f.total.pearson, 1.0);
  EXPECT_EQ(f.total.frobenius, 0.0);
}

}  // namespace
}  // namespace lfn
