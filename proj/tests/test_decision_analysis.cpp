#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "mgdispatch/decision_analysis.hpp"

using namespace mgd;
using namespace mgd::decide;

namespace {

std::vector<Row> blobs(std::mt19937_64& gen, const std::vector<Row>& means, std::size_t each,
                       double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Row> pts;
  for (std::size_t i = 0; i < each; ++i)
    for (const auto& m : means) pts.push_back({m[0] + noise(gen), m[1] + noise(gen), m[2] + noise(gen)});
  return pts;
}

// Plain Lloyd iterations from the given starting centres.
std::vector<Row> kmeans(const std::vector<Row>& pts, std::vector<Row> centers) {
  for (int it = 0; it < 100; ++it) {
    std::vector<Row> sum(centers.size(), Row{});
    std::vector<double> count(centers.size(), 0.0);
    for (const auto& p : pts) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        double d = 0;
        for (int k = 0; k < 3; ++k) d += (p[k] - centers[c][k]) * (p[k] - centers[c][k]);
        if (d < best_d) best_d = d, best = c;
      }
      for (int k = 0; k < 3; ++k) sum[best][k] += p[k];
      count[best] += 1;
    }
    for (std::size_t c = 0; c < centers.size(); ++c)
      for (int k = 0; k < 3; ++k) centers[c][k] = sum[c][k] / count[c];
  }
  return centers;
}

double dist(const Row& a, const Row& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

std::vector<ObjectiveVector> random_archive(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ObjectiveVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = u(gen);  // position along a trade-off curve
    out.push_back({100 + 500 * s + 20 * u(gen), 600 - 400 * s * u(gen), 30 + 65 * s});
  }
  return out;
}

}  // namespace

// --- FCM --------------------------------------------------------------------

TEST(Fcm, SeparatedPointsGetCrispMemberships) {
  const std::vector<Row> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 1}};
  const auto mm = fcm_cluster(pts, FcmParams{});
  std::set<std::size_t> labels(mm.labels.begin(), mm.labels.end());
  EXPECT_EQ(labels.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_GE(mm.mu[i][mm.labels[i]], 0.99);
}

TEST(Fcm, MembershipRowsSumToOneAndObjectiveDecreases) {
  std::mt19937_64 gen(1);
  const auto pts = blobs(gen, {{0.1, 0.1, 0.9}, {0.5, 0.5, 0.5}, {0.9, 0.8, 0.1}}, 30, 0.12);
  const auto mm = fcm_cluster(pts, FcmParams{});
  for (const auto& row : mm.mu) {
    double s = 0;
    for (double m : row) {
      EXPECT_GE(m, 0.0);
      s += m;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  ASSERT_GE(mm.objective_trace.size(), 2u);
  for (std::size_t i = 1; i < mm.objective_trace.size(); ++i)
    EXPECT_LE(mm.objective_trace[i], mm.objective_trace[i - 1] * (1 + 1e-12));
  EXPECT_LE(mm.iterations, FcmParams{}.max_iters);
}

TEST(Fcm, TwoBlobsAgreeWithKMeans) {
  std::mt19937_64 gen(2);
  const std::vector<Row> means{{0.2, 0.2, 0.2}, {0.2 + 1 / std::sqrt(3.0), 0.2 + 1 / std::sqrt(3.0),
                                                 0.2 + 1 / std::sqrt(3.0)}};
  const auto pts = blobs(gen, means, 50, 0.01);
  FcmParams p;
  p.n_clusters = 2;
  const auto mm = fcm_cluster(pts, p);
  const auto km = kmeans(pts, {pts[0], pts[1]});
  for (const auto& c : mm.centers) {
    const double to_mean = std::min(dist(c, means[0]), dist(c, means[1]));
    const double to_km = std::min(dist(c, km[0]), dist(c, km[1]));
    EXPECT_LT(to_mean, 0.02);
    EXPECT_LT(to_km, 0.02);
  }
  EXPECT_GT(dist(mm.centers[0], mm.centers[1]), 0.9);
}

TEST(Fcm, DeterministicForSeed) {
  std::mt19937_64 gen(3);
  const auto pts = blobs(gen, {{0, 0, 0}, {1, 1, 1}, {0, 1, 0}}, 10, 0.2);
  const auto a = fcm_cluster(pts, FcmParams{}), b = fcm_cluster(pts, FcmParams{});
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Fcm, RejectsTooFewDistinctPoints) {
  const std::vector<Row> pts{{0, 0, 0}, {0, 0, 0}, {1, 1, 1}};
  EXPECT_THROW(fcm_cluster(pts, FcmParams{}), ContractViolation);
  FcmParams one;
  one.n_clusters = 1;
  EXPECT_THROW(fcm_cluster(pts, one), ContractViolation);
}

// --- standardisation --------------------------------------------------------

TEST(Standardize, PolarityPerIndicator) {
  const std::vector<ObjectiveVector> a{{100, 50, 80}, {200, 20, 90}, {150, 30, 60}};
  const auto s = standardize_decision_matrix(a);
  EXPECT_EQ(s[0][0], 1.0);  // cheapest
  EXPECT_EQ(s[1][0], 0.0);
  EXPECT_EQ(s[1][1], 1.0);  // cleanest
  EXPECT_EQ(s[2][2], 0.0);  // least satisfied
  EXPECT_EQ(s[1][2], 1.0);
  EXPECT_NEAR(s[2][0], 0.5, 1e-15);
}

TEST(Standardize, InvariantUnderPositiveAffineMaps) {
  auto a = random_archive(25, 4);
  auto b = a;
  for (auto& f : b) f.f1_cost = 0.37 * f.f1_cost + 1000;
  const auto sa = standardize_decision_matrix(a), sb = standardize_decision_matrix(b);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(sa[i][k], sb[i][k], 1e-12);
}

TEST(Standardize, ConstantColumnIsBest) {
  const std::vector<ObjectiveVector> a{{1, 5, 100}, {2, 4, 100}};
  const auto s = standardize_decision_matrix(a);
  EXPECT_EQ(s[0][2], 1.0);
  EXPECT_EQ(s[1][2], 1.0);
}

// --- grey relation and projection -------------------------------------------

TEST(GreyRelation, IdenticalToIdealIsOne) {
  const Row ideal{1, 1, 1};
  const auto g = grey_relation_coeff(ideal, ideal, 0.0, 0.8, 0.5);
  for (double x : g) EXPECT_EQ(x, 1.0);
}

TEST(GreyRelation, HandComputedThreeByThree) {
  const std::vector<Row> rows{{1, 0.5, 0}, {0.5, 1, 0.5}, {0, 0, 1}};
  const Row ideal{1, 1, 1};
  const auto [dmin, dmax] = deviation_range(rows, ideal);
  EXPECT_EQ(dmin, 0.0);
  EXPECT_EQ(dmax, 1.0);
  // (0 + 0.5 * 1) / (delta + 0.5 * 1) for delta in {0, 0.5, 1}
  const double one = 1.0, half = 0.5, third = 1.0 / 3.0;
  const std::vector<Row> expected{{one, half, third}, {half, one, half}, {third, third, one}};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto g = grey_relation_coeff(rows[i], ideal, dmin, dmax, 0.5);
    for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(g[y], expected[i][y], 1e-15) << i << "," << y;
  }
}

TEST(GreyRelation, CoefficientsInUnitInterval) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Row> rows(40);
  for (auto& r : rows) r = {u(gen), u(gen), u(gen)};
  for (const Row& ideal : {Row{1, 1, 1}, Row{0, 0, 0}}) {
    const auto [lo, hi] = deviation_range(rows, ideal);
    for (const auto& r : rows)
      for (double g : grey_relation_coeff(r, ideal, lo, hi, 0.5)) {
        EXPECT_GT(g, 0.0);
        EXPECT_LE(g, 1.0);
      }
  }
}

TEST(Projection, UniformWeightsMatchRecomputation) {
  const std::vector<Row> rows{{1, 0.5, 0}, {0.5, 1, 0.5}, {0, 0, 1}};
  const auto proj = projection_and_rpv(rows, GrpParams{});
  // Each weight 1/3, |w| = 1/sqrt(3), so every coefficient counts (1/9) * sqrt(3).
  const double k = std::sqrt(3.0) / 9.0;
  const double pos[3] = {(1 + 0.5 + 1.0 / 3) * k, (0.5 + 1 + 0.5) * k, (1.0 / 3 + 1.0 / 3 + 1) * k};
  const double neg[3] = {(1.0 / 3 + 0.5 + 1) * k, (0.5 + 1.0 / 3 + 0.5) * k, (1 + 1 + 1.0 / 3) * k};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(proj[i].positive, pos[i], 1e-14);
    EXPECT_NEAR(proj[i].negative, neg[i], 1e-14);
    EXPECT_NEAR(proj[i].rpv, pos[i] / (pos[i] + neg[i]), 1e-14);
  }
  EXPECT_NEAR(proj[0].rpv, 0.5, 1e-14);  // equal projections
  EXPECT_NEAR(proj[1].rpv, 0.6, 1e-14);
}

TEST(Projection, IdealSchemeRanksFirst) {
  const std::vector<Row> rows{{0.3, 0.9, 0.1}, {1, 1, 1}, {0.7, 0.2, 0.6}, {0.0, 0.4, 0.8}};
  const auto proj = projection_and_rpv(rows, GrpParams{{0.5, 0.3, 0.2}, 0.5});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_GE(proj[i].rpv, 0.0);
    EXPECT_LE(proj[i].rpv, 1.0);
    if (i != 1) EXPECT_GT(proj[1].rpv, proj[i].rpv);
  }
}

TEST(Projection, RejectsBadWeights) {
  EXPECT_THROW(normalized_weights({0, 0, 0}), ContractViolation);
  EXPECT_THROW(normalized_weights({1, -1, 1}), ContractViolation);
  const auto w = normalized_weights({2, 1, 1});
  EXPECT_DOUBLE_EQ(w[0], 0.5);
}

// --- selection --------------------------------------------------------------

TEST(Select, ThreeSchemesThreeClusters) {
  const std::vector<ObjectiveVector> a{{100, 500, 40}, {300, 200, 70}, {600, 650, 98}};
  const auto sel = select_bcs(a, FcmParams{}, GrpParams{});
  std::set<std::size_t> got(sel.bcs.begin(), sel.bcs.end());
  EXPECT_EQ(got, (std::set<std::size_t>{0, 1, 2}));
}

TEST(Select, OneMaxRpvPerNonEmptyCluster) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto a = random_archive(60, seed);
    FcmParams fcm;
    fcm.rng_seed = seed;
    const auto sel = select_bcs(a, fcm, GrpParams{});
    std::set<std::size_t> nonempty(sel.clustering.labels.begin(), sel.clustering.labels.end());
    ASSERT_EQ(sel.bcs.size(), nonempty.size());
    std::set<std::size_t> seen;
    for (std::size_t b : sel.bcs) {
      const std::size_t c = sel.clustering.labels[b];
      EXPECT_TRUE(seen.insert(c).second);
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_GE(sel.rpv[i], 0.0);
        EXPECT_LE(sel.rpv[i], 1.0);
        if (sel.clustering.labels[i] == c) EXPECT_GE(sel.rpv[b], sel.rpv[i]);
      }
    }
  }
}

TEST(Select, RowOrderDoesNotChangeTheChosenSchemes) {
  std::mt19937_64 gen(8);
  std::vector<ObjectiveVector> a;
  std::normal_distribution<double> n(0.0, 5.0);
  for (int i = 0; i < 15; ++i) {
    a.push_back({100 + n(gen), 600 + n(gen), 40 + n(gen) / 5});
    a.push_back({350 + n(gen), 300 + n(gen), 70 + n(gen) / 5});
    a.push_back({600 + n(gen), 650 + n(gen), 95 + n(gen) / 5});
  }
  auto b = a;
  std::reverse(b.begin(), b.end());
  const auto sa = select_bcs(a, FcmParams{}, GrpParams{});
  const auto sb = select_bcs(b, FcmParams{}, GrpParams{});
  auto picked = [](const std::vector<ObjectiveVector>& arch, const Selection& s) {
    std::vector<std::array<double, 3>> out;
    for (std::size_t i : s.bcs)
      out.push_back({arch[i].f1_cost, arch[i].f2_emissions, arch[i].f3_satisfaction});
    std::sort(out.begin(), out.end());
    return out;
  };
  EXPECT_EQ(picked(a, sa), picked(b, sb));
}

TEST(Select, ArchiveSmallerThanClusterCount) {
  const std::vector<ObjectiveVector> a{{1, 2, 3}, {2, 1, 4}};
  EXPECT_THROW(select_bcs(a, FcmParams{}, GrpParams{}), ContractViolation);
}

TEST(OverallBest, CostWeightPicksCheapest) {
  const std::vector<ObjectiveVector> bcs{{300, 200, 70}, {120, 500, 40}, {600, 650, 98}};
  EXPECT_EQ(overall_best(bcs, GrpParams{{1, 0, 0}, 0.5}), 1u);
  EXPECT_EQ(overall_best(bcs, GrpParams{{0, 1, 0}, 0.5}), 0u);
  EXPECT_EQ(overall_best(bcs, GrpParams{{0, 0, 1}, 0.5}), 2u);
}
