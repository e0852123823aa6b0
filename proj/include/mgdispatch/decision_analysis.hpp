#pragma once

// Picking best compromise schedules from a Pareto archive: fuzzy C-means
// groups the archive by preference, grey relation projection ranks the
// members of each group against the ideal and anti-ideal schemes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mgdispatch/dispatch_model.hpp"
#include "mgdispatch/errors.hpp"
#include "mgdispatch/rng.hpp"

namespace mgd::decide {

inline constexpr std::size_t kIndicators = 3;
using Row = std::array<double, kIndicators>;

struct FcmParams {
  std::size_t n_clusters = 3;
  double fuzziness_m = 2.0;
  double tolerance_eps = 1e-6;
  std::size_t max_iters = 300;
  std::uint64_t rng_seed = 1;
};

struct MembershipMatrix {
  std::vector<std::vector<double>> mu;  // [point][cluster]
  std::vector<Row> centers;
  std::vector<std::size_t> labels;      // argmax membership, ties to lower cluster
  std::vector<double> objective_trace;  // J after every iteration
  std::size_t iterations = 0;
};

struct GrpParams {
  Row weights{1.0 / 3, 1.0 / 3, 1.0 / 3};  // F1, F2, F3
  double resolution_rho = 0.5;
};

namespace detail {

inline double dist2(const Row& a, const Row& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < kIndicators; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

inline std::size_t distinct_count(std::span<const Row> points) {
  std::vector<Row> seen;
  for (const auto& p : points)
    if (std::find(seen.begin(), seen.end(), p) == seen.end()) seen.push_back(p);
  return seen.size();
}

inline void update_memberships(std::span<const Row> pts, MembershipMatrix& mm, double m) {
  const std::size_t c = mm.centers.size();
  const double expo = 1.0 / (m - 1.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto& row = mm.mu[i];
    std::vector<double> d(c);
    std::size_t zeros = 0;
    for (std::size_t j = 0; j < c; ++j) {
      d[j] = dist2(pts[i], mm.centers[j]);
      zeros += d[j] == 0.0 ? 1 : 0;
    }
    if (zeros > 0) {
      for (std::size_t j = 0; j < c; ++j) row[j] = d[j] == 0.0 ? 1.0 / double(zeros) : 0.0;
      continue;
    }
    // mu_ij = 1 / sum_k (d_ij / d_ik)^(1/(m-1)) with squared distances.
    for (std::size_t j = 0; j < c; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += std::pow(d[j] / d[k], expo);
      row[j] = 1.0 / s;
    }
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& x : row) x /= total;
  }
}

inline void update_centers(std::span<const Row> pts, MembershipMatrix& mm, double m) {
  for (std::size_t j = 0; j < mm.centers.size(); ++j) {
    Row num{};
    double den = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double w = std::pow(mm.mu[i][j], m);
      for (std::size_t k = 0; k < kIndicators; ++k) num[k] += w * pts[i][k];
      den += w;
    }
    if (den > 0)
      for (std::size_t k = 0; k < kIndicators; ++k) mm.centers[j][k] = num[k] / den;
  }
}

inline double objective(std::span<const Row> pts, const MembershipMatrix& mm, double m) {
  double j = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t c = 0; c < mm.centers.size(); ++c)
      j += std::pow(mm.mu[i][c], m) * dist2(pts[i], mm.centers[c]);
  return j;
}

}  // namespace detail

/// Fuzzy C-means. Centres start from farthest-point seeding: the first
/// seed is drawn from `rng_seed`, each next one is the point farthest from
/// all seeds so far (ties to the lower index).
inline MembershipMatrix fcm_cluster(std::span<const Row> points, const FcmParams& p) {
  if (p.n_clusters < 2) throw ContractViolation("fcm: need at least two clusters");
  if (!(p.fuzziness_m > 1)) throw ContractViolation("fcm: fuzziness must exceed 1");
  if (detail::distinct_count(points) < p.n_clusters)
    throw ContractViolation("fcm: fewer distinct points than clusters");

  MembershipMatrix mm;
  Rng rng(p.rng_seed);
  std::vector<std::size_t> seeds{std::size_t(rng.index(points.size()))};
  while (seeds.size() < p.n_clusters) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t s : seeds) nearest = std::min(nearest, detail::dist2(points[i], points[s]));
      if (nearest > best_d) {
        best_d = nearest;
        best = i;
      }
    }
    seeds.push_back(best);
  }
  for (std::size_t s : seeds) mm.centers.push_back(points[s]);
  mm.mu.assign(points.size(), std::vector<double>(p.n_clusters, 0.0));

  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < p.max_iters; ++it) {
    detail::update_memberships(points, mm, p.fuzziness_m);
    detail::update_centers(points, mm, p.fuzziness_m);
    const double current = detail::objective(points, mm, p.fuzziness_m);
    mm.objective_trace.push_back(current);
    mm.iterations = it + 1;
    if (std::abs(current - previous) < p.tolerance_eps) break;
    previous = current;
  }
  // Memberships consistent with the final centres.
  detail::update_memberships(points, mm, p.fuzziness_m);

  mm.labels.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    mm.labels[i] = std::size_t(std::max_element(mm.mu[i].begin(), mm.mu[i].end()) -
                               mm.mu[i].begin());
  return mm;
}

/// Objective rows in minimisation form scaled to [0, 1] per column, the
/// point set used for clustering.
inline std::vector<Row> normalized_points(std::span<const ObjectiveVector> archive) {
  std::vector<Row> pts;
  for (const auto& f : archive) pts.push_back({f.f1_cost, f.f2_emissions, 100.0 - f.f3_satisfaction});
  for (std::size_t k = 0; k < kIndicators; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : pts) {
      lo = std::min(lo, r[k]);
      hi = std::max(hi, r[k]);
    }
    for (auto& r : pts) r[k] = hi > lo ? (r[k] - lo) / (hi - lo) : 0.0;
  }
  return pts;
}

/// 1 marks the best value of each column: cost and emissions are
/// cost-type, satisfaction benefit-type. A constant column is all 1.
inline std::vector<Row> standardize_decision_matrix(std::span<const ObjectiveVector> archive) {
  if (archive.empty()) throw ContractViolation("standardize: empty archive");
  std::vector<Row> raw;
  for (const auto& f : archive) raw.push_back({f.f1_cost, f.f2_emissions, f.f3_satisfaction});
  constexpr std::array<bool, kIndicators> benefit{false, false, true};
  std::vector<Row> out(raw.size());
  for (std::size_t k = 0; k < kIndicators; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : raw) {
      lo = std::min(lo, r[k]);
      hi = std::max(hi, r[k]);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!(hi > lo)) {
        out[i][k] = 1.0;
      } else {
        out[i][k] = benefit[k] ? (raw[i][k] - lo) / (hi - lo) : (hi - raw[i][k]) / (hi - lo);
      }
    }
  }
  return out;
}

/// Deng's grey relation coefficient per indicator. `delta_min` and
/// `delta_max` are the extreme absolute deviations over the whole group.
inline Row grey_relation_coeff(const Row& scheme, const Row& ideal, double delta_min,
                               double delta_max, double rho) {
  Row g{};
  for (std::size_t y = 0; y < kIndicators; ++y) {
    const double delta = std::abs(scheme[y] - ideal[y]);
    const double den = delta + rho * delta_max;
    g[y] = den > 0 ? (delta_min + rho * delta_max) / den : 1.0;
  }
  return g;
}

/// Extreme deviations of `rows` from `ideal` over every row and indicator.
inline std::pair<double, double> deviation_range(std::span<const Row> rows, const Row& ideal) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows)
    for (std::size_t y = 0; y < kIndicators; ++y) {
      const double d = std::abs(r[y] - ideal[y]);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  return {lo, hi};
}

struct Projection {
  double positive = 0.0;
  double negative = 0.0;
  double rpv = 0.0;
};

inline Row normalized_weights(const Row& w) {
  const double s = w[0] + w[1] + w[2];
  if (!(s > 0) || w[0] < 0 || w[1] < 0 || w[2] < 0)
    throw ContractViolation("weights must be non-negative with a positive sum");
  return {w[0] / s, w[1] / s, w[2] / s};
}

/// Projections on the ideal (all ones) and anti-ideal (all zeros) schemes
/// and the relative projection value of every row of a group.
inline std::vector<Projection> projection_and_rpv(std::span<const Row> standardized,
                                                  const GrpParams& p) {
  if (standardized.empty()) throw ContractViolation("projection: empty group");
  const Row w = normalized_weights(p.weights);
  const double wnorm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  const Row best{1.0, 1.0, 1.0}, worst{0.0, 0.0, 0.0};
  const auto [pmin, pmax] = deviation_range(standardized, best);
  const auto [nmin, nmax] = deviation_range(standardized, worst);

  std::vector<Projection> out;
  for (const auto& row : standardized) {
    const Row gp = grey_relation_coeff(row, best, pmin, pmax, p.resolution_rho);
    const Row gn = grey_relation_coeff(row, worst, nmin, nmax, p.resolution_rho);
    Projection pr;
    for (std::size_t y = 0; y < kIndicators; ++y) {
      pr.positive += gp[y] * w[y] * w[y] / wnorm;
      pr.negative += gn[y] * w[y] * w[y] / wnorm;
    }
    const double sum = pr.positive + pr.negative;
    pr.rpv = sum > 0 ? pr.positive / sum : 0.5;
    out.push_back(pr);
  }
  return out;
}

struct Selection {
  MembershipMatrix clustering;
  std::vector<Row> standardized;
  std::vector<double> rpv;          // per archive member, within its cluster
  std::vector<std::size_t> bcs;     // archive indices, one per non-empty cluster
  std::vector<std::string> warnings;
};

/// One best compromise schedule per non-empty cluster: the member with the
/// largest RPV inside its hard-label cluster, ties to the lower index.
inline Selection select_bcs(std::span<const ObjectiveVector> archive, const FcmParams& fcm,
                            const GrpParams& grp) {
  if (archive.size() < fcm.n_clusters)
    throw ContractViolation("select_bcs: archive smaller than the cluster count");
  Selection sel;
  const auto pts = normalized_points(archive);
  sel.clustering = fcm_cluster(pts, fcm);
  sel.standardized = standardize_decision_matrix(archive);
  sel.rpv.assign(archive.size(), 0.0);

  for (std::size_t c = 0; c < fcm.n_clusters; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < archive.size(); ++i)
      if (sel.clustering.labels[i] == c) members.push_back(i);
    if (members.empty()) {
      sel.warnings.push_back("cluster " + std::to_string(c) + " is empty after labelling");
      continue;
    }
    std::vector<Row> rows;
    for (std::size_t i : members) rows.push_back(sel.standardized[i]);
    const auto proj = projection_and_rpv(rows, grp);
    std::size_t best = 0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      sel.rpv[members[k]] = proj[k].rpv;
      if (proj[k].rpv > proj[best].rpv) best = k;
    }
    sel.bcs.push_back(members[best]);
  }
  return sel;
}

/// Ranks a set of schemes as one group; returns the index of the largest
/// RPV (ties to the lower index).
inline std::size_t overall_best(std::span<const ObjectiveVector> schemes, const GrpParams& grp) {
  const auto rows = standardize_decision_matrix(schemes);
  const auto proj = projection_and_rpv(rows, grp);
  std::size_t best = 0;
  for (std::size_t k = 1; k < proj.size(); ++k)
    if (proj[k].rpv > proj[best].rpv) best = k;
  return best;
}

}  // namespace mgd::decide
