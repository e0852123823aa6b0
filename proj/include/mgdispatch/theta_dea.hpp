#pragma once

// Theta-dominance based evolutionary algorithm over dispatch schedules.
//
// Objectives are minimised as (F1, F2, 100 - F3). Each generation the union
// of parents and offspring is normalised, every solution is attached to the
// reference line with the smallest perpendicular distance, and solutions
// are ranked inside their cluster by
//
//     fitness = along-line distance + theta * perpendicular distance.
//
// The k-th best of every cluster forms front k; the best feasible schedule
// on each single objective is always kept. Infeasible schedules rank behind
// all feasible ones, ordered by penalty.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "mgdispatch/dispatch_model.hpp"
#include "mgdispatch/errors.hpp"
#include "mgdispatch/rng.hpp"
#include "mgdispatch/scenario.hpp"

namespace mgd::dea {

inline constexpr std::size_t kObjectives = 3;
using Point = std::array<double, kObjectives>;

struct ReferencePointSet {
  std::vector<std::vector<double>> points;
  std::size_t size() const noexcept { return points.size(); }
};

struct Individual {
  DecisionVector genotype;
  ObjectiveVector objectives;
  Point norm_objectives{};
  std::size_t cluster_id = 0;
  double theta_fitness = 0.0;
  double feasibility_penalty = 0.0;  // $

  bool feasible() const { return feasibility_penalty == 0.0; }
};

struct ThetaDeaParams {
  double theta = 5.0;
  std::size_t pop_size = 100;
  std::size_t generations = 100;
  std::size_t divisions = 13;  // 105 reference points in three objectives
  double crossover_prob = 0.9;
  double mutation_prob = -1.0;  // per gene; negative selects 1 / gene count
  double sbx_eta = 20.0;
  double pm_eta = 20.0;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (!(theta >= 0)) throw ContractViolation("theta must be non-negative");
    if (pop_size < 4 || pop_size % 2 != 0)
      throw ContractViolation("population size must be even and at least 4");
    if (divisions < 1) throw ContractViolation("divisions must be at least 1");
  }
};

/// Minimisation view of the objectives.
inline Point minimised(const ObjectiveVector& f) {
  return {f.f1_cost, f.f2_emissions, 100.0 - f.f3_satisfaction};
}

// ---------------------------------------------------------------------------
// Reference points

namespace detail {
inline void lattice(std::size_t m, std::size_t left, std::size_t h, std::vector<double>& cur,
                    std::vector<std::vector<double>>& out) {
  if (cur.size() == m - 1) {
    cur.push_back(double(left) / double(h));
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t i = 0; i <= left; ++i) {
    cur.push_back(double(i) / double(h));
    lattice(m, left - i, h, cur, out);
    cur.pop_back();
  }
}
}  // namespace detail

/// Simplex lattice with granularity 1/h; C(h+m-1, m-1) points.
inline ReferencePointSet generate_reference_points(std::size_t m, std::size_t h) {
  if (m < 2 || h < 1) throw ContractViolation("reference points need m >= 2 and h >= 1");
  ReferencePointSet set;
  std::vector<double> cur;
  detail::lattice(m, h, h, cur, set.points);
  return set;
}

// ---------------------------------------------------------------------------
// Normalisation, distances, clustering

/// Per-objective min-max scaling over `pop`; a constant objective maps to 0.
inline void normalize(std::span<Individual> pop) {
  if (pop.empty()) return;
  Point lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& ind : pop) {
    const Point f = minimised(ind.objectives);
    for (std::size_t k = 0; k < kObjectives; ++k) {
      lo[k] = std::min(lo[k], f[k]);
      hi[k] = std::max(hi[k], f[k]);
    }
  }
  for (auto& ind : pop) {
    const Point f = minimised(ind.objectives);
    for (std::size_t k = 0; k < kObjectives; ++k)
      ind.norm_objectives[k] = hi[k] > lo[k] ? (f[k] - lo[k]) / (hi[k] - lo[k]) : 0.0;
  }
}

struct LineDistances {
  double along = 0.0;          // length of the projection onto the line
  double perpendicular = 0.0;  // distance from the line
};

inline LineDistances line_distances(const Point& f, std::span<const double> ref) {
  double norm2 = 0.0;
  for (double r : ref) norm2 += r * r;
  if (!(norm2 > 0)) throw ContractViolation("reference direction is the zero vector");
  const double norm = std::sqrt(norm2);
  double along = 0.0;
  for (std::size_t k = 0; k < kObjectives; ++k) along += f[k] * ref[k] / norm;
  double perp2 = 0.0;
  for (std::size_t k = 0; k < kObjectives; ++k) {
    const double d = f[k] - along * ref[k] / norm;
    perp2 += d * d;
  }
  return {along, std::sqrt(perp2)};
}

inline double theta_fitness(const Point& norm_objectives, std::span<const double> ref,
                            double theta) {
  const auto d = line_distances(norm_objectives, ref);
  return d.along + theta * d.perpendicular;
}

/// Attaches each individual to the nearest reference line; ties go to the
/// lowest reference index.
inline void assign_clusters(std::span<Individual> pop, const ReferencePointSet& refs,
                            double theta) {
  for (auto& ind : pop) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < refs.size(); ++j) {
      const double d = line_distances(ind.norm_objectives, refs.points[j]).perpendicular;
      if (d < best) {
        best = d;
        ind.cluster_id = j;
      }
    }
    ind.theta_fitness = theta_fitness(ind.norm_objectives, refs.points[ind.cluster_id], theta);
  }
}

/// x theta-dominates y: same cluster and strictly smaller fitness.
inline bool theta_dominates(const Individual& x, const Individual& y) {
  return x.cluster_id == y.cluster_id && x.theta_fitness < y.theta_fitness;
}

// ---------------------------------------------------------------------------
// Environmental selection

namespace detail {

/// The best feasible individual on each objective always survives: a missing
/// one takes the place of the lowest-ranked survivor that is not an extreme.
/// Correlated objectives put these corners far from the origin, where
/// truncation by fitness would otherwise drop them first.
inline void retain_extremes(std::span<const Individual> pool, std::span<const std::size_t> feasible,
                            std::vector<std::size_t>& chosen, std::size_t capacity) {
  auto key = [&](std::size_t i, std::size_t k) {
    const auto& f = pool[i].objectives;
    const std::array<double, 3> v{f.f1_cost, f.f2_emissions, -f.f3_satisfaction};
    return std::array<double, 3>{v[k], v[(k + 1) % 3], v[(k + 2) % 3]};
  };
  std::vector<std::size_t> extremes;
  for (std::size_t k = 0; k < kObjectives; ++k) {
    std::size_t best = feasible.front();
    for (std::size_t i : feasible)
      if (key(i, k) < key(best, k)) best = i;
    if (std::find(extremes.begin(), extremes.end(), best) == extremes.end()) extremes.push_back(best);
  }
  auto is_extreme = [&](std::size_t i) {
    return std::find(extremes.begin(), extremes.end(), i) != extremes.end();
  };
  for (std::size_t e : extremes) {
    if (std::find(chosen.begin(), chosen.end(), e) != chosen.end()) continue;
    if (chosen.size() < capacity) {
      chosen.push_back(e);
      continue;
    }
    for (std::size_t k = chosen.size(); k-- > 0;)
      if (!is_extreme(chosen[k])) {
        chosen[k] = e;
        break;
      }
  }
}

}  // namespace detail

/// Indices into `pool` of the `capacity` survivors, in rank order. Expects
/// objectives and penalties set; normalises and clusters the feasible part.
inline std::vector<std::size_t> theta_sort_and_select(std::span<Individual> pool,
                                                      const ReferencePointSet& refs,
                                                      const ThetaDeaParams& params,
                                                      std::size_t capacity) {
  std::vector<std::size_t> feasible, infeasible;
  for (std::size_t i = 0; i < pool.size(); ++i)
    (pool[i].feasible() ? feasible : infeasible).push_back(i);

  std::vector<std::size_t> chosen;
  chosen.reserve(capacity);

  if (!feasible.empty()) {
    std::vector<Individual> view;
    view.reserve(feasible.size());
    for (std::size_t i : feasible) view.push_back(pool[i]);
    normalize(view);
    assign_clusters(view, refs, params.theta);
    for (std::size_t k = 0; k < feasible.size(); ++k) {
      pool[feasible[k]].norm_objectives = view[k].norm_objectives;
      pool[feasible[k]].cluster_id = view[k].cluster_id;
      pool[feasible[k]].theta_fitness = view[k].theta_fitness;
    }

    auto by_fitness = [&](std::size_t a, std::size_t b) {
      if (pool[a].theta_fitness != pool[b].theta_fitness)
        return pool[a].theta_fitness < pool[b].theta_fitness;
      return a < b;
    };
    // Rank inside each cluster, then gather fronts across clusters.
    std::vector<std::vector<std::size_t>> clusters(refs.size());
    for (std::size_t i : feasible) clusters[pool[i].cluster_id].push_back(i);
    std::vector<std::vector<std::size_t>> fronts;
    for (auto& members : clusters) {
      std::sort(members.begin(), members.end(), by_fitness);
      for (std::size_t r = 0; r < members.size(); ++r) {
        if (fronts.size() <= r) fronts.emplace_back();
        fronts[r].push_back(members[r]);
      }
    }
    for (auto& front : fronts) {
      if (chosen.size() >= capacity) break;
      std::sort(front.begin(), front.end(), by_fitness);
      const std::size_t take = std::min(front.size(), capacity - chosen.size());
      chosen.insert(chosen.end(), front.begin(), front.begin() + std::ptrdiff_t(take));
    }
    detail::retain_extremes(pool, feasible, chosen, capacity);
  }

  std::stable_sort(infeasible.begin(), infeasible.end(), [&](std::size_t a, std::size_t b) {
    return pool[a].feasibility_penalty < pool[b].feasibility_penalty;
  });
  for (std::size_t i : infeasible) {
    if (chosen.size() >= capacity) break;
    chosen.push_back(i);
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Variation

/// Box bounds of the continuous genes, in the order visited by for_each_gene.
struct GeneBounds {
  std::vector<double> upper;  // lower bound is always 0
};

template <class F>
void for_each_real_gene(DecisionVector& dv, F&& f) {
  for (auto& x : dv.p_mt.raw()) f(x);
  for (auto& x : dv.r_mt.raw()) f(x);
  for (auto& x : dv.p_ch) f(x);
  for (auto& x : dv.p_dc) f(x);
  for (auto& x : dv.p_res_ess) f(x);
}

inline GeneBounds gene_bounds(const Scenario& sc) {
  GeneBounds b;
  for (int pass = 0; pass < 2; ++pass)  // p_mt then r_mt
    for (const auto& unit : sc.units)
      for (std::size_t t = 0; t < sc.horizon; ++t) b.upper.push_back(unit.p_max);
  for (std::size_t t = 0; t < sc.horizon; ++t) b.upper.push_back(sc.ess.p_ch_max);
  for (std::size_t t = 0; t < sc.horizon; ++t) b.upper.push_back(sc.ess.p_dc_max);
  for (std::size_t t = 0; t < sc.horizon; ++t) b.upper.push_back(sc.ess.p_dc_max);
  return b;
}

inline std::size_t gene_count(const Scenario& sc) {
  return gene_bounds(sc).upper.size() + sc.unit_count() * sc.horizon;
}

namespace detail {

inline void sbx_pair(double& x1, double& x2, double lo, double hi, double eta, Rng& rng) {
  if (std::abs(x1 - x2) <= 1e-14 || !(hi > lo)) return;
  const double y1 = std::min(x1, x2), y2 = std::max(x1, x2);
  const double u = rng.uniform();
  auto betaq = [&](double beta) {
    const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
    return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                            : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
  };
  const double c1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * (y1 - lo) / (y2 - y1)) * (y2 - y1));
  const double c2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (hi - y2) / (y2 - y1)) * (y2 - y1));
  double a = std::clamp(c1, lo, hi), b = std::clamp(c2, lo, hi);
  if (rng.bernoulli(0.5)) std::swap(a, b);
  x1 = a;
  x2 = b;
}

inline void polynomial_mutation(double& x, double lo, double hi, double eta, Rng& rng) {
  if (!(hi > lo)) return;
  const double d1 = (x - lo) / (hi - lo), d2 = (hi - x) / (hi - lo);
  const double u = rng.uniform();
  const double power = 1.0 / (eta + 1.0);
  double dq;
  if (u < 0.5) {
    const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
    dq = std::pow(v, power) - 1.0;
  } else {
    const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
    dq = 1.0 - std::pow(v, power);
  }
  x = std::clamp(x + dq * (hi - lo), lo, hi);
}

}  // namespace detail

/// Two offspring from two parents: SBX and polynomial mutation on the
/// continuous genes, uniform crossover and bit flips on the commitments.
/// Offspring are repaired; startups are always re-derived.
inline std::array<DecisionVector, 2> vary(const DecisionVector& p1, const DecisionVector& p2,
                                          const Scenario& sc, const EquivalentLoadProfile& prof,
                                          const ThetaDeaParams& params, Rng& rng) {
  const GeneBounds bounds = gene_bounds(sc);
  const double pm = params.mutation_prob >= 0 ? params.mutation_prob
                                              : 1.0 / double(gene_count(sc));
  DecisionVector c1 = p1, c2 = p2;

  std::vector<double*> g1, g2;
  for_each_real_gene(c1, [&](double& x) { g1.push_back(&x); });
  for_each_real_gene(c2, [&](double& x) { g2.push_back(&x); });
  auto& b1 = c1.commit.raw();
  auto& b2 = c2.commit.raw();

  if (rng.bernoulli(params.crossover_prob)) {
    for (std::size_t i = 0; i < g1.size(); ++i)
      if (rng.bernoulli(0.5))
        detail::sbx_pair(*g1[i], *g2[i], 0.0, bounds.upper[i], params.sbx_eta, rng);
    for (std::size_t i = 0; i < b1.size(); ++i)
      if (rng.bernoulli(0.5)) std::swap(b1[i], b2[i]);
  }
  for (auto* genes : {&g1, &g2})
    for (std::size_t i = 0; i < genes->size(); ++i)
      if (rng.bernoulli(pm))
        detail::polynomial_mutation(*(*genes)[i], 0.0, bounds.upper[i], params.pm_eta, rng);
  for (auto* bits : {&b1, &b2})
    for (auto& bit : *bits)
      if (rng.bernoulli(pm)) bit = bit ? 0 : 1;

  return {repair(std::move(c1), sc, prof), repair(std::move(c2), sc, prof)};
}

inline DecisionVector random_genotype(const Scenario& sc, Rng& rng) {
  DecisionVector dv = DecisionVector::zeros(sc);
  const GeneBounds bounds = gene_bounds(sc);
  // A per-individual level and on-rate spread the initial population across
  // the satisfaction range instead of bunching it at half output.
  const double level = rng.uniform();
  const double on_rate = rng.uniform(0.3, 1.0);
  std::size_t i = 0;
  for_each_real_gene(dv, [&](double& x) {
    const double hi = bounds.upper[i++];
    x = std::clamp(hi * (level + 0.25 * (rng.uniform() - 0.5)), 0.0, hi);
  });
  for (auto& bit : dv.commit.raw()) bit = rng.bernoulli(on_rate) ? 1 : 0;
  return dv;
}

// ---------------------------------------------------------------------------
// Driver

struct GenerationStats {
  std::size_t generation = 0;
  std::size_t feasible = 0;
  double best_penalty = 0.0;
};

struct ParetoArchive {
  /// Feasible, mutually non-dominated, distinct objective vectors.
  std::vector<Individual> members;
  bool infeasible = false;    // no feasible schedule found
  double best_penalty = 0.0;  // smallest penalty in the final population
  std::vector<GenerationStats> history;
};

inline Individual make_individual(DecisionVector dv, const Scenario& sc,
                                  const EquivalentLoadProfile& prof) {
  Individual ind;
  const Evaluation ev = evaluate(dv, sc, prof);
  ind.genotype = std::move(dv);
  ind.objectives = ev.objectives;
  ind.feasibility_penalty = ev.penalty;
  return ind;
}

/// Indices of the classically non-dominated members, duplicates dropped
/// (first occurrence kept).
inline std::vector<std::size_t> nondominated_indices(std::span<const ObjectiveVector> objs) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < objs.size() && !dominated; ++j)
      dominated = j != i && dominates(objs[j], objs[i]);
    for (std::size_t k : keep)
      if (objs[k] == objs[i]) dominated = true;
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

inline ParetoArchive run(const Scenario& sc, const EquivalentLoadProfile& prof,
                         const ThetaDeaParams& params) {
  params.validate();
  Rng rng(params.rng_seed);
  const auto refs = generate_reference_points(kObjectives, params.divisions);
  const std::size_t n = params.pop_size;

  std::vector<Individual> pop;
  pop.reserve(2 * n);
  // Two anchors: everything off, and every unit committed at full output
  // (repair trims it to the balance target). The rest is random.
  DecisionVector full = DecisionVector::zeros(sc);
  for (auto& u : full.commit.raw()) u = 1;
  for (std::size_t k = 0; k < sc.unit_count(); ++k)
    for (std::size_t t = 0; t < sc.horizon; ++t) full.p_mt(k, t) = sc.units[k].p_max;
  pop.push_back(make_individual(repair(DecisionVector::zeros(sc), sc, prof), sc, prof));
  pop.push_back(make_individual(repair(std::move(full), sc, prof), sc, prof));
  while (pop.size() < n)
    pop.push_back(make_individual(repair(random_genotype(sc, rng), sc, prof), sc, prof));

  ParetoArchive archive;
  auto record = [&](std::size_t gen) {
    GenerationStats s{gen, 0, std::numeric_limits<double>::infinity()};
    for (const auto& ind : pop) {
      s.feasible += ind.feasible() ? 1 : 0;
      s.best_penalty = std::min(s.best_penalty, ind.feasibility_penalty);
    }
    archive.history.push_back(s);
  };
  record(0);

  std::vector<std::size_t> order(n);
  for (std::size_t gen = 1; gen <= params.generations; ++gen) {
    // Random mating: shuffle and pair neighbours.
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    for (std::size_t i = 0; i + 1 < n; i += 2) {
      auto kids = vary(pop[order[i]].genotype, pop[order[i + 1]].genotype, sc, prof, params, rng);
      for (auto& kid : kids) pop.push_back(make_individual(std::move(kid), sc, prof));
    }
    const auto survivors = theta_sort_and_select(pop, refs, params, n);
    std::vector<Individual> next;
    next.reserve(2 * n);
    for (std::size_t i : survivors) next.push_back(std::move(pop[i]));
    pop = std::move(next);
    record(gen);
  }

  archive.best_penalty = archive.history.back().best_penalty;
  std::vector<Individual> feasible;
  for (auto& ind : pop)
    if (ind.feasible()) feasible.push_back(std::move(ind));
  archive.infeasible = feasible.empty();

  std::vector<ObjectiveVector> objs;
  for (const auto& ind : feasible) objs.push_back(ind.objectives);
  for (std::size_t i : nondominated_indices(objs)) archive.members.push_back(feasible[i]);
  // Stable order for output: ascending cost, then emissions.
  std::stable_sort(archive.members.begin(), archive.members.end(),
                   [](const Individual& a, const Individual& b) {
                     if (a.objectives.f1_cost != b.objectives.f1_cost)
                       return a.objectives.f1_cost < b.objectives.f1_cost;
                     return a.objectives.f2_emissions < b.objectives.f2_emissions;
                   });
  normalize(archive.members);
  return archive;
}

}  // namespace mgd::dea
