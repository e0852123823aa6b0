#pragma once

// The dispatch problem: schedule encoding, the three objectives, constraint
// checking, the deterministic form of the reserve chance constraint, and
// the repair operator used by the optimiser.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mgdispatch/errors.hpp"
#include "mgdispatch/prob_model.hpp"
#include "mgdispatch/scenario.hpp"
#include "mgdispatch/sot.hpp"

namespace mgd {

/// Dense [unit][period] table.
template <class T>
class UnitTimeGrid {
 public:
  UnitTimeGrid() = default;
  UnitTimeGrid(std::size_t units, std::size_t periods, T init = T{})
      : units_(units), periods_(periods), data_(units * periods, init) {}

  T& operator()(std::size_t n, std::size_t t) { return data_[n * periods_ + t]; }
  const T& operator()(std::size_t n, std::size_t t) const { return data_[n * periods_ + t]; }

  std::size_t units() const noexcept { return units_; }
  std::size_t periods() const noexcept { return periods_; }
  std::vector<T>& raw() noexcept { return data_; }
  const std::vector<T>& raw() const noexcept { return data_; }

  bool operator==(const UnitTimeGrid&) const = default;

 private:
  std::size_t units_ = 0;
  std::size_t periods_ = 0;
  std::vector<T> data_;
};

/// One candidate schedule. Startups are derived from commitments.
struct DecisionVector {
  UnitTimeGrid<std::uint8_t> commit;   // U
  UnitTimeGrid<std::uint8_t> startup;  // S
  UnitTimeGrid<double> p_mt;           // kW
  UnitTimeGrid<double> r_mt;           // kW spinning reserve
  std::vector<double> p_ch;            // kW
  std::vector<double> p_dc;            // kW
  std::vector<double> p_res_ess;       // kW storage reserve

  DecisionVector() = default;
  DecisionVector(std::size_t units, std::size_t periods)
      : commit(units, periods), startup(units, periods), p_mt(units, periods),
        r_mt(units, periods), p_ch(periods), p_dc(periods), p_res_ess(periods) {}

  static DecisionVector zeros(const Scenario& sc) { return {sc.unit_count(), sc.horizon}; }

  std::size_t units() const noexcept { return commit.units(); }
  std::size_t periods() const noexcept { return p_ch.size(); }

  bool operator==(const DecisionVector&) const = default;
};

struct ObjectiveVector {
  double f1_cost = 0.0;          // $
  double f2_emissions = 0.0;     // kg
  double f3_satisfaction = 0.0;  // %

  bool operator==(const ObjectiveVector&) const = default;
};

/// True when `a` Pareto-dominates `b` under (min F1, min F2, max F3).
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  const bool no_worse = a.f1_cost <= b.f1_cost && a.f2_emissions <= b.f2_emissions &&
                        a.f3_satisfaction >= b.f3_satisfaction;
  const bool better = a.f1_cost < b.f1_cost || a.f2_emissions < b.f2_emissions ||
                      a.f3_satisfaction > b.f3_satisfaction;
  return no_worse && better;
}

inline void require_shape(const DecisionVector& dv, const Scenario& sc) {
  if (dv.units() != sc.unit_count() || dv.periods() != sc.horizon ||
      dv.p_dc.size() != sc.horizon || dv.p_res_ess.size() != sc.horizon ||
      dv.p_mt.units() != sc.unit_count() || dv.p_mt.periods() != sc.horizon)
    throw ContractViolation("decision vector does not match scenario dimensions");
}

// ---------------------------------------------------------------------------
// Equivalent load

/// Per-period sequences and the derived reserve requirement at the
/// scenario's confidence level.
struct EquivalentLoadProfile {
  std::vector<ProbSeq> el;             // floored load - wind - pv
  std::vector<double> expected_el;     // signed mean, kW
  std::vector<double> required_reserve;  // kW
};

/// Smallest reserve on the grid {u q - e_el} whose coverage reaches alpha,
/// floored at zero.
inline double min_required_reserve(const ProbSeq& el, double e_el, double alpha) {
  double cumulative = 0.0;
  for (std::size_t u = 0; u < el.size(); ++u) {
    cumulative += el[u];
    if (cumulative >= alpha) return std::max(0.0, double(u) * el.step() - e_el);
  }
  return std::max(0.0, double(el.max_index()) * el.step() - e_el);
}

/// Deterministic equivalent of Pr{reserve >= EL - E[EL]} >= alpha.
inline bool reserve_chance_satisfied(double total_reserve, const ProbSeq& el, double e_el,
                                     double alpha) {
  double covered = 0.0;
  for (std::size_t u = 0; u < el.size(); ++u)
    if (total_reserve >= double(u) * el.step() - e_el) covered += el[u];
  return covered >= alpha;
}

inline EquivalentLoadProfile build_equivalent_load(const Scenario& sc,
                                                   std::vector<std::string>* warnings = nullptr) {
  EquivalentLoadProfile prof;
  const double q = sc.step_q;
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    const auto& p = sc.periods[t];
    const ProbSeq wind = p.wind ? discretize(*p.wind, q, warnings) : ProbSeq::point_mass(q, 0);
    const ProbSeq pv = discretize(p.pv, q, warnings);
    const ProbSeq load = discretize(p.load, q, warnings);
    ProbSeq el = sot::seq_sub_floor(load, sot::seq_add(wind, pv));
    const double e_el = sot::expected_equivalent_load(load, wind, pv);
    prof.required_reserve.push_back(min_required_reserve(el, e_el, sc.confidence_alpha));
    prof.expected_el.push_back(e_el);
    prof.el.push_back(std::move(el));
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Objectives

/// Operating cost in $: storage exchange at TOU prices (sale price on
/// discharge, purchase price on charge), MT reserve, fuel and start costs,
/// and storage reserve.
inline double eval_cost(const DecisionVector& dv, const Scenario& sc) {
  require_shape(dv, sc);
  double exchange = 0.0, mt_reserve = 0.0, fuel = 0.0, ess_reserve = 0.0;
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    exchange += (sc.tou.sale[t] * dv.p_dc[t] - sc.tou.purchase[t] * dv.p_ch[t]) * sc.dt;
    ess_reserve += dv.p_res_ess[t];
    for (std::size_t n = 0; n < sc.unit_count(); ++n) {
      const auto& unit = sc.units[n];
      mt_reserve += unit.reserve_price_sigma * dv.r_mt(n, t);
      fuel += unit.startstop_kappa * dv.startup(n, t);
      if (dv.commit(n, t))
        fuel += (unit.fuel_zeta + unit.fuel_psi * dv.p_mt(n, t)) * sc.dt;
    }
  }
  return exchange + mt_reserve + fuel + sc.ess.reserve_price * ess_reserve;
}

/// Pollutant mass in kg over all gases and units.
inline double eval_emissions(const DecisionVector& dv, const Scenario& sc) {
  require_shape(dv, sc);
  double grams = 0.0;
  for (std::size_t n = 0; n < sc.unit_count(); ++n) {
    double rate = 0.0;
    for (double a : sc.units[n].emission_g_per_kwh) rate += a;
    double energy = 0.0;
    for (std::size_t t = 0; t < sc.horizon; ++t) energy += dv.p_mt(n, t) * sc.dt;
    grams += rate * energy;
  }
  return grams / 1000.0;
}

/// Served share of forecast load energy in percent, capped at 100.
/// Throws when the scenario carries no load at all.
inline double eval_satisfaction(const DecisionVector& dv, const Scenario& sc) {
  require_shape(dv, sc);
  double supplied = 0.0, demand = 0.0;
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    const auto& p = sc.periods[t];
    double mt = 0.0;
    for (std::size_t n = 0; n < sc.unit_count(); ++n) mt += dv.p_mt(n, t);
    supplied += mt + p.forecast_pv + p.forecast_wt + dv.p_dc[t] - dv.p_ch[t];
    demand += p.forecast_load;
  }
  if (!(demand > 0)) throw ContractViolation("eval_satisfaction: total load is zero");
  return std::min(100.0, 100.0 * supplied / demand);
}

inline double total_forecast_load(const Scenario& sc) {
  double demand = 0.0;
  for (const auto& p : sc.periods) demand += p.forecast_load;
  return demand;
}

/// All three objectives. A scenario without load is fully satisfied.
inline ObjectiveVector evaluate_objectives(const DecisionVector& dv, const Scenario& sc) {
  return {eval_cost(dv, sc), eval_emissions(dv, sc),
          total_forecast_load(sc) > 0 ? eval_satisfaction(dv, sc) : 100.0};
}

// ---------------------------------------------------------------------------
// Constraints

inline constexpr double kFeasTol = 1e-9;
/// $ per kW (or kWh) of residual violation, used for ranking only.
inline constexpr double kPenaltyWeight = 1e6;

/// How far dispatchable supply may fall below the balance target. Served
/// power cannot go negative, so storage only charges from turbine output
/// and the forecast renewables.
inline double curtailment_limit(const Scenario& sc, const EquivalentLoadProfile& prof,
                                std::size_t t) {
  const auto& p = sc.periods[t];
  return std::max(0.0, prof.expected_el[t] + p.controllable_load + p.forecast_wt + p.forecast_pv);
}

/// Storage energy C_0..C_T from the initial state.
inline std::vector<double> soc_trajectory(const DecisionVector& dv, const Scenario& sc) {
  std::vector<double> soc(sc.horizon + 1);
  soc[0] = sc.ess.cap_initial;
  for (std::size_t t = 0; t < sc.horizon; ++t)
    soc[t + 1] = soc[t] + sc.ess.eff_ch * dv.p_ch[t] * sc.dt - sc.dt * dv.p_dc[t] / sc.ess.eff_dc;
  return soc;
}

struct ConstraintReport {
  std::vector<double> balance_mismatch;  // supply - (E[EL] + controllable load), kW
  std::vector<double> soc;               // kWh, C_0..C_T
  std::vector<double> total_reserve;     // kW
  std::vector<double> reserve_shortfall;  // kW below the requirement
  std::vector<bool> chance_satisfied;
  // Summed positive violation magnitudes.
  double mt_limits = 0.0;
  double startup_consistency = 0.0;
  double ess_rates = 0.0;
  double ess_capacity = 0.0;
  double simultaneous_exchange = 0.0;
  double mt_reserve_headroom = 0.0;
  double ess_reserve_cap = 0.0;
  double negative_values = 0.0;
  double over_curtailment = 0.0;  // charging beyond the available generation

  /// Supply above the balance target. A shortfall is curtailed load and is
  /// scored by the satisfaction objective instead.
  double over_supply() const {
    double s = 0.0;
    for (double m : balance_mismatch) s += m > kFeasTol ? m : 0.0;
    return s;
  }
  double chance_shortfall() const {
    return std::accumulate(reserve_shortfall.begin(), reserve_shortfall.end(), 0.0);
  }
  double box_and_trajectory() const {
    return mt_limits + startup_consistency + ess_rates + ess_capacity + simultaneous_exchange +
           mt_reserve_headroom + ess_reserve_cap + negative_values + over_curtailment;
  }
  double penalty() const {
    return kPenaltyWeight * (over_supply() + chance_shortfall() + box_and_trajectory());
  }
  bool feasible() const { return penalty() == 0.0; }
};

namespace detail {
inline double excess(double value, double limit) {
  return value - limit > kFeasTol ? value - limit : 0.0;
}
}  // namespace detail

inline ConstraintReport check_constraints(const DecisionVector& dv, const Scenario& sc,
                                          const EquivalentLoadProfile& prof) {
  require_shape(dv, sc);
  using detail::excess;
  ConstraintReport rep;
  const auto& ess = sc.ess;
  rep.soc = soc_trajectory(dv, sc);

  for (std::size_t t = 0; t < sc.horizon; ++t) {
    double supply = dv.p_dc[t] - dv.p_ch[t];
    double reserve = dv.p_res_ess[t];
    for (std::size_t n = 0; n < sc.unit_count(); ++n) {
      const auto& unit = sc.units[n];
      const double u = dv.commit(n, t) ? 1.0 : 0.0;
      const double p = dv.p_mt(n, t), r = dv.r_mt(n, t);
      supply += p;
      reserve += r;
      rep.mt_limits += excess(p, u * unit.p_max) + excess(u * unit.p_min, p);
      rep.mt_reserve_headroom += excess(p + r, u * unit.p_max);
      rep.negative_values += excess(0.0, r);
      const bool was_on = t == 0 ? bool(sc.initial_commitment[n]) : bool(dv.commit(n, t - 1));
      const std::uint8_t expected = (dv.commit(n, t) && !was_on) ? 1 : 0;
      rep.startup_consistency += dv.startup(n, t) != expected ? 1.0 : 0.0;
    }
    rep.balance_mismatch.push_back(supply -
                                   (prof.expected_el[t] + sc.periods[t].controllable_load));
    rep.over_curtailment += excess(-rep.balance_mismatch.back(), curtailment_limit(sc, prof, t));

    rep.ess_rates += excess(dv.p_ch[t], ess.p_ch_max) + excess(dv.p_dc[t], ess.p_dc_max);
    rep.negative_values += excess(0.0, dv.p_ch[t]) + excess(0.0, dv.p_dc[t]) +
                           excess(0.0, dv.p_res_ess[t]);
    rep.simultaneous_exchange += std::min(dv.p_ch[t], dv.p_dc[t]) > kFeasTol
                                     ? std::min(dv.p_ch[t], dv.p_dc[t])
                                     : 0.0;
    rep.ess_capacity += excess(rep.soc[t + 1], ess.cap_max) + excess(ess.cap_min, rep.soc[t + 1]);
    const double res_cap = std::min(ess.eff_dc * (rep.soc[t] - ess.cap_min) / sc.dt,
                                    ess.p_dc_max - dv.p_dc[t]);
    rep.ess_reserve_cap += excess(dv.p_res_ess[t], std::max(res_cap, 0.0));

    rep.total_reserve.push_back(reserve);
    const bool ok = reserve_chance_satisfied(reserve, prof.el[t], prof.expected_el[t],
                                             sc.confidence_alpha);
    rep.chance_satisfied.push_back(ok);
    rep.reserve_shortfall.push_back(ok ? 0.0 : std::max(0.0, prof.required_reserve[t] - reserve));
    if (!ok && rep.reserve_shortfall.back() == 0.0) rep.reserve_shortfall.back() = kFeasTol;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Repair

/// Maps an arbitrary genotype onto the box and trajectory constraints.
/// Afterwards only over-supply that the MT minimum outputs force, and a
/// reserve requirement beyond the committed headroom, can remain; both are
/// charged through ConstraintReport::penalty(). Idempotent.
inline DecisionVector repair(DecisionVector dv, const Scenario& sc,
                             const EquivalentLoadProfile& prof) {
  require_shape(dv, sc);
  const auto& ess = sc.ess;
  const std::size_t units = sc.unit_count();
  auto clamp = [](double x, double lo, double hi) {
    if (!std::isfinite(x)) return lo;
    return std::clamp(x, lo, hi);
  };

  // Commitment box and startups.
  for (std::size_t n = 0; n < units; ++n) {
    const auto& unit = sc.units[n];
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      auto& u = dv.commit(n, t);
      u = u ? 1 : 0;
      if (u) {
        dv.p_mt(n, t) = clamp(dv.p_mt(n, t), unit.p_min, unit.p_max);
        dv.r_mt(n, t) = clamp(dv.r_mt(n, t), 0.0, unit.p_max);
      } else {
        dv.p_mt(n, t) = 0.0;
        dv.r_mt(n, t) = 0.0;
      }
      const bool was_on = t == 0 ? bool(sc.initial_commitment[n]) : bool(dv.commit(n, t - 1));
      dv.startup(n, t) = (u && !was_on) ? 1 : 0;
    }
  }

  // Exchange rates, no simultaneous charge and discharge, then the energy
  // trajectory scaled forward in time.
  double soc = ess.cap_initial;
  std::vector<double> soc_start(sc.horizon);
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    double& ch = dv.p_ch[t];
    double& dc = dv.p_dc[t];
    ch = clamp(ch, 0.0, ess.p_ch_max);
    dc = clamp(dc, 0.0, ess.p_dc_max);
    if (ch > 0 && dc > 0) (dc > ch ? ch : dc) = 0.0;
    double mt = 0.0;
    for (std::size_t n = 0; n < units; ++n) mt += dv.p_mt(n, t);
    const double ch_room = mt + sc.periods[t].forecast_wt + sc.periods[t].forecast_pv;
    if (ch > ch_room + kFeasTol) ch = ch_room;
    soc_start[t] = soc;
    if (soc + ess.eff_ch * ch * sc.dt > ess.cap_max + kFeasTol)
      ch = std::max(0.0, (ess.cap_max - soc) / (ess.eff_ch * sc.dt));
    if (soc - sc.dt * dc / ess.eff_dc < ess.cap_min - kFeasTol)
      dc = std::max(0.0, (soc - ess.cap_min) * ess.eff_dc / sc.dt);
    soc = soc + ess.eff_ch * ch * sc.dt - sc.dt * dc / ess.eff_dc;
  }

  for (std::size_t t = 0; t < sc.horizon; ++t) {
    // Pull MT output toward the minimum when supply exceeds the target.
    const double target = prof.expected_el[t] + sc.periods[t].controllable_load;
    double supply = dv.p_dc[t] - dv.p_ch[t];
    double flexible = 0.0;
    for (std::size_t n = 0; n < units; ++n) {
      supply += dv.p_mt(n, t);
      if (dv.commit(n, t)) flexible += dv.p_mt(n, t) - sc.units[n].p_min;
    }
    const double over = supply - target;
    if (over > kFeasTol && flexible > 0) {
      const double keep = std::max(0.0, 1.0 - over / flexible);
      for (std::size_t n = 0; n < units; ++n)
        if (dv.commit(n, t)) {
          const double lo = sc.units[n].p_min;
          dv.p_mt(n, t) = lo + (dv.p_mt(n, t) - lo) * keep;
        }
    }

    // Reserve caps.
    double reserve = 0.0;
    for (std::size_t n = 0; n < units; ++n) {
      const double headroom = dv.commit(n, t) ? sc.units[n].p_max - dv.p_mt(n, t) : 0.0;
      if (dv.r_mt(n, t) > headroom + kFeasTol) dv.r_mt(n, t) = std::max(0.0, headroom);
      reserve += dv.r_mt(n, t);
    }
    const double res_cap = std::max(
        0.0, std::min(ess.eff_dc * (soc_start[t] - ess.cap_min) / sc.dt, ess.p_dc_max - dv.p_dc[t]));
    double& res = dv.p_res_ess[t];
    res = std::isfinite(res) ? std::max(res, 0.0) : 0.0;
    if (res > res_cap + kFeasTol) res = res_cap;
    reserve += res;

    // Lift MT reserves, cheapest first, until the chance constraint holds.
    if (reserve_chance_satisfied(reserve, prof.el[t], prof.expected_el[t], sc.confidence_alpha))
      continue;
    double need = prof.required_reserve[t] + kFeasTol - reserve;
    std::vector<std::size_t> order(units);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sc.units[a].reserve_price_sigma < sc.units[b].reserve_price_sigma;
    });
    for (std::size_t n : order) {
      if (need <= 0) break;
      if (!dv.commit(n, t)) continue;
      const double room = sc.units[n].p_max - dv.p_mt(n, t) - dv.r_mt(n, t);
      if (room <= 0) continue;
      if (need >= room) {
        dv.r_mt(n, t) = sc.units[n].p_max - dv.p_mt(n, t);
        need -= room;
      } else {
        dv.r_mt(n, t) += need;
        need = 0;
      }
    }
    // Still short: trade output for headroom, cheapest reserve first, as
    // far as the curtailment limit allows.
    double mismatch = dv.p_dc[t] - dv.p_ch[t] - target;
    for (std::size_t n = 0; n < units; ++n) mismatch += dv.p_mt(n, t);
    double spare = mismatch + curtailment_limit(sc, prof, t);
    for (std::size_t n : order) {
      if (need <= 0 || spare <= 0) break;
      if (!dv.commit(n, t)) continue;
      const double give = std::min({need, spare, dv.p_mt(n, t) - sc.units[n].p_min});
      if (give <= 0) continue;
      dv.p_mt(n, t) -= give;
      dv.r_mt(n, t) += give;
      need -= give;
      spare -= give;
    }
  }
  return dv;
}

/// Objectives plus feasibility of an already repaired schedule.
struct Evaluation {
  ObjectiveVector objectives;
  double penalty = 0.0;  // $, zero when feasible
};

inline Evaluation evaluate(const DecisionVector& dv, const Scenario& sc,
                           const EquivalentLoadProfile& prof) {
  return {evaluate_objectives(dv, sc), check_constraints(dv, sc, prof).penalty()};
}

}  // namespace mgd
