#pragma once

// Batch commands: optimise a scenario, pick best compromise schedules from
// an archive, sweep reserve requirements over confidence levels, and check
// reserve coverage of schedules by Monte Carlo.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mgdispatch/decision_analysis.hpp"
#include "mgdispatch/dispatch_model.hpp"
#include "mgdispatch/io.hpp"
#include "mgdispatch/rng.hpp"
#include "mgdispatch/scenario.hpp"
#include "mgdispatch/theta_dea.hpp"

namespace mgd::pipeline {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// optimize

struct OptimizeResult {
  Scenario scenario;
  EquivalentLoadProfile profile;
  dea::ParetoArchive archive;
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
};

inline OptimizeResult optimize(Scenario sc, const dea::ThetaDeaParams& params) {
  OptimizeResult res;
  Stopwatch sw;
  res.profile = build_equivalent_load(sc, &res.warnings);
  res.timings.push_back({"equivalent_load", sw.seconds()});
  Stopwatch sw2;
  res.archive = dea::run(sc, res.profile, params);
  res.timings.push_back({"optimization", sw2.seconds()});
  res.scenario = std::move(sc);
  return res;
}

inline std::vector<io::ArchiveRow> archive_rows(const dea::ParetoArchive& archive) {
  std::vector<io::ArchiveRow> rows;
  for (std::size_t i = 0; i < archive.members.size(); ++i)
    rows.push_back({i, archive.members[i].objectives});
  return rows;
}

inline std::string reserves_csv(const OptimizeResult& res) {
  std::string out = "id,period,mt_reserve_kw,ess_reserve_kw,total_reserve_kw,required_reserve_kw\n";
  const auto& sc = res.scenario;
  for (std::size_t i = 0; i < res.archive.members.size(); ++i) {
    const auto& dv = res.archive.members[i].genotype;
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      double mt = 0.0;
      for (std::size_t n = 0; n < sc.unit_count(); ++n) mt += dv.r_mt(n, t);
      out += std::to_string(i) + "," + std::to_string(t) + "," + io::fmt9(mt) + "," +
             io::fmt9(dv.p_res_ess[t]) + "," + io::fmt9(mt + dv.p_res_ess[t]) + "," +
             io::fmt9(res.profile.required_reserve[t]) + "\n";
    }
  }
  return out;
}

/// archive.csv, schedules.json and reserves.csv in `dir`.
inline void write_optimize(const OptimizeResult& res, const std::filesystem::path& dir) {
  io::write_text(dir / "archive.csv", io::archive_csv(archive_rows(res.archive)));
  io::ScheduleFile file{res.scenario, {}};
  for (std::size_t i = 0; i < res.archive.members.size(); ++i) {
    const auto& m = res.archive.members[i];
    file.solutions.push_back({i, m.objectives, m.feasibility_penalty, m.genotype});
  }
  io::write_text(dir / "schedules.json", io::dump_schedules(file));
  io::write_text(dir / "reserves.csv", reserves_csv(res));
}

// ---------------------------------------------------------------------------
// decide

struct DecideResult {
  std::vector<io::ArchiveRow> rows;
  decide::Selection selection;
  std::size_t overall_best = 0;  // position in selection.bcs
  std::vector<StageTiming> timings;
};

inline DecideResult decide_bcs(std::vector<io::ArchiveRow> rows, const decide::FcmParams& fcm,
                               const decide::GrpParams& grp) {
  Stopwatch sw;
  DecideResult res;
  res.rows = std::move(rows);
  std::vector<ObjectiveVector> objs;
  for (const auto& r : res.rows) objs.push_back(r.objectives);
  res.selection = decide::select_bcs(objs, fcm, grp);
  std::vector<ObjectiveVector> chosen;
  for (std::size_t i : res.selection.bcs) chosen.push_back(objs[i]);
  res.overall_best = decide::overall_best(chosen, grp);
  res.timings.push_back({"decision_analysis", sw.seconds()});
  return res;
}

inline std::string clusters_csv(const DecideResult& res) {
  std::string out = "id,f1_cost_usd,f2_emissions_kg,f3_satisfaction_pct,cluster,membership,rpv\n";
  const auto& sel = res.selection;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& f = res.rows[i].objectives;
    const std::size_t c = sel.clustering.labels[i];
    out += std::to_string(res.rows[i].id) + "," + io::fmt9(f.f1_cost) + "," +
           io::fmt9(f.f2_emissions) + "," + io::fmt9(f.f3_satisfaction) + "," + std::to_string(c) +
           "," + io::fmt9(sel.clustering.mu[i][c]) + "," + io::fmt9(sel.rpv[i]) + "\n";
  }
  return out;
}

/// One row per best compromise schedule; the priority column is its RPV.
inline std::string bcs_csv(const DecideResult& res) {
  std::string out =
      "bcs,id,cluster,f1_cost_usd,f2_emissions_kg,f3_satisfaction_pct,priority_rpv,overall_best\n";
  const auto& sel = res.selection;
  for (std::size_t k = 0; k < sel.bcs.size(); ++k) {
    const std::size_t i = sel.bcs[k];
    const auto& f = res.rows[i].objectives;
    out += std::to_string(k + 1) + "," + std::to_string(res.rows[i].id) + "," +
           std::to_string(sel.clustering.labels[i]) + "," + io::fmt9(f.f1_cost) + "," +
           io::fmt9(f.f2_emissions) + "," + io::fmt9(f.f3_satisfaction) + "," +
           io::fmt9(sel.rpv[i]) + "," + (k == res.overall_best ? "1" : "0") + "\n";
  }
  return out;
}

/// Per-period dispatch of every best compromise schedule.
inline std::string bcs_dispatch_csv(const DecideResult& res, const io::ScheduleFile& schedules) {
  const auto& sc = schedules.scenario;
  std::string out = "bcs,id,period";
  for (const auto& u : sc.units) out += "," + u.name + "_kw";
  out += ",p_ch_kw,p_dc_kw";
  for (const auto& u : sc.units) out += "," + u.name + "_reserve_kw";
  out += ",ess_reserve_kw\n";
  for (std::size_t k = 0; k < res.selection.bcs.size(); ++k) {
    const std::size_t id = res.rows[res.selection.bcs[k]].id;
    const io::ScheduleEntry* entry = nullptr;
    for (const auto& s : schedules.solutions)
      if (s.id == id) entry = &s;
    if (!entry) continue;
    const auto& dv = entry->schedule;
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      out += std::to_string(k + 1) + "," + std::to_string(id) + "," + std::to_string(t);
      for (std::size_t n = 0; n < sc.unit_count(); ++n) out += "," + io::fmt9(dv.p_mt(n, t));
      out += "," + io::fmt9(dv.p_ch[t]) + "," + io::fmt9(dv.p_dc[t]);
      for (std::size_t n = 0; n < sc.unit_count(); ++n) out += "," + io::fmt9(dv.r_mt(n, t));
      out += "," + io::fmt9(dv.p_res_ess[t]) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// reserve-sweep

struct SweepRow {
  double alpha = 0.0;
  std::size_t period = 0;
  double expected_el = 0.0;       // kW
  double required_reserve = 0.0;  // kW
};

inline std::vector<SweepRow> reserve_sweep(const Scenario& sc, const EquivalentLoadProfile& prof,
                                           const std::vector<double>& alphas) {
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    if (!(a > 0.5 && a < 1)) throw ContractViolation("reserve-sweep: alphas must lie in (0.5, 1)");
    for (std::size_t t = 0; t < sc.horizon; ++t)
      rows.push_back({a, t, prof.expected_el[t],
                      min_required_reserve(prof.el[t], prof.expected_el[t], a)});
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "alpha,period,expected_el_kw,required_reserve_kw\n";
  for (const auto& r : rows)
    out += io::fmt9(r.alpha) + "," + std::to_string(r.period) + "," + io::fmt9(r.expected_el) +
           "," + io::fmt9(r.required_reserve) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// validate

struct CoverageRow {
  std::size_t solution = 0;
  std::size_t period = 0;
  double total_reserve = 0.0;
  std::size_t samples = 0;
  double coverage = 0.0;
  double ci_low = 0.0;  // Wilson 95 %
  double ci_high = 0.0;
};

/// Wind speed from the Weibull law mapped through the linear power curve.
inline double sample_wind(const WindParams& w, Rng& rng) {
  const double v = w.scale_gamma * std::pow(-std::log1p(-rng.uniform()), 1.0 / w.shape_k);
  if (v < w.v_in || v > w.v_out) return 0.0;
  if (v >= w.v_rated) return w.p_rated;
  return w.p_rated * (v - w.v_in) / (w.v_rated - w.v_in);
}

inline double sample_pv(const PVParams& pv, Rng& rng) {
  if (pv.p_max == 0.0) return 0.0;
  std::gamma_distribution<double> ga(pv.lambda1, 1.0), gb(pv.lambda2, 1.0);
  const double a = ga(rng.engine()), b = gb(rng.engine());
  return pv.p_max * a / (a + b);
}

inline double sample_load(const LoadParams& lp, Rng& rng) {
  return lp.mean_mu + lp.std_sigma * rng.normal();
}

inline std::pair<double, double> wilson_interval(double hits, double n) {
  const double z = 1.959963984540054;
  const double p = hits / n;
  const double den = 1 + z * z / n;
  const double centre = (p + z * z / (2 * n)) / den;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Empirical frequency with which each schedule's total reserve covers the
/// realised equivalent-load excursion above its expectation. Every period
/// draws its own stream from `seed`, shared by all schedules.
inline std::vector<CoverageRow> validate_coverage(const Scenario& sc,
                                                  const EquivalentLoadProfile& prof,
                                                  const std::vector<DecisionVector>& schedules,
                                                  std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ContractViolation("validate: need at least one sample");
  std::vector<std::vector<double>> reserve(schedules.size(), std::vector<double>(sc.horizon));
  for (std::size_t s = 0; s < schedules.size(); ++s)
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      double r = schedules[s].p_res_ess[t];
      for (std::size_t n = 0; n < sc.unit_count(); ++n) r += schedules[s].r_mt(n, t);
      reserve[s][t] = r;
    }

  std::vector<std::vector<std::size_t>> hits(schedules.size(),
                                             std::vector<std::size_t>(sc.horizon, 0));
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + t);
    const auto& p = sc.periods[t];
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double wind = p.wind ? sample_wind(*p.wind, rng) : 0.0;
      const double pv = sample_pv(p.pv, rng);
      const double load = p.load.std_sigma > 0 ? sample_load(p.load, rng) : p.load.mean_mu;
      const double excursion = (load - wind - pv) - prof.expected_el[t];
      for (std::size_t s = 0; s < schedules.size(); ++s)
        if (reserve[s][t] >= excursion) ++hits[s][t];
    }
  }

  std::vector<CoverageRow> rows;
  for (std::size_t s = 0; s < schedules.size(); ++s)
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      const auto [lo, hi] = wilson_interval(double(hits[s][t]), double(n_samples));
      rows.push_back({s, t, reserve[s][t], n_samples, double(hits[s][t]) / double(n_samples), lo, hi});
    }
  return rows;
}

inline std::string coverage_csv(const std::vector<CoverageRow>& rows,
                                const std::vector<std::size_t>& ids) {
  std::string out = "id,period,total_reserve_kw,samples,coverage,ci95_low,ci95_high\n";
  for (const auto& r : rows)
    out += std::to_string(ids[r.solution]) + "," + std::to_string(r.period) + "," +
           io::fmt9(r.total_reserve) + "," + std::to_string(r.samples) + "," + io::fmt9(r.coverage) +
           "," + io::fmt9(r.ci_low) + "," + io::fmt9(r.ci_high) + "\n";
  return out;
}

/// Schedule that meets every period's requirement from the storage reserve
/// alone, with all units off. Used for coverage checks.
inline DecisionVector reserve_only_schedule(const Scenario& sc, const EquivalentLoadProfile& prof) {
  DecisionVector dv = DecisionVector::zeros(sc);
  for (std::size_t t = 0; t < sc.horizon; ++t) dv.p_res_ess[t] = prof.required_reserve[t];
  return dv;
}

}  // namespace mgd::pipeline
