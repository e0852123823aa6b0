#pragma once

// Microgrid description: microturbines, storage, tariff and per-period
// uncertainty. Field names carry their units.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mgdispatch/errors.hpp"
#include "mgdispatch/prob_model.hpp"

namespace mgd {

/// Pollutants in the order NOx, CO2, CO, SO2.
inline constexpr std::size_t kGasCount = 4;
inline constexpr std::array<const char*, kGasCount> kGasNames{"nox", "co2", "co", "so2"};

struct MTUnit {
  std::string name;
  double p_min = 0.0;                // kW
  double p_max = 0.0;                // kW
  double fuel_zeta = 0.0;            // $/h while committed
  double fuel_psi = 0.0;             // $/kWh
  double startstop_kappa = 0.0;      // $ per start
  double reserve_price_sigma = 0.0;  // $/kW of spinning reserve per period
  std::array<double, kGasCount> emission_g_per_kwh{};

  bool operator==(const MTUnit&) const = default;
};

struct ESSParams {
  double cap_min = 0.0;      // kWh
  double cap_max = 0.0;      // kWh
  double cap_initial = 0.0;  // kWh
  double p_ch_max = 0.0;     // kW
  double p_dc_max = 0.0;     // kW
  double eff_ch = 1.0;
  double eff_dc = 1.0;
  double reserve_price = 0.0;  // $/kW of reserve per period

  bool operator==(const ESSParams&) const = default;
};

/// Hourly storage exchange prices in $/kWh.
struct TOUSchedule {
  std::vector<double> purchase;
  std::vector<double> sale;

  bool operator==(const TOUSchedule&) const = default;
};

struct PeriodData {
  std::optional<WindParams> wind;  // no turbine output when absent
  PVParams pv;
  LoadParams load;
  double controllable_load = 0.0;  // kW
  // Deterministic representatives used by the satisfaction index.
  double forecast_wt = 0.0;
  double forecast_pv = 0.0;
  double forecast_load = 0.0;

  bool operator==(const PeriodData&) const = default;
};

struct Scenario {
  std::string name;
  std::size_t horizon = 24;
  double dt = 1.0;  // hours
  std::vector<MTUnit> units;
  std::vector<bool> initial_commitment;  // one per unit, state before t = 0
  ESSParams ess;
  TOUSchedule tou;
  std::vector<PeriodData> periods;
  double confidence_alpha = 0.9;
  double step_q = 2.5;  // kW

  std::size_t unit_count() const noexcept { return units.size(); }
  bool operator==(const Scenario&) const = default;
};

/// Invariant violations, each prefixed with the offending field path.
inline std::vector<std::string> scenario_problems(const Scenario& sc) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& path, const std::string& msg) {
    out.push_back(path + ": " + msg);
  };
  if (sc.horizon < 1) bad("horizon", "must be at least 1");
  if (!(sc.dt > 0)) bad("dt_hours", "must be positive");
  if (!(sc.confidence_alpha > 0.5 && sc.confidence_alpha < 1))
    bad("confidence_alpha", "must lie in (0.5, 1)");
  if (!(sc.step_q > 0)) bad("step_q_kw", "must be positive");
  if (sc.initial_commitment.size() != sc.units.size())
    bad("initial_commitment", "needs one entry per unit");

  for (std::size_t n = 0; n < sc.units.size(); ++n) {
    const auto& u = sc.units[n];
    const std::string path = "units[" + std::to_string(n) + "] (" + u.name + ")";
    if (!(u.p_min >= 0 && u.p_min < u.p_max)) bad(path, "requires 0 <= p_min < p_max");
    if (!(u.fuel_zeta >= 0 && u.fuel_psi >= 0 && u.startstop_kappa >= 0 &&
          u.reserve_price_sigma >= 0))
      bad(path, "costs must be non-negative");
    for (double a : u.emission_g_per_kwh)
      if (!(a >= 0)) bad(path, "emission coefficients must be non-negative");
  }

  const auto& e = sc.ess;
  if (!(e.cap_min >= 0 && e.cap_min <= e.cap_initial && e.cap_initial <= e.cap_max))
    bad("ess", "requires 0 <= cap_min <= cap_initial <= cap_max");
  if (!(e.p_ch_max > 0 && e.p_dc_max > 0)) bad("ess", "rate limits must be positive");
  if (!(e.eff_ch > 0 && e.eff_ch <= 1 && e.eff_dc > 0 && e.eff_dc <= 1))
    bad("ess", "efficiencies must lie in (0, 1]");
  if (!(e.reserve_price >= 0)) bad("ess.reserve_price", "must be non-negative");

  if (sc.tou.purchase.size() != sc.horizon || sc.tou.sale.size() != sc.horizon) {
    bad("tou", "needs one purchase and one sale price per period");
  } else {
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      const std::string path = "tou[" + std::to_string(t) + "]";
      if (!(sc.tou.purchase[t] >= 0 && sc.tou.sale[t] >= 0)) bad(path, "prices must be non-negative");
      if (sc.tou.sale[t] > sc.tou.purchase[t]) bad(path, "sale price exceeds purchase price");
    }
  }

  if (sc.periods.size() != sc.horizon) {
    bad("periods", "needs exactly `horizon` entries");
  } else {
    for (std::size_t t = 0; t < sc.horizon; ++t) {
      const auto& p = sc.periods[t];
      const std::string path = "periods[" + std::to_string(t) + "]";
      if (p.wind && !p.wind->valid())
        bad(path + ".wind", "requires k, gamma > 0, 0 < v_in < v_rated < v_out, p_rated > 0");
      if (!p.pv.valid()) bad(path + ".pv", "requires lambda1, lambda2 > 0 and p_max >= 0");
      if (!p.load.valid()) bad(path + ".load", "requires mean >= 0 and std >= 0");
      if (!(p.controllable_load >= 0)) bad(path + ".controllable_load_kw", "must be non-negative");
    }
  }
  return out;
}

inline void require_valid(const Scenario& sc) {
  const auto problems = scenario_problems(sc);
  if (problems.empty()) return;
  std::string msg = "invalid scenario";
  for (const auto& p : problems) msg += "\n  " + p;
  throw InputError(InputError::Kind::invariant, msg);
}

/// Fills the per-period forecasts with the distribution means.
inline void derive_forecasts(Scenario& sc) {
  for (auto& p : sc.periods) {
    p.forecast_wt = p.wind ? mean_output(*p.wind) : 0.0;
    p.forecast_pv = mean_output(p.pv);
    p.forecast_load = mean_output(p.load);
  }
}

}  // namespace mgd
