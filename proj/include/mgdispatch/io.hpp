#pragma once

// File formats.
//
// Scenario and schedule files are JSON with a "format_version" field.
// Archive, sweep and coverage tables are CSV with a fixed header; every
// floating-point value in a CSV is written with 9 significant digits.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgdispatch/defaults.hpp"
#include "mgdispatch/dispatch_model.hpp"
#include "mgdispatch/errors.hpp"
#include "mgdispatch/scenario.hpp"

namespace mgd::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// %.9g
inline std::string fmt9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(InputError::Kind::parse, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write file");
  out << text;
}

// ---------------------------------------------------------------------------
// Field access with path diagnostics

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& path, const std::string& msg) {
  throw InputError(InputError::Kind::parse, path + ": " + msg);
}

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(path + "." + key, "missing required field");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) parse_fail(path, "expected a number");
  return v.get<double>();
}

inline double num(const json& obj, const std::string& key, const std::string& path) {
  return number(field(obj, key, path), path + "." + key);
}

inline double num_or(const json& obj, const std::string& key, double fallback,
                     const std::string& path) {
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), path + "." + key);
}

inline std::vector<double> num_array(const json& v, const std::string& path) {
  if (!v.is_array()) parse_fail(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline void check_version(const json& doc, const std::string& path) {
  const double v = num(doc, "format_version", path);
  if (v != kFormatVersion)
    parse_fail(path + ".format_version", "unsupported version " + fmt9(v));
}

inline json parse(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(source, e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario

inline json to_json(const Scenario& sc) {
  json units = json::array();
  for (std::size_t n = 0; n < sc.units.size(); ++n) {
    const auto& u = sc.units[n];
    json em;
    for (std::size_t k = 0; k < kGasCount; ++k) em[kGasNames[k]] = u.emission_g_per_kwh[k];
    units.push_back({{"name", u.name},
                     {"p_min_kw", u.p_min},
                     {"p_max_kw", u.p_max},
                     {"fuel_zeta_usd_per_h", u.fuel_zeta},
                     {"fuel_psi_usd_per_kwh", u.fuel_psi},
                     {"startstop_kappa_usd", u.startstop_kappa},
                     {"reserve_price_usd_per_kw", u.reserve_price_sigma},
                     {"emissions_g_per_kwh", em},
                     {"initially_on", bool(sc.initial_commitment[n])}});
  }
  const auto& e = sc.ess;
  json periods = json::array();
  for (const auto& p : sc.periods) {
    json pj;
    pj["load_kw"] = p.load.mean_mu;
    pj["load_std_kw"] = p.load.std_sigma;
    if (p.wind) {
      const auto& w = *p.wind;
      pj["wind"] = {{"shape_k", w.shape_k},   {"scale_gamma", w.scale_gamma},
                    {"v_in", w.v_in},         {"v_rated", w.v_rated},
                    {"v_out", w.v_out},       {"p_rated_kw", w.p_rated}};
    }
    json pv = {{"lambda1", p.pv.lambda1}, {"lambda2", p.pv.lambda2}, {"p_max_kw", p.pv.p_max}};
    if (p.pv.area) pv["area_m2"] = *p.pv.area;
    if (p.pv.efficiency) pv["efficiency"] = *p.pv.efficiency;
    if (p.pv.r_max) pv["r_max_w_per_m2"] = *p.pv.r_max;
    pj["pv"] = pv;
    pj["controllable_load_kw"] = p.controllable_load;
    pj["forecast"] = {{"wt_kw", p.forecast_wt}, {"pv_kw", p.forecast_pv}, {"load_kw", p.forecast_load}};
    periods.push_back(pj);
  }
  return {{"format_version", kFormatVersion},
          {"name", sc.name},
          {"horizon", sc.horizon},
          {"dt_hours", sc.dt},
          {"confidence_alpha", sc.confidence_alpha},
          {"step_q_kw", sc.step_q},
          {"units", units},
          {"ess",
           {{"cap_min_kwh", e.cap_min},
            {"cap_max_kwh", e.cap_max},
            {"cap_initial_kwh", e.cap_initial},
            {"p_ch_max_kw", e.p_ch_max},
            {"p_dc_max_kw", e.p_dc_max},
            {"eff_ch", e.eff_ch},
            {"eff_dc", e.eff_dc},
            {"reserve_price_usd_per_kw", e.reserve_price}}},
          {"tou", {{"purchase_usd_per_kwh", sc.tou.purchase}, {"sale_usd_per_kwh", sc.tou.sale}}},
          {"periods", periods}};
}

/// Builds and validates a scenario. Omitted equipment blocks fall back to
/// the defaults; omitted forecasts are the distribution means.
inline Scenario scenario_from_json(const json& doc, const std::string& src = "scenario") {
  using namespace detail;
  check_version(doc, src);
  Scenario sc;
  sc.name = doc.value("name", std::string{});
  const double horizon = num_or(doc, "horizon", 24, src);
  if (horizon < 1 || horizon != std::floor(horizon))
    throw InputError(InputError::Kind::invariant, src + ".horizon: must be a positive integer");
  sc.horizon = std::size_t(horizon);
  sc.dt = num_or(doc, "dt_hours", 1.0, src);
  sc.confidence_alpha = num_or(doc, "confidence_alpha", 0.9, src);
  sc.step_q = num_or(doc, "step_q_kw", 2.5, src);

  if (doc.contains("units")) {
    const json& arr = doc.at("units");
    if (!arr.is_array()) parse_fail(src + ".units", "expected an array");
    for (std::size_t n = 0; n < arr.size(); ++n) {
      const std::string path = src + ".units[" + std::to_string(n) + "]";
      const json& u = arr[n];
      MTUnit unit;
      unit.name = u.is_object() ? u.value("name", "MT" + std::to_string(n + 1)) : "";
      unit.p_min = num(u, "p_min_kw", path);
      unit.p_max = num(u, "p_max_kw", path);
      unit.fuel_zeta = num(u, "fuel_zeta_usd_per_h", path);
      unit.fuel_psi = num(u, "fuel_psi_usd_per_kwh", path);
      unit.startstop_kappa = num(u, "startstop_kappa_usd", path);
      unit.reserve_price_sigma = num(u, "reserve_price_usd_per_kw", path);
      const json& em = field(u, "emissions_g_per_kwh", path);
      for (std::size_t k = 0; k < kGasCount; ++k)
        unit.emission_g_per_kwh[k] = num(em, kGasNames[k], path + ".emissions_g_per_kwh");
      sc.units.push_back(unit);
      const json& on = u.contains("initially_on") ? u.at("initially_on") : json(false);
      if (!on.is_boolean()) parse_fail(path + ".initially_on", "expected a boolean");
      sc.initial_commitment.push_back(on.get<bool>());
    }
  } else {
    sc.units = defaults::units();
    sc.initial_commitment.assign(sc.units.size(), false);
  }

  if (doc.contains("ess")) {
    const json& e = doc.at("ess");
    const std::string path = src + ".ess";
    sc.ess = {num(e, "cap_min_kwh", path),   num(e, "cap_max_kwh", path),
              num(e, "cap_initial_kwh", path), num(e, "p_ch_max_kw", path),
              num(e, "p_dc_max_kw", path),   num(e, "eff_ch", path),
              num(e, "eff_dc", path),
              num_or(e, "reserve_price_usd_per_kw", defaults::kEssReservePrice, path)};
  } else {
    sc.ess = defaults::ess();
  }

  if (doc.contains("tou")) {
    const json& t = doc.at("tou");
    sc.tou.purchase = num_array(field(t, "purchase_usd_per_kwh", src + ".tou"),
                                src + ".tou.purchase_usd_per_kwh");
    sc.tou.sale = num_array(field(t, "sale_usd_per_kwh", src + ".tou"), src + ".tou.sale_usd_per_kwh");
  } else if (sc.horizon == 24) {
    sc.tou = defaults::tou();
  } else {
    parse_fail(src + ".tou", "required when the horizon is not 24 periods");
  }

  const double std_fraction = num_or(doc, "load_std_fraction", defaults::kLoadStdFraction, src);
  const json& periods = field(doc, "periods", src);
  if (!periods.is_array()) parse_fail(src + ".periods", "expected an array");
  for (std::size_t t = 0; t < periods.size(); ++t) {
    const std::string path = src + ".periods[" + std::to_string(t) + "]";
    const json& pj = periods[t];
    PeriodData p;
    p.load.mean_mu = num(pj, "load_kw", path);
    p.load.std_sigma = num_or(pj, "load_std_kw", std_fraction * p.load.mean_mu, path);
    if (pj.contains("wind") && !pj.at("wind").is_null()) {
      const json& w = pj.at("wind");
      const std::string wp = path + ".wind";
      p.wind = WindParams{num(w, "shape_k", wp), num(w, "scale_gamma", wp), num(w, "v_in", wp),
                          num(w, "v_rated", wp), num(w, "v_out", wp), num(w, "p_rated_kw", wp)};
    }
    if (pj.contains("pv") && !pj.at("pv").is_null()) {
      const json& v = pj.at("pv");
      const std::string vp = path + ".pv";
      p.pv.lambda1 = num(v, "lambda1", vp);
      p.pv.lambda2 = num(v, "lambda2", vp);
      if (v.contains("area_m2")) p.pv.area = num(v, "area_m2", vp);
      if (v.contains("efficiency")) p.pv.efficiency = num(v, "efficiency", vp);
      if (v.contains("r_max_w_per_m2")) p.pv.r_max = num(v, "r_max_w_per_m2", vp);
      const bool panel = p.pv.area && p.pv.efficiency && p.pv.r_max;
      const double from_panel = panel ? *p.pv.r_max * *p.pv.area * *p.pv.efficiency / 1000.0 : 0.0;
      if (v.contains("p_max_kw")) {
        p.pv.p_max = num(v, "p_max_kw", vp);
        if (panel && std::abs(p.pv.p_max - from_panel) > 1e-9 * std::max(1.0, from_panel))
          throw InputError(InputError::Kind::invariant,
                           vp + ": p_max_kw disagrees with r_max * area * efficiency");
      } else if (panel) {
        p.pv.p_max = from_panel;
      } else {
        parse_fail(vp + ".p_max_kw", "missing required field");
      }
    }
    p.controllable_load = num_or(pj, "controllable_load_kw", 0.0, path);
    sc.periods.push_back(p);
  }

  require_valid(sc);

  for (std::size_t t = 0; t < periods.size(); ++t) {
    const json& pj = periods[t];
    auto& p = sc.periods[t];
    const std::string path = src + ".periods[" + std::to_string(t) + "].forecast";
    const json none = json::object();
    const json& f = pj.contains("forecast") ? pj.at("forecast") : none;
    p.forecast_wt = f.contains("wt_kw") ? number(f.at("wt_kw"), path + ".wt_kw")
                                        : (p.wind ? mean_output(*p.wind) : 0.0);
    p.forecast_pv = f.contains("pv_kw") ? number(f.at("pv_kw"), path + ".pv_kw") : mean_output(p.pv);
    p.forecast_load =
        f.contains("load_kw") ? number(f.at("load_kw"), path + ".load_kw") : mean_output(p.load);
  }
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(detail::parse(read_text(path), path.string()), path.string());
}

inline void save_scenario(const std::filesystem::path& path, const Scenario& sc) {
  write_text(path, to_json(sc).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Schedules

struct ScheduleEntry {
  std::size_t id = 0;
  ObjectiveVector objectives;
  double penalty = 0.0;
  DecisionVector schedule;
};

struct ScheduleFile {
  Scenario scenario;
  std::vector<ScheduleEntry> solutions;
};

inline json to_json(const DecisionVector& dv) {
  auto grid = [&](const auto& g) {
    json rows = json::array();
    for (std::size_t n = 0; n < g.units(); ++n) {
      json row = json::array();
      for (std::size_t t = 0; t < g.periods(); ++t) row.push_back(g(n, t));
      rows.push_back(row);
    }
    return rows;
  };
  return {{"commit", grid(dv.commit)}, {"startup", grid(dv.startup)}, {"p_mt_kw", grid(dv.p_mt)},
          {"r_mt_kw", grid(dv.r_mt)},  {"p_ch_kw", dv.p_ch},          {"p_dc_kw", dv.p_dc},
          {"p_res_ess_kw", dv.p_res_ess}};
}

inline DecisionVector schedule_from_json(const json& j, const Scenario& sc, const std::string& src) {
  using namespace detail;
  DecisionVector dv = DecisionVector::zeros(sc);
  auto grid = [&](const char* key, auto& g) {
    const json& rows = field(j, key, src);
    const std::string path = src + "." + key;
    if (!rows.is_array() || rows.size() != sc.unit_count())
      parse_fail(path, "expected one row per unit");
    for (std::size_t n = 0; n < sc.unit_count(); ++n) {
      const auto vals = num_array(rows[n], path + "[" + std::to_string(n) + "]");
      if (vals.size() != sc.horizon) parse_fail(path, "expected one value per period");
      for (std::size_t t = 0; t < sc.horizon; ++t)
        g(n, t) = static_cast<std::remove_reference_t<decltype(g(n, t))>>(vals[t]);
    }
  };
  auto vec = [&](const char* key, std::vector<double>& v) {
    v = num_array(field(j, key, src), src + "." + key);
    if (v.size() != sc.horizon) parse_fail(src + "." + key, "expected one value per period");
  };
  grid("commit", dv.commit);
  grid("startup", dv.startup);
  grid("p_mt_kw", dv.p_mt);
  grid("r_mt_kw", dv.r_mt);
  vec("p_ch_kw", dv.p_ch);
  vec("p_dc_kw", dv.p_dc);
  vec("p_res_ess_kw", dv.p_res_ess);
  return dv;
}

inline json to_json(const ObjectiveVector& f) {
  return {{"f1_cost_usd", f.f1_cost},
          {"f2_emissions_kg", f.f2_emissions},
          {"f3_satisfaction_pct", f.f3_satisfaction}};
}

inline std::string dump_schedules(const ScheduleFile& file) {
  json sols = json::array();
  for (const auto& s : file.solutions)
    sols.push_back({{"id", s.id},
                    {"objectives", to_json(s.objectives)},
                    {"penalty_usd", s.penalty},
                    {"schedule", to_json(s.schedule)}});
  json doc = {{"format_version", kFormatVersion},
              {"kind", "schedules"},
              {"scenario", to_json(file.scenario)},
              {"solutions", sols}};
  return doc.dump(2) + "\n";
}

inline ScheduleFile load_schedules(const std::filesystem::path& path) {
  using namespace detail;
  const std::string src = path.string();
  const json doc = parse(read_text(path), src);
  check_version(doc, src);
  ScheduleFile file;
  file.scenario = scenario_from_json(field(doc, "scenario", src), src + ".scenario");
  const json& sols = field(doc, "solutions", src);
  if (!sols.is_array()) parse_fail(src + ".solutions", "expected an array");
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const std::string p = src + ".solutions[" + std::to_string(i) + "]";
    ScheduleEntry e;
    e.id = std::size_t(num(sols[i], "id", p));
    const json& obj = field(sols[i], "objectives", p);
    e.objectives = {num(obj, "f1_cost_usd", p + ".objectives"),
                    num(obj, "f2_emissions_kg", p + ".objectives"),
                    num(obj, "f3_satisfaction_pct", p + ".objectives")};
    e.penalty = num_or(sols[i], "penalty_usd", 0.0, p);
    e.schedule = schedule_from_json(field(sols[i], "schedule", p), file.scenario, p + ".schedule");
    file.solutions.push_back(std::move(e));
  }
  return file;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kArchiveHeader =
    "id,f1_cost_usd,f2_emissions_kg,f3_satisfaction_pct";

struct ArchiveRow {
  std::size_t id = 0;
  ObjectiveVector objectives;
};

inline std::string archive_csv(const std::vector<ArchiveRow>& rows) {
  std::string out(kArchiveHeader);
  out += "\n";
  for (const auto& r : rows)
    out += std::to_string(r.id) + "," + fmt9(r.objectives.f1_cost) + "," +
           fmt9(r.objectives.f2_emissions) + "," + fmt9(r.objectives.f3_satisfaction) + "\n";
  return out;
}

/// Splits simple comma-separated text (no quoting) into rows of cells.
inline std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      std::vector<std::string> cells;
      std::size_t c = 0;
      while (true) {
        const std::size_t comma = line.find(',', c);
        cells.emplace_back(line.substr(c, comma == std::string_view::npos ? line.size() - c : comma - c));
        if (comma == std::string_view::npos) break;
        c = comma + 1;
      }
      rows.push_back(std::move(cells));
    }
    pos = end + 1;
  }
  return rows;
}

inline double parse_double(const std::string& cell, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw InputError(InputError::Kind::parse, where + ": not a number: '" + cell + "'");
  }
}

inline std::vector<ArchiveRow> parse_archive_csv(std::string_view text, const std::string& src) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw InputError(InputError::Kind::parse, src + ": empty file");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kArchiveHeader)
    throw InputError(InputError::Kind::parse, src + ": unexpected header '" + header + "'");
  std::vector<ArchiveRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string where = src + ":" + std::to_string(r + 1);
    if (rows[r].size() != 4) throw InputError(InputError::Kind::parse, where + ": expected 4 columns");
    out.push_back({std::size_t(parse_double(rows[r][0], where)),
                   {parse_double(rows[r][1], where), parse_double(rows[r][2], where),
                    parse_double(rows[r][3], where)}});
  }
  return out;
}

inline std::vector<ArchiveRow> load_archive_csv(const std::filesystem::path& path) {
  return parse_archive_csv(read_text(path), path.string());
}

}  // namespace mgd::io
