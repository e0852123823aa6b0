// Command-line front end.
//
// Exit codes: 0 success, 1 unexpected error, 2 parse failure (command line
// or input file), 3 invariant violation, 4 infeasible scenario, 5 archive
// too small for the requested cluster count.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgdispatch/mgdispatch.hpp"

namespace fs = std::filesystem;
using namespace mgd;

namespace {

enum Exit : int {
  kOk = 0,
  kUnexpected = 1,
  kParse = 2,
  kInvariant = 3,
  kInfeasible = 4,
  kArchiveTooSmall = 5,
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(io::parse_double(item, flag));
  return out;
}

void print_timings(const std::vector<pipeline::StageTiming>& timings) {
  for (const auto& t : timings) std::cout << "timing " << t.stage << " " << io::fmt9(t.seconds) << " s\n";
}

void apply_overrides(Scenario& sc, double q, double alpha) {
  if (q > 0) sc.step_q = q;
  if (alpha > 0) sc.confidence_alpha = alpha;
  require_valid(sc);
}

int cmd_optimize(const fs::path& scenario_path, const dea::ThetaDeaParams& params, double q,
                 double alpha, const fs::path& out) {
  Scenario sc = io::load_scenario(scenario_path);
  apply_overrides(sc, q, alpha);
  const auto res = pipeline::optimize(std::move(sc), params);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  if (res.archive.infeasible) {
    io::write_text(out / "infeasible.txt",
                   "no feasible schedule found\nbest_penalty_usd," +
                       io::fmt9(res.archive.best_penalty) + "\n");
    std::cerr << "infeasible scenario: best penalty " << io::fmt9(res.archive.best_penalty)
              << " $\n";
    print_timings(res.timings);
    return kInfeasible;
  }
  pipeline::write_optimize(res, out);
  std::cout << "archive: " << res.archive.members.size() << " schedules -> "
            << (out / "archive.csv").string() << "\n";
  print_timings(res.timings);
  return kOk;
}

int cmd_decide(const fs::path& archive_path, const decide::FcmParams& fcm,
               const decide::GrpParams& grp, fs::path out, fs::path schedules_path) {
  auto rows = io::load_archive_csv(archive_path);
  if (rows.size() < fcm.n_clusters) {
    std::cerr << "archive has " << rows.size() << " schedules, fewer than " << fcm.n_clusters
              << " clusters\n";
    return kArchiveTooSmall;
  }
  if (out.empty()) out = archive_path.parent_path();
  const auto res = pipeline::decide_bcs(std::move(rows), fcm, grp);
  for (const auto& w : res.selection.warnings) std::cerr << "warning: " << w << "\n";
  io::write_text(out / "clusters.csv", pipeline::clusters_csv(res));
  io::write_text(out / "bcs.csv", pipeline::bcs_csv(res));
  if (schedules_path.empty()) schedules_path = archive_path.parent_path() / "schedules.json";
  if (fs::exists(schedules_path))
    io::write_text(out / "bcs_dispatch.csv",
                   pipeline::bcs_dispatch_csv(res, io::load_schedules(schedules_path)));
  std::cout << pipeline::bcs_csv(res);
  print_timings(res.timings);
  return kOk;
}

int cmd_sweep(const fs::path& scenario_path, const std::vector<double>& alphas, double q,
              const fs::path& out) {
  Scenario sc = io::load_scenario(scenario_path);
  apply_overrides(sc, q, 0.0);
  std::vector<std::string> warnings;
  const auto prof = build_equivalent_load(sc, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  const auto rows = pipeline::reserve_sweep(sc, prof, alphas);
  io::write_text(out, pipeline::sweep_csv(rows));
  for (double a : alphas) {
    double total = 0.0;
    for (const auto& r : rows)
      if (r.alpha == a) total += r.required_reserve;
    std::cout << "alpha " << io::fmt9(a) << " total_reserve_kw " << io::fmt9(total) << "\n";
  }
  return kOk;
}

int cmd_validate(const fs::path& schedule_path, std::size_t samples, std::uint64_t seed,
                 fs::path out, const std::vector<std::size_t>& only_ids) {
  const auto file = io::load_schedules(schedule_path);
  const auto prof = build_equivalent_load(file.scenario);
  std::vector<DecisionVector> schedules;
  std::vector<std::size_t> ids;
  for (const auto& s : file.solutions) {
    if (!only_ids.empty() && std::find(only_ids.begin(), only_ids.end(), s.id) == only_ids.end())
      continue;
    schedules.push_back(s.schedule);
    ids.push_back(s.id);
  }
  const auto rows = pipeline::validate_coverage(file.scenario, prof, schedules, samples, seed);
  if (out.empty()) out = schedule_path.parent_path() / "coverage.csv";
  io::write_text(out, pipeline::coverage_csv(rows, ids));
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    double worst = 1.0;
    for (const auto& r : rows)
      if (r.solution == s) worst = std::min(worst, r.coverage);
    std::cout << "schedule " << ids[s] << " min_period_coverage " << io::fmt9(worst) << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective day-ahead dispatch for an isolated microgrid"};
  app.require_subcommand(1);

  // optimize
  auto* opt = app.add_subcommand("optimize", "search the Pareto set of a scenario");
  fs::path scenario_path, out_dir;
  dea::ThetaDeaParams dea_params;
  double q = 0.0, alpha = 0.0;
  opt->add_option("--scenario", scenario_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
  opt->add_option("--seed", dea_params.rng_seed, "random seed");
  opt->add_option("--pop", dea_params.pop_size, "population size (even, >= 4)");
  opt->add_option("--gens", dea_params.generations, "generations");
  opt->add_option("--theta", dea_params.theta, "theta penalty parameter");
  opt->add_option("--divisions", dea_params.divisions, "reference lattice divisions");
  opt->add_option("--q", q, "discretisation step in kW (overrides the scenario)");
  opt->add_option("--alpha", alpha, "confidence level (overrides the scenario)");
  opt->add_option("--out", out_dir, "output directory")->required();

  // decide
  auto* dec = app.add_subcommand("decide", "pick best compromise schedules from an archive");
  fs::path archive_path, decide_out, schedules_path;
  decide::FcmParams fcm;
  decide::GrpParams grp;
  std::string weights = "1,1,1";
  dec->add_option("--archive", archive_path, "archive CSV from optimize")->required()->check(CLI::ExistingFile);
  dec->add_option("--clusters", fcm.n_clusters, "number of preference clusters");
  dec->add_option("--weights", weights, "indicator weights for F1,F2,F3");
  dec->add_option("--rho", grp.resolution_rho, "grey relation resolution coefficient");
  dec->add_option("--fuzziness", fcm.fuzziness_m, "FCM fuzziness exponent");
  dec->add_option("--seed", fcm.rng_seed, "FCM seeding");
  dec->add_option("--schedules", schedules_path, "schedules JSON (default: next to the archive)");
  dec->add_option("--out", decide_out, "output directory (default: the archive's directory)");

  // reserve-sweep
  auto* sweep = app.add_subcommand("reserve-sweep", "required reserve per confidence level");
  fs::path sweep_scenario, sweep_out = "reserve_sweep.csv";
  std::string alphas = "0.8,0.85,0.9,0.95";
  double sweep_q = 0.0;
  sweep->add_option("--scenario", sweep_scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--alphas", alphas, "comma-separated confidence levels");
  sweep->add_option("--q", sweep_q, "discretisation step in kW (overrides the scenario)");
  sweep->add_option("--out", sweep_out, "output CSV");

  // validate
  auto* val = app.add_subcommand("validate", "Monte-Carlo reserve coverage of schedules");
  fs::path schedule_file, coverage_out;
  std::size_t samples = 100000;
  std::uint64_t val_seed = 1;
  std::vector<std::size_t> only_ids;
  val->add_option("--schedule", schedule_file, "schedules JSON")->required()->check(CLI::ExistingFile);
  val->add_option("--samples", samples, "samples per period");
  val->add_option("--seed", val_seed, "random seed");
  val->add_option("--id", only_ids, "restrict to these schedule ids");
  val->add_option("--out", coverage_out, "output CSV (default: coverage.csv next to the schedules)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  try {
    if (*opt) return cmd_optimize(scenario_path, dea_params, q, alpha, out_dir);
    if (*dec) {
      const auto w = parse_list(weights, "--weights");
      if (w.size() != 3) throw InputError(InputError::Kind::parse, "--weights: expected three values");
      grp.weights = decide::normalized_weights({w[0], w[1], w[2]});
      return cmd_decide(archive_path, fcm, grp, decide_out, schedules_path);
    }
    if (*sweep) return cmd_sweep(sweep_scenario, parse_list(alphas, "--alphas"), sweep_q, sweep_out);
    if (*val) return cmd_validate(schedule_file, samples, val_seed, coverage_out, only_ids);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == InputError::Kind::parse ? kParse : kInvariant;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}
