// Command-line front end: solve policies, simulate behavioral agents,
// run posterior inference on episode logs, and estimate strategy risks.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ias/errors.hpp"
#include "ias/inverse.hpp"
#include "ias/io.hpp"
#include "ias/problem.hpp"
#include "ias/simulate.hpp"
#include "ias/solver.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitData = 4;

std::vector<double> parse_rho_grid(const std::string& spec) {
  std::vector<double> grid;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) grid.push_back(std::stod(item));
  }
  return grid;
}

ias::Criterion parse_criterion(const std::string& name) {
  auto k = ias::criterion_from_name(name);
  if (!k) throw ias::ValidationError("unknown criterion: " + name);
  return *k;
}

// Perturbation specs look like "a0+0.2" or "c1-0.1": block letter, index,
// signed delta. Used by `risk` to sweep preference variants.
ias::Preferences apply_perturbation(const ias::Preferences& base, const std::string& spec) {
  if (spec.size() < 3) throw ias::ValidationError("bad perturbation: " + spec);
  ias::Preferences prefs = base;
  const char block = spec[0];
  std::size_t pos = 0;
  const int index = std::stoi(spec.substr(1), &pos);
  const double delta = std::stod(spec.substr(1 + pos));
  std::vector<double>* target = nullptr;
  switch (block) {
    case 'a': target = &prefs.eta_a; break;
    case 'b': target = &prefs.eta_b; break;
    case 'c': target = &prefs.eta_c; break;
    case 'd': target = &prefs.eta_d; break;
    default: throw ias::ValidationError("bad perturbation block: " + spec);
  }
  if (index < 0 || index >= static_cast<int>(target->size()))
    throw ias::ValidationError("perturbation index out of range: " + spec);
  (*target)[index] = std::max(0.0, (*target)[index] + delta);
  return prefs;
}

std::string cache_dir_from_env() {
  const char* dir = std::getenv("IAS_CACHE_DIR");
  return dir ? dir : "";
}

std::string strategy_map_table(const ias::SolvedPolicy& policy, const ias::TerminationMap& map,
                               const ias::DecisionProblem& problem,
                               const ias::ProblemLabels& labels) {
  std::ostringstream table;
  table << "point";
  for (int t = 0; t < problem.n_theta; ++t) table << "\tmu_" << labels.theta[t];
  table << "\tlabel\n";
  for (int i = 0; i < policy.grid->size(); ++i) {
    table << i;
    for (double m : policy.grid->point(i)) table << "\t" << ias::format_double(m);
    const auto& label = map.labels[i];
    table << "\t"
          << (label.terminate ? "terminate:" + labels.theta[label.index]
                              : "continue:" + labels.lambda[label.index])
          << "\n";
  }
  return table.str();
}

int cmd_solve(const std::string& problem_path, const std::string& prefs_path, int grid_res,
              double tol, const std::string& out, const std::string& map_out) {
  auto [problem, labels] = ias::load_problem(problem_path);
  auto prefs = ias::load_preferences(prefs_path, problem);
  auto policy = ias::solve_optimal(problem, prefs, grid_res, tol);
  auto map = ias::termination_set(policy, problem);
  ias::write_policy_export(out, policy, map, problem, labels);
  if (!map_out.empty()) ias::atomic_write(map_out, strategy_map_table(policy, map, problem, labels));
  std::printf("solved: %d grid points, %d sweeps, residual %.3e, gamma %.4f\n",
              policy.grid->size(), policy.iterations, policy.residual, policy.gamma);
  return 0;
}

int cmd_simulate(const std::string& problem_path, const std::string& prefs_path,
                 const std::string& criterion, std::optional<double> rho, int n,
                 std::uint64_t seed, const std::string& prior_mode, int grid_res, double tol,
                 const std::string& out) {
  auto [problem, labels] = ias::load_problem(problem_path);
  ias::Strategy strategy;
  strategy.prefs = ias::load_preferences(prefs_path, problem);
  strategy.criterion = criterion.empty() ? strategy.prefs.criterion : parse_criterion(criterion);
  strategy.prefs.criterion = strategy.criterion;
  if (rho) strategy.prefs.rho = *rho;
  strategy.grid_resolution = grid_res;
  strategy.solve_tol = tol;
  if (prior_mode != "scatter" && prior_mode != "fixed")
    throw ias::ValidationError("prior mode must be 'fixed' or 'scatter'");
  const auto mode =
      prior_mode == "scatter" ? ias::PriorMode::UniformSimplex : ias::PriorMode::Fixed;
  auto dataset = ias::simulate_dataset(problem, strategy, n, seed, mode);
  ias::write_dataset(out, dataset);
  std::printf("simulated %d episodes to %s\n", n, out.c_str());
  return 0;
}

int cmd_infer(const std::string& problem_path, const std::string& episodes_path,
              const std::vector<std::string>& criteria, int samples, int burn_in,
              double resolution, const std::string& rho_grid_spec, std::uint64_t seed,
              const std::string& out_prefix, bool want_map, int chains, int grid_res, double tol) {
  auto [problem, labels] = ias::load_problem(problem_path);
  // The projection step: truths are stripped on load and never reach the
  // inference operations.
  auto dataset = ias::load_dataset(episodes_path, problem, /*strip_truths=*/true,
                                   ias::problem_fingerprint(problem),
                                   /*check_consistency=*/true);
  std::vector<double> rho_grid = rho_grid_spec.empty() ? ias::Lattice::default_rho_grid()
                                                       : parse_rho_grid(rho_grid_spec);

  std::vector<ias::Criterion> requested;
  for (const auto& name : criteria) requested.push_back(parse_criterion(name));
  if (requested.empty()) requested.push_back(ias::Criterion::Optimal);
  auto priors = ias::PriorSpec::uniform(requested);

  ias::PolicyCache cache(grid_res, tol, 2048, cache_dir_from_env());
  std::map<ias::Criterion, ias::Lattice> lattices;
  std::map<ias::Criterion, ias::PosteriorChain> kept_chains;
  for (ias::Criterion k : requested) {
    lattices.emplace(k, ias::Lattice(k, problem, resolution, rho_grid));
    const ias::Lattice& lattice = lattices.at(k);
    std::vector<ias::PosteriorChain> all_chains;
    for (int c = 0; c < std::max(1, chains); ++c)
      all_chains.push_back(ias::mcmc_sample(problem, dataset, k, priors, lattice, samples,
                                            burn_in, seed + static_cast<std::uint64_t>(c),
                                            cache));
    if (all_chains.size() > 1) {
      // Split-chain potential scale reduction, advisory only.
      double worst = 0.0;
      for (int axis = 0; axis < lattice.eta_dim() + 1; ++axis) {
        std::vector<std::vector<double>> traces;
        for (const auto& chain : all_chains) {
          std::vector<double> trace;
          for (const auto& s : chain.samples)
            trace.push_back(axis < lattice.eta_dim() ? lattice.eta_value(s.point.eta[axis])
                                                     : lattice.rho_value(s.point));
          traces.push_back(std::move(trace));
        }
        worst = std::max(worst, ias::split_rhat(traces));
      }
      std::printf("%s: split-Rhat (worst axis) = %.3f%s\n", ias::criterion_name(k).c_str(),
                  worst, worst > 1.1 ? " (advisory: chains may not have mixed)" : "");
    }
    ias::PosteriorChain primary = std::move(all_chains.front());
    const std::string chain_path = out_prefix + "_" + ias::criterion_name(k) + "_chain.tsv";
    ias::write_chain(chain_path, primary, lattice);
    std::printf("%s: %zu retained samples, acceptance %.2f -> %s\n",
                ias::criterion_name(k).c_str(), primary.samples.size(),
                primary.acceptance_rate(), chain_path.c_str());
    kept_chains.emplace(k, std::move(primary));
  }

  if (want_map || requested.size() > 1) {
    std::map<ias::Criterion, const ias::PosteriorChain*> chain_ptrs;
    for (const auto& [k, chain] : kept_chains) chain_ptrs.emplace(k, &chain);
    auto scores = ias::compare_criteria(problem, dataset, priors, lattices, chain_ptrs, cache);
    for (const auto& score : scores) {
      if (want_map) {
        const std::string map_path =
            out_prefix + "_" + ias::criterion_name(score.criterion) + "_map.json";
        ias::write_map_summary(map_path, score.map, lattices.at(score.criterion));
        std::printf("%s: MAP log-posterior %.4f -> %s\n",
                    ias::criterion_name(score.criterion).c_str(), score.map_log_posterior,
                    map_path.c_str());
      }
    }
    if (requested.size() > 1) ias::write_comparison(out_prefix + "_compare.json", scores);
  }
  return 0;
}

int cmd_risk(const std::string& problem_path, const std::string& prefs_true_path,
             const std::string& strategy_prefs_path, const std::string& criterion,
             std::optional<double> rho, int n, std::uint64_t seed, const std::string& prior_mode,
             const std::vector<std::string>& perturbations, int grid_res, double tol) {
  auto [problem, labels] = ias::load_problem(problem_path);
  auto prefs_true = ias::load_preferences(prefs_true_path, problem);
  auto base_prefs = strategy_prefs_path.empty()
                        ? prefs_true
                        : ias::load_preferences(strategy_prefs_path, problem);
  const auto mode =
      prior_mode == "scatter" ? ias::PriorMode::UniformSimplex : ias::PriorMode::Fixed;

  auto run = [&](const std::string& tag, const ias::Preferences& prefs) {
    ias::Strategy strategy;
    strategy.prefs = prefs;
    strategy.criterion = criterion.empty() ? prefs.criterion : parse_criterion(criterion);
    strategy.prefs.criterion = strategy.criterion;
    if (rho) strategy.prefs.rho = *rho;
    strategy.grid_resolution = grid_res;
    strategy.solve_tol = tol;
    auto estimate = ias::average_risk(problem, strategy, prefs_true, n, seed, mode);
    std::printf("%-16s mean loss %.6f  (se %.6f, n=%d)\n", tag.c_str(), estimate.mean,
                estimate.std_error, n);
  };
  run("base", base_prefs);
  for (const auto& spec : perturbations) run(spec, apply_perturbation(base_prefs, spec));
  return 0;
}

int cmd_export_map(const std::string& problem_path, const std::string& prefs_path, int grid_res,
                   double tol, const std::string& out) {
  auto [problem, labels] = ias::load_problem(problem_path);
  auto prefs = ias::load_preferences(prefs_path, problem);
  auto policy = ias::solve_optimal(problem, prefs, grid_res, tol);
  auto map = ias::termination_set(policy, problem);
  ias::atomic_write(out, strategy_map_table(policy, map, problem, labels));
  std::printf("wrote strategy map (%d points) to %s\n", policy.grid->size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active sensing under endogenous deadlines: solver, simulator, and "
               "inverse inference engine"};
  app.require_subcommand(1);

  std::string problem_path, prefs_path, episodes_path, out, map_out, out_prefix;
  std::string criterion, prior_mode = "fixed", rho_grid_spec, prefs_true_path;
  std::vector<std::string> criteria, perturbations;
  int grid_res = 60, n = 100, samples = 1000, burn_in = 300, chains = 1;
  double tol = 1e-8, resolution = 0.05;
  std::optional<double> rho;
  std::uint64_t seed = 0;
  bool want_map = false;

  auto* solve = app.add_subcommand("solve", "solve the optimal policy and export its tables");
  solve->add_option("--problem", problem_path, "problem config (JSON)")->required();
  solve->add_option("--prefs", prefs_path, "preferences config (JSON)")->required();
  solve->add_option("--grid", grid_res, "simplex grid subdivisions");
  solve->add_option("--tol", tol, "value-iteration residual tolerance");
  solve->add_option("--out", out, "policy export path (TSV)")->required();
  solve->add_option("--map-out", map_out, "strategy-map table path (TSV)");

  auto* simulate = app.add_subcommand("simulate", "simulate Boltzmann agent episodes");
  simulate->add_option("--problem", problem_path)->required();
  simulate->add_option("--prefs", prefs_path)->required();
  simulate->add_option("--criterion", criterion, "optimal | gl | im (default: from prefs)");
  simulate->add_option("--rho", rho, "inverse temperature override");
  simulate->add_option("-n,--episodes", n, "episode count");
  simulate->add_option("--seed", seed);
  simulate->add_option("--prior-mode", prior_mode, "fixed | scatter");
  simulate->add_option("--grid", grid_res);
  simulate->add_option("--tol", tol);
  simulate->add_option("--out", out, "episode log path (JSON lines)")->required();

  auto* infer = app.add_subcommand("infer", "posterior over preferences from an episode log");
  infer->add_option("--problem", problem_path)->required();
  infer->add_option("--episodes", episodes_path)->required();
  infer->add_option("--criteria", criteria, "criteria to score (default: optimal)");
  infer->add_option("--samples", samples, "total MCMC samples per chain");
  infer->add_option("--burn-in", burn_in, "discarded initial samples");
  infer->add_option("--resolution", resolution, "eta lattice resolution");
  infer->add_option("--rho-grid", rho_grid_spec, "comma-separated rho grid");
  infer->add_option("--seed", seed);
  infer->add_option("--chains", chains, "independent chains (split-Rhat advisory)");
  infer->add_option("--grid", grid_res);
  infer->add_option("--tol", tol);
  infer->add_option("--out-prefix", out_prefix, "output path prefix")->required();
  infer->add_flag("--map", want_map, "also compute MAP estimates");

  auto* risk = app.add_subcommand("risk", "Monte-Carlo risk of a strategy under true preferences");
  risk->add_option("--problem", problem_path)->required();
  risk->add_option("--prefs-true", prefs_true_path, "preferences defining the loss")->required();
  risk->add_option("--prefs", prefs_path, "strategy preferences (default: prefs-true)");
  risk->add_option("--criterion", criterion);
  risk->add_option("--rho", rho);
  risk->add_option("-n,--episodes", n);
  risk->add_option("--seed", seed);
  risk->add_option("--prior-mode", prior_mode, "fixed | scatter");
  risk->add_option("--perturb", perturbations,
                   "eta perturbations to sweep, e.g. a0+0.2 (repeatable)");
  risk->add_option("--grid", grid_res);
  risk->add_option("--tol", tol);

  auto* export_map = app.add_subcommand("export-map", "solve and export only the strategy map");
  export_map->add_option("--problem", problem_path)->required();
  export_map->add_option("--prefs", prefs_path)->required();
  export_map->add_option("--grid", grid_res);
  export_map->add_option("--tol", tol);
  export_map->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (solve->parsed()) return cmd_solve(problem_path, prefs_path, grid_res, tol, out, map_out);
    if (simulate->parsed())
      return cmd_simulate(problem_path, prefs_path, criterion, rho, n, seed, prior_mode,
                          grid_res, tol, out);
    if (infer->parsed())
      return cmd_infer(problem_path, episodes_path, criteria, samples, burn_in, resolution,
                       rho_grid_spec, seed, out_prefix, want_map, chains, grid_res, tol);
    if (risk->parsed())
      return cmd_risk(problem_path, prefs_true_path, prefs_path, criterion, rho, n, seed,
                      prior_mode, perturbations, grid_res, tol);
    if (export_map->parsed()) return cmd_export_map(problem_path, prefs_path, grid_res, tol, out);
  } catch (const ias::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const ias::ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConvergence;
  } catch (const ias::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
