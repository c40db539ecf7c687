#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ias/problem.hpp"
#include "ias/rng.hpp"
#include "ias/solver.hpp"

namespace ias {

/// Boltzmann action distribution over generalized Q-factors:
/// pi(a) proportional to exp(-rho * Q_a), computed with a max shift. rho = 0
/// gives the uniform distribution; the modal action is always the
/// tie-broken argmin for rho > 0.
std::vector<double> boltzmann_policy(std::span<const double> q_values, double rho);

/// A behavioral agent: criterion, preferences (rho lives in prefs), and --
/// for the optimal criterion -- a solved policy. If the policy is absent it
/// is solved on demand with the given grid settings.
struct Strategy {
  Criterion criterion = Criterion::Optimal;
  Preferences prefs;
  std::shared_ptr<const SolvedPolicy> policy;
  int grid_resolution = 60;
  double solve_tol = 1e-8;

  /// Solves (or reuses) the policy when the criterion requires one.
  const SolvedPolicy* ensure_policy(const DecisionProblem& problem);
};

inline constexpr int kDefaultEpisodeCap = 1000;

/// Plays out one episode: draws the truth from the prior (the problem's mu0
/// unless `prior` is given), then repeatedly samples an action from the
/// Boltzmann distribution over generalized Q-factors. Acquisitions are
/// interrupted by the deadline with hazard p_{truth,lam}. Throws
/// ConvergenceError if the episode exceeds t_max steps, which is
/// probabilistically negligible for valid problems and signals a degenerate
/// configuration.
Episode simulate_episode(const DecisionProblem& problem, Strategy& strategy, Rng& rng,
                         int t_max = kDefaultEpisodeCap,
                         const std::vector<double>* prior = nullptr);

enum class PriorMode { Fixed, UniformSimplex };

struct DatasetMeta {
  std::uint64_t seed = 0;
  int n = 0;
  std::optional<std::string> criterion;
  std::optional<double> rho;
  std::optional<std::string> prior_mode;
};

struct EpisodeDataset {
  std::vector<Episode> episodes;
  std::string problem_fingerprint;
  DatasetMeta meta;

  /// Copy with all truth fields removed; inference operates on this view.
  EpisodeDataset without_truths() const;
};

/// FNV-1a over the problem's canonical byte serialization; ties a dataset to
/// the problem that generated it.
std::string problem_fingerprint(const DecisionProblem& problem);

/// N independent episodes with per-episode RNG substreams derived from
/// (seed, index): bitwise reproducible regardless of scheduling.
EpisodeDataset simulate_dataset(const DecisionProblem& problem, Strategy& strategy, int n,
                                std::uint64_t seed, PriorMode prior_mode,
                                int t_max = kDefaultEpisodeCap);

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo risk of a strategy evaluated under prefs_true (which may
/// differ from the strategy's own preferences).
RiskEstimate average_risk(const DecisionProblem& problem, Strategy& strategy,
                          const Preferences& prefs_true, int n, std::uint64_t seed,
                          PriorMode prior_mode = PriorMode::Fixed);

}  // namespace ias
