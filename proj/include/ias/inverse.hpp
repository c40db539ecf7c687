#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ias/problem.hpp"
#include "ias/recognition.hpp"
#include "ias/rng.hpp"
#include "ias/simulate.hpp"
#include "ias/solver.hpp"

namespace ias {

/// A point of the inference lattice: per-axis integer eta coordinates (value
/// = index / steps_per_unit) plus an index into the rho grid. Ordered
/// lexicographically (eta first, then rho) for deterministic tie-breaking.
struct LatticePoint {
  std::vector<int> eta;
  int rho_idx = 0;

  auto operator<=>(const LatticePoint&) const = default;
};

/// Discrete parameter space for posterior inference: eta confined to
/// [0,1]^d at a fixed-point resolution 1/steps_per_unit, and a finite
/// ordered rho grid. The eta layout depends on the criterion: optimal and
/// infomax walk (eta_a, eta_b, eta_c); greedy lookahead walks
/// (eta_b, eta_c, eta_d) with eta_a pinned to 1 (its weights are absorbed
/// by the decision thresholds). Bounding eta to [0,1] loses no
/// expressivity because rho absorbs overall scale.
class Lattice {
 public:
  /// `resolution` must divide 1 exactly in fixed point (1/resolution within
  /// 1e-9 of an integer), otherwise ValidationError.
  Lattice(Criterion criterion, const DecisionProblem& problem, double resolution,
          std::vector<double> rho_grid = default_rho_grid());

  static std::vector<double> default_rho_grid();

  Criterion criterion() const { return criterion_; }
  int eta_dim() const { return eta_dim_; }
  int steps_per_unit() const { return steps_; }
  double resolution() const { return 1.0 / steps_; }
  const std::vector<double>& rho_grid() const { return rho_grid_; }
  double eta_value(int index) const { return static_cast<double>(index) / steps_; }
  double rho_value(const LatticePoint& pt) const { return rho_grid_[pt.rho_idx]; }

  /// Number of eta lattice points, (steps+1)^d, saturating at int64 max.
  std::int64_t eta_point_count() const;

  /// Materializes preferences (with rho) for a lattice point, filling
  /// criterion-unused blocks with their sentinels.
  Preferences to_preferences(const LatticePoint& pt) const;

  /// Human-readable axis names in walk order, e.g. "eta_a[0]".
  std::vector<std::string> axis_names() const;

  bool contains(const LatticePoint& pt) const;

  /// All feasible one-step moves from `pt` (axis, +1/-1 within bounds).
  /// The proposal distribution is uniform over this set.
  std::vector<LatticePoint> feasible_moves(const LatticePoint& pt) const;

  /// Uniform draw among feasible moves.
  LatticePoint neighbor(const LatticePoint& pt, Rng& rng) const;

  /// Uniform random lattice point.
  LatticePoint random_point(Rng& rng) const;

  LatticePoint lexicographic_first() const;

 private:
  Criterion criterion_;
  int n_theta_;
  int n_lambda_;
  int steps_;
  int eta_dim_;
  std::vector<double> rho_grid_;
};

/// Log-priors over the three strategy coordinates. Defaults are uniform on
/// each finite support. Criteria absent from log_criterion get probability
/// zero (a Dirac on Optimal recovers inverse optimal active sensing).
struct PriorSpec {
  std::map<Criterion, double> log_criterion;
  std::function<double(const Lattice&, const LatticePoint&)> log_eta;
  std::function<double(const Lattice&, int)> log_rho;

  static PriorSpec uniform(const std::vector<Criterion>& criteria);

  /// Checks each prior normalizes over its finite support within 1e-9.
  /// The eta prior is only enumerable for small lattices; it is checked
  /// when the lattice has at most `eta_check_limit` points.
  std::vector<std::string> validate(const Lattice& lattice,
                                    std::int64_t eta_check_limit = 200000) const;
};

/// Memoizes forward solves per eta lattice point (rho does not affect the
/// solve; it only scales the softmax). Bounded LRU; safe for concurrent
/// chains -- duplicate concurrent solves are permitted and idempotent.
/// When `disk_dir` is non-empty, solved tables also persist there (keyed by
/// problem fingerprint, eta, grid, and tolerance) and survive across runs.
class PolicyCache {
 public:
  explicit PolicyCache(int resolution = 60, double tol = 1e-8, std::size_t capacity = 512,
                       std::string disk_dir = {});

  std::shared_ptr<const SolvedPolicy> get_or_solve(const DecisionProblem& problem,
                                                   const Preferences& prefs);

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  int resolution() const { return resolution_; }
  double tol() const { return tol_; }

 private:
  int resolution_;
  double tol_;
  std::size_t capacity_;
  std::string disk_dir_;
  std::mutex mutex_;
  std::list<std::string> order_;
  std::unordered_map<std::string,
                     std::pair<std::shared_ptr<const SolvedPolicy>, std::list<std::string>::iterator>>
      entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Beliefs at each action time of an episode, replayed through the
/// recognition model from the episode's own prior; nu = 1 throughout since
/// every recorded action was taken while alive. Criterion- and
/// preference-independent. Throws DataError on a zero-likelihood outcome.
std::vector<BeliefState> replay_beliefs(const DecisionProblem& problem, const Episode& episode);

/// Log of the unnormalized data likelihood: sum over episodes and steps of
/// log pi_rho(action | belief) under the criterion's generalized Q-factors.
double data_log_likelihood(const DecisionProblem& problem, const EpisodeDataset& dataset,
                           Criterion kappa, const Preferences& prefs, PolicyCache& cache);

/// Unnormalized log posterior at a lattice point: the three log-priors plus
/// the data term. The normalizer is never computed; proportionality
/// suffices for MAP and MCMC.
double log_posterior(const DecisionProblem& problem, const EpisodeDataset& dataset,
                     Criterion kappa, const LatticePoint& point, const Lattice& lattice,
                     const PriorSpec& priors, PolicyCache& cache);

struct ChainSample {
  LatticePoint point;
  double log_post = 0.0;
  bool accepted = false;
};

struct PosteriorChain {
  std::vector<ChainSample> samples;  // post-burn-in only
  int acceptance_count = 0;          // over all steps including burn-in
  int total_steps = 0;
  int burn_in = 0;
  std::uint64_t seed = 0;

  double acceptance_rate() const {
    return total_steps > 0 ? static_cast<double>(acceptance_count) / total_steps : 0.0;
  }
};

/// Metropolis random walk on the lattice: random start, uniform proposal
/// among feasible moves, acceptance in log space. Because the feasible-move
/// set shrinks at the boundary, the acceptance ratio carries the proposal
/// correction |moves(current)| / |moves(proposal)|; without it the walk
/// would oversample the boundary.
PosteriorChain mcmc_sample(const DecisionProblem& problem, const EpisodeDataset& dataset,
                           Criterion kappa, const PriorSpec& priors, const Lattice& lattice,
                           int n_samples, int burn_in, std::uint64_t seed, PolicyCache& cache);

struct MapResult {
  LatticePoint point;
  double log_post = 0.0;
  Preferences prefs;  // materialized, includes rho
};

/// MAP over the lattice: coarse sweep (a few values per axis, plus any
/// states visited by `chain`), then greedy hill-climb on lattice neighbors.
/// Ties break toward the lexicographically smallest point.
MapResult map_estimate(const DecisionProblem& problem, const EpisodeDataset& dataset,
                       Criterion kappa, const PriorSpec& priors, const Lattice& lattice,
                       PolicyCache& cache, const PosteriorChain* chain = nullptr,
                       int coarse_per_axis = 3);

struct CriterionScore {
  Criterion criterion;
  double map_log_posterior = 0.0;
  MapResult map;
};

/// Scores each criterion by its MAP log posterior (which includes
/// log P{kappa}); criteria with zero prior are skipped.
std::vector<CriterionScore> compare_criteria(
    const DecisionProblem& problem, const EpisodeDataset& dataset, const PriorSpec& priors,
    const std::map<Criterion, Lattice>& lattices,
    const std::map<Criterion, const PosteriorChain*>& chains, PolicyCache& cache);

/// Split-chain potential scale reduction for a scalar traced across chains;
/// values near 1 indicate mixing. Advisory only.
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace ias
