#include "ias/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "ias/errors.hpp"
#include "ias/recognition.hpp"

namespace ias {

std::vector<double> boltzmann_policy(std::span<const double> q_values, double rho) {
  std::vector<double> pi(q_values.size());
  // pi proportional to exp(-rho q); shift by the minimum so the largest
  // exponent is exactly zero.
  double q_min = std::numeric_limits<double>::infinity();
  for (double q : q_values) q_min = std::min(q_min, q);
  double total = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    pi[i] = std::exp(-rho * (q_values[i] - q_min));
    total += pi[i];
  }
  for (double& v : pi) v /= total;
  return pi;
}

const SolvedPolicy* Strategy::ensure_policy(const DecisionProblem& problem) {
  if (criterion != Criterion::Optimal) return nullptr;
  if (!policy) policy = std::make_shared<SolvedPolicy>(
      solve_optimal(problem, prefs, grid_resolution, solve_tol));
  return policy.get();
}

Episode simulate_episode(const DecisionProblem& problem, Strategy& strategy, Rng& rng,
                         int t_max, const std::vector<double>* prior) {
  const SolvedPolicy* policy = strategy.ensure_policy(problem);
  Episode episode;
  episode.prior = prior ? *prior : problem.mu0;
  const int truth = rng.categorical(episode.prior);
  episode.truth = truth;

  std::vector<double> mu = episode.prior;
  for (int t = 0; t < t_max; ++t) {
    const std::vector<double> q =
        generalized_q(strategy.criterion, problem, strategy.prefs, policy, mu, 1);
    const std::vector<double> pi = boltzmann_policy(q, strategy.prefs.rho);
    const int action = rng.categorical(pi);
    if (action >= problem.n_lambda) {
      const int theta_hat = action - problem.n_lambda;
      episode.steps.push_back({.is_acquire = false, .index = theta_hat, .outcome = std::nullopt, .survived = true});
      episode.decision = theta_hat;
      return episode;
    }
    const int lam = action;
    if (rng.uniform() < problem.p_at(truth, lam)) {
      // Deadline fires during the acquisition: no outcome, no decision.
      episode.steps.push_back({.is_acquire = true, .index = lam, .outcome = std::nullopt, .survived = false});
      return episode;
    }
    std::vector<double> weights(problem.n_omega);
    for (int o = 0; o < problem.n_omega; ++o) weights[o] = problem.q_at(truth, lam, o);
    const int omega = rng.categorical(weights);
    episode.steps.push_back(
        {.is_acquire = true, .index = lam, .outcome = omega, .survived = true});
    mu = continual_update(problem, mu, lam, omega);
  }
  throw ConvergenceError("simulate_episode: exceeded " + std::to_string(t_max) +
                         " steps; configuration is degenerate");
}

std::string problem_fingerprint(const DecisionProblem& problem) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const unsigned char* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const int dims[3] = {problem.n_theta, problem.n_lambda, problem.n_omega};
  mix(dims, sizeof(dims));
  auto mix_doubles = [&mix](const std::vector<double>& v) {
    for (double x : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof(bits));
      mix(&bits, sizeof(bits));
    }
  };
  mix_doubles(problem.q);
  mix_doubles(problem.p);
  mix_doubles(problem.c);
  mix_doubles(problem.mu0);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EpisodeDataset EpisodeDataset::without_truths() const {
  EpisodeDataset stripped = *this;
  for (Episode& e : stripped.episodes) e.truth.reset();
  return stripped;
}

EpisodeDataset simulate_dataset(const DecisionProblem& problem, Strategy& strategy, int n,
                                std::uint64_t seed, PriorMode prior_mode, int t_max) {
  if (n < 0) throw ValidationError("simulate_dataset: n must be non-negative");
  strategy.ensure_policy(problem);
  EpisodeDataset dataset;
  dataset.problem_fingerprint = problem_fingerprint(problem);
  dataset.meta.seed = seed;
  dataset.meta.n = n;
  dataset.meta.criterion = criterion_name(strategy.criterion);
  dataset.meta.rho = strategy.prefs.rho;
  dataset.meta.prior_mode = prior_mode == PriorMode::Fixed ? "fixed" : "scatter";
  dataset.episodes.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    if (prior_mode == PriorMode::UniformSimplex) {
      const std::vector<double> prior = rng.uniform_simplex(problem.n_theta);
      dataset.episodes.push_back(simulate_episode(problem, strategy, rng, t_max, &prior));
    } else {
      dataset.episodes.push_back(simulate_episode(problem, strategy, rng, t_max));
    }
  }
  return dataset;
}

RiskEstimate average_risk(const DecisionProblem& problem, Strategy& strategy,
                          const Preferences& prefs_true, int n, std::uint64_t seed,
                          PriorMode prior_mode) {
  if (n < 1) throw ValidationError("average_risk: n must be at least 1");
  const EpisodeDataset dataset = simulate_dataset(problem, strategy, n, seed, prior_mode);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const Episode& e : dataset.episodes) {
    const double loss = episode_loss(e, *e.truth, prefs_true, problem).total();
    sum += loss;
    sum_sq += loss * loss;
  }
  RiskEstimate est;
  est.mean = sum / n;
  if (n > 1) {
    const double var = (sum_sq - sum * sum / n) / (n - 1);
    est.std_error = std::sqrt(std::max(var, 0.0) / n);
  }
  return est;
}

}  // namespace ias
