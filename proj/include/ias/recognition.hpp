#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ias/problem.hpp"

namespace ias {

/// Posterior over hypotheses paired with the survival bit. nu = 1 while the
/// deadline has not fired.
struct BeliefState {
  std::vector<double> mu;
  int nu = 1;
};

/// Posterior after acquiring `lam` and observing `omega`, given survival:
/// mu'(theta) proportional to (1 - p_{theta,lam}) q_{theta,lam}(omega) mu(theta).
/// Output is renormalized to absorb floating-point drift.
/// Throws DataError if the outcome has zero likelihood under the belief's
/// support (in inference this means the episode is impossible under the
/// model, i.e. log-likelihood -inf).
std::vector<double> continual_update(const DecisionProblem& problem,
                                     std::span<const double> mu, int lam, int omega);

/// Posterior after the deadline fires during `lam`:
/// mu'(theta) proportional to p_{theta,lam} mu(theta). Survival itself
/// carries information whenever hazards differ across hypotheses.
std::vector<double> terminal_update(const DecisionProblem& problem,
                                    std::span<const double> mu, int lam);

/// Belief-weighted probability that the deadline fires during `lam`:
/// pbar = sum_theta p_{theta,lam} mu(theta). Survival probability is 1 - pbar.
double failure_prob(const DecisionProblem& problem, std::span<const double> mu, int lam);

/// Decomposition of the posterior process into a martingale mu_tilde plus
/// the continual compensator alpha (bias from ongoing survival) and the
/// terminal compensator beta (bias from stoppage). Components always sum to
/// the current posterior.
struct Decomposition {
  std::vector<double> mu_tilde;
  std::vector<double> alpha;
  std::vector<double> beta;

  static Decomposition initial(std::span<const double> mu0);
};

/// Advances the decomposition one step. For a surviving step (nu 1 -> 1)
/// `omega` is required and alpha absorbs the survival bias; for a breach
/// (1 -> 0) beta absorbs the stoppage bias; a dead process (nu_prev = 0) is
/// frozen. mu_prev is the belief before the step.
Decomposition step_decomposition(const Decomposition& state, const DecisionProblem& problem,
                                 std::span<const double> mu_prev, int lam, int nu_prev,
                                 int nu_now, std::optional<int> omega);

}  // namespace ias
