#include "ias/recognition.hpp"

#include <cmath>

#include "ias/errors.hpp"

namespace ias {

namespace {

// Absorbs floating-point drift; long episodes compound error otherwise.
void renormalize(std::vector<double>& mu) {
  double sum = 0.0;
  for (double& v : mu) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  for (double& v : mu) v /= sum;
}

}  // namespace

std::vector<double> continual_update(const DecisionProblem& problem,
                                     std::span<const double> mu, int lam, int omega) {
  std::vector<double> out(mu.size());
  double denom = 0.0;
  for (int t = 0; t < problem.n_theta; ++t) {
    out[t] = (1.0 - problem.p_at(t, lam)) * problem.q_at(t, lam, omega) * mu[t];
    denom += out[t];
  }
  if (!(denom > 0.0))
    throw DataError("continual_update: outcome has zero likelihood under the belief support");
  for (double& v : out) v /= denom;
  renormalize(out);
  return out;
}

std::vector<double> terminal_update(const DecisionProblem& problem,
                                    std::span<const double> mu, int lam) {
  std::vector<double> out(mu.size());
  double denom = 0.0;
  for (int t = 0; t < problem.n_theta; ++t) {
    out[t] = problem.p_at(t, lam) * mu[t];
    denom += out[t];
  }
  // denom > 0 is guaranteed for validated problems (p strictly positive and
  // mu on the simplex).
  for (double& v : out) v /= denom;
  renormalize(out);
  return out;
}

double failure_prob(const DecisionProblem& problem, std::span<const double> mu, int lam) {
  double pbar = 0.0;
  for (int t = 0; t < problem.n_theta; ++t) pbar += problem.p_at(t, lam) * mu[t];
  return pbar;
}

Decomposition Decomposition::initial(std::span<const double> mu0) {
  Decomposition d;
  d.mu_tilde.assign(mu0.begin(), mu0.end());
  d.alpha.assign(mu0.size(), 0.0);
  d.beta.assign(mu0.size(), 0.0);
  return d;
}

Decomposition step_decomposition(const Decomposition& state, const DecisionProblem& problem,
                                 std::span<const double> mu_prev, int lam, int nu_prev,
                                 int nu_now, std::optional<int> omega) {
  Decomposition next = state;
  if (nu_prev == 0) return next;  // dead process: all components frozen

  if (nu_now == 1 && !omega)
    throw ValidationError("step_decomposition: surviving step requires an outcome");

  const double pbar = failure_prob(problem, mu_prev, lam);
  const int n = problem.n_theta;
  for (int t = 0; t < n; ++t) {
    const double gap = problem.p_at(t, lam) - pbar;
    if (nu_now == 1) {
      next.alpha[t] -= mu_prev[t] * gap / (1.0 - pbar);
    } else {
      next.beta[t] += mu_prev[t] * gap / pbar;
    }
  }
  const std::vector<double> mu_now = (nu_now == 1)
                                         ? continual_update(problem, mu_prev, lam, *omega)
                                         : terminal_update(problem, mu_prev, lam);
  for (int t = 0; t < n; ++t) next.mu_tilde[t] = mu_now[t] - next.alpha[t] - next.beta[t];
  return next;
}

}  // namespace ias
