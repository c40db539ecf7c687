#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ias/grid.hpp"
#include "ias/problem.hpp"

namespace ias {

/// Value tables over the grid, one per survival branch. The dead branch has
/// the closed form V(mu, 0) = sum_theta eta_b,theta mu(theta), which is the
/// fixed point of its own Bellman recursion; the solver keeps it pinned
/// there, and the contraction guarantee is stated for tables sharing it.
struct ValueTables {
  std::vector<double> alive;
  std::vector<double> dead;
};

std::vector<double> dead_value_table(const Preferences& prefs, const SimplexGrid& grid);

/// Risk of settling on theta_hat: expected breach penalty when dead,
/// expected misclassification penalty when alive.
double decision_q(const DecisionProblem& problem, const Preferences& prefs,
                  std::span<const double> mu, int nu, int theta_hat);

/// min over theta_hat of decision_q.
double decision_q_aggregate(const DecisionProblem& problem, const Preferences& prefs,
                            std::span<const double> mu, int nu);

/// Risk-to-go of performing acquisition `lam` under value tables V:
/// immediate cost plus the expectation of V at the updated posterior over
/// {deadline fires} and {survive, outcome omega}. Off-grid posteriors are
/// interpolated.
double acquisition_q(const DecisionProblem& problem, const Preferences& prefs,
                     const SimplexGrid& grid, const ValueTables& tables,
                     std::span<const double> mu, int nu, int lam);

/// One sweep of the Bellman operator: pointwise min over decision and
/// acquisition Q-factors on both survival branches.
ValueTables bellman_apply(const DecisionProblem& problem, const Preferences& prefs,
                          const SimplexGrid& grid, const ValueTables& tables);

/// Converged value tables with all Q-factors, produced by successive
/// approximation from V = 0 until the sup-norm residual is at most tol.
struct SolvedPolicy {
  std::shared_ptr<const SimplexGrid> grid;
  ValueTables v;
  std::vector<double> q_acq;  // size() * n_lambda, point-major
  std::vector<double> q_dec;  // size() * n_theta, point-major
  double gamma = 0.0;         // 1 - min hazard
  double residual = 0.0;      // final sup-norm Bellman residual
  int iterations = 0;
  Preferences prefs;

  double q_acq_at(int point, int lam) const;
  double q_dec_at(int point, int theta_hat) const;
  /// Interpolated V(mu, nu).
  double value(std::span<const double> mu, int nu) const;
  /// Largest one-step slope of V(.,1) between adjacent grid points, times G:
  /// the measured grid Lipschitz bound used in interpolation-slack budgets.
  double grid_lipschitz() const;
};

/// Throws ConvergenceError if the geometric-rate iteration cap (derived from
/// gamma and the first-sweep delta) is exceeded, which signals gamma near 1.
SolvedPolicy solve_optimal(const DecisionProblem& problem, const Preferences& prefs,
                           int resolution, double tol);

/// Per-grid-point action labels. Terminate wins ties (the termination set is
/// closed, matching the >= in its definition); when dead every point
/// terminates.
struct TerminationMap {
  struct Label {
    bool terminate = false;
    int index = 0;  // theta-hat if terminate, lambda otherwise
  };
  std::vector<Label> labels;                 // per grid point, nu = 1
  std::vector<std::vector<int>> regions;     // grid points terminating per theta-hat

  int termination_count() const;
};

TerminationMap termination_set(const SolvedPolicy& policy, const DecisionProblem& problem);

/// Timely informativeness of `lam` for an arbitrary uncertainty measure
/// U(mu, nu): prior value minus survival-weighted expected posterior value.
double surprise_u(const DecisionProblem& problem,
                  const std::function<double(std::span<const double>, int)>& uncertainty,
                  std::span<const double> mu, int nu, int lam);

/// Surprise with U = V* from a solved policy.
double surprise(const DecisionProblem& problem, const SolvedPolicy& policy,
                std::span<const double> mu, int nu, int lam);

/// Preference-weighted posterior survival probability of acquisition `lam`.
/// Throws ValidationError when the eta_b-weighted belief mass vanishes.
double suspense(const DecisionProblem& problem, const Preferences& prefs,
                std::span<const double> mu, int lam);

/// Q*_lam for nu = 1 rebuilt from its surprise/suspense decomposition:
/// V*(mu,1) - I(lam) + (1 - S(lam)) * sum eta_b mu + eta_c c. Agrees with the
/// direct expectation form to numerical precision; kept as an independent
/// route for verification.
double acquisition_q_decomposed(const DecisionProblem& problem, const SolvedPolicy& policy,
                                std::span<const double> mu, int lam);

/// argmin over lam of Q*_lam(mu, 1), lowest index on ties.
int optimal_acquisition(const SolvedPolicy& policy, const DecisionProblem& problem,
                        std::span<const double> mu);

/// argmax over theta_hat of eta_a,theta_hat * mu(theta_hat), lowest index on
/// ties. Only meaningful while alive; no decision is registered on breach.
int optimal_decision(const Preferences& prefs, std::span<const double> mu);

/// Greedy-lookahead acquisition factor: immediate cost, the belief-weighted
/// decision-threshold bonus g(eta_d, mu) = -sum eta_d,theta mu(theta), and the
/// one-step expectation of the aggregate decision factor.
/// Throws ValidationError if prefs carries no eta_d.
double gl_q(const DecisionProblem& problem, const Preferences& prefs,
            std::span<const double> mu, int nu, int lam);

/// Infomax acquisition factor: immediate cost minus entropy surprise.
double im_q(const DecisionProblem& problem, const Preferences& prefs,
            std::span<const double> mu, int nu, int lam);

/// Q-factors of every action under the chosen criterion: acquisitions
/// 0..n_lambda-1 first, then decisions. Decision factors are shared across
/// criteria. `policy` is required for (and only for) Criterion::Optimal.
std::vector<double> generalized_q(Criterion criterion, const DecisionProblem& problem,
                                  const Preferences& prefs, const SolvedPolicy* policy,
                                  std::span<const double> mu, int nu);

/// Shannon entropy of a belief, optionally weighting each term by eta_b.
double belief_entropy(std::span<const double> mu, const std::vector<double>* eta_b = nullptr);

}  // namespace ias
