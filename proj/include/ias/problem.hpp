#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ias {

/// Strategy class that generates behavior: Bayes-optimal, one-step greedy
/// lookahead with soft decision thresholds, or information-maximizing.
enum class Criterion { Optimal, GreedyLookahead, InfoMax };

std::string criterion_name(Criterion k);
std::optional<Criterion> criterion_from_name(const std::string& name);

/// A timely decision problem: finite hypothesis, acquisition, and outcome
/// spaces, outcome distributions q, per-step deadline hazards p, acquisition
/// costs c, and a default prior over hypotheses.
///
/// q is indexed [theta][lambda][omega], p is [theta][lambda], both stored
/// flat. Hazards must lie strictly inside (0,1): the solver's contraction
/// factor is 1 - min p, and p = 0 would lose the convergence guarantee.
struct DecisionProblem {
  int n_theta = 0;
  int n_lambda = 0;
  int n_omega = 0;
  std::vector<double> q;    // n_theta * n_lambda * n_omega
  std::vector<double> p;    // n_theta * n_lambda
  std::vector<double> c;    // n_lambda
  std::vector<double> mu0;  // n_theta

  double q_at(int theta, int lambda, int omega) const {
    return q[(theta * n_lambda + lambda) * n_omega + omega];
  }
  double& q_at(int theta, int lambda, int omega) {
    return q[(theta * n_lambda + lambda) * n_omega + omega];
  }
  double p_at(int theta, int lambda) const { return p[theta * n_lambda + lambda]; }
  double& p_at(int theta, int lambda) { return p[theta * n_lambda + lambda]; }

  double min_hazard() const;

  /// Contraction factor of the Bellman operator, 1 - min_{theta,lambda} p.
  double gamma() const { return 1.0 - min_hazard(); }
};

/// Returns the list of violated invariants (empty means valid). Report-based
/// so a CLI run can surface every problem at once instead of aborting on the
/// first.
std::vector<std::string> validate_problem(const DecisionProblem& problem);

/// Subjective preference weights. eta_a penalizes inaccurate decisions,
/// eta_b deadline breaches (both per hypothesis), eta_c scales per-
/// acquisition costs. eta_d holds decision-threshold weights and is only
/// meaningful for the greedy-lookahead criterion. rho is the inverse
/// temperature of the Boltzmann action distribution.
struct Preferences {
  std::vector<double> eta_a;
  std::vector<double> eta_b;
  std::vector<double> eta_c;
  std::vector<double> eta_d;  // empty unless criterion == GreedyLookahead
  Criterion criterion = Criterion::Optimal;
  double rho = 1.0;
  // The infomax uncertainty measure is plain Shannon entropy by default;
  // set true to weight each term by eta_b.
  bool im_weighted_entropy = false;
};

std::vector<std::string> validate_preferences(const Preferences& prefs,
                                              const DecisionProblem& problem);

/// One recorded action of an episode. An acquire step either completes with
/// an outcome (survived = true) or is interrupted by the deadline
/// (survived = false, no outcome, episode over). A decide step always
/// survives and ends the episode.
struct EpisodeStep {
  bool is_acquire = true;
  int index = 0;                // lambda for acquire, theta-hat for decide
  std::optional<int> outcome;   // present iff acquire and survived
  bool survived = true;
};

/// A decision episode: per-episode prior, the ordered action record, and the
/// final decision (nullopt iff the deadline fired). `truth` is only ever
/// populated by the simulator and is stripped before inference.
struct Episode {
  std::vector<double> prior;
  std::vector<EpisodeStep> steps;
  std::optional<int> decision;
  std::optional<int> truth;

  int tau() const { return static_cast<int>(steps.size()); }
  bool breached() const { return !steps.empty() && !steps.back().survived; }
};

/// Structural checks against the problem's dimensions and the episode
/// invariants (single terminating step, decision consistency, prior on the
/// simplex). Returns violations; empty means well-formed.
std::vector<std::string> validate_episode(const Episode& episode,
                                          const DecisionProblem& problem);

/// The three additive components of the realized loss. Cost covers every
/// acquisition the agent committed to, including one cut short by the
/// deadline; this matches the solver's accounting, where the cost of an
/// acquisition is incurred at the moment it is chosen.
struct LossBreakdown {
  double accuracy = 0.0;
  double breach = 0.0;
  double cost = 0.0;
  double total() const { return accuracy + breach + cost; }
};

LossBreakdown episode_loss(const Episode& episode, int truth,
                           const Preferences& prefs, const DecisionProblem& problem);

/// Sample mean of episode losses; Monte-Carlo estimate of the strategy risk.
/// Throws ValidationError on an empty dataset.
double empirical_risk(const std::vector<std::pair<Episode, int>>& dataset,
                      const Preferences& prefs, const DecisionProblem& problem);

}  // namespace ias
