#include "ias/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ias/errors.hpp"

namespace ias {

namespace {

constexpr double kSimplexTol = 1e-12;

bool finite_nonneg(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x) && x >= 0.0; });
}

}  // namespace

std::string criterion_name(Criterion k) {
  switch (k) {
    case Criterion::Optimal: return "optimal";
    case Criterion::GreedyLookahead: return "gl";
    case Criterion::InfoMax: return "im";
  }
  return "optimal";
}

std::optional<Criterion> criterion_from_name(const std::string& name) {
  if (name == "optimal" || name == "opt") return Criterion::Optimal;
  if (name == "gl" || name == "greedy" || name == "greedy_lookahead") return Criterion::GreedyLookahead;
  if (name == "im" || name == "infomax") return Criterion::InfoMax;
  return std::nullopt;
}

double DecisionProblem::min_hazard() const {
  double m = std::numeric_limits<double>::infinity();
  for (double x : p) m = std::min(m, x);
  return m;
}

std::vector<std::string> validate_problem(const DecisionProblem& problem) {
  std::vector<std::string> report;
  auto flag = [&report](const std::string& msg) { report.push_back(msg); };

  if (problem.n_theta < 1) flag("n_theta must be at least 1");
  if (problem.n_lambda < 1) flag("n_lambda must be at least 1");
  if (problem.n_omega < 1) flag("n_omega must be at least 1");
  const std::size_t nt = static_cast<std::size_t>(std::max(problem.n_theta, 0));
  const std::size_t nl = static_cast<std::size_t>(std::max(problem.n_lambda, 0));
  const std::size_t no = static_cast<std::size_t>(std::max(problem.n_omega, 0));
  if (problem.q.size() != nt * nl * no) flag("q has wrong shape");
  if (problem.p.size() != nt * nl) flag("p has wrong shape");
  if (problem.c.size() != nl) flag("c has wrong shape");
  if (problem.mu0.size() != nt) flag("mu0 has wrong shape");
  if (!report.empty()) return report;  // shape errors make the rest meaningless

  for (int t = 0; t < problem.n_theta; ++t) {
    for (int l = 0; l < problem.n_lambda; ++l) {
      double row = 0.0;
      bool in_range = true;
      for (int o = 0; o < problem.n_omega; ++o) {
        double v = problem.q_at(t, l, o);
        if (!(v >= 0.0 && v <= 1.0)) in_range = false;
        row += v;
      }
      std::ostringstream where;
      where << "(theta=" << t << ", lambda=" << l << ")";
      if (!in_range) flag("q entries outside [0,1] at " + where.str());
      if (std::abs(row - 1.0) > kSimplexTol)
        flag("q row at " + where.str() + " sums to " + std::to_string(row) + ", not 1");
      double hazard = problem.p_at(t, l);
      if (!(hazard > 0.0 && hazard < 1.0))
        flag("p at " + where.str() +
             " must lie strictly in (0,1); a zero hazard loses the contraction guarantee");
    }
  }
  if (!finite_nonneg(problem.c)) flag("c entries must be finite and non-negative");

  double prior_sum = 0.0;
  bool prior_nonneg = true;
  for (double v : problem.mu0) {
    if (!(v >= 0.0)) prior_nonneg = false;
    prior_sum += v;
  }
  if (!prior_nonneg) flag("mu0 entries must be non-negative");
  if (std::abs(prior_sum - 1.0) > kSimplexTol)
    flag("mu0 sums to " + std::to_string(prior_sum) + ", not 1");

  return report;
}

std::vector<std::string> validate_preferences(const Preferences& prefs,
                                              const DecisionProblem& problem) {
  std::vector<std::string> report;
  auto flag = [&report](const std::string& msg) { report.push_back(msg); };

  const std::size_t nt = static_cast<std::size_t>(problem.n_theta);
  const std::size_t nl = static_cast<std::size_t>(problem.n_lambda);
  if (prefs.eta_a.size() != nt) flag("eta_a must have one weight per hypothesis");
  if (prefs.eta_b.size() != nt) flag("eta_b must have one weight per hypothesis");
  if (prefs.eta_c.size() != nl) flag("eta_c must have one weight per acquisition");
  if (!finite_nonneg(prefs.eta_a) || !finite_nonneg(prefs.eta_b) || !finite_nonneg(prefs.eta_c) ||
      !finite_nonneg(prefs.eta_d))
    flag("preference weights must be finite and non-negative");
  const bool wants_d = prefs.criterion == Criterion::GreedyLookahead;
  if (wants_d && prefs.eta_d.size() != nt)
    flag("greedy-lookahead preferences require eta_d with one weight per hypothesis");
  if (!wants_d && !prefs.eta_d.empty())
    flag("eta_d is only meaningful for the greedy-lookahead criterion");
  if (!(std::isfinite(prefs.rho) && prefs.rho >= 0.0)) flag("rho must be finite and non-negative");
  return report;
}

std::vector<std::string> validate_episode(const Episode& episode,
                                          const DecisionProblem& problem) {
  std::vector<std::string> report;
  auto flag = [&report](const std::string& msg) { report.push_back(msg); };

  if (episode.prior.size() != static_cast<std::size_t>(problem.n_theta)) {
    flag("prior has wrong length");
  } else {
    double sum = 0.0;
    bool nonneg = true;
    for (double v : episode.prior) {
      sum += v;
      if (!(v >= 0.0)) nonneg = false;
    }
    if (!nonneg || std::abs(sum - 1.0) > kSimplexTol) flag("prior is not on the simplex");
  }
  if (episode.steps.empty()) {
    flag("episode has no steps");
    return report;
  }
  for (std::size_t i = 0; i < episode.steps.size(); ++i) {
    const EpisodeStep& s = episode.steps[i];
    const bool last = i + 1 == episode.steps.size();
    if (!last && (!s.is_acquire || !s.survived))
      flag("step " + std::to_string(i) + ": only the final step may decide or breach");
    if (s.is_acquire) {
      if (s.index < 0 || s.index >= problem.n_lambda)
        flag("step " + std::to_string(i) + ": acquisition index out of range");
      if (s.survived) {
        if (!s.outcome || *s.outcome < 0 || *s.outcome >= problem.n_omega)
          flag("step " + std::to_string(i) + ": completed acquisition needs a valid outcome");
      } else if (s.outcome) {
        flag("step " + std::to_string(i) + ": breached acquisition cannot carry an outcome");
      }
    } else {
      if (s.index < 0 || s.index >= problem.n_theta)
        flag("step " + std::to_string(i) + ": decision index out of range");
      if (!s.survived) flag("step " + std::to_string(i) + ": a decide step always survives");
      if (s.outcome) flag("step " + std::to_string(i) + ": decide steps carry no outcome");
    }
  }
  const EpisodeStep& final_step = episode.steps.back();
  const bool breach = final_step.is_acquire && !final_step.survived;
  const bool decide = !final_step.is_acquire && final_step.survived;
  if (!breach && !decide) flag("final step must either decide or breach");
  if (breach && episode.decision) flag("breached episode cannot carry a decision");
  if (decide && (!episode.decision || *episode.decision != final_step.index))
    flag("decision field must match the final decide step");
  if (episode.truth && (*episode.truth < 0 || *episode.truth >= problem.n_theta))
    flag("truth index out of range");
  return report;
}

LossBreakdown episode_loss(const Episode& episode, int truth, const Preferences& prefs,
                           const DecisionProblem& problem) {
  if (truth < 0 || truth >= problem.n_theta)
    throw ValidationError("episode_loss: truth index out of range");
  LossBreakdown loss;
  if (episode.breached()) {
    loss.breach = prefs.eta_b[truth];
  } else if (episode.decision && *episode.decision != truth) {
    loss.accuracy = prefs.eta_a[truth];
  }
  for (const EpisodeStep& s : episode.steps) {
    if (s.is_acquire) loss.cost += prefs.eta_c[s.index] * problem.c[s.index];
  }
  return loss;
}

double empirical_risk(const std::vector<std::pair<Episode, int>>& dataset,
                      const Preferences& prefs, const DecisionProblem& problem) {
  if (dataset.empty()) throw ValidationError("empirical_risk: empty dataset");
  double total = 0.0;
  for (const auto& [episode, truth] : dataset)
    total += episode_loss(episode, truth, prefs, problem).total();
  return total / static_cast<double>(dataset.size());
}

}  // namespace ias
